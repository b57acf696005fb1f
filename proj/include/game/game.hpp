#pragma once

#include "game/analysis.hpp"
#include "game/crossmodal.hpp"
#include "game/dataset.hpp"
#include "game/dtw.hpp"
#include "game/embrace.hpp"
#include "game/evalharness.hpp"
#include "game/features.hpp"
#include "game/manifest.hpp"
#include "game/pipeline.hpp"
#include "game/trainer.hpp"
#include "game/wav.hpp"
