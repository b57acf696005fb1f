#include <fstream>

#include <gtest/gtest.h>

#include "game/manifest.hpp"
#include "game/wav.hpp"
#include "support.hpp"

namespace game {
namespace {

using test::TempDir;

void write(const std::filesystem::path& p, const std::string& text) {
  std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

std::string label_header(std::size_t drop = kTaskCount) {
  std::string h = "id";
  for (std::size_t t = 0; t < kTaskCount; ++t)
    if (t != drop) h += "," + std::string(kTaskNames[t]);
  return h + "\n";
}

std::string label_row(const std::string& id, int v, std::size_t drop = kTaskCount) {
  std::string r = id;
  for (std::size_t t = 0; t < kTaskCount; ++t)
    if (t != drop) r += "," + std::to_string((v + static_cast<int>(t)) % 2);
  return r + "\n";
}

/// Two records with every single-modal feature present.
std::filesystem::path two_record_manifest(const TempDir& dir, bool drop_physio_of_b = false) {
  write(dir / "labels.csv", label_header() + label_row("a", 0) + label_row("b", 1));
  nlohmann::json records = nlohmann::json::array();
  for (std::string id : {"a", "b"}) {
    nlohmann::json feats;
    for (std::size_t m = 0; m < kSingleModalCount; ++m) {
      const std::string rel = "f/" + id + "_" + std::string(kModalityNames[m]) + ".csv";
      if (!(drop_physio_of_b && id == "b" && m == index(ModalityId::physio)))
        write(dir / rel, "t,f0,f1\n0,1.5,2\n1,3,-4e-1\n");
      feats[std::string(kModalityNames[m])] = rel;
    }
    records.push_back({{"id", id}, {"features", feats}});
  }
  write(dir / "manifest.json", nlohmann::json{{"label_file", "labels.csv"}, {"records", records}}.dump(1));
  return dir / "manifest.json";
}

TEST(Manifest, LoadsAllModalities) {
  TempDir dir;
  const auto ds = load_manifest(two_record_manifest(dir));
  ASSERT_EQ(ds.size(), 2u);
  for (const auto& r : ds.records())
    for (std::size_t m = 0; m < kSingleModalCount; ++m) EXPECT_TRUE(r.available(modality_at(m)));
  const auto& f = *ds[0].features[index(ModalityId::mfcc)];
  EXPECT_EQ(f.steps(), 2u);
  EXPECT_EQ(f.values(1, 1), -0.4);
  EXPECT_EQ(ds[1].label(TaskId::depression), 1);
  EXPECT_EQ(ds[1].label(TaskId::interpersonal_sensitivity), 0);
}

TEST(Manifest, MissingPhysioFileIsUnavailable) {
  TempDir dir;
  const auto ds = load_manifest(two_record_manifest(dir, true));
  EXPECT_TRUE(ds[0].available(ModalityId::physio));
  EXPECT_FALSE(ds[1].available(ModalityId::physio));
  EXPECT_TRUE(ds[1].available(ModalityId::mfcc));
}

TEST(Manifest, LabelCsvMissingColumnNamesIt) {
  TempDir dir;
  const std::size_t drop = index(TaskId::hostility);
  write(dir / "labels.csv", label_header(drop) + label_row("a", 0, drop));
  try {
    read_label_csv(dir / "labels.csv");
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_NE(std::string(e.what()).find("hostility"), std::string::npos) << e.what();
  }
}

TEST(Manifest, NonBinaryLabelIsRejected) {
  TempDir dir;
  std::string row = label_row("a", 0);
  row[2] = '2';
  write(dir / "labels.csv", label_header() + row);
  EXPECT_THROW(read_label_csv(dir / "labels.csv"), ParseError);
}

TEST(Manifest, BadCellReportsLine) {
  TempDir dir;
  write(dir / "x.csv", "t,f0\n0,1\n1,abc\n");
  try {
    read_feature_csv(dir / "x.csv", ModalityId::mfcc, "r1");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Manifest, NonFiniteValueNamesRowAndColumn) {
  TempDir dir;
  write(dir / "x.csv", "t,f0,f1\n0,1,nan\n");
  try {
    read_feature_csv(dir / "x.csv", ModalityId::mfcc, "r1");
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("r1"), std::string::npos) << what;
    EXPECT_NE(what.find("f1"), std::string::npos) << what;
  }
}

TEST(Manifest, BadHeaderIsSchemaError) {
  TempDir dir;
  write(dir / "x.csv", "time,f0\n0,1\n");
  EXPECT_THROW(read_feature_csv(dir / "x.csv", ModalityId::mfcc, "r"), SchemaError);
}

TEST(Manifest, MalformedJsonReportsLine) {
  TempDir dir;
  write(dir / "labels.csv", label_header() + label_row("a", 0));
  write(dir / "manifest.json", "{\n  \"label_file\": \"labels.csv\",\n  \"records\": [,]\n}\n");
  try {
    load_manifest(dir / "manifest.json");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Manifest, LabelRowMustMatchId) {
  TempDir dir;
  write(dir / "labels.csv", label_header() + label_row("a", 0) + label_row("b", 1));
  write(dir / "manifest.json",
        R"({"label_file": "labels.csv", "records": [{"id": "a", "labels_csv_row": 1}]})");
  EXPECT_THROW(load_manifest(dir / "manifest.json"), SchemaError);
}

TEST(Manifest, WriteThenLoadRoundTrips) {
  GeneratorConfig cfg;
  cfg.n_records = 20;
  cfg.missing_rate[index(ModalityId::eye_movement)] = 0.3;
  const auto ds = generate_synthetic(cfg, 11);
  TempDir dir;
  const auto back = load_manifest(write_manifest(ds, dir.path()));
  EXPECT_TRUE(back.same_records(ds));
  EXPECT_TRUE(std::holds_alternative<IngestedSource>(back.provenance()));
}

TEST(Wav, RoundTripAndFormatChecks) {
  TempDir dir;
  std::vector<double> s = {0.0, 0.5, -0.5, 0.25, -1.0};
  write_wav(dir / "a.wav", s);
  const auto back = read_wav(dir / "a.wav");
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(back[i], s[i], 1.0 / 32768.0);
  write(dir / "b.wav", "RIFX....");
  EXPECT_THROW(read_wav(dir / "b.wav"), DataError);
}

}  // namespace
}  // namespace game
