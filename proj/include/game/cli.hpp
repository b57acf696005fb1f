#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <type_traits>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "game/analysis.hpp"
#include "game/dataset.hpp"
#include "game/format.hpp"
#include "game/manifest.hpp"
#include "game/wav.hpp"

namespace game::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataOrConfig = 2, kRuntime = 3 };

struct DatasetSource {
  std::optional<std::string> manifest;
  std::optional<GeneratorConfig> generator;
  std::optional<std::uint64_t> generator_seed;  ///< derived from the master seed when absent
};

struct RunConfig {
  DatasetSource dataset;
  std::vector<TaskId> tasks = {TaskId::overall};
  TrainConfig train;
  std::size_t k = 10;
  std::uint64_t seed = 0;
  std::string output_dir = "game_out";
  std::size_t workers = default_workers();
  int softmax_sign = -1;
  CmOrder cm_order = CmOrder::normalize_then_average;
  ComorbidityMode comorbidity_mode = ComorbidityMode::conditional;

  void validate() const {
    if (dataset.manifest && dataset.generator)
      throw ConfigError("dataset: give either a manifest or a generator, not both");
    if (dataset.generator) dataset.generator->validate();
    if (tasks.empty()) throw ConfigError("tasks: at least one task is required");
    train.validate();
    if (k < 2) throw ConfigError("k must be >= 2");
    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (softmax_sign != 1 && softmax_sign != -1) throw ConfigError("softmax_sign must be 1 or -1");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  }
};

// ---- enum <-> string ----

inline std::string to_string(OptimizerKind o) { return o == OptimizerKind::adam ? "adam" : "sgd"; }
inline std::string to_string(ClassWeighting c) {
  return c == ClassWeighting::none ? "none" : "inverse_frequency";
}
inline std::string to_string(CmOrder o) {
  return o == CmOrder::normalize_then_average ? "normalize_then_average" : "average_then_normalize";
}
inline std::string to_string(ComorbidityMode m) {
  return m == ComorbidityMode::conditional ? "conditional" : "jaccard";
}

inline OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + s + "' (adam|sgd)");
}
inline ClassWeighting parse_class_weighting(const std::string& s) {
  if (s == "none") return ClassWeighting::none;
  if (s == "inverse_frequency") return ClassWeighting::inverse_frequency;
  throw ConfigError("unknown class weighting '" + s + "' (none|inverse_frequency)");
}
inline CmOrder parse_cm_order(const std::string& s) {
  if (s == "normalize_then_average") return CmOrder::normalize_then_average;
  if (s == "average_then_normalize") return CmOrder::average_then_normalize;
  throw ConfigError("unknown cm order '" + s + "' (normalize_then_average|average_then_normalize)");
}
inline ComorbidityMode parse_comorbidity_mode(const std::string& s) {
  if (s == "conditional") return ComorbidityMode::conditional;
  if (s == "jaccard") return ComorbidityMode::jaccard;
  throw ConfigError("unknown comorbidity mode '" + s + "' (conditional|jaccard)");
}

/// "all", a single task name, or a comma-separated list.
inline std::vector<TaskId> parse_tasks(const std::string& s) {
  if (s == "all") {
    std::vector<TaskId> out;
    for (std::size_t t = 0; t < kTaskCount; ++t) out.push_back(task_at(t));
    return out;
  }
  std::vector<TaskId> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = parse_task(trim(item));
    if (!t) throw ConfigError("unknown task '" + item + "'");
    if (std::find(out.begin(), out.end(), *t) == out.end()) out.push_back(*t);
  }
  if (out.empty()) throw ConfigError("no task given");
  return out;
}

// ---- RunConfig JSON ----

inline nlohmann::json to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"learning_rate", t.learning_rate},
          {"optimizer", to_string(t.optimizer)},
          {"beta1", t.beta1},
          {"beta2", t.beta2},
          {"epsilon", t.epsilon},
          {"class_weighting", to_string(t.class_weighting)},
          {"weight_decay", t.weight_decay},
          {"embrace_size", t.embrace_size},
          {"shuffle", t.shuffle}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  using detail::get_as;
  detail::reject_unknown_keys(j, {"epochs", "learning_rate", "optimizer", "beta1", "beta2", "epsilon",
                                  "class_weighting", "weight_decay", "embrace_size", "shuffle"},
                              "train");
  TrainConfig t;
  if (j.contains("epochs")) t.epochs = get_as<std::size_t>(j["epochs"], "train.epochs");
  if (j.contains("learning_rate")) t.learning_rate = get_as<double>(j["learning_rate"], "train.learning_rate");
  if (j.contains("optimizer")) t.optimizer = parse_optimizer(get_as<std::string>(j["optimizer"], "train.optimizer"));
  if (j.contains("beta1")) t.beta1 = get_as<double>(j["beta1"], "train.beta1");
  if (j.contains("beta2")) t.beta2 = get_as<double>(j["beta2"], "train.beta2");
  if (j.contains("epsilon")) t.epsilon = get_as<double>(j["epsilon"], "train.epsilon");
  if (j.contains("class_weighting"))
    t.class_weighting = parse_class_weighting(get_as<std::string>(j["class_weighting"], "train.class_weighting"));
  if (j.contains("weight_decay")) t.weight_decay = get_as<double>(j["weight_decay"], "train.weight_decay");
  if (j.contains("embrace_size")) t.embrace_size = get_as<std::size_t>(j["embrace_size"], "train.embrace_size");
  if (j.contains("shuffle")) t.shuffle = get_as<bool>(j["shuffle"], "train.shuffle");
  return t;
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json ds = nlohmann::json::object();
  if (c.dataset.manifest) ds["manifest"] = *c.dataset.manifest;
  if (c.dataset.generator) ds["generator"] = to_json(*c.dataset.generator);
  if (c.dataset.generator_seed) ds["seed"] = *c.dataset.generator_seed;
  nlohmann::json tasks = nlohmann::json::array();
  for (auto t : c.tasks) tasks.push_back(std::string(kTaskNames[index(t)]));
  return {{"dataset", ds},
          {"tasks", tasks},
          {"train", to_json(c.train)},
          {"k", c.k},
          {"seed", c.seed},
          {"output_dir", c.output_dir},
          {"workers", c.workers},
          {"softmax_sign", c.softmax_sign},
          {"cm_order", to_string(c.cm_order)},
          {"comorbidity_mode", to_string(c.comorbidity_mode)}};
}

/// Absent keys keep their defaults. A run manifest is accepted in place of a
/// bare config; its resolved `config` member is used.
inline RunConfig run_config_from_json(const nlohmann::json& in) {
  using detail::get_as;
  const nlohmann::json& j =
      in.is_object() && in.contains("format") && in["format"] == "game-run-manifest" ? in.at("config") : in;
  detail::reject_unknown_keys(j, {"dataset", "tasks", "train", "k", "seed", "output_dir", "workers",
                                  "softmax_sign", "cm_order", "comorbidity_mode"},
                              "run config");
  RunConfig c;
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    detail::reject_unknown_keys(d, {"manifest", "generator", "seed"}, "dataset");
    if (d.contains("manifest")) c.dataset.manifest = get_as<std::string>(d["manifest"], "dataset.manifest");
    if (d.contains("generator")) c.dataset.generator = generator_config_from_json(d["generator"]);
    if (d.contains("seed")) c.dataset.generator_seed = get_as<std::uint64_t>(d["seed"], "dataset.seed");
  }
  if (j.contains("tasks")) {
    const auto& t = j["tasks"];
    if (t.is_string()) {
      c.tasks = parse_tasks(t.get<std::string>());
    } else {
      if (!t.is_array()) throw ConfigError("tasks must be \"all\" or an array of task names");
      c.tasks.clear();
      for (const auto& e : t) {
        const auto id = detail::task_key(get_as<std::string>(e, "tasks[]"), "tasks");
        if (std::find(c.tasks.begin(), c.tasks.end(), id) == c.tasks.end()) c.tasks.push_back(id);
      }
    }
  }
  if (j.contains("train")) c.train = train_config_from_json(j["train"]);
  if (j.contains("k")) c.k = get_as<std::size_t>(j["k"], "k");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j["seed"], "seed");
  if (j.contains("output_dir")) c.output_dir = get_as<std::string>(j["output_dir"], "output_dir");
  if (j.contains("workers")) c.workers = get_as<std::size_t>(j["workers"], "workers");
  if (j.contains("softmax_sign")) c.softmax_sign = get_as<int>(j["softmax_sign"], "softmax_sign");
  if (j.contains("cm_order")) c.cm_order = parse_cm_order(get_as<std::string>(j["cm_order"], "cm_order"));
  if (j.contains("comorbidity_mode"))
    c.comorbidity_mode = parse_comorbidity_mode(get_as<std::string>(j["comorbidity_mode"], "comorbidity_mode"));
  return c;
}

/// Hash over everything that can change results; output location and worker
/// count are excluded.
inline std::uint64_t run_config_hash(const RunConfig& c) {
  auto j = to_json(c);
  j.erase("output_dir");
  j.erase("workers");
  return fnv1a(j.dump());
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---- output helpers ----

class Artifacts {
 public:
  explicit Artifacts(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }

  void write(const std::string& rel, const std::string& text) {
    const auto path = root_ / rel;
    std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << text;
    if (!f) throw Error("write failed: " + path.string());
    written_.push_back(rel);
  }
  /// Records a file written by other code.
  void note(const std::string& rel) { written_.push_back(rel); }
  void write_json(const std::string& rel, const nlohmann::json& j) { write(rel, j.dump(2) + "\n"); }

  std::vector<std::string> written() const {
    auto out = written_;
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::filesystem::path root_;
  std::vector<std::string> written_;
};

inline std::string csv_row(std::initializer_list<std::string> cells) {
  std::string out;
  for (const auto& c : cells) {
    if (!out.empty()) out += ',';
    out += c;
  }
  return out + "\n";
}

inline nlohmann::json json_number(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline std::string task_name(TaskId t) { return std::string(kTaskNames[index(t)]); }
inline std::string modality_name(ModalityId m) { return std::string(kModalityNames[index(m)]); }

inline nlohmann::json summary_json(const Summary& s) {
  return {{"mean", json_number(s.mean)}, {"max", json_number(s.max)}, {"min", json_number(s.min)}};
}

/// task,metric,mean,max,min
inline std::string metrics_csv(TaskId task, const MetricsReport& rep) {
  std::string out = "task,metric,mean,max,min\n";
  for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
    const auto& s = rep.aggregate[i];
    out += csv_row({task_name(task), std::string(kMetricNames[i]), format_double(s.mean),
                    format_double(s.max), format_double(s.min)});
  }
  return out;
}

inline nlohmann::json report_json(const MetricsReport& rep) {
  nlohmann::json j;
  for (std::size_t i = 0; i < kMetricNames.size(); ++i)
    j["aggregate"][std::string(kMetricNames[i])] = summary_json(rep.aggregate[i]);
  j["majority_accuracy"] = summary_json(rep.majority_accuracy);
  j["cm_order"] = to_string(rep.cm_order);
  j["normalized_confusion"] = {{json_number(rep.normalized_confusion[0][0]), json_number(rep.normalized_confusion[0][1])},
                               {json_number(rep.normalized_confusion[1][0]), json_number(rep.normalized_confusion[1][1])}};
  j["folds"] = nlohmann::json::array();
  for (std::size_t f = 0; f < rep.folds.size(); ++f) {
    const auto& m = rep.folds[f];
    const auto& c = rep.confusion[f].counts;
    j["folds"].push_back({{"accuracy", json_number(m.accuracy)},
                          {"precision_weighted", json_number(m.precision)},
                          {"recall_weighted", json_number(m.recall)},
                          {"f1_weighted", json_number(m.f1)},
                          {"confusion", {{c[0][0], c[0][1]}, {c[1][0], c[1][1]}}}});
  }
  return j;
}

inline std::vector<std::string> cv_warnings(const CvResult& cv) {
  std::vector<std::string> out = cv.assignment.warnings;
  for (std::size_t f = 0; f < cv.folds.size(); ++f)
    for (const auto& w : cv.folds[f].history.warnings) out.push_back("fold " + std::to_string(f) + ": " + w);
  return out;
}

// ---- run context ----

struct Context {
  RunConfig cfg;
  std::string subcommand;
  std::ostream& out;
  std::ostream& err;
  Artifacts artifacts;
  std::optional<Dataset> dataset;
  std::optional<FusedDataset> fused;
  std::map<TaskId, CvResult> runs;
  bool save_models = false;

  Context(RunConfig c, std::string sub, std::ostream& o, std::ostream& e)
      : cfg(std::move(c)), subcommand(std::move(sub)), out(o), err(e), artifacts(cfg.output_dir) {}

  CvOptions cv_options() const {
    CvOptions opt;
    opt.train = cfg.train;
    opt.k = cfg.k;
    opt.seed = cfg.seed;
    opt.workers = cfg.workers;
    opt.pipeline.crossmodal.softmax_sign = cfg.softmax_sign;
    opt.cm_order = cfg.cm_order;
    opt.keep_models = save_models;
    return opt;
  }

  const Dataset& data() {
    if (!dataset) {
      if (cfg.dataset.manifest) {
        dataset = load_manifest(*cfg.dataset.manifest);
      } else if (cfg.dataset.generator) {
        dataset = generate_synthetic(*cfg.dataset.generator, *cfg.dataset.generator_seed);
      } else {
        throw ConfigError("no dataset source (use --manifest, --gen-default or a config file)");
      }
    }
    return *dataset;
  }

  const FusedDataset& fused_data() {
    if (!fused) fused = fuse_dataset(data());
    return *fused;
  }

  const CvResult& run(TaskId task) {
    auto it = runs.find(task);
    if (it == runs.end()) {
      it = runs.emplace(task, cross_validate(data(), fused_data(), task, cv_options())).first;
      for (const auto& w : cv_warnings(it->second)) err << "warning: " << task_name(task) << ": " << w << "\n";
    }
    return it->second;
  }

  void write_run_manifest() {
    nlohmann::json j;
    j["format"] = "game-run-manifest";
    j["version"] = 1;
    j["subcommand"] = subcommand;
    j["config"] = to_json(cfg);
    j["config_hash"] = hex64(run_config_hash(cfg));
    j["seed"] = cfg.seed;
    if (dataset) {
      std::visit(
          [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, SyntheticSource>)
              j["dataset"] = {{"source", "synthetic"}, {"seed", p.seed}, {"config_hash", hex64(p.config_hash)}};
            else
              j["dataset"] = {{"source", "manifest"}, {"manifest_path", p.manifest_path}};
          },
          dataset->provenance());
      j["dataset"]["records"] = dataset->size();
    }
    auto files = artifacts.written();
    j["artifacts"] = files;
    artifacts.write_json("run_manifest.json", j);
  }
};

// ---- subcommand bodies ----

inline void do_gen(Context& ctx) {
  const auto& ds = ctx.data();
  const auto manifest = write_manifest(ds, ctx.artifacts.root() / "dataset");
  for (const auto& e : std::filesystem::recursive_directory_iterator(ctx.artifacts.root() / "dataset"))
    if (e.is_regular_file())
      ctx.artifacts.note(std::filesystem::relative(e.path(), ctx.artifacts.root()).generic_string());
  ctx.out << manifest.string() << "\n";
}

inline void do_eval(Context& ctx) {
  std::string summary = "task,metric,mean,max,min\n";
  for (auto task : ctx.cfg.tasks) {
    const auto& cv = ctx.run(task);
    const auto name = task_name(task);
    const auto csv = metrics_csv(task, cv.report);
    summary += csv.substr(csv.find('\n') + 1);
    ctx.artifacts.write("eval/" + name + ".csv", csv);
    auto j = report_json(cv.report);
    j["task"] = name;
    j["warnings"] = cv_warnings(cv);
    ctx.artifacts.write_json("eval/" + name + ".json", j);
    std::string hist = "fold,epoch,loss\n";
    for (std::size_t f = 0; f < cv.folds.size(); ++f)
      for (std::size_t e = 0; e < cv.folds[f].history.epoch_loss.size(); ++e)
        hist += csv_row({std::to_string(f), std::to_string(e + 1), format_double(cv.folds[f].history.epoch_loss[e])});
    ctx.artifacts.write("eval/" + name + "_history.csv", hist);
    if (ctx.save_models)
      for (std::size_t f = 0; f < cv.folds.size(); ++f)
        if (cv.folds[f].model)
          ctx.artifacts.write_json("eval/models/" + name + "_fold" + std::to_string(f) + ".json",
                                   to_json(*cv.folds[f].model));
  }
  ctx.artifacts.write("eval/summary.csv", summary);
}

inline void do_crosspred(Context& ctx) {
  std::vector<CvResult> runs;
  for (std::size_t t = 0; t < kTaskCount; ++t) runs.push_back(ctx.run(task_at(t)));
  const auto m = cross_prediction(ctx.data(), runs);
  std::string csv = "train_task";
  for (auto n : kTaskNames) csv += "," + std::string(n);
  csv += "\n";
  nlohmann::json j;
  j["rows"] = "train_task";
  j["cols"] = "eval_task";
  j["tasks"] = kTaskNames;
  j["accuracy"] = nlohmann::json::array();
  for (std::size_t i = 0; i < kTaskCount; ++i) {
    csv += std::string(kTaskNames[i]);
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t k = 0; k < kTaskCount; ++k) {
      csv += "," + format_double(m[i][k]);
      row.push_back(json_number(m[i][k]));
    }
    csv += "\n";
    j["accuracy"].push_back(row);
  }
  ctx.artifacts.write("crosspred/cross_prediction.csv", csv);
  ctx.artifacts.write_json("crosspred/cross_prediction.json", j);
}

inline void do_ablate(Context& ctx) {
  std::string acc_csv = "task", f1_csv = "task";
  for (auto n : kModalityNames) {
    acc_csv += "," + std::string(n);
    f1_csv += "," + std::string(n);
  }
  acc_csv += "\n";
  f1_csv += "\n";
  for (auto task : ctx.cfg.tasks) {
    const auto name = task_name(task);
    const auto rep = ablation(ctx.data(), ctx.fused_data(), task, ctx.cv_options());
    std::string csv = "removed,accuracy_mean,f1_weighted_mean,delta_accuracy,delta_f1_weighted\n";
    csv += csv_row({"none", format_double(rep.full.accuracy().mean), format_double(rep.full.f1().mean), "0", "0"});
    nlohmann::json j;
    j["task"] = name;
    j["full"] = report_json(rep.full);
    j["arms"] = nlohmann::json::array();
    std::array<std::optional<const AblationArm*>, kFusionInputCount> by_input{};
    for (const auto& arm : rep.arms) {
      by_input[index(arm.removed)] = &arm;
      csv += csv_row({modality_name(arm.removed), format_double(arm.report.accuracy().mean),
                      format_double(arm.report.f1().mean), format_double(arm.delta_accuracy),
                      format_double(arm.delta_f1)});
      j["arms"].push_back({{"removed", modality_name(arm.removed)},
                           {"delta_accuracy", json_number(arm.delta_accuracy)},
                           {"delta_f1_weighted", json_number(arm.delta_f1)},
                           {"report", report_json(arm.report)}});
    }
    acc_csv += name;
    f1_csv += name;
    for (const auto& a : by_input) {
      acc_csv += "," + (a ? format_double((*a)->delta_accuracy) : std::string());
      f1_csv += "," + (a ? format_double((*a)->delta_f1) : std::string());
    }
    acc_csv += "\n";
    f1_csv += "\n";
    ctx.artifacts.write("ablate/" + name + ".csv", csv);
    ctx.artifacts.write_json("ablate/" + name + ".json", j);
  }
  ctx.artifacts.write("ablate/delta_accuracy.csv", acc_csv);
  ctx.artifacts.write("ablate/delta_f1_weighted.csv", f1_csv);
}

inline void do_comorbid(Context& ctx) {
  const auto m = comorbidity(ctx.data(), ctx.cfg.comorbidity_mode);
  std::string csv = "task";
  for (std::size_t j = 0; j < kDisorderCount; ++j) csv += "," + std::string(kTaskNames[j]);
  csv += "\n";
  nlohmann::json js;
  js["mode"] = to_string(m.mode);
  js["tasks"] = std::vector<std::string>(kTaskNames.begin(), kTaskNames.begin() + kDisorderCount);
  js["values"] = nlohmann::json::array();
  for (std::size_t i = 0; i < kDisorderCount; ++i) {
    csv += std::string(kTaskNames[i]);
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < kDisorderCount; ++j) {
      const auto& v = m.values[i][j];
      csv += "," + (v ? format_double(*v) : std::string());
      row.push_back(v ? json_number(*v) : nlohmann::json(nullptr));
    }
    csv += "\n";
    js["values"].push_back(row);
  }
  ctx.artifacts.write("comorbid/comorbidity.csv", csv);
  ctx.artifacts.write_json("comorbid/comorbidity.json", js);
}

inline void do_contrib(Context& ctx) {
  std::string csv = "task";
  for (auto n : kModalityNames) csv += "," + std::string(n);
  csv += "\n";
  nlohmann::json j = nlohmann::json::object();
  for (auto task : ctx.cfg.tasks) {
    const auto rep = contribution(ctx.run(task));
    const auto name = task_name(task);
    csv += name;
    for (double r : rep.ratios) csv += "," + format_double(r);
    csv += "\n";
    nlohmann::json t;
    for (std::size_t k = 0; k < rep.ratios.size(); ++k) t["ratios"][std::string(kModalityNames[k])] = json_number(rep.ratios[k]);
    t["per_fold"] = nlohmann::json::array();
    for (const auto& f : rep.per_fold) {
      nlohmann::json row = nlohmann::json::array();
      for (double r : f) row.push_back(json_number(r));
      t["per_fold"].push_back(row);
    }
    t["degenerate"] = rep.degenerate;
    j[name] = t;
  }
  ctx.artifacts.write("contrib/contribution.csv", csv);
  ctx.artifacts.write_json("contrib/contribution.json", j);
}

inline void do_report(Context& ctx) {
  do_eval(ctx);
  do_contrib(ctx);
  do_crosspred(ctx);
  do_ablate(ctx);
  do_comorbid(ctx);
}

// ---- argument handling ----

struct Flags {
  std::string config;
  bool gen_default = false;
  std::optional<std::size_t> records;
  std::string manifest, task, out, optimizer, class_weighting, cm_order, comorbidity_mode;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k, workers, epochs;
  std::optional<double> lr;
  std::optional<int> softmax_sign;
  bool save_models = false;
};

inline void add_run_flags(CLI::App* sub, Flags& f, bool training) {
  sub->add_option("--config", f.config, "RunConfig JSON or a previous run_manifest.json");
  sub->add_flag("--gen-default", f.gen_default, "use the default synthetic generator as dataset");
  sub->add_option("--records", f.records, "record count for the generated dataset");
  sub->add_option("--manifest", f.manifest, "dataset manifest JSON");
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--out", f.out, "output directory");
  if (!training) return;
  sub->add_option("--task", f.task, "task name, comma list, or 'all'");
  sub->add_option("--k", f.k, "number of CV folds");
  sub->add_option("--workers", f.workers, "concurrent folds (default: hardware threads)");
  sub->add_option("--epochs", f.epochs, "training epochs");
  sub->add_option("--lr", f.lr, "learning rate");
  sub->add_option("--optimizer", f.optimizer, "adam|sgd");
  sub->add_option("--class-weighting", f.class_weighting, "none|inverse_frequency");
  sub->add_option("--softmax-sign", f.softmax_sign, "attention softmax sign, -1 or 1");
  sub->add_option("--cm-order", f.cm_order, "normalize_then_average|average_then_normalize");
  sub->add_flag("--save-models", f.save_models, "write per-fold checkpoints (eval/report)");
}

inline RunConfig resolve_config(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) {
    const std::string text = detail::read_text(f.config);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(f.config + ":" + std::to_string(detail::line_of_offset(text, e.byte)) +
                        ": invalid JSON");
    }
    c = run_config_from_json(j);
  }
  if (!f.manifest.empty()) {
    c.dataset = {};
    c.dataset.manifest = f.manifest;
  }
  if (f.gen_default) {
    if (!f.manifest.empty()) throw ConfigError("--manifest and --gen-default are mutually exclusive");
    c.dataset = {};
    c.dataset.generator = GeneratorConfig{};
  }
  if (f.records) {
    if (!c.dataset.generator) throw ConfigError("--records needs a generator dataset");
    c.dataset.generator->n_records = *f.records;
  }
  if (f.seed) c.seed = *f.seed;
  if (f.seed && f.gen_default) c.dataset.generator_seed.reset();
  if (c.dataset.generator && !c.dataset.generator_seed) c.dataset.generator_seed = derive_seed(c.seed, "dataset");
  if (!f.out.empty()) c.output_dir = f.out;
  if (!f.task.empty()) c.tasks = parse_tasks(f.task);
  if (f.k) c.k = *f.k;
  if (f.workers) c.workers = *f.workers;
  if (f.epochs) c.train.epochs = *f.epochs;
  if (f.lr) c.train.learning_rate = *f.lr;
  if (!f.optimizer.empty()) c.train.optimizer = parse_optimizer(f.optimizer);
  if (!f.class_weighting.empty()) c.train.class_weighting = parse_class_weighting(f.class_weighting);
  if (f.softmax_sign) c.softmax_sign = *f.softmax_sign;
  if (!f.cm_order.empty()) c.cm_order = parse_cm_order(f.cm_order);
  if (!f.comorbidity_mode.empty()) c.comorbidity_mode = parse_comorbidity_mode(f.comorbidity_mode);
  c.validate();
  return c;
}

inline std::string matrix_csv(const Matrix& m, std::span<const std::string> header) {
  std::string out = "t";
  for (const auto& h : header) out += "," + h;
  out += "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out += std::to_string(r);
    for (std::size_t c = 0; c < m.cols(); ++c) out += "," + format_double(m(r, c));
    out += "\n";
  }
  return out;
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f || !(f << text)) throw Error("cannot write " + path);
}

/// Entry point. Diagnostics go to `err` as one line; the return value is the
/// process exit code.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"multimodal screening pipeline: synthetic data, features, fusion training and analysis", "game"};
  app.require_subcommand(1);
  Flags flags;

  std::string wav_path, mfcc_out, csv_path, ts_out;
  bool no_standardize = false;
  auto* mfcc_cmd = app.add_subcommand("mfcc", "MFCC matrix of a 16 kHz mono PCM16 WAV as CSV");
  mfcc_cmd->add_option("wav", wav_path, "input WAV")->required();
  mfcc_cmd->add_option("--out", mfcc_out, "output CSV (default stdout)");
  mfcc_cmd->add_flag("--no-standardize", no_standardize, "skip padding/truncation to 10 s");
  auto* ts_cmd = app.add_subcommand("tsfeat", "per-column time-series statistics of a feature CSV");
  ts_cmd->add_option("csv", csv_path, "input CSV with header t,f0,...")->required();
  ts_cmd->add_option("--out", ts_out, "output CSV (default stdout)");

  auto* gen_cmd = app.add_subcommand("gen", "write a synthetic dataset (manifest + CSVs)");
  add_run_flags(gen_cmd, flags, false);
  std::vector<std::pair<CLI::App*, void (*)(Context&)>> runners = {{gen_cmd, do_gen}};
  const std::array<std::tuple<const char*, const char*, void (*)(Context&)>, 6> training_cmds = {{
      {"eval", "cross-validated metrics per task", do_eval},
      {"crosspred", "cross-task prediction accuracy matrix (all tasks)", do_crosspred},
      {"ablate", "per-input removal deltas", do_ablate},
      {"comorbid", "label comorbidity matrix", do_comorbid},
      {"contrib", "per-input contribution ratios", do_contrib},
      {"report", "all of the above", do_report},
  }};
  for (const auto& [name, help, fn] : training_cmds) {
    auto* sub = app.add_subcommand(name, help);
    add_run_flags(sub, flags, true);
    if (std::string_view(name) == "comorbid" || std::string_view(name) == "report")
      sub->add_option("--comorbidity-mode", flags.comorbidity_mode, "conditional|jaccard");
    runners.emplace_back(sub, fn);
  }

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "game: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (mfcc_cmd->parsed()) {
      auto samples = read_wav(wav_path);
      if (!no_standardize) samples = standardize_duration(samples);
      const auto m = mfcc(samples);
      std::vector<std::string> header;
      for (std::size_t c = 0; c < m.cols(); ++c) header.push_back("f" + std::to_string(c));
      emit(matrix_csv(m, header), mfcc_out, out);
      return kOk;
    }
    if (ts_cmd->parsed()) {
      const auto seq = read_feature_csv(csv_path, ModalityId::physio, csv_path);
      const auto v = ts_features_columns(seq.values);
      std::string head, row;
      for (std::size_t c = 0; c < seq.dim(); ++c)
        for (auto n : kTsFeatureNames) {
          head += (head.empty() ? "" : ",") + ("f" + std::to_string(c) + "_" + std::string(n));
        }
      for (double x : v) row += (row.empty() ? "" : ",") + format_double(x);
      emit(head + "\n" + row + "\n", ts_out, out);
      return kOk;
    }
    for (auto& [sub, fn] : runners) {
      if (!sub->parsed()) continue;
      Context ctx(resolve_config(flags), sub->get_name(), out, err);
      ctx.save_models = flags.save_models;
      fn(ctx);
      ctx.write_run_manifest();
      return kOk;
    }
    err << "game: no subcommand\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "game: config error: " << e.what() << "\n";
    return kDataOrConfig;
  } catch (const DataError& e) {
    err << "game: data error: " << e.what() << "\n";
    return kDataOrConfig;
  } catch (const InvalidArgument& e) {
    err << "game: invalid input: " << e.what() << "\n";
    return kDataOrConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "game: config error: " << e.what() << "\n";
    return kDataOrConfig;
  } catch (const std::exception& e) {
    err << "game: " << e.what() << "\n";
    return kRuntime;
  }
}

inline int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(std::move(args), out, err);
}

}  // namespace game::cli
