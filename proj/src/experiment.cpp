#include "slmg/experiment.hpp"

#include <map>
#include <set>

#include "slmg/crowd.hpp"
#include "slmg/error.hpp"

namespace slmg {

namespace {

void reject_unknown(const io::Json& object, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!object.is_object()) throw Error(ErrorKind::MalformedInput, where + " must be an object");
  for (const auto& [key, value] : object.items())
    if (!allowed.count(key))
      throw Error(ErrorKind::MalformedInput, "unknown key \"" + key + "\" in " + where);
}

std::filesystem::path resolve(const io::Json& object, const char* key,
                              const std::filesystem::path& base_dir) {
  auto it = object.find(key);
  if (it == object.end() || it->is_null()) return {};
  if (!it->is_string())
    throw Error(ErrorKind::MalformedInput, std::string("path \"") + key + "\" must be a string");
  std::filesystem::path p = it->get<std::string>();
  return p.is_absolute() ? p : base_dir / p;
}

io::Json path_json(const std::filesystem::path& p) {
  return p.empty() ? io::Json(nullptr) : io::Json(p.string());
}

void check_classes(std::span<const HardExample> items, std::size_t classes, const char* what) {
  for (const auto& item : items)
    if (item.label.index >= classes)
      throw Error(ErrorKind::MalformedInput, std::string(what) + " item " + item.item_id +
                                                 " has label out of range for K=" +
                                                 std::to_string(classes));
}

}  // namespace

std::string_view to_string(Schedule schedule) noexcept {
  switch (schedule) {
    case Schedule::B1: return "B1";
    case Schedule::CLE: return "CLE";
    case Schedule::AOC: return "AOC";
    case Schedule::SlmgS: return "SLMG-S";
    case Schedule::SlmgI: return "SLMG-I";
  }
  return "B1";
}

Schedule parse_schedule(std::string_view name) {
  if (name == "B1") return Schedule::B1;
  if (name == "CLE" || name == "B2") return Schedule::CLE;
  if (name == "AOC" || name == "B3") return Schedule::AOC;
  if (name == "SLMG-S") return Schedule::SlmgS;
  if (name == "SLMG-I") return Schedule::SlmgI;
  throw Error(ErrorKind::UnknownSchedule, "unknown schedule \"" + std::string(name) + "\"");
}

std::vector<HardExample> soft_items_as_hard(const ExperimentData& data) {
  std::vector<HardExample> out;
  out.reserve(data.soft.size());
  for (std::size_t i = 0; i < data.soft.size(); ++i) {
    const bool has_gold = i < data.soft_gold.size() && data.soft_gold[i].has_value();
    out.push_back(has_gold ? HardExample{data.soft[i].item_id, data.soft[i].features, *data.soft_gold[i]}
                           : harden(data.soft[i]));
  }
  return out;
}

std::vector<HardExample> hard_training_set(Schedule schedule, const ExperimentData& data,
                                           const CleOptions& cle) {
  if (schedule == Schedule::SlmgS || schedule == Schedule::SlmgI) return data.train;
  std::vector<HardExample> base = data.train;
  for (auto& h : soft_items_as_hard(data)) base.push_back(std::move(h));
  if (schedule == Schedule::B1) return base;
  if (schedule == Schedule::AOC) {
    for (auto& h : build_aoc_dataset(data.soft)) base.push_back(std::move(h));
    return base;
  }
  std::size_t n_extra = 0;
  if (cle.n_extra) {
    n_extra = *cle.n_extra;
  } else {
    for (const auto& s : data.soft) {
      if (!s.counts)
        throw Error(ErrorKind::MissingCounts,
                    "CLE without an explicit n_extra needs crowd counts for item " + s.item_id);
      for (auto c : *s.counts) n_extra += static_cast<std::size_t>(c);
    }
  }
  return build_cle_dataset(base, data.extra_pool, n_extra, cle.seed);
}

TrainTrace run_schedule(Schedule schedule, const ClassifierParams& init, const ExperimentData& data,
                        const TrainConfig& config, const CleOptions& cle) {
  const auto hard = hard_training_set(schedule, data, cle);
  switch (schedule) {
    case Schedule::SlmgS: return train_slmg_s(init, hard, data.soft, config, data.dev);
    case Schedule::SlmgI: return train_slmg_i(init, hard, data.soft, config, data.dev);
    default: return train_b1(init, hard, config, data.dev);
  }
}

EvalReport evaluate_experiment(const ClassifierParams& params, const ExperimentData& data,
                               std::optional<std::size_t> binary_positive) {
  EvalReport report = evaluate(params, data.test);
  if (binary_positive) add_binary_collapse(report, ClassLabel{*binary_positive});
  if (!data.test_reference.empty()) report.mean_kl_to_reference = mean_kl_to_reference(params, data.test_reference);
  return report;
}

ExperimentManifest parse_manifest(const io::Json& json, const std::filesystem::path& base_dir) {
  reject_unknown(json, {"schedule", "classes", "data", "featurizer", "model", "train", "cle",
                        "binary_positive", "output_dir"},
                 "manifest");
  ExperimentManifest m;
  try {
    m.schedule = parse_schedule(io::require_string(json, "schedule"));
    if (json.contains("classes")) m.classes = json.at("classes").get<std::size_t>();
    if (m.classes < 2) throw Error(ErrorKind::InvalidArgument, "classes must be >= 2");

    const io::Json& data = io::require_field(json, "data");
    reject_unknown(data, {"train", "soft_items", "soft_labels", "annotations", "soft_alpha", "dev",
                          "test", "extra_pool", "reference"},
                   "data");
    m.train = resolve(data, "train", base_dir);
    m.soft_items = resolve(data, "soft_items", base_dir);
    m.soft_labels = resolve(data, "soft_labels", base_dir);
    m.annotations = resolve(data, "annotations", base_dir);
    m.dev = resolve(data, "dev", base_dir);
    m.test = resolve(data, "test", base_dir);
    m.extra_pool = resolve(data, "extra_pool", base_dir);
    m.reference = resolve(data, "reference", base_dir);
    if (data.contains("soft_alpha")) m.soft_alpha = data.at("soft_alpha").get<double>();
    if (m.train.empty() || m.test.empty())
      throw Error(ErrorKind::MalformedInput, "data.train and data.test are required");
    if (!m.soft_labels.empty() && !m.annotations.empty())
      throw Error(ErrorKind::MalformedInput, "give data.soft_labels or data.annotations, not both");

    if (auto it = json.find("featurizer"); it != json.end()) {
      reject_unknown(*it, {"dim_per_segment", "hash"}, "featurizer");
      if (it->contains("dim_per_segment")) m.featurizer.dim_per_segment = it->at("dim_per_segment").get<std::size_t>();
      if (it->contains("hash")) m.featurizer.hash = it->at("hash").get<std::string>();
    }
    if (auto it = json.find("model"); it != json.end()) {
      reject_unknown(*it, {"architecture", "hidden", "seed"}, "model");
      if (it->contains("architecture"))
        m.model.architecture = parse_architecture(it->at("architecture").get<std::string>());
      if (it->contains("hidden")) m.model.hidden = it->at("hidden").get<std::size_t>();
      if (it->contains("seed")) m.model.seed = it->at("seed").get<std::uint64_t>();
    }
    if (m.model.architecture == Architecture::OneHidden)
      m.train_config.lr_hard = 0.05;
    if (auto it = json.find("train"); it != json.end()) {
      TrainConfig defaults = m.train_config;
      io::Json merged = to_json(defaults);
      merged.erase("lr_soft");
      for (const auto& [key, value] : it->items()) merged[key] = value;
      m.train_config = train_config_from_json(merged);
    }
    if (auto it = json.find("cle"); it != json.end()) {
      reject_unknown(*it, {"n_extra", "seed"}, "cle");
      if (it->contains("n_extra") && !it->at("n_extra").is_null())
        m.cle.n_extra = it->at("n_extra").get<std::size_t>();
      if (it->contains("seed")) m.cle.seed = it->at("seed").get<std::uint64_t>();
    }
    if (auto it = json.find("binary_positive"); it != json.end() && !it->is_null())
      m.binary_positive = it->get<std::size_t>();
    m.output_dir = resolve(json, "output_dir", base_dir);
    if (m.output_dir.empty()) throw Error(ErrorKind::MalformedInput, "output_dir is required");
  } catch (const io::Json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("manifest: ") + e.what());
  }
  const bool needs_soft = m.schedule != Schedule::B1 || !m.soft_items.empty();
  if (needs_soft && (m.soft_items.empty() || (m.soft_labels.empty() && m.annotations.empty())))
    throw Error(ErrorKind::MalformedInput, std::string(to_string(m.schedule)) +
                                               " needs data.soft_items and data.soft_labels or data.annotations");
  if (m.schedule == Schedule::CLE && m.extra_pool.empty())
    throw Error(ErrorKind::MalformedInput, "CLE needs data.extra_pool");
  return m;
}

ExperimentManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(io::read_json_file(path), path.parent_path());
}

io::Json to_json(const ExperimentManifest& m) {
  io::Json j;
  j["schedule"] = to_string(m.schedule);
  j["classes"] = m.classes;
  j["data"] = {{"train", path_json(m.train)},           {"soft_items", path_json(m.soft_items)},
               {"soft_labels", path_json(m.soft_labels)}, {"annotations", path_json(m.annotations)},
               {"soft_alpha", m.soft_alpha},            {"dev", path_json(m.dev)},
               {"test", path_json(m.test)},             {"extra_pool", path_json(m.extra_pool)},
               {"reference", path_json(m.reference)}};
  j["featurizer"] = {{"dim_per_segment", m.featurizer.dim_per_segment}, {"hash", m.featurizer.hash}};
  j["model"] = {{"architecture", to_string(m.model.architecture)},
                {"hidden", m.model.hidden},
                {"seed", m.model.seed}};
  j["train"] = to_json(m.train_config);
  j["cle"] = {{"n_extra", m.cle.n_extra ? io::Json(*m.cle.n_extra) : io::Json(nullptr)},
              {"seed", m.cle.seed}};
  j["binary_positive"] = m.binary_positive ? io::Json(*m.binary_positive) : io::Json(nullptr);
  j["output_dir"] = m.output_dir.string();
  return j;
}

ExperimentData load_experiment_data(const ExperimentManifest& m) {
  ExperimentData data;
  data.classes = m.classes;
  data.train = load_hard_dataset(m.train, m.featurizer);
  data.test = load_hard_dataset(m.test, m.featurizer);
  check_classes(data.train, m.classes, "train");
  check_classes(data.test, m.classes, "test");
  if (!m.dev.empty()) {
    data.dev = load_hard_dataset(m.dev, m.featurizer);
    check_classes(data.dev, m.classes, "dev");
  }
  if (!m.extra_pool.empty()) {
    data.extra_pool = load_hard_dataset(m.extra_pool, m.featurizer);
    check_classes(data.extra_pool, m.classes, "extra_pool");
  }
  if (!m.soft_items.empty()) {
    const auto items = load_items(m.soft_items, m.featurizer);
    SoftLabelFile labels;
    if (!m.annotations.empty()) {
      const auto annotations = load_annotations(m.annotations, m.classes);
      labels.counts = count_labels(annotations);
      for (const auto& [id, counts] : labels.counts)
        labels.probs.emplace(id, soft_label_from_counts(counts, m.soft_alpha));
    } else {
      labels = load_soft_labels(m.soft_labels);
    }
    data.soft = attach_soft_labels(items, labels, m.schedule == Schedule::AOC);
    for (const auto& item : items) data.soft_gold.push_back(item.gold);
    for (const auto& s : data.soft)
      if (s.target.classes() != m.classes)
        throw Error(ErrorKind::MalformedInput, "soft label for " + s.item_id + " has wrong K");
  }
  if (!m.reference.empty()) {
    const auto reference = load_soft_labels(m.reference);
    for (const auto& ex : data.test) {
      auto it = reference.probs.find(ex.item_id);
      if (it == reference.probs.end())
        throw Error(ErrorKind::MalformedInput, "no reference distribution for test item " + ex.item_id);
      data.test_reference.push_back({ex.features, it->second});
    }
  }
  std::optional<std::size_t> dim;
  auto check_dim = [&](const FeatureVector& f) {
    if (dim && *dim != f.dim())
      throw Error(ErrorKind::DimensionMismatch, "feature dimensions differ between data files");
    dim = f.dim();
  };
  for (const auto& x : data.train) check_dim(x.features);
  for (const auto& x : data.test) check_dim(x.features);
  for (const auto& x : data.dev) check_dim(x.features);
  for (const auto& x : data.soft) check_dim(x.features);
  for (const auto& x : data.extra_pool) check_dim(x.features);
  return data;
}

std::string eval_json_text(const EvalReport& report) { return to_json(report).dump(2) + "\n"; }

ExperimentResult run_experiment(const ExperimentManifest& m) {
  const ExperimentData data = load_experiment_data(m);
  if (data.train.empty()) throw Error(ErrorKind::EmptyData, "training set is empty");
  const std::size_t input_dim = data.train.front().features.dim();
  const ClassifierParams init =
      init_params(m.model.architecture, input_dim, m.classes, m.model.hidden, m.model.seed);

  ExperimentResult result;
  result.trace = run_schedule(m.schedule, init, data, m.train_config, m.cle);
  result.report = evaluate_experiment(result.trace.selected_params, data, m.binary_positive);

  io::Json featurizer = {{"dim_per_segment", m.featurizer.dim_per_segment}, {"hash", m.featurizer.hash}};
  io::write_text_file(m.output_dir / "trace.csv", trace_csv(result.trace));
  io::write_text_file(m.output_dir / "eval.json", eval_json_text(result.report));
  io::write_text_file(m.output_dir / "confusion.csv", confusion_csv(result.report.confusion));
  save_checkpoint(m.output_dir / "checkpoint.json", {result.trace.selected_params, featurizer});

  io::Json manifest = to_json(m);
  manifest["command"] = "train";
  manifest["created_utc"] = io::utc_timestamp();
  manifest["result"] = {{"total_steps", result.trace.total_steps},
                        {"selected_record", result.trace.selected_record
                                                ? io::Json(*result.trace.selected_record)
                                                : io::Json(nullptr)},
                        {"hard_training_items", hard_training_set(m.schedule, data, m.cle).size()},
                        {"soft_items", data.soft.size()}};
  io::write_text_file(m.output_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

}  // namespace slmg
