#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slmg/dataset.hpp"
#include "slmg/eval.hpp"
#include "slmg/io.hpp"
#include "slmg/model.hpp"
#include "slmg/schedule.hpp"

namespace slmg {

/// B1 traditional, CLE (extra single-label data), AOC (one example per
/// crowd response), and the two soft-label fine-tuning schedules.
enum class Schedule { B1, CLE, AOC, SlmgS, SlmgI };

std::string_view to_string(Schedule schedule) noexcept;
/// Accepts B1, CLE (or B2), AOC (or B3), SLMG-S, SLMG-I.
Schedule parse_schedule(std::string_view name);

struct ModelSpec {
  Architecture architecture = Architecture::Linear;
  std::size_t hidden = 16;
  std::uint64_t seed = 0;
};

struct CleOptions {
  /// Defaults to the total number of crowd responses behind the soft items.
  std::optional<std::size_t> n_extra;
  std::uint64_t seed = 0;
};

/// Everything a schedule needs, already featurized.
struct ExperimentData {
  std::size_t classes = 3;
  std::vector<HardExample> train;
  std::vector<SoftExample> soft;
  /// Parallel to soft; the original gold label where one is known.
  std::vector<std::optional<ClassLabel>> soft_gold;
  std::vector<HardExample> dev;
  std::vector<HardExample> test;
  std::vector<HardExample> extra_pool;
  /// Reference distributions for the test items (optional).
  std::vector<ReferenceItem> test_reference;
};

/// Soft items as hard examples: gold label when known, otherwise harden().
std::vector<HardExample> soft_items_as_hard(const ExperimentData& data);

/// The hard-label training set a schedule uses. SLMG schedules train on
/// `train` alone and see the soft items only through their soft phases.
std::vector<HardExample> hard_training_set(Schedule schedule, const ExperimentData& data,
                                           const CleOptions& cle);

TrainTrace run_schedule(Schedule schedule, const ClassifierParams& init, const ExperimentData& data,
                        const TrainConfig& config, const CleOptions& cle = {});

/// Test-set report for `params`, with binary collapse and reference KL when available.
EvalReport evaluate_experiment(const ClassifierParams& params, const ExperimentData& data,
                               std::optional<std::size_t> binary_positive);

struct ExperimentManifest {
  Schedule schedule = Schedule::B1;
  std::size_t classes = 3;
  std::filesystem::path train;
  std::filesystem::path soft_items;
  std::filesystem::path soft_labels;
  std::filesystem::path annotations;
  double soft_alpha = 0.0;
  std::filesystem::path dev;
  std::filesystem::path test;
  std::filesystem::path extra_pool;
  std::filesystem::path reference;
  FeaturizerConfig featurizer;
  ModelSpec model;
  TrainConfig train_config;
  CleOptions cle;
  std::optional<std::size_t> binary_positive;
  std::filesystem::path output_dir;
};

/// Relative paths are resolved against `base_dir`. Unknown keys are rejected.
ExperimentManifest parse_manifest(const io::Json& json, const std::filesystem::path& base_dir);
ExperimentManifest load_manifest(const std::filesystem::path& path);
/// Every effective setting, defaults included.
io::Json to_json(const ExperimentManifest& manifest);

ExperimentData load_experiment_data(const ExperimentManifest& manifest);

struct ExperimentResult {
  TrainTrace trace;
  EvalReport report;
};

/// Loads data, trains, evaluates the selected params on the test set, and
/// writes trace.csv, eval.json, confusion.csv, checkpoint.json and
/// manifest.json into output_dir.
ExperimentResult run_experiment(const ExperimentManifest& manifest);

/// eval.json text; identical reports give identical bytes.
std::string eval_json_text(const EvalReport& report);

}  // namespace slmg
