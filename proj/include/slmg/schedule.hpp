#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slmg/dataset.hpp"
#include "slmg/io.hpp"
#include "slmg/model.hpp"

namespace slmg {

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t meta_epochs = 1;  // SLMG-S only
  LossKind hard_loss = LossKind::CCE;
  LossKind soft_loss = LossKind::CCE;
  double lr_hard = 0.1;
  /// Defaults to lr_hard when unset.
  std::optional<double> lr_soft;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  bool dev_selection = false;

  double effective_lr_soft() const { return lr_soft.value_or(lr_hard); }
};

void validate(const TrainConfig& config);
io::Json to_json(const TrainConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainConfig train_config_from_json(const io::Json& json);

enum class Phase { Hard, Soft };
std::string_view to_string(Phase phase) noexcept;

/// One pass over a phase's data.
struct TraceRecord {
  Phase phase = Phase::Hard;
  std::size_t meta_epoch = 1;
  std::size_t epoch = 1;
  double mean_loss = 0.0;
  std::size_t steps = 0;
  std::optional<double> dev_accuracy;
};

/// A contiguous run of passes over one data set, with the full-data mean
/// loss (phase's own loss kind) measured before and after it.
struct PhaseSummary {
  Phase phase = Phase::Hard;
  std::size_t meta_epoch = 1;
  std::size_t epochs = 0;
  double loss_before = 0.0;
  double loss_after = 0.0;
};

struct TrainTrace {
  std::vector<TraceRecord> records;
  std::vector<PhaseSummary> phases;
  ClassifierParams final_params;
  /// Best-dev params when dev_selection is on, otherwise final_params.
  ClassifierParams selected_params;
  /// Index into records of the selected pass; empty when nothing was selected.
  std::optional<std::size_t> selected_record;
  std::size_t total_steps = 0;
};

/// phase,meta_epoch,epoch,mean_loss,dev_accuracy
std::string trace_csv(const TrainTrace& trace);

struct EpochResult {
  ClassifierParams params;
  double mean_loss = 0.0;
  std::size_t steps = 0;
};

/// One seeded-shuffle pass in mini-batches (the last may be short), one SGD
/// step per batch. mean_loss averages the per-example losses seen by each
/// batch before its step.
EpochResult train_epoch(const ClassifierParams& params, std::span<const SoftExample> data,
                        LossKind loss, double lr, std::size_t batch_size, std::uint64_t shuffle_seed);

/// e hard epochs on one-hot targets.
TrainTrace train_b1(const ClassifierParams& init, std::span<const HardExample> train_hard,
                    const TrainConfig& config, std::span<const HardExample> dev = {});

/// Each epoch: one hard pass, then one pass over `soft` (skipped when empty).
TrainTrace train_slmg_i(const ClassifierParams& init, std::span<const HardExample> train_hard,
                        std::span<const SoftExample> soft, const TrainConfig& config,
                        std::span<const HardExample> dev = {});

/// me meta-epochs of e hard epochs followed by e soft epochs.
TrainTrace train_slmg_s(const ClassifierParams& init, std::span<const HardExample> train_hard,
                        std::span<const SoftExample> soft, const TrainConfig& config,
                        std::span<const HardExample> dev = {});

/// Shuffle seed used for pass `epoch` of `meta_epoch` in `phase`.
std::uint64_t pass_seed(std::uint64_t root, Phase phase, std::size_t meta_epoch, std::size_t epoch);

}  // namespace slmg
