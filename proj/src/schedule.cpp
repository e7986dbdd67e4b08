#include "slmg/schedule.hpp"

#include <cmath>

#include "slmg/error.hpp"
#include "slmg/eval.hpp"
#include "slmg/random.hpp"

namespace slmg {

namespace {

constexpr std::uint64_t kShuffleStream = 0x5F0F;

class Trainer {
 public:
  Trainer(const ClassifierParams& init, const TrainConfig& config, std::span<const HardExample> dev)
      : config_(config), dev_(dev), params_(init) {
    validate(config);
    if (config.dev_selection && dev.empty())
      throw Error(ErrorKind::InvalidArgument, "dev_selection needs a non-empty dev set");
    trace_.final_params = init;
    trace_.selected_params = init;
  }

  /// Passes numbered first_epoch .. first_epoch + epochs - 1.
  void run_phase(Phase phase, std::size_t meta_epoch, std::size_t first_epoch, std::size_t epochs,
                 std::span<const SoftExample> data, LossKind loss, double lr) {
    if (epochs == 0 || data.empty()) return;
    PhaseSummary summary{phase, meta_epoch, epochs, mean_loss(params_, data, loss), 0.0};
    for (std::size_t epoch = first_epoch; epoch < first_epoch + epochs; ++epoch) {
      EpochResult r = train_epoch(params_, data, loss, lr, config_.batch_size,
                                  pass_seed(config_.seed, phase, meta_epoch, epoch));
      if (!std::isfinite(r.mean_loss))
        throw Error(ErrorKind::InvariantViolation, "non-finite training loss");
      params_ = std::move(r.params);
      TraceRecord record{phase, meta_epoch, epoch, r.mean_loss, r.steps, std::nullopt};
      trace_.total_steps += r.steps;
      if (config_.dev_selection) {
        record.dev_accuracy = evaluate(params_, dev_).accuracy;
        if (!best_dev_ || *record.dev_accuracy > *best_dev_) {
          best_dev_ = record.dev_accuracy;
          trace_.selected_params = params_;
          trace_.selected_record = trace_.records.size();
        }
      }
      trace_.records.push_back(record);
    }
    summary.loss_after = mean_loss(params_, data, loss);
    trace_.phases.push_back(summary);
  }

  TrainTrace finish() {
    trace_.final_params = params_;
    if (!config_.dev_selection) trace_.selected_params = params_;
    return std::move(trace_);
  }

 private:
  const TrainConfig& config_;
  std::span<const HardExample> dev_;
  ClassifierParams params_;
  TrainTrace trace_;
  std::optional<double> best_dev_;
};

std::vector<SoftExample> hard_targets(const ClassifierParams& init, std::span<const HardExample> hard) {
  if (hard.empty()) throw Error(ErrorKind::EmptyData, "hard training set is empty");
  return as_soft(hard, init.classes);
}

}  // namespace

void validate(const TrainConfig& c) {
  if (!(c.lr_hard > 0.0) || !std::isfinite(c.lr_hard))
    throw Error(ErrorKind::InvalidArgument, "lr_hard must be a positive finite number");
  if (c.lr_soft && (!(*c.lr_soft > 0.0) || !std::isfinite(*c.lr_soft)))
    throw Error(ErrorKind::InvalidArgument, "lr_soft must be a positive finite number");
  if (c.batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
}

io::Json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"meta_epochs", c.meta_epochs},
          {"hard_loss", to_string(c.hard_loss)},
          {"soft_loss", to_string(c.soft_loss)},
          {"lr_hard", c.lr_hard},
          {"lr_soft", c.effective_lr_soft()},
          {"batch_size", c.batch_size},
          {"seed", c.seed},
          {"dev_selection", c.dev_selection}};
}

TrainConfig train_config_from_json(const io::Json& json) {
  if (!json.is_object()) throw Error(ErrorKind::MalformedInput, "train config must be an object");
  TrainConfig c;
  for (const auto& [key, value] : json.items()) {
    try {
      if (key == "epochs") c.epochs = value.get<std::size_t>();
      else if (key == "meta_epochs") c.meta_epochs = value.get<std::size_t>();
      else if (key == "hard_loss") c.hard_loss = parse_loss_kind(value.get<std::string>());
      else if (key == "soft_loss") c.soft_loss = parse_loss_kind(value.get<std::string>());
      else if (key == "lr_hard") c.lr_hard = value.get<double>();
      else if (key == "lr_soft") c.lr_soft = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "dev_selection") c.dev_selection = value.get<bool>();
      else throw Error(ErrorKind::MalformedInput, "unknown train config key \"" + key + "\"");
    } catch (const io::Json::exception& e) {
      throw Error(ErrorKind::MalformedInput, "bad value for \"" + key + "\": " + e.what());
    }
  }
  validate(c);
  return c;
}

std::string_view to_string(Phase phase) noexcept { return phase == Phase::Hard ? "hard" : "soft"; }

std::uint64_t pass_seed(std::uint64_t root, Phase phase, std::size_t meta_epoch, std::size_t epoch) {
  return derive_seed(root, {kShuffleStream, static_cast<std::uint64_t>(phase), meta_epoch, epoch});
}

std::string trace_csv(const TrainTrace& trace) {
  std::string out = "phase,meta_epoch,epoch,mean_loss,dev_accuracy\n";
  for (const auto& r : trace.records) {
    out += std::string(to_string(r.phase)) + ',' + std::to_string(r.meta_epoch) + ',' +
           std::to_string(r.epoch) + ',' + io::format_real(r.mean_loss) + ',';
    if (r.dev_accuracy) out += io::format_real(*r.dev_accuracy);
    out += '\n';
  }
  return out;
}

EpochResult train_epoch(const ClassifierParams& params, std::span<const SoftExample> data,
                        LossKind loss, double lr, std::size_t batch_size, std::uint64_t shuffle_seed) {
  if (data.empty()) throw Error(ErrorKind::EmptyData, "training pass over an empty data set");
  if (batch_size < 1) throw Error(ErrorKind::InvalidArgument, "batch_size must be >= 1");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(shuffle_seed);
  rng.shuffle(order);

  EpochResult result{params, 0.0, 0};
  std::vector<SoftExample> batch;
  batch.reserve(batch_size);
  double loss_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, order.size());
    batch.clear();
    for (std::size_t i = start; i < end; ++i) batch.push_back(data[order[i]]);
    LossAndGradient lg = gradient(result.params, batch, loss);
    loss_sum += lg.mean_loss * static_cast<double>(batch.size());
    result.params = sgd_step(result.params, lg.grads, lr);
    ++result.steps;
  }
  result.mean_loss = loss_sum / static_cast<double>(data.size());
  return result;
}

TrainTrace train_b1(const ClassifierParams& init, std::span<const HardExample> train_hard,
                    const TrainConfig& config, std::span<const HardExample> dev) {
  const auto hard = hard_targets(init, train_hard);
  Trainer trainer(init, config, dev);
  trainer.run_phase(Phase::Hard, 1, 1, config.epochs, hard, config.hard_loss, config.lr_hard);
  return trainer.finish();
}

TrainTrace train_slmg_i(const ClassifierParams& init, std::span<const HardExample> train_hard,
                        std::span<const SoftExample> soft, const TrainConfig& config,
                        std::span<const HardExample> dev) {
  const auto hard = hard_targets(init, train_hard);
  Trainer trainer(init, config, dev);
  // Pass seeds follow (meta 1, epoch i) so an empty soft set replays B1 exactly.
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    trainer.run_phase(Phase::Hard, 1, epoch, 1, hard, config.hard_loss, config.lr_hard);
    trainer.run_phase(Phase::Soft, 1, epoch, 1, soft, config.soft_loss, config.effective_lr_soft());
  }
  return trainer.finish();
}

TrainTrace train_slmg_s(const ClassifierParams& init, std::span<const HardExample> train_hard,
                        std::span<const SoftExample> soft, const TrainConfig& config,
                        std::span<const HardExample> dev) {
  const auto hard = hard_targets(init, train_hard);
  Trainer trainer(init, config, dev);
  for (std::size_t meta = 1; meta <= config.meta_epochs; ++meta) {
    trainer.run_phase(Phase::Hard, meta, 1, config.epochs, hard, config.hard_loss, config.lr_hard);
    trainer.run_phase(Phase::Soft, meta, 1, config.epochs, soft, config.soft_loss,
                      config.effective_lr_soft());
  }
  return trainer.finish();
}

}  // namespace slmg
