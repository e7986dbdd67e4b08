#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slmg/dataset.hpp"
#include "slmg/io.hpp"
#include "slmg/label_core.hpp"

namespace slmg {

enum class Architecture { Linear, OneHidden };
enum class LossKind { CCE, MSE };

std::string_view to_string(Architecture arch) noexcept;
std::string_view to_string(LossKind loss) noexcept;
Architecture parse_architecture(std::string_view name);
LossKind parse_loss_kind(std::string_view name);

/// Lower clamp applied to predicted probabilities before taking logs.
inline constexpr double kLogClamp = 1e-12;

/// Affine map y = W x + b with W stored row-major (rows x cols).
struct DenseLayer {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  double& at(std::size_t r, std::size_t c) { return weights[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return weights[r * cols + c]; }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Softmax classifier. Linear holds one K x D layer; OneHidden holds an
/// h x D tanh layer followed by a K x h output layer.
struct ClassifierParams {
  Architecture architecture = Architecture::Linear;
  std::size_t input_dim = 0;
  std::size_t classes = 0;
  std::size_t hidden = 0;  // 0 for Linear
  std::vector<DenseLayer> layers;

  friend bool operator==(const ClassifierParams&, const ClassifierParams&) = default;
};

/// dL/dtheta, layer-for-layer congruent with the ClassifierParams it came from.
struct GradientSet {
  std::vector<DenseLayer> layers;
};

/// Weights uniform in [-s, s], s = sqrt(6 / (fan_in + fan_out)); biases zero.
ClassifierParams init_params(Architecture arch, std::size_t input_dim, std::size_t classes,
                             std::size_t hidden, std::uint64_t seed);

std::vector<double> logits(const ClassifierParams& params, const FeatureVector& x);
LabelDistribution forward(const ClassifierParams& params, const FeatureVector& x);

/// Max-subtracted softmax.
std::vector<double> softmax(std::span<const double> z);

/// -sum_j target_j log(max(pred_j, kLogClamp)).
double cce_loss(const LabelDistribution& pred, const LabelDistribution& target);
/// sum_j (pred_j - target_j)^2, summed over classes.
double mse_loss(const LabelDistribution& pred, const LabelDistribution& target);
double loss_value(LossKind kind, const LabelDistribution& pred, const LabelDistribution& target);

/// dL/dz for softmax logits z given pred = softmax(z).
std::vector<double> logit_gradient(LossKind kind, std::span<const double> pred,
                                   std::span<const double> target);

struct LossAndGradient {
  double mean_loss = 0.0;
  GradientSet grads;
};

/// Exact gradient of the batch-mean loss. Per-example contributions are
/// combined by a pairwise tree sum, so the result does not depend on how the
/// batch might be partitioned for evaluation.
LossAndGradient gradient(const ClassifierParams& params, std::span<const SoftExample> batch,
                         LossKind loss);

/// Mean loss over the examples without computing gradients.
double mean_loss(const ClassifierParams& params, std::span<const SoftExample> data, LossKind loss);

/// theta - lr * g.
ClassifierParams sgd_step(const ClassifierParams& params, const GradientSet& grads, double lr);

io::Json to_json(const ClassifierParams& params);
ClassifierParams params_from_json(const io::Json& json);

struct Checkpoint {
  ClassifierParams params;
  io::Json featurizer = io::Json::object();
};

/// JSON with every weight printed at 17 significant digits, so loading
/// reproduces the parameters bit for bit.
std::string checkpoint_text(const Checkpoint& checkpoint);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace slmg
