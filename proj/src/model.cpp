#include "slmg/model.hpp"

#include <algorithm>
#include <cmath>

#include "slmg/error.hpp"
#include "slmg/random.hpp"

namespace slmg {

namespace {

constexpr std::uint64_t kInitStream = 0x1217;

DenseLayer zero_layer(std::size_t rows, std::size_t cols) {
  return {rows, cols, std::vector<double>(rows * cols, 0.0), std::vector<double>(rows, 0.0)};
}

GradientSet zero_like(const ClassifierParams& params) {
  GradientSet g;
  for (const auto& layer : params.layers) g.layers.push_back(zero_layer(layer.rows, layer.cols));
  return g;
}

void affine(const DenseLayer& layer, std::span<const double> x, std::vector<double>& out) {
  out.assign(layer.rows, 0.0);
  for (std::size_t r = 0; r < layer.rows; ++r) {
    const double* w = layer.weights.data() + r * layer.cols;
    double acc = layer.bias[r];
    for (std::size_t c = 0; c < layer.cols; ++c) acc += w[c] * x[c];
    out[r] = acc;
  }
}

/// grad += delta x^T, bias += delta.
void accumulate_outer(DenseLayer& grad, std::span<const double> delta, std::span<const double> x) {
  for (std::size_t r = 0; r < grad.rows; ++r) {
    double* g = grad.weights.data() + r * grad.cols;
    for (std::size_t c = 0; c < grad.cols; ++c) g[c] += delta[r] * x[c];
    grad.bias[r] += delta[r];
  }
}

void add_into(GradientSet& into, const GradientSet& other) {
  for (std::size_t l = 0; l < into.layers.size(); ++l) {
    auto& a = into.layers[l];
    const auto& b = other.layers[l];
    for (std::size_t i = 0; i < a.weights.size(); ++i) a.weights[i] += b.weights[i];
    for (std::size_t i = 0; i < a.bias.size(); ++i) a.bias[i] += b.bias[i];
  }
}

void check_input(const ClassifierParams& params, const FeatureVector& x) {
  if (x.dim() != params.input_dim)
    throw Error(ErrorKind::DimensionMismatch, "input has dimension " + std::to_string(x.dim()) +
                                                  ", model expects " + std::to_string(params.input_dim));
}

void check_pair(const LabelDistribution& pred, const LabelDistribution& target) {
  if (pred.classes() != target.classes())
    throw Error(ErrorKind::DimensionMismatch, "prediction has K=" + std::to_string(pred.classes()) +
                                                  ", target has K=" + std::to_string(target.classes()));
}

struct PartialSum {
  double loss = 0.0;
  GradientSet grads;
};

PartialSum example_gradient(const ClassifierParams& params, const SoftExample& ex, LossKind kind) {
  check_input(params, ex.features);
  if (ex.target.classes() != params.classes)
    throw Error(ErrorKind::DimensionMismatch, "target K differs from model K");
  PartialSum out{0.0, zero_like(params)};
  const auto& x = ex.features.values;
  if (params.architecture == Architecture::Linear) {
    std::vector<double> z;
    affine(params.layers[0], x, z);
    const auto p = softmax(z);
    const auto pred = make_distribution(p);
    out.loss = loss_value(kind, pred, ex.target);
    accumulate_outer(out.grads.layers[0], logit_gradient(kind, p, ex.target.probs()), x);
    return out;
  }
  std::vector<double> h, z;
  affine(params.layers[0], x, h);
  for (double& v : h) v = std::tanh(v);
  affine(params.layers[1], h, z);
  const auto p = softmax(z);
  const auto pred = make_distribution(p);
  out.loss = loss_value(kind, pred, ex.target);
  const auto dz = logit_gradient(kind, p, ex.target.probs());
  accumulate_outer(out.grads.layers[1], dz, h);
  const auto& w2 = params.layers[1];
  std::vector<double> da(h.size(), 0.0);
  for (std::size_t r = 0; r < w2.rows; ++r)
    for (std::size_t c = 0; c < w2.cols; ++c) da[c] += w2.at(r, c) * dz[r];
  for (std::size_t c = 0; c < da.size(); ++c) da[c] *= 1.0 - h[c] * h[c];
  accumulate_outer(out.grads.layers[0], da, x);
  return out;
}

PartialSum tree_sum(const ClassifierParams& params, std::span<const SoftExample> batch, LossKind kind) {
  if (batch.size() == 1) return example_gradient(params, batch[0], kind);
  const std::size_t mid = batch.size() / 2;
  PartialSum left = tree_sum(params, batch.first(mid), kind);
  PartialSum right = tree_sum(params, batch.subspan(mid), kind);
  left.loss += right.loss;
  add_into(left.grads, right.grads);
  return left;
}

double tree_loss(const ClassifierParams& params, std::span<const SoftExample> data, LossKind kind) {
  if (data.size() == 1) return loss_value(kind, forward(params, data[0].features), data[0].target);
  const std::size_t mid = data.size() / 2;
  return tree_loss(params, data.first(mid), kind) + tree_loss(params, data.subspan(mid), kind);
}

io::Json layer_json(const DenseLayer& layer) {
  return {{"rows", layer.rows}, {"cols", layer.cols}, {"weights", layer.weights}, {"bias", layer.bias}};
}

}  // namespace

std::string_view to_string(Architecture arch) noexcept {
  return arch == Architecture::Linear ? "linear" : "one_hidden";
}

std::string_view to_string(LossKind loss) noexcept { return loss == LossKind::CCE ? "CCE" : "MSE"; }

Architecture parse_architecture(std::string_view name) {
  if (name == "linear") return Architecture::Linear;
  if (name == "one_hidden") return Architecture::OneHidden;
  throw Error(ErrorKind::InvalidArgument, "unknown architecture \"" + std::string(name) + "\"");
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "CCE" || name == "cce") return LossKind::CCE;
  if (name == "MSE" || name == "mse") return LossKind::MSE;
  throw Error(ErrorKind::InvalidArgument, "unknown loss \"" + std::string(name) + "\"");
}

ClassifierParams init_params(Architecture arch, std::size_t input_dim, std::size_t classes,
                             std::size_t hidden, std::uint64_t seed) {
  if (input_dim < 1 || classes < 2)
    throw Error(ErrorKind::InvalidArgument, "input_dim must be >= 1 and classes >= 2");
  if (arch == Architecture::OneHidden && hidden < 1)
    throw Error(ErrorKind::InvalidArgument, "one_hidden needs hidden width >= 1");
  ClassifierParams params;
  params.architecture = arch;
  params.input_dim = input_dim;
  params.classes = classes;
  params.hidden = arch == Architecture::Linear ? 0 : hidden;
  if (arch == Architecture::Linear) {
    params.layers.push_back(zero_layer(classes, input_dim));
  } else {
    params.layers.push_back(zero_layer(hidden, input_dim));
    params.layers.push_back(zero_layer(classes, hidden));
  }
  Rng rng(derive_seed(seed, {kInitStream}));
  for (auto& layer : params.layers) {
    const double s = std::sqrt(6.0 / static_cast<double>(layer.rows + layer.cols));
    for (double& w : layer.weights) w = rng.uniform(-s, s);
  }
  return params;
}

std::vector<double> softmax(std::span<const double> z) {
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - top);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::vector<double> logits(const ClassifierParams& params, const FeatureVector& x) {
  check_input(params, x);
  std::vector<double> z;
  if (params.architecture == Architecture::Linear) {
    affine(params.layers[0], x.values, z);
    return z;
  }
  std::vector<double> h;
  affine(params.layers[0], x.values, h);
  for (double& v : h) v = std::tanh(v);
  affine(params.layers[1], h, z);
  return z;
}

LabelDistribution forward(const ClassifierParams& params, const FeatureVector& x) {
  return make_distribution(softmax(logits(params, x)));
}

double cce_loss(const LabelDistribution& pred, const LabelDistribution& target) {
  check_pair(pred, target);
  double loss = 0.0;
  for (std::size_t j = 0; j < pred.classes(); ++j)
    if (target[j] != 0.0) loss -= target[j] * std::log(std::max(pred[j], kLogClamp));
  return loss;
}

double mse_loss(const LabelDistribution& pred, const LabelDistribution& target) {
  check_pair(pred, target);
  double loss = 0.0;
  for (std::size_t j = 0; j < pred.classes(); ++j) {
    const double d = pred[j] - target[j];
    loss += d * d;
  }
  return loss;
}

double loss_value(LossKind kind, const LabelDistribution& pred, const LabelDistribution& target) {
  return kind == LossKind::CCE ? cce_loss(pred, target) : mse_loss(pred, target);
}

std::vector<double> logit_gradient(LossKind kind, std::span<const double> pred,
                                   std::span<const double> target) {
  const std::size_t k = pred.size();
  std::vector<double> dz(k, 0.0);
  if (kind == LossKind::CCE) {
    // Clamped classes contribute no gradient; otherwise this is pred - target.
    double active_mass = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      if (pred[j] >= kLogClamp) active_mass += target[j];
    for (std::size_t j = 0; j < k; ++j)
      dz[j] = pred[j] * active_mass - (pred[j] >= kLogClamp ? target[j] : 0.0);
    return dz;
  }
  std::vector<double> dp(k);
  double weighted = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    dp[j] = 2.0 * (pred[j] - target[j]);
    weighted += dp[j] * pred[j];
  }
  for (std::size_t j = 0; j < k; ++j) dz[j] = pred[j] * (dp[j] - weighted);
  return dz;
}

LossAndGradient gradient(const ClassifierParams& params, std::span<const SoftExample> batch,
                         LossKind loss) {
  if (batch.empty()) throw Error(ErrorKind::EmptyData, "gradient of an empty batch");
  PartialSum sum = tree_sum(params, batch, loss);
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (auto& layer : sum.grads.layers) {
    for (double& v : layer.weights) v *= scale;
    for (double& v : layer.bias) v *= scale;
  }
  return {sum.loss * scale, std::move(sum.grads)};
}

double mean_loss(const ClassifierParams& params, std::span<const SoftExample> data, LossKind loss) {
  if (data.empty()) throw Error(ErrorKind::EmptyData, "loss of an empty set");
  return tree_loss(params, data, loss) / static_cast<double>(data.size());
}

ClassifierParams sgd_step(const ClassifierParams& params, const GradientSet& grads, double lr) {
  if (grads.layers.size() != params.layers.size())
    throw Error(ErrorKind::DimensionMismatch, "gradient and parameter layer counts differ");
  ClassifierParams next = params;
  for (std::size_t l = 0; l < next.layers.size(); ++l) {
    auto& layer = next.layers[l];
    const auto& g = grads.layers[l];
    if (g.rows != layer.rows || g.cols != layer.cols || g.weights.size() != layer.weights.size() ||
        g.bias.size() != layer.bias.size())
      throw Error(ErrorKind::DimensionMismatch, "gradient layer " + std::to_string(l) + " shape mismatch");
    for (std::size_t i = 0; i < layer.weights.size(); ++i) layer.weights[i] -= lr * g.weights[i];
    for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= lr * g.bias[i];
  }
  return next;
}

io::Json to_json(const ClassifierParams& params) {
  io::Json layers = io::Json::array();
  for (const auto& layer : params.layers) layers.push_back(layer_json(layer));
  return {{"architecture", to_string(params.architecture)},
          {"input_dim", params.input_dim},
          {"classes", params.classes},
          {"hidden", params.hidden},
          {"layers", layers}};
}

ClassifierParams params_from_json(const io::Json& json) {
  try {
    ClassifierParams params;
    params.architecture = parse_architecture(json.at("architecture").get<std::string>());
    params.input_dim = json.at("input_dim").get<std::size_t>();
    params.classes = json.at("classes").get<std::size_t>();
    params.hidden = json.at("hidden").get<std::size_t>();
    for (const auto& lj : json.at("layers")) {
      DenseLayer layer;
      layer.rows = lj.at("rows").get<std::size_t>();
      layer.cols = lj.at("cols").get<std::size_t>();
      layer.weights = lj.at("weights").get<std::vector<double>>();
      layer.bias = lj.at("bias").get<std::vector<double>>();
      if (layer.weights.size() != layer.rows * layer.cols || layer.bias.size() != layer.rows)
        throw Error(ErrorKind::MalformedInput, "layer arrays do not match declared shape");
      for (double v : layer.weights)
        if (!std::isfinite(v)) throw Error(ErrorKind::MalformedInput, "non-finite weight");
      params.layers.push_back(std::move(layer));
    }
    const bool linear = params.architecture == Architecture::Linear;
    const bool shapes_ok =
        linear ? params.layers.size() == 1 && params.layers[0].rows == params.classes &&
                     params.layers[0].cols == params.input_dim
               : params.layers.size() == 2 && params.layers[0].rows == params.hidden &&
                     params.layers[0].cols == params.input_dim &&
                     params.layers[1].rows == params.classes && params.layers[1].cols == params.hidden;
    if (!shapes_ok) throw Error(ErrorKind::MalformedInput, "layer shapes inconsistent with architecture");
    return params;
  } catch (const io::Json::exception& e) {
    throw Error(ErrorKind::MalformedInput, std::string("bad parameter JSON: ") + e.what());
  }
}

std::string checkpoint_text(const Checkpoint& checkpoint) {
  const auto& p = checkpoint.params;
  std::string out = "{\n  \"format\": \"slmg-checkpoint-v1\",\n";
  out += "  \"architecture\": " + io::quote(to_string(p.architecture)) + ",\n";
  out += "  \"input_dim\": " + std::to_string(p.input_dim) + ",\n";
  out += "  \"classes\": " + std::to_string(p.classes) + ",\n";
  out += "  \"hidden\": " + std::to_string(p.hidden) + ",\n";
  out += "  \"layers\": [";
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    out += l ? ",\n    {" : "\n    {";
    out += "\"rows\": " + std::to_string(layer.rows) + ", \"cols\": " + std::to_string(layer.cols);
    out += ",\n     \"weights\": " + io::format_real_array(layer.weights);
    out += ",\n     \"bias\": " + io::format_real_array(layer.bias) + "}";
  }
  out += "\n  ],\n  \"featurizer\": " + checkpoint.featurizer.dump() + "\n}\n";
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  io::write_text_file(path, checkpoint_text(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const io::Json json = io::read_json_file(path);
  if (!json.is_object() || json.value("format", "") != "slmg-checkpoint-v1")
    throw Error(ErrorKind::MalformedInput, path.string() + ": not an slmg checkpoint");
  Checkpoint checkpoint;
  checkpoint.params = params_from_json(json);
  if (auto it = json.find("featurizer"); it != json.end()) checkpoint.featurizer = *it;
  return checkpoint;
}

}  // namespace slmg
