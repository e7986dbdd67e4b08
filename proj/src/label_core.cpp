#include "slmg/label_core.hpp"

#include <cmath>
#include <string>

#include "slmg/error.hpp"

namespace slmg {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NegativeEntry: return "NegativeEntry";
    case ErrorKind::NotNormalized: return "NotNormalized";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::UnsupportedDivergence: return "UnsupportedDivergence";
    case ErrorKind::EmptyItem: return "EmptyItem";
    case ErrorKind::DegenerateAgreement: return "DegenerateAgreement";
    case ErrorKind::MissingGold: return "MissingGold";
    case ErrorKind::InsufficientAnnotators: return "InsufficientAnnotators";
    case ErrorKind::MissingCounts: return "MissingCounts";
    case ErrorKind::PoolTooSmall: return "PoolTooSmall";
    case ErrorKind::BadFractions: return "BadFractions";
    case ErrorKind::MalformedInput: return "MalformedInput";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EmptyData: return "EmptyData";
    case ErrorKind::UnknownSchedule: return "UnknownSchedule";
    case ErrorKind::Io: return "Io";
    case ErrorKind::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

LabelDistribution make_distribution(std::vector<double> probs) {
  if (probs.size() < 2)
    throw Error(ErrorKind::InvalidArgument, "distribution needs at least 2 classes, got " +
                                                std::to_string(probs.size()));
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!std::isfinite(probs[i]))
      throw Error(ErrorKind::InvalidArgument, "entry " + std::to_string(i) + " is not finite");
    if (probs[i] < 0.0)
      throw Error(ErrorKind::NegativeEntry, "entry " + std::to_string(i) + " is negative");
    sum += probs[i];
  }
  if (std::abs(sum - 1.0) > kNormalizationTolerance)
    throw Error(ErrorKind::NotNormalized, "entries sum to " + std::to_string(sum));
  return LabelDistribution(std::move(probs));
}

LabelDistribution normalize(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!std::isfinite(w)) throw Error(ErrorKind::InvalidArgument, "weight is not finite");
    if (w < 0.0) throw Error(ErrorKind::NegativeEntry, "weight is negative");
    sum += w;
  }
  if (!(sum > 0.0)) throw Error(ErrorKind::InvalidArgument, "weights sum to zero");
  std::vector<double> probs(weights.begin(), weights.end());
  for (double& p : probs) p /= sum;
  return make_distribution(std::move(probs));
}

LabelDistribution LabelDistribution::uniform(std::size_t classes) {
  return make_distribution(std::vector<double>(classes, 1.0 / static_cast<double>(classes)));
}

LabelDistribution LabelDistribution::one_hot(std::size_t classes, ClassLabel label) {
  if (label.index >= classes)
    throw Error(ErrorKind::IndexOutOfRange, "label " + std::to_string(label.index) +
                                                " out of range for K=" + std::to_string(classes));
  std::vector<double> probs(classes, 0.0);
  probs[label.index] = 1.0;
  return make_distribution(std::move(probs));
}

double entropy(const LabelDistribution& d) {
  double h = 0.0;
  for (double p : d.probs())
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

double kl_divergence(const LabelDistribution& p_true, const LabelDistribution& q) {
  if (p_true.classes() != q.classes())
    throw Error(ErrorKind::DimensionMismatch, "KL between K=" + std::to_string(p_true.classes()) +
                                                  " and K=" + std::to_string(q.classes()));
  double d = 0.0;
  for (std::size_t i = 0; i < p_true.classes(); ++i) {
    const double p = p_true[i];
    if (p == 0.0) continue;
    if (q[i] == 0.0)
      throw Error(ErrorKind::UnsupportedDivergence,
                  "q has zero mass on class " + std::to_string(i) + " where p > 0");
    d += p * std::log(p / q[i]);
  }
  return d;
}

LabelDistribution collapse_to_binary(const LabelDistribution& d, ClassLabel positive_class) {
  if (positive_class.index >= d.classes())
    throw Error(ErrorKind::IndexOutOfRange, "positive class " +
                                                std::to_string(positive_class.index) +
                                                " out of range for K=" + std::to_string(d.classes()));
  const double pos = d[positive_class.index];
  return make_distribution({pos, 1.0 - pos});
}

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace slmg
