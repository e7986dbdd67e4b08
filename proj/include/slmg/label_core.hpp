#pragma once

#include <compare>
#include <cstddef>
#include <span>
#include <vector>

namespace slmg {

/// Absolute tolerance on |sum - 1| accepted by LabelDistribution.
inline constexpr double kNormalizationTolerance = 1e-9;

/// Index of a class in [0, K).
struct ClassLabel {
  std::size_t index = 0;

  friend auto operator<=>(const ClassLabel&, const ClassLabel&) = default;
};

/// A validated probability vector over K >= 2 classes.
///
/// Construction never renormalizes: entries are stored exactly as given and
/// rejected if negative, non-finite, or off the simplex by more than
/// kNormalizationTolerance.
class LabelDistribution {
 public:
  static LabelDistribution uniform(std::size_t classes);
  static LabelDistribution one_hot(std::size_t classes, ClassLabel label);

  std::size_t classes() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }

  friend bool operator==(const LabelDistribution&, const LabelDistribution&) = default;

 private:
  explicit LabelDistribution(std::vector<double> probs) : probs_(std::move(probs)) {}
  friend LabelDistribution make_distribution(std::vector<double> probs);

  std::vector<double> probs_;
};

/// Throws Error{NegativeEntry | NotNormalized | InvalidArgument}.
LabelDistribution make_distribution(std::vector<double> probs);

/// Explicit renormalization of non-negative weights with a positive sum.
LabelDistribution normalize(std::span<const double> weights);

/// Shannon entropy in nats, with 0 log 0 = 0.
double entropy(const LabelDistribution& d);

/// D(p || q) = sum_i p_i log(p_i / q_i) in nats. Terms with p_i = 0 vanish.
/// Throws UnsupportedDivergence if q_i = 0 where p_i > 0.
double kl_divergence(const LabelDistribution& p_true, const LabelDistribution& q);

/// (d[positive], 1 - d[positive]).
LabelDistribution collapse_to_binary(const LabelDistribution& d, ClassLabel positive_class);

/// Index of the largest entry; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

}  // namespace slmg
