#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slmg/dataset.hpp"
#include "slmg/io.hpp"
#include "slmg/label_core.hpp"
#include "slmg/model.hpp"

namespace slmg {

/// K x K counts; rows are gold labels, columns are predictions.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {}
  /// Row-major counts; throws unless rows.size() == K and every row has K entries.
  static ConfusionMatrix from_rows(const std::vector<std::vector<std::int64_t>>& rows);

  std::size_t classes() const noexcept { return classes_; }
  std::int64_t& at(std::size_t gold, std::size_t predicted) { return counts_[gold * classes_ + predicted]; }
  std::int64_t at(std::size_t gold, std::size_t predicted) const {
    return counts_[gold * classes_ + predicted];
  }
  std::int64_t total() const noexcept;
  std::int64_t diagonal() const noexcept;
  std::int64_t row_sum(std::size_t gold) const;
  std::int64_t column_sum(std::size_t predicted) const;
  std::vector<std::vector<std::int64_t>> rows() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_ = 0;
  std::vector<std::int64_t> counts_;
};

struct EvalReport {
  std::size_t n = 0;
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::optional<std::size_t> binary_positive;
  std::optional<double> binary_accuracy;
  std::optional<double> mean_kl_to_reference;
};

/// argmax of forward(params, x), ties toward the lowest class.
std::size_t predict(const ClassifierParams& params, const FeatureVector& x);

EvalReport evaluate(const ClassifierParams& params, std::span<const HardExample> test);

/// (TP + TN) / n after merging every class other than `positive_class`.
double binary_collapse_accuracy(const ConfusionMatrix& confusion, ClassLabel positive_class);

/// Fills binary_positive / binary_accuracy on an existing report.
void add_binary_collapse(EvalReport& report, ClassLabel positive_class);

struct ReferenceItem {
  FeatureVector features;
  LabelDistribution reference;
};

/// Mean over items of D(reference || forward(params, x)).
double mean_kl_to_reference(const ClassifierParams& params, std::span<const ReferenceItem> items);

io::Json to_json(const EvalReport& report);
/// Header row "gold\predicted,0,1,...", then one row per gold class.
std::string confusion_csv(const ConfusionMatrix& confusion);

struct SummaryStats {
  std::size_t count = 0;
  double mean = 0.0;
  /// Sample standard deviation (n - 1 denominator); 0 for a single value.
  double stddev = 0.0;
};

SummaryStats summarize(std::span<const double> values);

}  // namespace slmg
