#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slmg/label_core.hpp"

namespace slmg {

/// One crowd response: annotator `annotator_id` assigned `label` to `item_id`.
struct AnnotationRecord {
  std::string item_id;
  std::string annotator_id;
  ClassLabel label;
};

/// Deduplicated crowd responses over K classes.
///
/// Item and annotator ids are interned in first-appearance order; entries
/// refer to them by index. A repeated (item, annotator) pair keeps the label
/// of its last occurrence at the position of its first occurrence.
class AnnotationSet {
 public:
  struct Entry {
    std::uint32_t item;
    std::uint32_t annotator;
    std::uint32_t label;
  };

  AnnotationSet() = default;

  static AnnotationSet build(std::size_t classes, std::span<const AnnotationRecord> records);

  /// Builds from pre-interned ids. Pairs must already be unique.
  static AnnotationSet from_indexed(std::size_t classes, std::vector<std::string> items,
                                    std::vector<std::string> annotators,
                                    std::vector<Entry> entries);

  std::size_t classes() const noexcept { return classes_; }
  const std::vector<std::string>& items() const noexcept { return items_; }
  const std::vector<std::string>& annotators() const noexcept { return annotators_; }
  std::span<const Entry> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t duplicates_removed() const noexcept { return duplicates_removed_; }

  std::vector<AnnotationRecord> records() const;

  /// Per-item label counts, indexed like items().
  std::vector<std::vector<std::int64_t>> count_matrix() const;

 private:
  std::size_t classes_ = 0;
  std::vector<std::string> items_;
  std::vector<std::string> annotators_;
  std::vector<Entry> entries_;
  std::size_t duplicates_removed_ = 0;
};

/// JSON Lines: {"item_id": "...", "annotator_id": "...", "label": <int>}.
/// When `classes` is empty, K is inferred as max(label) + 1 (at least 2).
AnnotationSet load_annotations(const std::filesystem::path& path,
                               std::optional<std::size_t> classes = std::nullopt);
void save_annotations(const std::filesystem::path& path, const AnnotationSet& annotations);

/// item_id -> N_y.
std::map<std::string, std::vector<std::int64_t>> count_labels(const AnnotationSet& annotations);

/// (N_y + alpha) / (N + alpha K). Throws EmptyItem when N + alpha K == 0.
LabelDistribution soft_label_from_counts(std::span<const std::int64_t> counts, double alpha);

/// Smoothed label proportions for every annotated item; alpha = 0 gives N_y / N.
std::map<std::string, LabelDistribution> estimate_soft_labels(const AnnotationSet& annotations,
                                                              double smoothing_alpha);

/// As above, restricted to `item_ids`; throws EmptyItem for an id with no responses.
std::map<std::string, LabelDistribution> estimate_soft_labels(
    const AnnotationSet& annotations, double smoothing_alpha,
    std::span<const std::string> item_ids);

/// JSON Lines: {"item_id": "...", "probs": [...]} plus "counts" when given.
void save_soft_labels(const std::filesystem::path& path,
                      const std::map<std::string, LabelDistribution>& soft,
                      const std::map<std::string, std::vector<std::int64_t>>* counts = nullptr);

struct SoftLabelFile {
  std::map<std::string, LabelDistribution> probs;
  std::map<std::string, std::vector<std::int64_t>> counts;  // only items that carried counts
};
SoftLabelFile load_soft_labels(const std::filesystem::path& path);

struct KappaResult {
  double kappa = 0.0;
  std::size_t raters_per_item = 0;
  std::size_t items_used = 0;
  /// Items whose rating count differs from raters_per_item.
  std::size_t items_dropped = 0;
};

/// Fleiss' kappa over items sharing the most common rating count n >= 2.
KappaResult fleiss_kappa(const AnnotationSet& annotations);

struct HistogramBin {
  double bin_start = 0.0;
  double relative_frequency = 0.0;
  std::size_t count = 0;
};

/// Relative-frequency histogram of soft[item][gold[item]]. Bins of width
/// `bin_width` cover [0, 1]; each is right-open except the last.
std::vector<HistogramBin> gold_agreement_histogram(const std::map<std::string, LabelDistribution>& soft,
                                                   const std::map<std::string, ClassLabel>& gold,
                                                   double bin_width);

struct BudgetPoint {
  std::size_t n_annotators = 0;
  double mean_kl = 0.0;
  std::vector<double> per_run_kl;
};

struct BudgetCurve {
  std::size_t runs = 0;
  std::vector<BudgetPoint> points;
};

/// Mean over items of D(P || Q_n), where P is the smoothed estimate from all
/// responses and Q_n the smoothed estimate from the first n annotators of a
/// random per-run permutation, for n = 1..max_n. Requires alpha > 0.
BudgetCurve budget_curve(const AnnotationSet& annotations, std::size_t runs, std::size_t max_n,
                         double smoothing_alpha, std::uint64_t seed);

/// CSV with header n,run,kl and one row per (n, run).
std::string budget_curve_csv(const BudgetCurve& curve);

/// Responses of n annotators drawn uniformly without replacement.
AnnotationSet subsample_annotators(const AnnotationSet& annotations, std::size_t n,
                                   std::uint64_t seed);

}  // namespace slmg
