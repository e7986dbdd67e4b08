#include "slmg/eval.hpp"

#include <cmath>

#include "slmg/error.hpp"

namespace slmg {

ConfusionMatrix ConfusionMatrix::from_rows(const std::vector<std::vector<std::int64_t>>& rows) {
  ConfusionMatrix m(rows.size());
  for (std::size_t g = 0; g < rows.size(); ++g) {
    if (rows[g].size() != rows.size())
      throw Error(ErrorKind::DimensionMismatch, "confusion matrix must be square");
    for (std::size_t p = 0; p < rows.size(); ++p) {
      if (rows[g][p] < 0) throw Error(ErrorKind::NegativeEntry, "negative confusion count");
      m.at(g, p) = rows[g][p];
    }
  }
  return m;
}

std::int64_t ConfusionMatrix::total() const noexcept {
  std::int64_t sum = 0;
  for (auto c : counts_) sum += c;
  return sum;
}

std::int64_t ConfusionMatrix::diagonal() const noexcept {
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < classes_; ++i) sum += at(i, i);
  return sum;
}

std::int64_t ConfusionMatrix::row_sum(std::size_t gold) const {
  std::int64_t sum = 0;
  for (std::size_t p = 0; p < classes_; ++p) sum += at(gold, p);
  return sum;
}

std::int64_t ConfusionMatrix::column_sum(std::size_t predicted) const {
  std::int64_t sum = 0;
  for (std::size_t g = 0; g < classes_; ++g) sum += at(g, predicted);
  return sum;
}

std::vector<std::vector<std::int64_t>> ConfusionMatrix::rows() const {
  std::vector<std::vector<std::int64_t>> out(classes_, std::vector<std::int64_t>(classes_));
  for (std::size_t g = 0; g < classes_; ++g)
    for (std::size_t p = 0; p < classes_; ++p) out[g][p] = at(g, p);
  return out;
}

std::size_t predict(const ClassifierParams& params, const FeatureVector& x) {
  return argmax(forward(params, x).probs());
}

EvalReport evaluate(const ClassifierParams& params, std::span<const HardExample> test) {
  if (test.empty()) throw Error(ErrorKind::EmptyData, "empty test set");
  EvalReport report;
  report.n = test.size();
  report.confusion = ConfusionMatrix(params.classes);
  for (const auto& ex : test) {
    if (ex.label.index >= params.classes)
      throw Error(ErrorKind::IndexOutOfRange, "gold label out of range for item " + ex.item_id);
    ++report.confusion.at(ex.label.index, predict(params, ex.features));
  }
  report.accuracy = static_cast<double>(report.confusion.diagonal()) / static_cast<double>(report.n);
  return report;
}

double binary_collapse_accuracy(const ConfusionMatrix& confusion, ClassLabel positive_class) {
  const std::size_t k = confusion.classes();
  const std::size_t pos = positive_class.index;
  if (pos >= k)
    throw Error(ErrorKind::IndexOutOfRange, "positive class " + std::to_string(pos) +
                                                " out of range for K=" + std::to_string(k));
  const std::int64_t n = confusion.total();
  if (n == 0) throw Error(ErrorKind::EmptyData, "empty confusion matrix");
  std::int64_t correct = confusion.at(pos, pos);
  for (std::size_t g = 0; g < k; ++g)
    for (std::size_t p = 0; p < k; ++p)
      if (g != pos && p != pos) correct += confusion.at(g, p);
  return static_cast<double>(correct) / static_cast<double>(n);
}

void add_binary_collapse(EvalReport& report, ClassLabel positive_class) {
  report.binary_accuracy = binary_collapse_accuracy(report.confusion, positive_class);
  report.binary_positive = positive_class.index;
}

double mean_kl_to_reference(const ClassifierParams& params, std::span<const ReferenceItem> items) {
  if (items.empty()) throw Error(ErrorKind::EmptyData, "no reference items");
  double sum = 0.0;
  for (const auto& item : items) sum += kl_divergence(item.reference, forward(params, item.features));
  return sum / static_cast<double>(items.size());
}

io::Json to_json(const EvalReport& report) {
  io::Json j = {{"n", report.n},
                {"classes", report.confusion.classes()},
                {"accuracy", report.accuracy},
                {"confusion", report.confusion.rows()}};
  j["binary_positive"] = report.binary_positive ? io::Json(*report.binary_positive) : io::Json(nullptr);
  j["binary_accuracy"] = report.binary_accuracy ? io::Json(*report.binary_accuracy) : io::Json(nullptr);
  j["mean_kl_to_reference"] =
      report.mean_kl_to_reference ? io::Json(*report.mean_kl_to_reference) : io::Json(nullptr);
  return j;
}

std::string confusion_csv(const ConfusionMatrix& confusion) {
  std::string out = "gold\\predicted";
  for (std::size_t p = 0; p < confusion.classes(); ++p) out += ',' + std::to_string(p);
  out += '\n';
  for (std::size_t g = 0; g < confusion.classes(); ++g) {
    out += std::to_string(g);
    for (std::size_t p = 0; p < confusion.classes(); ++p) out += ',' + std::to_string(confusion.at(g, p));
    out += '\n';
  }
  return out;
}

SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  s.count = values.size();
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace slmg
