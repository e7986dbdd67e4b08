#include "slmg/crowd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "slmg/error.hpp"
#include "slmg/io.hpp"
#include "slmg/random.hpp"

namespace slmg {

namespace {

constexpr std::uint64_t kBudgetStream = 0xB0D6E7;
constexpr std::uint64_t kSubsampleStream = 0x5AB5A3;

std::uint32_t intern(std::unordered_map<std::string, std::uint32_t>& index,
                     std::vector<std::string>& names, const std::string& name) {
  auto [it, inserted] = index.try_emplace(name, static_cast<std::uint32_t>(names.size()));
  if (inserted) names.push_back(name);
  return it->second;
}

void check_label(std::size_t label, std::size_t classes) {
  if (label >= classes)
    throw Error(ErrorKind::IndexOutOfRange,
                "label " + std::to_string(label) + " out of range for K=" + std::to_string(classes));
}

}  // namespace

AnnotationSet AnnotationSet::build(std::size_t classes, std::span<const AnnotationRecord> records) {
  if (classes < 2) throw Error(ErrorKind::InvalidArgument, "K must be at least 2");
  AnnotationSet set;
  set.classes_ = classes;
  std::unordered_map<std::string, std::uint32_t> item_index, annotator_index;
  std::unordered_map<std::uint64_t, std::size_t> pair_position;
  for (const auto& r : records) {
    check_label(r.label.index, classes);
    const std::uint32_t item = intern(item_index, set.items_, r.item_id);
    const std::uint32_t annotator = intern(annotator_index, set.annotators_, r.annotator_id);
    const std::uint64_t key = (std::uint64_t{item} << 32) | annotator;
    const auto label = static_cast<std::uint32_t>(r.label.index);
    auto [it, inserted] = pair_position.try_emplace(key, set.entries_.size());
    if (inserted) {
      set.entries_.push_back({item, annotator, label});
    } else {
      set.entries_[it->second].label = label;
      ++set.duplicates_removed_;
    }
  }
  return set;
}

AnnotationSet AnnotationSet::from_indexed(std::size_t classes, std::vector<std::string> items,
                                          std::vector<std::string> annotators,
                                          std::vector<Entry> entries) {
  if (classes < 2) throw Error(ErrorKind::InvalidArgument, "K must be at least 2");
  for (const auto& e : entries) {
    check_label(e.label, classes);
    if (e.item >= items.size() || e.annotator >= annotators.size())
      throw Error(ErrorKind::IndexOutOfRange, "entry references an unknown item or annotator");
  }
  AnnotationSet set;
  set.classes_ = classes;
  set.items_ = std::move(items);
  set.annotators_ = std::move(annotators);
  set.entries_ = std::move(entries);
  return set;
}

std::vector<AnnotationRecord> AnnotationSet::records() const {
  std::vector<AnnotationRecord> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_)
    out.push_back({items_[e.item], annotators_[e.annotator], ClassLabel{e.label}});
  return out;
}

std::vector<std::vector<std::int64_t>> AnnotationSet::count_matrix() const {
  std::vector<std::vector<std::int64_t>> counts(items_.size(),
                                                std::vector<std::int64_t>(classes_, 0));
  for (const auto& e : entries_) ++counts[e.item][e.label];
  return counts;
}

AnnotationSet load_annotations(const std::filesystem::path& path,
                               std::optional<std::size_t> classes) {
  std::vector<AnnotationRecord> records;
  io::read_jsonl(path, [&](const io::Json& line, std::size_t) {
    const long long label = io::require_integer(line, "label");
    if (label < 0) throw Error(ErrorKind::MalformedInput, "label must be non-negative");
    if (classes && static_cast<std::size_t>(label) >= *classes)
      throw Error(ErrorKind::MalformedInput, "label " + std::to_string(label) +
                                                 " out of range for K=" + std::to_string(*classes));
    records.push_back({io::require_string(line, "item_id"), io::require_string(line, "annotator_id"),
                       ClassLabel{static_cast<std::size_t>(label)}});
  });
  std::size_t k = 2;
  if (classes) {
    k = *classes;
  } else {
    for (const auto& r : records) k = std::max(k, r.label.index + 1);
  }
  return AnnotationSet::build(k, records);
}

void save_annotations(const std::filesystem::path& path, const AnnotationSet& annotations) {
  std::string out;
  for (const auto& e : annotations.entries()) {
    out += "{\"item_id\":" + io::quote(annotations.items()[e.item]) +
           ",\"annotator_id\":" + io::quote(annotations.annotators()[e.annotator]) +
           ",\"label\":" + std::to_string(e.label) + "}\n";
  }
  io::write_text_file(path, out);
}

std::map<std::string, std::vector<std::int64_t>> count_labels(const AnnotationSet& annotations) {
  std::map<std::string, std::vector<std::int64_t>> out;
  auto matrix = annotations.count_matrix();
  for (std::size_t i = 0; i < matrix.size(); ++i)
    out.emplace(annotations.items()[i], std::move(matrix[i]));
  return out;
}

LabelDistribution soft_label_from_counts(std::span<const std::int64_t> counts, double alpha) {
  if (alpha < 0.0 || !std::isfinite(alpha))
    throw Error(ErrorKind::InvalidArgument, "smoothing alpha must be finite and >= 0");
  std::int64_t total = 0;
  for (auto c : counts) {
    if (c < 0) throw Error(ErrorKind::NegativeEntry, "negative label count");
    total += c;
  }
  const double denom = static_cast<double>(total) + alpha * static_cast<double>(counts.size());
  if (denom == 0.0) throw Error(ErrorKind::EmptyItem, "item has no responses and alpha = 0");
  std::vector<double> probs(counts.size());
  for (std::size_t y = 0; y < counts.size(); ++y)
    probs[y] = (static_cast<double>(counts[y]) + alpha) / denom;
  return make_distribution(std::move(probs));
}

std::map<std::string, LabelDistribution> estimate_soft_labels(const AnnotationSet& annotations,
                                                              double smoothing_alpha) {
  std::map<std::string, LabelDistribution> out;
  const auto matrix = annotations.count_matrix();
  for (std::size_t i = 0; i < matrix.size(); ++i)
    out.emplace(annotations.items()[i], soft_label_from_counts(matrix[i], smoothing_alpha));
  return out;
}

std::map<std::string, LabelDistribution> estimate_soft_labels(
    const AnnotationSet& annotations, double smoothing_alpha,
    std::span<const std::string> item_ids) {
  auto all = estimate_soft_labels(annotations, smoothing_alpha);
  std::map<std::string, LabelDistribution> out;
  for (const auto& id : item_ids) {
    auto it = all.find(id);
    if (it == all.end()) throw Error(ErrorKind::EmptyItem, "item " + id + " has no annotations");
    out.emplace(id, it->second);
  }
  return out;
}

void save_soft_labels(const std::filesystem::path& path,
                      const std::map<std::string, LabelDistribution>& soft,
                      const std::map<std::string, std::vector<std::int64_t>>* counts) {
  std::string out;
  for (const auto& [id, dist] : soft) {
    out += "{\"item_id\":" + io::quote(id) + ",\"probs\":" + io::format_real_array(dist.probs());
    if (counts) {
      auto it = counts->find(id);
      if (it != counts->end()) {
        out += ",\"counts\":[";
        for (std::size_t y = 0; y < it->second.size(); ++y) {
          if (y) out += ',';
          out += std::to_string(it->second[y]);
        }
        out += ']';
      }
    }
    out += "}\n";
  }
  io::write_text_file(path, out);
}

SoftLabelFile load_soft_labels(const std::filesystem::path& path) {
  SoftLabelFile file;
  io::read_jsonl(path, [&](const io::Json& line, std::size_t) {
    const std::string id = io::require_string(line, "item_id");
    auto probs = io::require_field(line, "probs").get<std::vector<double>>();
    auto dist = make_distribution(std::move(probs));
    if (auto it = line.find("counts"); it != line.end()) {
      auto counts = it->get<std::vector<std::int64_t>>();
      if (counts.size() != dist.classes())
        throw Error(ErrorKind::MalformedInput, "counts and probs differ in length");
      file.counts.emplace(id, std::move(counts));
    }
    if (!file.probs.emplace(id, std::move(dist)).second)
      throw Error(ErrorKind::MalformedInput, "duplicate item_id " + id);
  });
  return file;
}

KappaResult fleiss_kappa(const AnnotationSet& annotations) {
  const auto matrix = annotations.count_matrix();
  if (matrix.empty()) throw Error(ErrorKind::EmptyData, "no annotations");

  std::map<std::int64_t, std::size_t> frequency;
  std::vector<std::int64_t> rating_counts(matrix.size(), 0);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    for (auto c : matrix[i]) rating_counts[i] += c;
    ++frequency[rating_counts[i]];
  }
  // Most common rating count; ties toward the larger count.
  std::int64_t n = 0;
  std::size_t best = 0;
  for (const auto& [count, times] : frequency)
    if (times >= best) {
      best = times;
      n = count;
    }
  if (n < 2) throw Error(ErrorKind::InvalidArgument, "Fleiss' kappa needs at least 2 ratings per item");

  const std::size_t k = annotations.classes();
  std::vector<double> category_totals(k, 0.0);
  double agreement_sum = 0.0;
  KappaResult result;
  result.raters_per_item = static_cast<std::size_t>(n);
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    if (rating_counts[i] != n) {
      ++result.items_dropped;
      continue;
    }
    ++result.items_used;
    double squares = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double c = static_cast<double>(matrix[i][j]);
      squares += c * c;
      category_totals[j] += c;
    }
    agreement_sum += (squares - nd) / (nd * (nd - 1.0));
  }
  const double items = static_cast<double>(result.items_used);
  const double p_bar = agreement_sum / items;
  double p_e = 0.0;
  for (double total : category_totals) {
    const double p = total / (items * nd);
    p_e += p * p;
  }
  if (p_e >= 1.0) {
    if (p_bar >= 1.0) {
      result.kappa = 1.0;
      return result;
    }
    throw Error(ErrorKind::DegenerateAgreement, "chance agreement is 1");
  }
  result.kappa = (p_bar - p_e) / (1.0 - p_e);
  return result;
}

std::vector<HistogramBin> gold_agreement_histogram(const std::map<std::string, LabelDistribution>& soft,
                                                   const std::map<std::string, ClassLabel>& gold,
                                                   double bin_width) {
  if (!(bin_width > 0.0 && bin_width <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "bin width must be in (0, 1]");
  if (soft.empty()) throw Error(ErrorKind::EmptyData, "no soft labels");
  // Slack absorbs representation error such as 0.3 / 0.1 = 2.9999999999999996.
  constexpr double kSlack = 1e-9;
  const auto bins = static_cast<std::size_t>(std::ceil(1.0 / bin_width - kSlack));
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) out[b].bin_start = static_cast<double>(b) * bin_width;
  for (const auto& [id, dist] : soft) {
    auto it = gold.find(id);
    if (it == gold.end()) throw Error(ErrorKind::MissingGold, "no gold label for item " + id);
    if (it->second.index >= dist.classes())
      throw Error(ErrorKind::IndexOutOfRange, "gold label out of range for item " + id);
    const double p = dist[it->second.index];
    auto b = static_cast<std::size_t>(std::floor(p / bin_width + kSlack));
    ++out[std::min(b, bins - 1)].count;
  }
  for (auto& bin : out)
    bin.relative_frequency = static_cast<double>(bin.count) / static_cast<double>(soft.size());
  return out;
}

BudgetCurve budget_curve(const AnnotationSet& annotations, std::size_t runs, std::size_t max_n,
                         double smoothing_alpha, std::uint64_t seed) {
  if (runs < 1) throw Error(ErrorKind::InvalidArgument, "runs must be >= 1");
  if (!(smoothing_alpha > 0.0))
    throw Error(ErrorKind::InvalidArgument, "budget curve needs alpha > 0");
  const std::size_t population = annotations.annotators().size();
  if (max_n > population)
    throw Error(ErrorKind::InsufficientAnnotators, "max_n " + std::to_string(max_n) + " exceeds " +
                                                       std::to_string(population) + " annotators");
  const std::size_t k = annotations.classes();
  const std::size_t n_items = annotations.items().size();

  std::vector<LabelDistribution> truth;
  truth.reserve(n_items);
  for (const auto& row : annotations.count_matrix())
    truth.push_back(soft_label_from_counts(row, smoothing_alpha));

  // Responses grouped per annotator: (item, label).
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> by_annotator(population);
  for (const auto& e : annotations.entries()) by_annotator[e.annotator].emplace_back(e.item, e.label);

  BudgetCurve curve;
  curve.runs = runs;
  curve.points.resize(max_n);
  for (std::size_t n = 0; n < max_n; ++n) {
    curve.points[n].n_annotators = n + 1;
    curve.points[n].per_run_kl.assign(runs, 0.0);
  }

  const LabelDistribution empty_q = soft_label_from_counts(std::vector<std::int64_t>(k, 0), smoothing_alpha);
  for (std::size_t run = 0; run < runs; ++run) {
    Rng rng(derive_seed(seed, {kBudgetStream, run}));
    std::vector<std::size_t> order(population);
    for (std::size_t a = 0; a < population; ++a) order[a] = a;
    rng.shuffle(order);

    std::vector<std::vector<std::int64_t>> counts(n_items, std::vector<std::int64_t>(k, 0));
    std::vector<double> item_kl(n_items);
    for (std::size_t i = 0; i < n_items; ++i) item_kl[i] = kl_divergence(truth[i], empty_q);

    for (std::size_t n = 0; n < max_n; ++n) {
      for (const auto& [item, label] : by_annotator[order[n]]) ++counts[item][label];
      for (const auto& [item, label] : by_annotator[order[n]])
        item_kl[item] = kl_divergence(truth[item], soft_label_from_counts(counts[item], smoothing_alpha));
      double sum = 0.0;
      for (double v : item_kl) sum += v;
      curve.points[n].per_run_kl[run] = sum / static_cast<double>(n_items);
    }
  }
  for (auto& point : curve.points) {
    double sum = 0.0;
    for (double v : point.per_run_kl) sum += v;
    point.mean_kl = sum / static_cast<double>(runs);
  }
  return curve;
}

std::string budget_curve_csv(const BudgetCurve& curve) {
  std::string out = "n,run,kl\n";
  for (const auto& point : curve.points)
    for (std::size_t run = 0; run < point.per_run_kl.size(); ++run)
      out += std::to_string(point.n_annotators) + ',' + std::to_string(run) + ',' +
             io::format_real(point.per_run_kl[run]) + '\n';
  return out;
}

AnnotationSet subsample_annotators(const AnnotationSet& annotations, std::size_t n,
                                   std::uint64_t seed) {
  const std::size_t population = annotations.annotators().size();
  if (n > population)
    throw Error(ErrorKind::InsufficientAnnotators, "requested " + std::to_string(n) + " of " +
                                                       std::to_string(population) + " annotators");
  Rng rng(derive_seed(seed, {kSubsampleStream}));
  std::vector<bool> keep(population, false);
  for (std::size_t a : rng.sample_without_replacement(population, n)) keep[a] = true;

  std::vector<AnnotationRecord> records;
  for (const auto& e : annotations.entries())
    if (keep[e.annotator])
      records.push_back({annotations.items()[e.item], annotations.annotators()[e.annotator],
                         ClassLabel{e.label}});
  return AnnotationSet::build(annotations.classes(), records);
}

}  // namespace slmg
