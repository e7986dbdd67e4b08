#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "slmg/crowd.hpp"
#include "slmg/error.hpp"
#include "slmg/synth.hpp"
#include "test_support.hpp"

using namespace slmg;

namespace {

AnnotationSet from_label_lists(std::size_t k, const std::vector<std::vector<std::size_t>>& per_item) {
  std::vector<AnnotationRecord> records;
  for (std::size_t i = 0; i < per_item.size(); ++i)
    for (std::size_t r = 0; r < per_item[i].size(); ++r)
      records.push_back({"item" + std::to_string(i), "rater" + std::to_string(r), ClassLabel{per_item[i][r]}});
  return AnnotationSet::build(k, records);
}

AnnotationSet from_counts(const std::vector<std::int64_t>& counts) {
  std::vector<AnnotationRecord> records;
  int rater = 0;
  for (std::size_t y = 0; y < counts.size(); ++y)
    for (std::int64_t c = 0; c < counts[y]; ++c)
      records.push_back({"x", "r" + std::to_string(rater++), ClassLabel{y}});
  return AnnotationSet::build(counts.size(), records);
}

/// Kappa by enumerating ordered rater pairs per item.
double brute_force_kappa(std::size_t k, const std::vector<std::vector<std::size_t>>& per_item) {
  double agreement = 0.0;
  std::vector<double> pooled(k, 0.0);
  double ratings = 0.0;
  for (const auto& labels : per_item) {
    double agree = 0.0, pairs = 0.0;
    for (std::size_t a = 0; a < labels.size(); ++a)
      for (std::size_t b = 0; b < labels.size(); ++b)
        if (a != b) {
          pairs += 1.0;
          agree += labels[a] == labels[b] ? 1.0 : 0.0;
        }
    agreement += agree / pairs;
    for (auto l : labels) pooled[l] += 1.0;
    ratings += static_cast<double>(labels.size());
  }
  const double p_bar = agreement / static_cast<double>(per_item.size());
  double p_e = 0.0;
  for (double c : pooled) p_e += (c / ratings) * (c / ratings);
  return (p_bar - p_e) / (1.0 - p_e);
}

}  // namespace

TEST_CASE("estimate_soft_labels reproduces proportions and add-alpha smoothing") {
  auto table = estimate_soft_labels(from_counts({5, 839, 156}), 0.0).at("x");
  CHECK(table[0] == 0.005);
  CHECK(table[1] == 0.839);
  CHECK(table[2] == 0.156);

  auto unanimous = estimate_soft_labels(from_counts({10, 0, 0}), 0.0).at("x");
  CHECK(unanimous == make_distribution({1.0, 0.0, 0.0}));

  auto smoothed = estimate_soft_labels(from_counts({2, 1, 1}), 1.0).at("x");
  CHECK(smoothed[0] == doctest::Approx(3.0 / 7.0).epsilon(1e-15));
  CHECK(smoothed[1] == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
  CHECK(smoothed[2] == doctest::Approx(2.0 / 7.0).epsilon(1e-15));
}

TEST_CASE("smoothing always gives valid, strictly positive distributions") {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 2 + rng.index(5);
    std::vector<std::int64_t> counts(k);
    for (auto& c : counts) c = static_cast<std::int64_t>(rng.index(4));
    const double alpha = rng.uniform(0.001, 2.0);
    auto d = soft_label_from_counts(counts, alpha);
    for (double p : d.probs()) CHECK(p > 0.0);
  }
  CHECK(test::error_kind([] { soft_label_from_counts(std::vector<std::int64_t>{0, 0, 0}, 0.0); }) ==
        ErrorKind::EmptyItem);
}

TEST_CASE("requesting an item without responses is an EmptyItem error") {
  auto set = from_counts({1, 2});
  std::vector<std::string> ids{"x", "missing"};
  CHECK(test::error_kind([&] { estimate_soft_labels(set, 0.0, ids); }) == ErrorKind::EmptyItem);
  std::vector<std::string> ok{"x"};
  CHECK(estimate_soft_labels(set, 0.0, ok).size() == 1);
}

TEST_CASE("duplicate (item, annotator) pairs keep the last label") {
  std::vector<AnnotationRecord> records{{"a", "r1", ClassLabel{0}},
                                        {"a", "r2", ClassLabel{1}},
                                        {"a", "r1", ClassLabel{2}}};
  auto set = AnnotationSet::build(3, records);
  CHECK(set.size() == 2);
  CHECK(set.duplicates_removed() == 1);
  auto counts = count_labels(set).at("a");
  CHECK(counts == std::vector<std::int64_t>{0, 1, 1});
  CHECK(test::error_kind([] {
          std::vector<AnnotationRecord> bad{{"a", "r", ClassLabel{3}}};
          AnnotationSet::build(3, bad);
        }) == ErrorKind::IndexOutOfRange);
}

TEST_CASE("annotation and soft-label files round-trip") {
  auto dir = test::temp_dir("crowd_io");
  auto set = from_label_lists(3, {{0, 1, 2, 2}, {1, 1, 0}, {2}});
  save_annotations(dir / "a.jsonl", set);
  auto loaded = load_annotations(dir / "a.jsonl", 3);
  CHECK(loaded.records().size() == set.records().size());
  CHECK(count_labels(loaded) == count_labels(set));
  CHECK(load_annotations(dir / "a.jsonl").classes() == 3);

  auto soft = estimate_soft_labels(set, 0.3);
  auto counts = count_labels(set);
  save_soft_labels(dir / "s.jsonl", soft, &counts);
  auto back = load_soft_labels(dir / "s.jsonl");
  CHECK(back.probs == soft);
  CHECK(back.counts == counts);
}

TEST_CASE("malformed annotation lines report the line number") {
  auto dir = test::temp_dir("crowd_bad");
  {
    std::ofstream out(dir / "bad.jsonl");
    out << R"({"item_id": "a", "annotator_id": "r", "label": 0})" << "\n";
    out << R"({"item_id": "a", "annotator_id": )" << "\n";
  }
  try {
    load_annotations(dir / "bad.jsonl", 3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedInput);
    CHECK(std::string(e.what()).find("bad.jsonl:2") != std::string::npos);
  }
  {
    std::ofstream out(dir / "range.jsonl");
    out << R"({"item_id": "a", "annotator_id": "r", "label": 5})" << "\n";
  }
  CHECK(test::error_kind([&] { load_annotations(dir / "range.jsonl", 3); }) == ErrorKind::MalformedInput);
}

TEST_CASE("Fleiss' kappa") {
  SUBCASE("perfect agreement") {
    auto set = from_label_lists(3, {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}, {0, 0, 0}});
    CHECK(fleiss_kappa(set).kappa == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("two items, two raters, hand-evaluated") {
    const std::vector<std::vector<std::size_t>> lists{{0, 0}, {0, 1}};
    const double oracle = brute_force_kappa(2, lists);
    CHECK(oracle == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
    CHECK(fleiss_kappa(from_label_lists(2, lists)).kappa == doctest::Approx(oracle).epsilon(1e-12));
  }
  SUBCASE("random cases against the pair-enumeration oracle") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
      const std::size_t k = 2 + rng.index(3);
      const std::size_t raters = 2 + rng.index(5);
      std::vector<std::vector<std::size_t>> lists(3 + rng.index(10));
      for (auto& l : lists) {
        l.resize(raters);
        for (auto& v : l) v = rng.index(k);
      }
      auto set = from_label_lists(k, lists);
      auto counts = set.count_matrix();
      std::vector<double> pooled(k, 0.0);
      for (auto& row : counts)
        for (std::size_t j = 0; j < k; ++j) pooled[j] += static_cast<double>(row[j]);
      bool one_category = std::count_if(pooled.begin(), pooled.end(), [](double c) { return c > 0; }) == 1;
      if (one_category) continue;
      CHECK(fleiss_kappa(set).kappa == doctest::Approx(brute_force_kappa(k, lists)).epsilon(1e-12));
    }
  }
  SUBCASE("uniform random labels give kappa near zero") {
    Rng rng(99);
    std::vector<std::vector<std::size_t>> lists(2000, std::vector<std::size_t>(10));
    for (auto& l : lists)
      for (auto& v : l) v = rng.index(3);
    CHECK(std::abs(fleiss_kappa(from_label_lists(3, lists)).kappa) < 0.05);
  }
  SUBCASE("items with a different rating count are dropped") {
    auto set = from_label_lists(2, {{0, 0, 1}, {1, 1, 1}, {0, 1, 0}, {0, 1}});
    auto k = fleiss_kappa(set);
    CHECK(k.raters_per_item == 3);
    CHECK(k.items_used == 3);
    CHECK(k.items_dropped == 1);
    CHECK(k.kappa == doctest::Approx(brute_force_kappa(2, {{0, 0, 1}, {1, 1, 1}, {0, 1, 0}})).epsilon(1e-12));
  }
  SUBCASE("all mass on one category") {
    auto set = from_label_lists(3, {{1, 1}, {1, 1}});
    CHECK(fleiss_kappa(set).kappa == 1.0);
  }
}

TEST_CASE("Fleiss' kappa is invariant under consistent relabeling") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<std::size_t>> lists(12, std::vector<std::size_t>(5));
    for (auto& l : lists)
      for (auto& v : l) v = rng.uniform() < 0.6 ? 0 : rng.index(3);
    std::vector<std::size_t> perm{0, 1, 2};
    rng.shuffle(perm);
    auto relabeled = lists;
    for (auto& l : relabeled)
      for (auto& v : l) v = perm[v];
    CHECK(fleiss_kappa(from_label_lists(3, lists)).kappa ==
          doctest::Approx(fleiss_kappa(from_label_lists(3, relabeled)).kappa).epsilon(1e-12));
  }
}

TEST_CASE("gold agreement histogram") {
  std::map<std::string, ClassLabel> gold{{"a", ClassLabel{1}}, {"b", ClassLabel{0}}};
  SUBCASE("table row lands in [0.8, 0.9)") {
    std::map<std::string, LabelDistribution> soft{{"a", make_distribution({0.005, 0.839, 0.156})}};
    auto bins = gold_agreement_histogram(soft, gold, 0.1);
    REQUIRE(bins.size() == 10);
    CHECK(bins[8].bin_start == doctest::Approx(0.8));
    CHECK(bins[8].relative_frequency == 1.0);
  }
  SUBCASE("unanimous items fill the last bin") {
    std::map<std::string, LabelDistribution> soft{{"a", make_distribution({0, 1, 0})},
                                                  {"b", make_distribution({1, 0, 0})}};
    auto bins = gold_agreement_histogram(soft, gold, 0.1);
    CHECK(bins.back().relative_frequency == 1.0);
  }
  SUBCASE("two bins") {
    std::map<std::string, LabelDistribution> soft{{"a", make_distribution({0.95, 0.05})},
                                                  {"b", make_distribution({0.95, 0.05})}};
    auto bins = gold_agreement_histogram(soft, gold, 0.5);
    REQUIRE(bins.size() == 2);
    CHECK(bins[0].relative_frequency == 0.5);
    CHECK(bins[1].relative_frequency == 0.5);
  }
  SUBCASE("bin edges are right-open") {
    std::map<std::string, LabelDistribution> soft{{"a", make_distribution({0.7, 0.3})}};
    auto bins = gold_agreement_histogram(soft, gold, 0.1);
    CHECK(bins[3].count == 1);
  }
  SUBCASE("errors") {
    std::map<std::string, LabelDistribution> soft{{"zz", make_distribution({0.5, 0.5})}};
    CHECK(test::error_kind([&] { gold_agreement_histogram(soft, gold, 0.1); }) == ErrorKind::MissingGold);
    CHECK(test::error_kind([&] { gold_agreement_histogram(soft, gold, 0.0); }) == ErrorKind::InvalidArgument);
  }
}

TEST_CASE("histogram frequencies sum to one") {
  Rng rng(8);
  std::map<std::string, LabelDistribution> soft;
  std::map<std::string, ClassLabel> gold;
  for (int i = 0; i < 200; ++i) {
    soft.emplace(std::to_string(i), test::random_distribution(rng, 3, true));
    gold.emplace(std::to_string(i), ClassLabel{rng.index(3)});
  }
  for (double w : {0.05, 0.1, 0.25, 0.3, 1.0}) {
    double total = 0.0;
    for (const auto& b : gold_agreement_histogram(soft, gold, w)) total += b.relative_frequency;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("budget curve") {
  PopulationConfig cfg;
  cfg.n_items = 30;
  cfg.n_annotators = 60;
  cfg.seed = 3;
  const auto pop = generate_population(cfg);

  auto curve = budget_curve(pop.annotations, 3, 60, 0.01, 17);
  REQUIRE(curve.points.size() == 60);
  for (std::size_t n = 0; n < curve.points.size(); ++n) {
    CHECK(curve.points[n].n_annotators == n + 1);
    CHECK(curve.points[n].per_run_kl.size() == 3);
    double mean = 0.0;
    for (double v : curve.points[n].per_run_kl) mean += v;
    CHECK(curve.points[n].mean_kl == doctest::Approx(mean / 3.0).epsilon(1e-15));
  }
  for (double v : curve.points.back().per_run_kl) CHECK(v == 0.0);

  auto again = budget_curve(pop.annotations, 3, 60, 0.01, 17);
  for (std::size_t n = 0; n < curve.points.size(); ++n)
    CHECK(curve.points[n].per_run_kl == again.points[n].per_run_kl);

  auto csv = budget_curve_csv(curve);
  CHECK(csv.rfind("n,run,kl\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 60 * 3);

  CHECK(test::error_kind([&] { budget_curve(pop.annotations, 1, 61, 0.01, 0); }) ==
        ErrorKind::InsufficientAnnotators);
  CHECK(test::error_kind([&] { budget_curve(pop.annotations, 1, 10, 0.0, 0); }) ==
        ErrorKind::InvalidArgument);
  CHECK(test::error_kind([&] { budget_curve(pop.annotations, 0, 10, 0.01, 0); }) ==
        ErrorKind::InvalidArgument);
}

TEST_CASE("budget curve is statistically decreasing between n = 5 and n = 50") {
  int wins = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    PopulationConfig cfg;
    cfg.n_items = 40;
    cfg.n_annotators = 60;
    cfg.annotator_noise = 0.0;
    cfg.seed = 1000 + s;
    const auto pop = generate_population(cfg);
    auto curve = budget_curve(pop.annotations, 1, 50, 0.01, s);
    if (curve.points[4].mean_kl > curve.points[49].mean_kl) ++wins;
  }
  CHECK(wins >= 18);
}

TEST_CASE("subsample_annotators") {
  PopulationConfig cfg;
  cfg.n_items = 10;
  cfg.n_annotators = 25;
  cfg.seed = 9;
  const auto pop = generate_population(cfg);
  const auto& set = pop.annotations;

  auto all = subsample_annotators(set, 25, 1);
  CHECK(count_labels(all) == count_labels(set));

  auto none = subsample_annotators(set, 0, 1);
  CHECK(none.size() == 0);

  auto a = subsample_annotators(set, 7, 42);
  auto b = subsample_annotators(set, 7, 42);
  CHECK(a.annotators() == b.annotators());
  CHECK(a.annotators().size() == 7);

  // Oracle: filter the records by the chosen annotators by hand.
  std::set<std::string> chosen(a.annotators().begin(), a.annotators().end());
  std::vector<AnnotationRecord> manual;
  for (const auto& r : set.records())
    if (chosen.count(r.annotator_id)) manual.push_back(r);
  CHECK(estimate_soft_labels(a, 0.0) == estimate_soft_labels(AnnotationSet::build(3, manual), 0.0));

  CHECK(test::error_kind([&] { subsample_annotators(set, 26, 0); }) == ErrorKind::InsufficientAnnotators);
}
