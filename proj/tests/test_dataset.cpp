#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "slmg/dataset.hpp"
#include "slmg/error.hpp"
#include "test_support.hpp"

using namespace slmg;

namespace {

std::uint64_t reference_fnv(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SoftExample soft(std::vector<double> target, std::optional<std::vector<std::int64_t>> counts = {}) {
  return SoftExample{"s", FeatureVector{{1.0, 2.0}}, make_distribution(std::move(target)), std::move(counts)};
}

std::vector<HardExample> numbered(std::size_t n, const std::string& prefix) {
  std::vector<HardExample> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({prefix + std::to_string(i), FeatureVector{{static_cast<double>(i)}}, ClassLabel{i % 3}});
  return out;
}

}  // namespace

TEST_CASE("fnv1a64 matches published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  for (std::string s : {"the", "cat", "sat", "rain123"}) CHECK(fnv1a64(s) == reference_fnv(s));
}

TEST_CASE("tokenize lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("A man, a PLAN!") == std::vector<std::string>{"a", "man", "a", "plan"});
  CHECK(tokenize("x2-y3  ") == std::vector<std::string>{"x2", "y3"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("...").empty());
}

TEST_CASE("featurize_pair") {
  SUBCASE("empty texts give the zero vector") {
    auto f = featurize_pair("", "", 16);
    CHECK(f.dim() == 32);
    for (double v : f.values) CHECK(v == 0.0);
  }
  SUBCASE("repeated token weights") {
    auto f = featurize_pair("a a b", "", 16);
    const std::size_t ia = reference_fnv("a") % 16, ib = reference_fnv("b") % 16;
    REQUIRE(ia != ib);
    CHECK(f.values[ia] == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-15));
    CHECK(f.values[ib] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-15));
    double rest = 0.0;
    for (std::size_t i = 0; i < 32; ++i)
      if (i != ia && i != ib) rest += std::abs(f.values[i]);
    CHECK(rest == 0.0);
  }
  SUBCASE("each segment depends only on its own text") {
    auto ab = featurize_pair("a dog runs", "the cat sleeps", 32);
    auto ba = featurize_pair("the cat sleeps", "a dog runs", 32);
    CHECK(ab != ba);
    for (std::size_t i = 0; i < 32; ++i) {
      CHECK(ab.values[i] == ba.values[32 + i]);
      CHECK(ab.values[32 + i] == ba.values[i]);
    }
  }
  SUBCASE("nonzero segments have unit norm") {
    auto f = featurize_pair("one two three two", "x", 64);
    double n1 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < 64; ++i) {
      n1 += f.values[i] * f.values[i];
      n2 += f.values[64 + i] * f.values[64 + i];
    }
    CHECK(n1 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(n2 == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("invalid dimensions") {
    CHECK(test::error_kind([] { featurize_pair("a", "b", 8); }) == ErrorKind::InvalidArgument);
    CHECK(test::error_kind([] { featurize_pair("a", "b", 48); }) == ErrorKind::InvalidArgument);
  }
}

TEST_CASE("harden") {
  CHECK(harden(soft({0.005, 0.839, 0.156})).label.index == 1);
  CHECK(harden(soft({0.5, 0.5, 0.0})).label.index == 0);
  CHECK(harden(soft({0.486, 0.013, 0.501})).label.index == 2);

  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    auto d = test::random_distribution(rng, 4, false);
    const double scale = rng.uniform(0.1, 10.0);
    std::vector<double> scaled(d.probs().begin(), d.probs().end());
    for (auto& v : scaled) v *= scale;
    auto again = normalize(scaled);
    CHECK(harden(SoftExample{"s", {}, d, {}}).label == harden(SoftExample{"s", {}, again, {}}).label);
  }
}

TEST_CASE("AOC expansion") {
  SUBCASE("single item") {
    std::vector<SoftExample> items{soft({2.0 / 3, 1.0 / 3, 0.0}, std::vector<std::int64_t>{2, 1, 0})};
    auto out = build_aoc_dataset(items);
    REQUIRE(out.size() == 3);
    CHECK(out[0].label.index == 0);
    CHECK(out[1].label.index == 0);
    CHECK(out[2].label.index == 1);
    for (const auto& h : out) CHECK(h.features == items[0].features);
  }
  SUBCASE("180 items with 1000 responses each") {
    Rng rng(12);
    std::vector<SoftExample> items;
    std::vector<std::int64_t> mass(3, 0);
    for (int i = 0; i < 180; ++i) {
      std::vector<std::int64_t> counts(3, 0);
      for (int r = 0; r < 1000; ++r) ++counts[rng.index(3)];
      for (int y = 0; y < 3; ++y) mass[y] += counts[y];
      std::vector<double> p(3);
      for (int y = 0; y < 3; ++y) p[y] = counts[y] / 1000.0;
      items.push_back(SoftExample{"i" + std::to_string(i), FeatureVector{{double(i)}}, normalize(p), counts});
    }
    auto out = build_aoc_dataset(items);
    CHECK(out.size() == 180000);
    std::vector<std::int64_t> recount(3, 0);
    for (const auto& h : out) ++recount[h.label.index];
    CHECK(recount == mass);
  }
  SUBCASE("errors") {
    std::vector<SoftExample> missing{soft({1.0, 0.0})};
    CHECK(test::error_kind([&] { build_aoc_dataset(missing); }) == ErrorKind::MissingCounts);
    std::vector<SoftExample> empty{soft({1.0, 0.0, 0.0}, std::vector<std::int64_t>{0, 0, 0})};
    CHECK(test::error_kind([&] { build_aoc_dataset(empty); }) == ErrorKind::EmptyItem);
  }
}

TEST_CASE("CLE augmentation") {
  auto base = numbered(5, "b");
  auto pool = numbered(20, "p");
  CHECK(build_cle_dataset(base, pool, 0, 1).size() == 5);

  auto all = build_cle_dataset(base, pool, 20, 1);
  REQUIRE(all.size() == 25);
  std::set<std::string> ids;
  for (const auto& h : all) ids.insert(h.item_id);
  CHECK(ids.size() == 25);

  auto a = build_cle_dataset(base, pool, 7, 3);
  auto b = build_cle_dataset(base, pool, 7, 3);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].item_id == b[i].item_id);
  for (std::size_t i = 0; i < 5; ++i) CHECK(a[i].item_id == base[i].item_id);
  std::set<std::string> extra;
  for (std::size_t i = 5; i < a.size(); ++i) extra.insert(a[i].item_id);
  CHECK(extra.size() == 7);

  CHECK(test::error_kind([&] { build_cle_dataset(base, pool, 21, 0); }) == ErrorKind::PoolTooSmall);
}

TEST_CASE("split") {
  CHECK(split_sizes(10, {0.8, 0.1, 0.1}) == std::array<std::size_t, 3>{8, 1, 1});
  CHECK(split_sizes(7, {1.0 / 3, 1.0 / 3, 1.0 / 3}) == std::array<std::size_t, 3>{3, 2, 2});
  CHECK(split_sizes(0, {0.5, 0.25, 0.25}) == std::array<std::size_t, 3>{0, 0, 0});
  CHECK(test::error_kind([] { split_sizes(10, {0.5, 0.5, 0.5}); }) == ErrorKind::BadFractions);
  CHECK(test::error_kind([] { split_sizes(10, {1.0, 0.0, 0.0}); }) == ErrorKind::BadFractions);

  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = rng.index(60);
    const double f1 = rng.uniform(0.05, 0.6), f2 = rng.uniform(0.05, 0.3);
    const std::array<double, 3> fr{f1, f2, 1.0 - f1 - f2};
    auto items = numbered(n, "x");
    const std::uint64_t seed = rng.index(1000);
    auto s = split<HardExample>(items, fr, seed);
    CHECK(s.train.size() + s.dev.size() + s.test.size() == n);
    std::multiset<std::string> seen;
    for (auto* part : {&s.train, &s.dev, &s.test})
      for (const auto& h : *part) seen.insert(h.item_id);
    std::set<std::string> unique(seen.begin(), seen.end());
    CHECK(unique.size() == n);
    CHECK(seen.size() == n);
    auto again = split<HardExample>(items, fr, seed);
    for (std::size_t i = 0; i < s.train.size(); ++i) CHECK(s.train[i].item_id == again.train[i].item_id);
  }
}

TEST_CASE("dataset files") {
  auto dir = test::temp_dir("dataset_io");
  {
    std::ofstream out(dir / "hard.jsonl");
    out << R"({"item_id": "a", "text_a": "A dog", "text_b": "An animal", "label": 0})" << "\n";
    out << R"({"item_id": "b", "features": [0.5, 0.25], "label": 2})" << "\n";
  }
  CHECK(test::error_kind([&] { load_hard_dataset(dir / "hard.jsonl", FeaturizerConfig{16}); }) ==
        ErrorKind::MalformedInput);
  {
    std::ofstream out(dir / "text.jsonl");
    out << R"({"item_id": "a", "text_a": "A dog", "text_b": "An animal", "label": 0})" << "\n";
    out << R"({"item_id": "b", "text_a": "", "text_b": "x", "label": 2})" << "\n";
  }
  auto hard = load_hard_dataset(dir / "text.jsonl", FeaturizerConfig{16});
  REQUIRE(hard.size() == 2);
  CHECK(hard[0].features == featurize_pair("A dog", "An animal", 16));
  CHECK(hard[1].label.index == 2);

  {
    std::ofstream out(dir / "bad.jsonl");
    out << R"({"item_id": "a", "features": [1, 2], "label": 0})" << "\n\n";
    out << R"({"item_id": "b", "features": [1, 2], "label": "zero"})" << "\n";
  }
  try {
    load_hard_dataset(dir / "bad.jsonl", FeaturizerConfig{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedInput);
    CHECK(std::string(e.what()).find("bad.jsonl:3") != std::string::npos);
  }

  {
    std::ofstream out(dir / "soft.jsonl");
    out << R"({"item_id": "s", "features": [1, 0], "probs": [0.25, 0.75], "counts": [1, 3]})" << "\n";
  }
  auto softs = load_soft_dataset(dir / "soft.jsonl", FeaturizerConfig{});
  REQUIRE(softs.size() == 1);
  CHECK(softs[0].target[1] == 0.75);
  CHECK(*softs[0].counts == std::vector<std::int64_t>{1, 3});

  std::vector<DatasetItem> items{{"p", FeatureVector{{0.1, 1.0 / 3.0}}, ClassLabel{1}},
                                 {"q", FeatureVector{{-2.5, 1e-300}}, std::nullopt}};
  save_items(dir / "items.jsonl", items);
  auto back = load_items(dir / "items.jsonl", FeaturizerConfig{});
  REQUIRE(back.size() == 2);
  CHECK(back[0].features == items[0].features);
  CHECK(back[1].features == items[1].features);
  CHECK(back[0].gold == items[0].gold);
  CHECK(!back[1].gold);
  CHECK(test::error_kind([&] { load_gold_labels(dir / "items.jsonl"); }) == ErrorKind::MalformedInput);

  SoftLabelFile labels;
  labels.probs.emplace("p", make_distribution({0.5, 0.5}));
  auto attached = attach_soft_labels(std::span<const DatasetItem>(items.data(), 1), labels, false);
  CHECK(attached.size() == 1);
  CHECK(test::error_kind([&] { attach_soft_labels(std::span<const DatasetItem>(items.data(), 1), labels, true); }) ==
        ErrorKind::MissingCounts);
}
