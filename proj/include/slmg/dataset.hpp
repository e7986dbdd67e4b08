#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slmg/crowd.hpp"
#include "slmg/label_core.hpp"
#include "slmg/random.hpp"

namespace slmg {

struct FeatureVector {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct TextPairItem {
  std::string item_id;
  std::string text_a;
  std::string text_b;
  std::optional<ClassLabel> gold;
};

/// A featurized item as read from a dataset file; gold may be absent.
struct DatasetItem {
  std::string item_id;
  FeatureVector features;
  std::optional<ClassLabel> gold;
};

struct HardExample {
  std::string item_id;
  FeatureVector features;
  ClassLabel label;
};

struct SoftExample {
  std::string item_id;
  FeatureVector features;
  LabelDistribution target;
  std::optional<std::vector<std::int64_t>> counts;
};

/// Hashed bag-of-words settings. Only "fnv1a64" is defined.
struct FeaturizerConfig {
  std::size_t dim_per_segment = 64;
  std::string hash = "fnv1a64";
};

/// 64-bit FNV-1a over the bytes of `text`.
std::uint64_t fnv1a64(std::string_view text) noexcept;

/// Lowercased ASCII alphanumeric runs; everything else separates tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Two L2-normalized hashed bag-of-words segments, [text_a | text_b].
/// dim_per_segment must be a power of two >= 16.
FeatureVector featurize_pair(std::string_view text_a, std::string_view text_b,
                             std::size_t dim_per_segment);

FeatureVector featurize(const TextPairItem& item, const FeaturizerConfig& config);

/// argmax of the target, ties toward the lowest class.
HardExample harden(const SoftExample& item);

/// One-hot target for a hard example over `classes` classes.
SoftExample as_soft(const HardExample& item, std::size_t classes);
std::vector<SoftExample> as_soft(std::span<const HardExample> items, std::size_t classes);

/// Every crowd response becomes its own hard example: N_y copies of (x, y).
std::vector<HardExample> build_aoc_dataset(std::span<const SoftExample> items);

/// base followed by n_extra draws without replacement from extra_pool.
std::vector<HardExample> build_cle_dataset(std::span<const HardExample> base,
                                           std::span<const HardExample> extra_pool,
                                           std::size_t n_extra, std::uint64_t seed);

/// Item lines: {"item_id", "label"?} plus either "features": [...] or
/// "text_a"/"text_b" (featurized with `config`).
std::vector<DatasetItem> load_items(const std::filesystem::path& path,
                                    const FeaturizerConfig& config);

/// Item lines where "label" is required.
std::vector<HardExample> load_hard_dataset(const std::filesystem::path& path,
                                           const FeaturizerConfig& config);

/// Item lines that also carry "probs" and optionally "counts".
std::vector<SoftExample> load_soft_dataset(const std::filesystem::path& path,
                                           const FeaturizerConfig& config);

/// Lines with "item_id" and "label"; any other fields are ignored.
std::map<std::string, ClassLabel> load_gold_labels(const std::filesystem::path& path);

/// Attaches soft labels to items by item_id, preserving item order.
/// Throws MissingCounts when `require_counts` and an item has no counts.
std::vector<SoftExample> attach_soft_labels(std::span<const DatasetItem> items,
                                            const SoftLabelFile& labels, bool require_counts);

/// Writes feature-form item lines.
void save_items(const std::filesystem::path& path, std::span<const DatasetItem> items);

/// Part sizes: floor(fraction * n) each, then leftover items go one per
/// part in declaration order. Fractions must be positive and sum to 1.
std::array<std::size_t, 3> split_sizes(std::size_t n, std::array<double, 3> fractions);

template <typename T>
struct Split {
  std::vector<T> train;
  std::vector<T> dev;
  std::vector<T> test;
};

inline constexpr std::uint64_t kSplitStream = 0x5B117;

/// Seeded shuffle, then contiguous train/dev/test parts.
template <typename T>
Split<T> split(std::span<const T> items, std::array<double, 3> fractions, std::uint64_t seed) {
  const auto sizes = split_sizes(items.size(), fractions);
  std::vector<std::size_t> order(items.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, {kSplitStream}));
  rng.shuffle(order);
  Split<T> out;
  const std::array<std::vector<T>*, 3> parts{&out.train, &out.dev, &out.test};
  std::size_t pos = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    parts[p]->reserve(sizes[p]);
    for (std::size_t i = 0; i < sizes[p]; ++i) parts[p]->push_back(items[order[pos++]]);
  }
  return out;
}

}  // namespace slmg
