#include "slmg/dataset.hpp"

#include <cctype>
#include <cmath>
#include <unordered_set>

#include "slmg/error.hpp"
#include "slmg/io.hpp"

namespace slmg {

namespace {

constexpr std::uint64_t kFnvOffset = 0xCBF29CE484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001B3ULL;
constexpr std::uint64_t kCleStream = 0xC1E;

void add_segment(std::string_view text, std::size_t dim, std::size_t offset,
                 std::vector<double>& out) {
  for (const auto& token : tokenize(text)) out[offset + (fnv1a64(token) & (dim - 1))] += 1.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < dim; ++i) norm += out[offset + i] * out[offset + i];
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < dim; ++i) out[offset + i] /= norm;
  }
}

std::optional<ClassLabel> read_label(const io::Json& line, bool required) {
  auto it = line.find("label");
  if (it == line.end() || it->is_null()) {
    if (required) throw Error(ErrorKind::MalformedInput, "missing field \"label\"");
    return std::nullopt;
  }
  if (!it->is_number_integer() || it->get<long long>() < 0)
    throw Error(ErrorKind::MalformedInput, "\"label\" must be a non-negative integer");
  return ClassLabel{it->get<std::size_t>()};
}

FeatureVector read_features(const io::Json& line, const FeaturizerConfig& config) {
  if (auto it = line.find("features"); it != line.end()) {
    FeatureVector fv{it->get<std::vector<double>>()};
    for (double v : fv.values)
      if (!std::isfinite(v)) throw Error(ErrorKind::MalformedInput, "non-finite feature");
    return fv;
  }
  if (line.contains("text_a") || line.contains("text_b")) {
    const std::string a = line.contains("text_a") ? io::require_string(line, "text_a") : "";
    const std::string b = line.contains("text_b") ? io::require_string(line, "text_b") : "";
    return featurize_pair(a, b, config.dim_per_segment);
  }
  throw Error(ErrorKind::MalformedInput, "item needs \"features\" or \"text_a\"/\"text_b\"");
}

template <typename Visit>
void read_items(const std::filesystem::path& path, const FeaturizerConfig& config, Visit visit) {
  if (config.hash != "fnv1a64")
    throw Error(ErrorKind::InvalidArgument, "unsupported featurizer hash " + config.hash);
  std::unordered_set<std::string> seen;
  std::optional<std::size_t> dim;
  io::read_jsonl(path, [&](const io::Json& line, std::size_t) {
    std::string id = io::require_string(line, "item_id");
    if (!seen.insert(id).second) throw Error(ErrorKind::MalformedInput, "duplicate item_id " + id);
    FeatureVector features = read_features(line, config);
    if (dim && *dim != features.dim())
      throw Error(ErrorKind::MalformedInput, "feature dimension " + std::to_string(features.dim()) +
                                                 " differs from " + std::to_string(*dim));
    dim = features.dim();
    visit(line, std::move(id), std::move(features));
  });
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = kFnvOffset;
  for (unsigned char c : text) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

FeatureVector featurize_pair(std::string_view text_a, std::string_view text_b,
                             std::size_t dim_per_segment) {
  if (dim_per_segment < 16 || (dim_per_segment & (dim_per_segment - 1)) != 0)
    throw Error(ErrorKind::InvalidArgument, "dim_per_segment must be a power of two >= 16");
  std::vector<double> values(2 * dim_per_segment, 0.0);
  add_segment(text_a, dim_per_segment, 0, values);
  add_segment(text_b, dim_per_segment, dim_per_segment, values);
  return FeatureVector{std::move(values)};
}

FeatureVector featurize(const TextPairItem& item, const FeaturizerConfig& config) {
  return featurize_pair(item.text_a, item.text_b, config.dim_per_segment);
}

HardExample harden(const SoftExample& item) {
  return {item.item_id, item.features, ClassLabel{argmax(item.target.probs())}};
}

SoftExample as_soft(const HardExample& item, std::size_t classes) {
  return {item.item_id, item.features, LabelDistribution::one_hot(classes, item.label), std::nullopt};
}

std::vector<SoftExample> as_soft(std::span<const HardExample> items, std::size_t classes) {
  std::vector<SoftExample> out;
  out.reserve(items.size());
  for (const auto& item : items) out.push_back(as_soft(item, classes));
  return out;
}

std::vector<HardExample> build_aoc_dataset(std::span<const SoftExample> items) {
  std::vector<HardExample> out;
  for (const auto& item : items) {
    if (!item.counts) throw Error(ErrorKind::MissingCounts, "item " + item.item_id + " has no counts");
    std::int64_t total = 0;
    for (auto c : *item.counts) {
      if (c < 0) throw Error(ErrorKind::NegativeEntry, "negative count for item " + item.item_id);
      total += c;
    }
    if (total == 0) throw Error(ErrorKind::EmptyItem, "item " + item.item_id + " has zero responses");
    for (std::size_t y = 0; y < item.counts->size(); ++y)
      for (std::int64_t c = 0; c < (*item.counts)[y]; ++c)
        out.push_back({item.item_id, item.features, ClassLabel{y}});
  }
  return out;
}

std::vector<HardExample> build_cle_dataset(std::span<const HardExample> base,
                                           std::span<const HardExample> extra_pool,
                                           std::size_t n_extra, std::uint64_t seed) {
  if (n_extra > extra_pool.size())
    throw Error(ErrorKind::PoolTooSmall, "need " + std::to_string(n_extra) + " extra items, pool has " +
                                             std::to_string(extra_pool.size()));
  std::vector<HardExample> out(base.begin(), base.end());
  Rng rng(derive_seed(seed, {kCleStream}));
  for (std::size_t i : rng.sample_without_replacement(extra_pool.size(), n_extra))
    out.push_back(extra_pool[i]);
  return out;
}

std::vector<DatasetItem> load_items(const std::filesystem::path& path,
                                    const FeaturizerConfig& config) {
  std::vector<DatasetItem> out;
  read_items(path, config, [&](const io::Json& line, std::string id, FeatureVector features) {
    out.push_back({std::move(id), std::move(features), read_label(line, false)});
  });
  return out;
}

std::vector<HardExample> load_hard_dataset(const std::filesystem::path& path,
                                           const FeaturizerConfig& config) {
  std::vector<HardExample> out;
  read_items(path, config, [&](const io::Json& line, std::string id, FeatureVector features) {
    out.push_back({std::move(id), std::move(features), *read_label(line, true)});
  });
  return out;
}

std::vector<SoftExample> load_soft_dataset(const std::filesystem::path& path,
                                           const FeaturizerConfig& config) {
  std::vector<SoftExample> out;
  read_items(path, config, [&](const io::Json& line, std::string id, FeatureVector features) {
    auto target = make_distribution(io::require_field(line, "probs").get<std::vector<double>>());
    std::optional<std::vector<std::int64_t>> counts;
    if (auto it = line.find("counts"); it != line.end()) {
      counts = it->get<std::vector<std::int64_t>>();
      if (counts->size() != target.classes())
        throw Error(ErrorKind::MalformedInput, "counts and probs differ in length");
    }
    out.push_back({std::move(id), std::move(features), std::move(target), std::move(counts)});
  });
  return out;
}

std::map<std::string, ClassLabel> load_gold_labels(const std::filesystem::path& path) {
  std::map<std::string, ClassLabel> out;
  io::read_jsonl(path, [&](const io::Json& line, std::size_t) {
    std::string id = io::require_string(line, "item_id");
    const ClassLabel label = *read_label(line, true);
    if (!out.emplace(id, label).second) throw Error(ErrorKind::MalformedInput, "duplicate item_id " + id);
  });
  return out;
}

std::vector<SoftExample> attach_soft_labels(std::span<const DatasetItem> items,
                                            const SoftLabelFile& labels, bool require_counts) {
  std::vector<SoftExample> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    auto it = labels.probs.find(item.item_id);
    if (it == labels.probs.end())
      throw Error(ErrorKind::EmptyItem, "no soft label for item " + item.item_id);
    std::optional<std::vector<std::int64_t>> counts;
    if (auto c = labels.counts.find(item.item_id); c != labels.counts.end()) counts = c->second;
    if (require_counts && !counts)
      throw Error(ErrorKind::MissingCounts, "no label counts for item " + item.item_id);
    out.push_back({item.item_id, item.features, it->second, std::move(counts)});
  }
  return out;
}

void save_items(const std::filesystem::path& path, std::span<const DatasetItem> items) {
  std::string out;
  for (const auto& item : items) {
    out += "{\"item_id\":" + io::quote(item.item_id) +
           ",\"features\":" + io::format_real_array(item.features.values);
    if (item.gold) out += ",\"label\":" + std::to_string(item.gold->index);
    out += "}\n";
  }
  io::write_text_file(path, out);
}

std::array<std::size_t, 3> split_sizes(std::size_t n, std::array<double, 3> fractions) {
  double sum = 0.0;
  for (double f : fractions) {
    if (!(f > 0.0) || !std::isfinite(f))
      throw Error(ErrorKind::BadFractions, "split fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > kNormalizationTolerance)
    throw Error(ErrorKind::BadFractions, "split fractions sum to " + std::to_string(sum));
  std::array<std::size_t, 3> sizes{};
  std::size_t assigned = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    // Slack keeps products like 0.29 * 100 = 28.999999999999996 from losing an item.
    sizes[p] = static_cast<std::size_t>(std::floor(fractions[p] * static_cast<double>(n) + 1e-9));
    assigned += sizes[p];
  }
  for (std::size_t p = 0; assigned < n; p = (p + 1) % 3, ++assigned) ++sizes[p];
  return sizes;
}

}  // namespace slmg
