#include "slmg/synth.hpp"

#include <algorithm>
#include <cmath>

#include "slmg/error.hpp"
#include "slmg/random.hpp"

namespace slmg {

namespace {

constexpr std::uint64_t kTemplateStream = 0x7E3;
constexpr std::uint64_t kItemStream = 0x17E3;
constexpr std::uint64_t kAnnotationStream = 0xA770;

constexpr double kDominantBoost = 10.0;

std::string padded_id(const char* prefix, std::size_t index, std::size_t total) {
  const std::size_t width = std::to_string(total > 0 ? total - 1 : 0).size();
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

LabelDistribution dirichlet(Rng& rng, const std::vector<double>& concentration) {
  std::vector<double> logs(concentration.size());
  for (std::size_t k = 0; k < logs.size(); ++k) logs[k] = rng.log_gamma_variate(concentration[k]);
  const double top = *std::max_element(logs.begin(), logs.end());
  std::vector<double> probs(logs.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    probs[k] = std::exp(logs[k] - top);
    sum += probs[k];
  }
  for (double& p : probs) p /= sum;
  return make_distribution(std::move(probs));
}

}  // namespace

void validate(const PopulationConfig& c) {
  if (c.n_items < 1 || c.n_annotators < 1 || c.feature_dim < 1)
    throw Error(ErrorKind::InvalidArgument, "n_items, n_annotators and feature_dim must be >= 1");
  if (c.classes < 2) throw Error(ErrorKind::InvalidArgument, "classes must be >= 2");
  if (!(c.ambiguity > 0.0) || !std::isfinite(c.ambiguity))
    throw Error(ErrorKind::InvalidArgument, "ambiguity must be a positive finite number");
  if (!(c.annotator_noise >= 0.0 && c.annotator_noise <= 1.0))
    throw Error(ErrorKind::InvalidArgument, "annotator_noise must be in [0, 1]");
  if (!(c.feature_noise >= 0.0) || !std::isfinite(c.feature_noise))
    throw Error(ErrorKind::InvalidArgument, "feature_noise must be finite and >= 0");
  if (c.n_annotators > 0xFFFFFFFFULL || c.n_items > 0xFFFFFFFFULL)
    throw Error(ErrorKind::InvalidArgument, "population too large");
}

io::Json to_json(const PopulationConfig& c) {
  return {{"n_items", c.n_items},       {"n_annotators", c.n_annotators},
          {"classes", c.classes},       {"feature_dim", c.feature_dim},
          {"ambiguity", c.ambiguity},   {"annotator_noise", c.annotator_noise},
          {"feature_noise", c.feature_noise}, {"seed", c.seed}};
}

PopulationConfig population_config_from_json(const io::Json& json) {
  if (!json.is_object()) throw Error(ErrorKind::MalformedInput, "population config must be an object");
  PopulationConfig c;
  for (const auto& [key, value] : json.items()) {
    try {
      if (key == "n_items") c.n_items = value.get<std::size_t>();
      else if (key == "n_annotators") c.n_annotators = value.get<std::size_t>();
      else if (key == "classes") c.classes = value.get<std::size_t>();
      else if (key == "feature_dim") c.feature_dim = value.get<std::size_t>();
      else if (key == "ambiguity") c.ambiguity = value.get<double>();
      else if (key == "annotator_noise") c.annotator_noise = value.get<double>();
      else if (key == "feature_noise") c.feature_noise = value.get<double>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else throw Error(ErrorKind::MalformedInput, "unknown population config key \"" + key + "\"");
    } catch (const io::Json::exception& e) {
      throw Error(ErrorKind::MalformedInput, "bad value for \"" + key + "\": " + e.what());
    }
  }
  validate(c);
  return c;
}

SyntheticPopulation generate_population(const PopulationConfig& config) {
  validate(config);
  const std::size_t k = config.classes;
  const std::size_t dim = config.feature_dim;
  const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(dim));
  const double max_entropy = std::log(static_cast<double>(k));

  // Class templates: entries N(0, 1/D), so each has norm close to 1.
  std::vector<std::vector<double>> templates(k, std::vector<double>(dim));
  {
    Rng rng(derive_seed(config.seed, {kTemplateStream}));
    for (auto& t : templates)
      for (double& v : t) v = rng.normal() * inv_sqrt_dim;
  }

  SyntheticPopulation pop;
  pop.items.reserve(config.n_items);
  std::vector<std::string> annotator_ids(config.n_annotators);
  for (std::size_t a = 0; a < config.n_annotators; ++a)
    annotator_ids[a] = padded_id("ann-", a, config.n_annotators);
  std::vector<std::string> item_ids(config.n_items);
  std::vector<AnnotationSet::Entry> entries;
  entries.reserve(config.n_items * config.n_annotators);

  for (std::size_t i = 0; i < config.n_items; ++i) {
    Rng rng(derive_seed(config.seed, {kItemStream, i}));
    const std::size_t dominant = rng.index(k);
    std::vector<double> concentration(k, config.ambiguity);
    concentration[dominant] *= kDominantBoost;
    LabelDistribution true_dist = dirichlet(rng, concentration);

    const double noise_scale = config.feature_noise * (entropy(true_dist) / max_entropy) * inv_sqrt_dim;
    FeatureVector features{templates[dominant]};
    for (double& v : features.values) v += noise_scale * rng.normal();

    item_ids[i] = padded_id("item-", i, config.n_items);
    const ClassLabel gold{argmax(true_dist.probs())};

    Rng responses(derive_seed(config.seed, {kAnnotationStream, i}));
    for (std::size_t a = 0; a < config.n_annotators; ++a) {
      std::size_t label;
      if (responses.uniform() < config.annotator_noise) {
        label = responses.index(k);
      } else {
        label = responses.categorical(true_dist.probs());
      }
      entries.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(a),
                         static_cast<std::uint32_t>(label)});
    }
    pop.items.push_back({item_ids[i], std::move(features), std::move(true_dist), gold,
                         ClassLabel{dominant}});
  }
  pop.annotations =
      AnnotationSet::from_indexed(k, std::move(item_ids), std::move(annotator_ids), std::move(entries));
  return pop;
}

std::vector<DatasetItem> dataset_items(const SyntheticPopulation& population) {
  std::vector<DatasetItem> out;
  out.reserve(population.items.size());
  for (const auto& item : population.items) out.push_back({item.item_id, item.features, item.gold});
  return out;
}

void write_population(const std::filesystem::path& dir, const SyntheticPopulation& population,
                      const PopulationConfig& config, const std::optional<SynthLayout>& layout,
                      const io::Json& extra_manifest) {
  const auto items = dataset_items(population);
  save_items(dir / "items.jsonl", items);

  std::map<std::string, LabelDistribution> truth;
  for (const auto& item : population.items) truth.emplace(item.item_id, item.true_dist);
  save_soft_labels(dir / "true_soft.jsonl", truth);

  io::Json manifest = extra_manifest;
  manifest["population"] = to_json(config);
  manifest["files"] = {{"items", "items.jsonl"},
                       {"true_soft", "true_soft.jsonl"},
                       {"annotations", "annotations.jsonl"}};

  if (!layout) {
    save_annotations(dir / "annotations.jsonl", population.annotations);
    manifest["annotations_scope"] = "all";
  } else {
    const std::size_t needed = layout->soft + layout->dev + layout->test;
    if (needed > items.size())
      throw Error(ErrorKind::InvalidArgument, "layout needs " + std::to_string(needed) +
                                                  " items, population has " +
                                                  std::to_string(items.size()));
    std::span<const DatasetItem> all(items);
    std::size_t pos = 0;
    auto take = [&](std::size_t n) {
      auto part = all.subspan(pos, n);
      pos += n;
      return part;
    };
    auto soft = take(layout->soft);
    auto dev = take(layout->dev);
    auto test = take(layout->test);
    auto train = all.subspan(pos);
    save_items(dir / "soft_items.jsonl", soft);
    save_items(dir / "dev.jsonl", dev);
    save_items(dir / "test.jsonl", test);
    save_items(dir / "train.jsonl", train);

    std::vector<AnnotationRecord> soft_records;
    for (const auto& e : population.annotations.entries())
      if (e.item < layout->soft)
        soft_records.push_back({population.annotations.items()[e.item],
                                population.annotations.annotators()[e.annotator],
                                ClassLabel{e.label}});
    save_annotations(dir / "annotations.jsonl",
                     AnnotationSet::build(population.annotations.classes(), soft_records));
    manifest["annotations_scope"] = "soft_items";
    manifest["layout"] = {{"soft", layout->soft}, {"dev", layout->dev}, {"test", layout->test},
                          {"train", train.size()}};
    manifest["files"]["soft_items"] = "soft_items.jsonl";
    manifest["files"]["dev"] = "dev.jsonl";
    manifest["files"]["test"] = "test.jsonl";
    manifest["files"]["train"] = "train.jsonl";
  }
  io::write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace slmg
