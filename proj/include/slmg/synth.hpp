#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "slmg/crowd.hpp"
#include "slmg/dataset.hpp"
#include "slmg/io.hpp"
#include "slmg/label_core.hpp"

namespace slmg {

struct PopulationConfig {
  std::size_t n_items = 180;
  std::size_t n_annotators = 1000;
  std::size_t classes = 3;
  std::size_t feature_dim = 32;
  /// Dirichlet concentration of the non-dominant classes; the dominant
  /// class gets ten times this value.
  double ambiguity = 1.0;
  /// Probability that a response is uniform at random instead of a draw
  /// from the item's true distribution.
  double annotator_noise = 0.1;
  /// Scale of the isotropic feature noise at maximal item entropy.
  double feature_noise = 1.0;
  std::uint64_t seed = 0;
};

void validate(const PopulationConfig& config);
io::Json to_json(const PopulationConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
PopulationConfig population_config_from_json(const io::Json& json);

struct SyntheticItem {
  std::string item_id;
  FeatureVector features;
  LabelDistribution true_dist;
  ClassLabel gold;
  ClassLabel dominant;
};

struct SyntheticPopulation {
  std::vector<SyntheticItem> items;
  AnnotationSet annotations;
};

/// Per item i (stream derived from seed and i): a dominant class, a
/// Dirichlet true distribution, features = template[dominant] + noise scaled
/// by entropy / ln K, and one response from each annotator.
SyntheticPopulation generate_population(const PopulationConfig& config);

std::vector<DatasetItem> dataset_items(const SyntheticPopulation& population);

/// Item counts for the experiment-ready file layout. Items are assigned in
/// index order: soft, dev, test, then the rest to train.
struct SynthLayout {
  std::size_t soft = 180;
  std::size_t dev = 0;
  std::size_t test = 1000;
};

/// Writes items.jsonl, true_soft.jsonl, annotations.jsonl and manifest.json.
/// With a layout, also writes train/soft_items/dev/test item files, and
/// annotations.jsonl holds only the soft items' responses.
void write_population(const std::filesystem::path& dir, const SyntheticPopulation& population,
                      const PopulationConfig& config, const std::optional<SynthLayout>& layout,
                      const io::Json& extra_manifest = io::Json::object());

}  // namespace slmg
