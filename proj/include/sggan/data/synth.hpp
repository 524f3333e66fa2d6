#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "sggan/data/dataset.hpp"

namespace sggan {

// Synthetic attribute images. Every scene is a background (random tint with a
// gentle linear gradient) and a centered disc of random radius. Registered
// attributes:
//
//   color   disc hue. 0 red-dominant, 1 blue-dominant, 2 green-dominant (m <= 3)
//   stripe  background pattern. 0 plain, 1 horizontal stripes (bands of size/4 rows)
//   pale    disc mixed halfway to white
//
// Each rule is decided by a closed-form pixel statistic, so classify_rendered()
// recovers the label of every rendered image exactly. Registry attributes that
// are not in the schema are still drawn (uniformly) as nuisance variation.

enum class MarginalMode {
  Sampled,     // labels drawn i.i.d. from the marginal
  Stratified,  // value v > 0 gets exactly floor(p_v * count) examples
};

struct SynthParams {
  std::int64_t image_size = 32;
  std::size_t count = 4000;
  std::uint64_t seed = 0;
  AttributeSchema schema = AttributeSchema::parse("color:2,stripe:2");
  /// Per-attribute value probabilities; an empty outer or inner vector means
  /// uniform.
  std::vector<std::vector<double>> marginals;
  MarginalMode mode = MarginalMode::Sampled;

  void validate() const;
};

/// Names of all registered synthetic attributes.
std::vector<std::string> synth_attribute_names();
/// Largest cardinality the renderer for `name` supports, or nullopt if the
/// name is not registered.
std::optional<int> synth_max_cardinality(const std::string& name);

/// Renders `count` fully labelled examples. Deterministic in (seed, params).
SparselyGroupedDataset synth_generate(const SynthParams& params);

/// Applies the registered pixel rule of every schema attribute. Ties resolve
/// to value 0. `image` is (C,H,W) in [-1, 1].
std::vector<int> classify_rendered(const torch::Tensor& image, const AttributeSchema& schema);

/// Writes images/NNNNNN.png plus manifest.csv under `dir`. Returns the
/// manifest path.
std::filesystem::path write_corpus(const SparselyGroupedDataset& dataset, const std::filesystem::path& dir);

/// Reads a manifest: a header row `image_path,name[:m],...` then rows
/// `path,v_0,...,v_{n-1}` with empty cells meaning unlabelled. Relative image
/// paths resolve against the manifest's directory. Images are center-cropped
/// and resized to image_size. A zero-byte file yields an empty dataset over
/// `expected` (or an empty schema). Throws LoadError naming the row.
SparselyGroupedDataset load_manifest(const std::filesystem::path& path, std::int64_t image_size,
                                     const std::optional<AttributeSchema>& expected = std::nullopt);

}  // namespace sggan
