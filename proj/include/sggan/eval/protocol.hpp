#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "sggan/data/dataset.hpp"
#include "sggan/eval/classifier.hpp"
#include "sggan/model/generator.hpp"

namespace sggan {

/// Batch -> every translated batch, [attribute][value].
using Translator = std::function<GeneratorOutputs(const torch::Tensor&)>;

/// Gradient-free forward pass of a generator.
Translator generator_translator(Generator generator);
/// Returns the input unchanged for every head.
Translator identity_translator(AttributeSchema schema);

/// One row of the accuracy grid: images translated along `translated`,
/// measured on every attribute.
struct EvalRow {
  std::size_t translated = 0;
  /// Percent. Index `translated` holds the targeted accuracy (prediction
  /// equals the target value); every other index k holds preservation
  /// accuracy (prediction equals the input's original label for k).
  std::vector<double> accuracy;
  /// Mean background_similarity between input and translation, in [0, 1].
  double background_similarity = 0;
  std::size_t translations = 0;

  double targeted() const { return accuracy.at(translated); }
  /// Minimum preservation accuracy over the other attributes (100 when
  /// there are none).
  double worst_untargeted() const;
};

/// Translates every test image to each value of attribute j and scores the
/// results with `classifier`.
EvalRow translation_accuracy(const Translator& translator, AttributeClassifier& classifier,
                             const SparselyGroupedDataset& test, std::size_t attribute);

/// Accuracy [%] grid plus background scores, one row per schema attribute.
struct EvalReport {
  std::string model_id;
  std::string condition;
  std::optional<std::size_t> mi_size;
  AttributeSchema schema;
  std::vector<EvalRow> rows;
  std::vector<std::string> notes;

  const EvalRow& row(std::size_t attribute) const;
  /// Metadata as '# key: value' lines, then
  /// `translated,<attr>...,background,background_ssim` rows with background
  /// as similarity x 100 rounded to an integer.
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;
};

EvalReport evaluate_translations(const Translator& translator, AttributeClassifier& classifier,
                                 const SparselyGroupedDataset& test, std::string model_id, std::string condition);

/// Reference accuracies of the full-scale evaluator on real faces (gender,
/// smile, hair color), kept as report notes when real data is evaluated.
inline constexpr double kCelebaReferenceGender = 99.00;
inline constexpr double kCelebaReferenceSmile = 90.22;
inline constexpr double kCelebaReferenceHair = 99.53;
std::string celeba_reference_note();

}  // namespace sggan
