#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sggan/data/dataset.hpp"
#include "sggan/data/synth.hpp"
#include "sggan/eval/classifier.hpp"
#include "sggan/train/config.hpp"

namespace sggan {

struct DataOptions {
  /// Training manifest; when absent the corpus is synthesized from `synth`.
  std::optional<std::filesystem::path> manifest;
  /// Evaluation manifest; when absent a test corpus is synthesized with
  /// seed synth.seed + 1 and `test_count` images.
  std::optional<std::filesystem::path> test_manifest;
  std::size_t test_count = 500;
  /// Labels kept per (attribute, value); nullopt keeps every label.
  std::optional<std::size_t> per_group;
  /// Attribute whose grouped pools are undersampled to the minority size.
  std::optional<std::string> balance;
};

struct EvalOptions {
  /// "oracle" (pixel rules of the synthetic corpus) or "learned".
  std::string classifier = "oracle";
  /// Labelled manifest the learned classifier trains on (default: the
  /// training manifest).
  std::optional<std::filesystem::path> classifier_data;
  ClassifierConfig classifier_config;
  std::vector<std::size_t> mi{10, 50, 500};
  /// Empty selects the first attribute of the schema.
  std::string sweep_attribute;
  std::vector<ResidualMode> variants{ResidualMode::Adapted, ResidualMode::Original, ResidualMode::None};
  std::size_t grid_images = 6;
};

/// Everything a command needs. Serializes to a JSON object with sections
/// synth, data, train and eval; unknown keys are rejected at every level.
struct RunConfig {
  std::string name = "run";
  std::filesystem::path runs_dir = "runs";
  /// "desk" or "full": the TrainingConfig preset the train section refines.
  std::string preset = "desk";
  SynthParams synth;
  DataOptions data;
  TrainingConfig train = TrainingConfig::desk({});
  EvalOptions eval;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;
};

/// "all" -> nullopt, otherwise a positive integer. Throws ConfigError.
std::optional<std::size_t> parse_per_group(const std::string& text);
std::string per_group_to_string(const std::optional<std::size_t>& per_group);
/// "10,50,500" -> {10, 50, 500}. Throws ConfigError.
std::vector<std::size_t> parse_size_list(const std::string& text);
std::vector<ResidualMode> parse_variants(const std::string& text);
/// "stripe=0.9,0.1" -> (stripe, {0.9, 0.1}). Throws ConfigError.
std::pair<std::string, std::vector<double>> parse_marginal(const std::string& text);

/// runs_dir/name/YYYYmmdd-HHMMSS, with a numeric suffix if that exists.
std::filesystem::path make_run_directory(const std::filesystem::path& runs_dir, const std::string& name);

/// Resolves a manifest argument: a file, or a directory holding
/// manifest.csv.
std::filesystem::path resolve_manifest(const std::filesystem::path& path);

/// Loads or synthesizes the full training corpus.
SparselyGroupedDataset load_training_corpus(const RunConfig& config);
SparselyGroupedDataset load_test_corpus(const RunConfig& config, const AttributeSchema& schema);
/// Applies per_group and balance, seeded by train.seed.
SparselyGroupedDataset prepare_training_data(const SparselyGroupedDataset& full, const RunConfig& config);

/// Per (attribute, value) grouped counts plus mixed counts, as CSV.
std::string dataset_summary(const SparselyGroupedDataset& dataset);

}  // namespace sggan
