#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sggan/data/dataset.hpp"
#include "sggan/eval/classifier.hpp"
#include "sggan/eval/protocol.hpp"
#include "sggan/train/config.hpp"
#include "sggan/train/trainer.hpp"

namespace sggan {

using ProgressFn = std::function<void(const std::string& label, const StepRecord&)>;

struct ConditionResult {
  std::string condition;
  std::shared_ptr<Trainer> trainer;
  EvalReport report;
  double seconds = 0;
};

/// Trains from scratch on `train` and evaluates every attribute on `test`.
/// With a run directory, checkpoints, metrics and the report land there.
ConditionResult run_condition(const TrainingConfig& config, std::shared_ptr<const SparselyGroupedDataset> train,
                              const SparselyGroupedDataset& test, AttributeClassifier& classifier,
                              const std::string& condition,
                              const std::optional<std::filesystem::path>& run_dir = std::nullopt,
                              const ProgressFn& progress = {});

struct SweepPoint {
  std::size_t mi_size = 0;
  int minority = 0;
  int majority = 0;
  std::size_t dataset_size = 0;
  std::size_t grouped_pool_size = 0;  // labelled examples of the attribute after balancing
  double mi_to_ma = 0;                // targeted accuracy [%], minority inputs -> majority value
  double ma_to_mi = 0;                // targeted accuracy [%], majority inputs -> minority value
  double d_real_mi_accuracy = 0;      // discriminator's own classification [%] of real minority test images
  EvalReport report;
};

/// Keeps `mi_size` minority examples (dropping the rest of the minority
/// group), balances the attribute by undersampling with recycling into the
/// mixed pool, and returns the prepared dataset.
SparselyGroupedDataset prepare_unbalanced(const SparselyGroupedDataset& full, std::size_t attribute,
                                          std::size_t mi_size, std::uint64_t seed);

/// For each minority size: prepare_unbalanced, train from scratch (seed
/// config.seed + index), evaluate both translation directions and the
/// discriminator's accuracy on real minority images. `attribute` must be
/// binary.
std::vector<SweepPoint> run_unbalanced_sweep(const SparselyGroupedDataset& full_train,
                                             const SparselyGroupedDataset& test, std::size_t attribute,
                                             std::span<const std::size_t> mi_sizes, const TrainingConfig& config,
                                             AttributeClassifier& classifier,
                                             const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                             const ProgressFn& progress = {});

/// Percent of `images` whose discriminator logits for `attribute` pick
/// `expected`.
double discriminator_accuracy(Discriminator& discriminator, const torch::Tensor& images, std::size_t attribute,
                              int expected);

struct AblationRow {
  ResidualMode mode = ResidualMode::Adapted;
  std::vector<double> targeted;  // per attribute, percent
  EvalReport report;
};

/// Trains every variant with an otherwise identical config and seed. Rows in
/// `reuse` are taken as already trained for their mode.
std::vector<AblationRow> run_ablation(std::shared_ptr<const SparselyGroupedDataset> train,
                                      const SparselyGroupedDataset& test, const TrainingConfig& config,
                                      std::span<const ResidualMode> variants, AttributeClassifier& classifier,
                                      const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                      std::vector<AblationRow> reuse = {}, const ProgressFn& progress = {});

AblationRow ablation_row(ResidualMode mode, const EvalReport& report);

/// Comma-separated table: method,<attr targeted accuracies>.
std::string ablation_csv(const std::vector<AblationRow>& rows, const AttributeSchema& schema);

/// Comma-separated sweep summary, one row per minority size.
std::string sweep_csv(const std::vector<SweepPoint>& points);

}  // namespace sggan
