#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "sggan/data/dataset.hpp"

namespace sggan {

enum class BatchKind { Grouped, Mixed };

struct Batch {
  BatchKind kind = BatchKind::Mixed;
  std::optional<std::size_t> attribute;  // set iff Grouped
  torch::Tensor images;                  // (B,C,H,W)
  torch::Tensor labels;                  // (B,) int64 for Grouped, undefined for Mixed
  std::vector<std::size_t> ids;
};

struct SchedulerConfig {
  std::size_t batch_size = 8;
  /// Grouped batches per interleave cycle, followed by `mixed_per_cycle`
  /// mixed batches.
  std::size_t grouped_per_cycle = 1;
  std::size_t mixed_per_cycle = 1;
  /// Exactly batch_size / m_j examples per value (remainder spread over
  /// randomly chosen values); otherwise each slot draws its value uniformly.
  bool balanced_batches = true;
  std::uint64_t seed = 0;
};

/// Deterministic stream of grouped and mixed batches.
///
/// Grouped batches cycle attributes round-robin. Every pool (one per
/// attribute value, plus the mixed pool of examples unlabelled for at least
/// one attribute) is consumed in reshuffled epochs. When the mixed pool is
/// empty every batch is grouped.
///
/// Single owner: the sequence depends only on the seed and the number of
/// batches drawn so far.
class BatchScheduler {
 public:
  BatchScheduler(std::shared_ptr<const SparselyGroupedDataset> dataset, SchedulerConfig config);

  Batch next();

  /// Throws DataError if any attribute has a value with no labelled example.
  void validate() const;

  const SchedulerConfig& config() const { return config_; }
  std::uint64_t batches_drawn() const { return step_; }

  nlohmann::json state() const;
  /// Restores a state produced by state() on a scheduler over the same
  /// dataset. Throws DataError on pool size mismatch.
  void restore(const nlohmann::json& state);

 private:
  struct Pool {
    std::vector<std::size_t> order;
    std::size_t cursor = 0;
  };

  std::size_t draw(Pool& pool);
  Batch grouped_batch(std::size_t attribute);
  Batch mixed_batch();

  std::shared_ptr<const SparselyGroupedDataset> dataset_;
  SchedulerConfig config_;
  std::mt19937_64 rng_;
  std::vector<std::vector<Pool>> grouped_;  // [j][v]
  Pool mixed_;
  std::uint64_t step_ = 0;
  std::size_t next_attribute_ = 0;
};

}  // namespace sggan
