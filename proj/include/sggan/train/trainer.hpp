#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "sggan/data/dataset.hpp"
#include "sggan/data/scheduler.hpp"
#include "sggan/model/discriminator.hpp"
#include "sggan/model/generator.hpp"
#include "sggan/train/config.hpp"

namespace sggan {

/// Scalars recorded for one discriminator step (and the generator step that
/// followed it, if any).
struct StepRecord {
  std::int64_t iteration = 0;  // discriminator steps completed before this one
  double lr = 0;
  BatchKind kind = BatchKind::Mixed;
  double l_d = 0, l_adv_d = 0, l_cls_d = 0, penalty = 0, critic_gap = 0;
  bool g_step = false;
  double l_g = 0, l_adv_g = 0, l_cls_g = 0, l_rec = 0;
};

/// Owns generator, discriminator, both Adam optimizers and the batch
/// scheduler. An iteration is one discriminator update; every n_critic-th
/// iteration also updates the generator on a fresh batch.
class Trainer {
 public:
  Trainer(TrainingConfig config, std::shared_ptr<const SparselyGroupedDataset> dataset);

  /// One training step. Throws NumericError (iteration, batch kind and loss
  /// components in the message) on a non-finite loss.
  StepRecord step();

  /// Runs until total_iterations(). With a run directory, appends metric rows
  /// every log_every iterations to run_dir/metrics.csv and writes
  /// run_dir/ckpt_{iteration} every checkpoint_every iterations and at exit.
  void run(const std::optional<std::filesystem::path>& run_dir = std::nullopt,
           const std::function<void(const StepRecord&)>& on_log = {});

  /// Writes weights.pt (both networks and optimizer moments) and meta.json
  /// (schema, config, iteration, scheduler state, weights checksum).
  void save_checkpoint(const std::filesystem::path& dir) const;

  /// Restores a trainer from save_checkpoint output. The dataset schema must
  /// match the checkpoint's; `override_config` may change only run-length
  /// and logging fields. Throws CheckpointError.
  static Trainer resume(const std::filesystem::path& dir, std::shared_ptr<const SparselyGroupedDataset> dataset,
                        const std::optional<TrainingConfig>& override_config = std::nullopt);

  Generator& generator() { return generator_; }
  Discriminator& discriminator() { return discriminator_; }
  const TrainingConfig& config() const { return config_; }
  std::int64_t iteration() const { return iteration_; }
  std::int64_t d_steps() const { return d_steps_; }
  std::int64_t g_steps() const { return g_steps_; }
  const std::vector<StepRecord>& history() const { return history_; }
  const BatchScheduler& scheduler() const { return scheduler_; }

 private:
  void set_lr(double lr);
  void write_metrics_row(const std::filesystem::path& file, const StepRecord& r) const;

  TrainingConfig config_;
  std::shared_ptr<const SparselyGroupedDataset> dataset_;
  Generator generator_{nullptr};
  Discriminator discriminator_{nullptr};
  std::unique_ptr<torch::optim::Adam> opt_g_;
  std::unique_ptr<torch::optim::Adam> opt_d_;
  BatchScheduler scheduler_;
  std::int64_t iteration_ = 0;
  std::int64_t d_steps_ = 0;
  std::int64_t g_steps_ = 0;
  std::vector<StepRecord> history_;
  StepRecord last_g_;
};

struct LoadedGenerator {
  Generator generator{nullptr};
  TrainingConfig config;
  std::int64_t iteration = 0;
};

/// Generator weights from a checkpoint directory, integrity-checked. With
/// `expected`, a differing schema throws CheckpointError naming the attribute.
LoadedGenerator load_generator(const std::filesystem::path& dir,
                               const std::optional<AttributeSchema>& expected = std::nullopt);

/// CRC-32 of a file's bytes.
std::uint32_t file_crc32(const std::filesystem::path& path);

/// Hash of every parameter's bytes, for detecting (absence of) updates.
std::uint64_t parameter_hash(const torch::nn::Module& module);

/// Column header of metrics.csv.
inline constexpr const char* kMetricsHeader = "iteration,lr,l_d,l_adv_d,l_cls_d,l_g,l_adv_g,l_cls_g,l_rec";

}  // namespace sggan
