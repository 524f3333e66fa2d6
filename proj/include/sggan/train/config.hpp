#pragma once

#include <cstdint>
#include <optional>

#include <nlohmann/json.hpp>

#include "sggan/data/scheduler.hpp"
#include "sggan/loss.hpp"
#include "sggan/model/discriminator.hpp"
#include "sggan/model/generator.hpp"
#include "sggan/schema.hpp"

namespace sggan {

/// Every knob of a training run. Defaults are the full-scale schedule:
/// batch 8, Adam(1e-4, 0.5, 0.999), constant for 10000 discriminator steps
/// then linear decay to 0 over the next 10000, one generator step per five
/// discriminator steps, alpha = lambda = 10.
struct TrainingConfig {
  std::size_t batch_size = 8;
  double lr_initial = 1e-4;
  std::int64_t warm_iterations = 10000;
  std::int64_t decay_iterations = 10000;
  std::int64_t n_critic = 5;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  LossWeights weights;
  std::uint64_t seed = 0;
  std::int64_t image_size = 128;
  AttributeSchema schema;
  std::int64_t checkpoint_every = 1000;
  std::int64_t log_every = 100;
  /// Stop early; defaults to warm + decay.
  std::optional<std::int64_t> max_iterations;

  std::int64_t gen_base_width = 64;
  std::int64_t disc_base_width = 64;
  std::int64_t residual_blocks = 6;
  ResidualMode residual = ResidualMode::Adapted;
  std::optional<std::int64_t> disc_depth;

  std::size_t grouped_per_cycle = 1;
  std::size_t mixed_per_cycle = 1;
  bool balanced_batches = true;
  /// Reconstruction over all ordered output pairs (needed when some m_j > 2).
  bool rec_all_pairs = false;

  /// Desk-scale preset: 32 px, 3000 warm + 2000 decay iterations and the
  /// narrow widths that keep one run in the tens of minutes on a CPU core.
  static TrainingConfig desk(AttributeSchema schema);

  std::int64_t total_iterations() const { return max_iterations.value_or(warm_iterations + decay_iterations); }
  GeneratorConfig generator_config() const;
  DiscriminatorConfig discriminator_config() const;
  SchedulerConfig scheduler_config() const;
  void validate() const;

  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys throw ConfigError.
  static TrainingConfig from_json(const nlohmann::json& j, TrainingConfig base);
  static TrainingConfig from_json(const nlohmann::json& j);
};

/// lr_initial for it < warm, lr_initial * (1 - (it - warm) / decay) during
/// the decay window, 0 afterwards.
double lr_at(std::int64_t iteration, const TrainingConfig& config);

}  // namespace sggan
