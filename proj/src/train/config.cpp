#include "sggan/train/config.hpp"

#include <set>

#include "sggan/errors.hpp"

namespace sggan {

TrainingConfig TrainingConfig::desk(AttributeSchema schema) {
  TrainingConfig c;
  c.schema = std::move(schema);
  c.image_size = 32;
  c.warm_iterations = 3000;
  c.decay_iterations = 2000;
  c.gen_base_width = 16;
  c.disc_base_width = 32;
  c.checkpoint_every = 1000;
  c.log_every = 50;
  return c;
}

GeneratorConfig TrainingConfig::generator_config() const {
  GeneratorConfig g;
  g.image_size = image_size;
  g.channels = 3;
  g.schema = schema;
  g.base_width = gen_base_width;
  g.residual_blocks = residual_blocks;
  g.residual = residual;
  return g;
}

DiscriminatorConfig TrainingConfig::discriminator_config() const {
  DiscriminatorConfig d;
  d.image_size = image_size;
  d.channels = 3;
  d.schema = schema;
  d.base_width = disc_base_width;
  d.depth = disc_depth;
  return d;
}

SchedulerConfig TrainingConfig::scheduler_config() const {
  SchedulerConfig s;
  s.batch_size = batch_size;
  s.grouped_per_cycle = grouped_per_cycle;
  s.mixed_per_cycle = mixed_per_cycle;
  s.balanced_batches = balanced_batches;
  s.seed = seed;
  return s;
}

void TrainingConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(lr_initial >= 0)) throw ConfigError("lr_initial must be non-negative");
  if (warm_iterations < 0 || decay_iterations < 0) throw ConfigError("schedule lengths must be non-negative");
  if (n_critic <= 0) throw ConfigError("n_critic must be positive");
  if (checkpoint_every <= 0 || log_every <= 0) throw ConfigError("checkpoint_every and log_every must be positive");
  if (max_iterations && *max_iterations < 0) throw ConfigError("max_iterations must be non-negative");
  if (schema.empty()) throw ConfigError("training needs a non-empty attribute schema");
  weights.validate();
  generator_config().validate();
  discriminator_config().validate();
}

double lr_at(std::int64_t iteration, const TrainingConfig& config) {
  if (iteration < config.warm_iterations) return config.lr_initial;
  const auto into_decay = iteration - config.warm_iterations;
  if (into_decay >= config.decay_iterations) return 0.0;
  return config.lr_initial *
         (1.0 - static_cast<double>(into_decay) / static_cast<double>(config.decay_iterations));
}

nlohmann::json TrainingConfig::to_json() const {
  nlohmann::json j{
      {"batch_size", batch_size},
      {"lr_initial", lr_initial},
      {"warm_iterations", warm_iterations},
      {"decay_iterations", decay_iterations},
      {"n_critic", n_critic},
      {"adam_beta1", adam_beta1},
      {"adam_beta2", adam_beta2},
      {"alpha", weights.alpha},
      {"lambda", weights.lambda},
      {"seed", seed},
      {"image_size", image_size},
      {"schema", schema.to_string()},
      {"checkpoint_every", checkpoint_every},
      {"log_every", log_every},
      {"max_iterations", max_iterations ? nlohmann::json(*max_iterations) : nlohmann::json(nullptr)},
      {"gen_base_width", gen_base_width},
      {"disc_base_width", disc_base_width},
      {"residual_blocks", residual_blocks},
      {"residual", to_string(residual)},
      {"disc_depth", disc_depth ? nlohmann::json(*disc_depth) : nlohmann::json(nullptr)},
      {"grouped_per_cycle", grouped_per_cycle},
      {"mixed_per_cycle", mixed_per_cycle},
      {"balanced_batches", balanced_batches},
      {"rec_all_pairs", rec_all_pairs},
  };
  return j;
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j, TrainingConfig c) {
  if (!j.is_object()) throw ConfigError("training config must be an object");
  static const std::set<std::string> known{
      "batch_size", "lr_initial",      "warm_iterations", "decay_iterations", "n_critic",        "adam_beta1",
      "adam_beta2", "alpha",           "lambda",          "seed",             "image_size",      "schema",
      "checkpoint_every", "log_every", "max_iterations",  "gen_base_width",   "disc_base_width", "residual_blocks",
      "residual",   "disc_depth",      "grouped_per_cycle", "mixed_per_cycle", "balanced_batches", "rec_all_pairs"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown training config key '" + key + "'");

  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    auto get_optional = [&](const char* key, std::optional<std::int64_t>& field) {
      if (!j.contains(key)) return;
      if (j.at(key).is_null())
        field.reset();
      else
        field = j.at(key).get<std::int64_t>();
    };
    get("batch_size", c.batch_size);
    get("lr_initial", c.lr_initial);
    get("warm_iterations", c.warm_iterations);
    get("decay_iterations", c.decay_iterations);
    get("n_critic", c.n_critic);
    get("adam_beta1", c.adam_beta1);
    get("adam_beta2", c.adam_beta2);
    get("alpha", c.weights.alpha);
    get("lambda", c.weights.lambda);
    get("seed", c.seed);
    get("image_size", c.image_size);
    if (j.contains("schema")) c.schema = AttributeSchema::parse(j.at("schema").get<std::string>());
    get("checkpoint_every", c.checkpoint_every);
    get("log_every", c.log_every);
    get_optional("max_iterations", c.max_iterations);
    get("gen_base_width", c.gen_base_width);
    get("disc_base_width", c.disc_base_width);
    get("residual_blocks", c.residual_blocks);
    if (j.contains("residual")) c.residual = residual_mode_from_string(j.at("residual").get<std::string>());
    get_optional("disc_depth", c.disc_depth);
    get("grouped_per_cycle", c.grouped_per_cycle);
    get("mixed_per_cycle", c.mixed_per_cycle);
    get("balanced_batches", c.balanced_batches);
    get("rec_all_pairs", c.rec_all_pairs);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad training config value: ") + e.what());
  }
  return c;
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& j) { return from_json(j, TrainingConfig{}); }

}  // namespace sggan
