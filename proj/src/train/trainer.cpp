#include "sggan/train/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <zlib.h>

#include "sggan/errors.hpp"
#include "sggan/loss.hpp"

namespace sggan {

namespace fs = std::filesystem;

namespace {

constexpr int kCheckpointFormat = 1;

// Disables gradients of a module's parameters for the guard's lifetime.
class FreezeGuard {
 public:
  explicit FreezeGuard(torch::nn::Module& module) : params_(module.parameters()) {
    for (auto& p : params_) p.set_requires_grad(false);
  }
  ~FreezeGuard() {
    for (auto& p : params_) p.set_requires_grad(true);
  }
  FreezeGuard(const FreezeGuard&) = delete;
  FreezeGuard& operator=(const FreezeGuard&) = delete;

 private:
  std::vector<torch::Tensor> params_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t iteration) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (iteration + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Generator make_generator(const TrainingConfig& config) {
  config.validate();
  torch::manual_seed(config.seed);
  return Generator(config.generator_config());
}

Discriminator make_discriminator(const TrainingConfig& config) {
  return Discriminator(config.discriminator_config());
}

std::unique_ptr<torch::optim::Adam> make_adam(torch::nn::Module& module, const TrainingConfig& config) {
  return std::make_unique<torch::optim::Adam>(
      module.parameters(),
      torch::optim::AdamOptions(config.lr_initial).betas({config.adam_beta1, config.adam_beta2}));
}

const char* kind_name(BatchKind kind) { return kind == BatchKind::Grouped ? "grouped" : "mixed"; }

std::string format_double(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream out;
  out << std::setprecision(9) << v;
  return out.str();
}

nlohmann::json read_meta(const fs::path& dir) {
  const auto meta_path = dir / "meta.json";
  std::ifstream in(meta_path);
  if (!in) throw CheckpointError("cannot open checkpoint metadata '" + meta_path.string() + "'");
  nlohmann::json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("corrupted checkpoint metadata '" + meta_path.string() + "': " + e.what());
  }
  const auto weights = dir / "weights.pt";
  if (!fs::exists(weights)) throw CheckpointError("missing checkpoint weights '" + weights.string() + "'");
  if (!meta.contains("weights_crc32") || meta.at("weights_crc32").get<std::uint32_t>() != file_crc32(weights))
    throw CheckpointError("integrity check failed for '" + weights.string() + "' (checksum mismatch)");
  return meta;
}

AttributeSchema checked_schema(const nlohmann::json& meta, const std::optional<AttributeSchema>& expected,
                               const fs::path& dir) {
  const auto schema = AttributeSchema::parse(meta.at("schema").get<std::string>());
  if (expected) {
    if (auto diff = describe_schema_mismatch(*expected, schema); !diff.empty())
      throw CheckpointError("checkpoint '" + dir.string() + "' schema mismatch: " + diff);
  }
  return schema;
}

}  // namespace

Trainer::Trainer(TrainingConfig config, std::shared_ptr<const SparselyGroupedDataset> dataset)
    : config_(std::move(config)),
      dataset_(std::move(dataset)),
      generator_(make_generator(config_)),
      discriminator_(make_discriminator(config_)),
      opt_g_(make_adam(*generator_, config_)),
      opt_d_(make_adam(*discriminator_, config_)),
      scheduler_(dataset_, config_.scheduler_config()) {
  if (auto diff = describe_schema_mismatch(config_.schema, dataset_->schema()); !diff.empty())
    throw ConfigError("dataset schema does not match training config: " + diff);
  if (dataset_->image_size() != config_.image_size)
    throw ConfigError("dataset image size " + std::to_string(dataset_->image_size()) + " != configured " +
                      std::to_string(config_.image_size));
  scheduler_.validate();
  last_g_.l_g = last_g_.l_adv_g = last_g_.l_cls_g = last_g_.l_rec = std::nan("");
}

void Trainer::set_lr(double lr) {
  for (auto* opt : {opt_g_.get(), opt_d_.get()})
    for (auto& group : opt->param_groups()) static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
}

StepRecord Trainer::step() {
  StepRecord rec;
  rec.iteration = iteration_;
  rec.lr = lr_at(iteration_, config_);
  set_lr(rec.lr);

  const auto batch = scheduler_.next();
  rec.kind = batch.kind;
  opt_d_->zero_grad();
  const auto d = d_total(batch, generator_, discriminator_, config_.weights, mix_seed(config_.seed, iteration_));
  rec.l_d = d.total.item<double>();
  rec.l_adv_d = d.adv.item<double>();
  rec.l_cls_d = d.cls.item<double>();
  rec.penalty = d.penalty.item<double>();
  rec.critic_gap = d.critic_gap.item<double>();
  if (!std::isfinite(rec.l_d)) {
    std::ostringstream msg;
    msg << "non-finite discriminator loss at iteration " << iteration_ << " (" << kind_name(batch.kind)
        << " batch): l_d=" << rec.l_d << " l_adv_d=" << rec.l_adv_d << " l_cls_d=" << rec.l_cls_d
        << " penalty=" << rec.penalty;
    throw NumericError(msg.str());
  }
  d.total.backward();
  opt_d_->step();
  ++d_steps_;

  if ((iteration_ + 1) % config_.n_critic == 0) {
    const auto g_batch = scheduler_.next();
    FreezeGuard frozen(*discriminator_);
    opt_g_->zero_grad();
    const auto g = g_total(g_batch, generator_, discriminator_, config_.weights, config_.rec_all_pairs);
    rec.g_step = true;
    rec.l_g = g.total.item<double>();
    rec.l_adv_g = g.adv.item<double>();
    rec.l_cls_g = g.cls.item<double>();
    rec.l_rec = g.rec.item<double>();
    if (!std::isfinite(rec.l_g)) {
      std::ostringstream msg;
      msg << "non-finite generator loss at iteration " << iteration_ << " (" << kind_name(g_batch.kind)
          << " batch): l_g=" << rec.l_g << " l_adv_g=" << rec.l_adv_g << " l_cls_g=" << rec.l_cls_g
          << " l_rec=" << rec.l_rec;
      throw NumericError(msg.str());
    }
    g.total.backward();
    opt_g_->step();
    ++g_steps_;
    last_g_ = rec;
  } else {
    rec.l_g = last_g_.l_g;
    rec.l_adv_g = last_g_.l_adv_g;
    rec.l_cls_g = last_g_.l_cls_g;
    rec.l_rec = last_g_.l_rec;
  }

  ++iteration_;
  history_.push_back(rec);
  return rec;
}

void Trainer::write_metrics_row(const fs::path& file, const StepRecord& r) const {
  const bool fresh = !fs::exists(file);
  std::ofstream out(file, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to metric log '" + file.string() + "'");
  if (fresh) out << kMetricsHeader << '\n';
  out << r.iteration + 1 << ',' << format_double(r.lr) << ',' << format_double(r.l_d) << ','
      << format_double(r.l_adv_d) << ',' << format_double(r.l_cls_d) << ',' << format_double(r.l_g) << ','
      << format_double(r.l_adv_g) << ',' << format_double(r.l_cls_g) << ',' << format_double(r.l_rec) << '\n';
}

void Trainer::run(const std::optional<fs::path>& run_dir, const std::function<void(const StepRecord&)>& on_log) {
  if (run_dir) fs::create_directories(*run_dir);
  const auto total = config_.total_iterations();
  std::int64_t last_saved = -1;
  while (iteration_ < total) {
    const auto rec = step();
    if (iteration_ % config_.log_every == 0) {
      if (run_dir) write_metrics_row(*run_dir / "metrics.csv", rec);
      if (on_log) on_log(rec);
    }
    if (run_dir && iteration_ % config_.checkpoint_every == 0) {
      save_checkpoint(*run_dir / ("ckpt_" + std::to_string(iteration_)));
      last_saved = iteration_;
    }
  }
  if (run_dir && last_saved != iteration_) save_checkpoint(*run_dir / ("ckpt_" + std::to_string(iteration_)));
}

void Trainer::save_checkpoint(const fs::path& dir) const {
  try {
    fs::create_directories(dir);
    const auto weights = dir / "weights.pt";
    torch::serialize::OutputArchive root, g, d, og, od;
    generator_->save(g);
    discriminator_->save(d);
    opt_g_->save(og);
    opt_d_->save(od);
    root.write("generator", g);
    root.write("discriminator", d);
    root.write("opt_generator", og);
    root.write("opt_discriminator", od);
    root.save_to(weights.string());

    nlohmann::json meta{{"format", kCheckpointFormat},
                        {"schema", config_.schema.to_string()},
                        {"seed", config_.seed},
                        {"iteration", iteration_},
                        {"d_steps", d_steps_},
                        {"g_steps", g_steps_},
                        {"config", config_.to_json()},
                        {"scheduler", scheduler_.state()},
                        {"weights_crc32", file_crc32(weights)}};
    const auto meta_path = dir / "meta.json";
    std::ofstream out(meta_path);
    if (!out) throw CheckpointError("cannot write checkpoint metadata '" + meta_path.string() + "'");
    out << meta.dump(2) << '\n';
    if (!out) throw CheckpointError("failed writing checkpoint metadata '" + meta_path.string() + "'");
  } catch (const CheckpointError&) {
    throw;
  } catch (const std::exception& e) {
    throw CheckpointError("cannot write checkpoint '" + dir.string() + "': " + e.what());
  }
}

Trainer Trainer::resume(const fs::path& dir, std::shared_ptr<const SparselyGroupedDataset> dataset,
                        const std::optional<TrainingConfig>& override_config) {
  const auto meta = read_meta(dir);
  checked_schema(meta, dataset->schema(), dir);
  auto config = TrainingConfig::from_json(meta.at("config"));
  if (override_config) {
    config.max_iterations = override_config->max_iterations;
    config.checkpoint_every = override_config->checkpoint_every;
    config.log_every = override_config->log_every;
  }
  Trainer trainer(config, std::move(dataset));
  try {
    torch::serialize::InputArchive root, g, d, og, od;
    root.load_from((dir / "weights.pt").string());
    root.read("generator", g);
    root.read("discriminator", d);
    root.read("opt_generator", og);
    root.read("opt_discriminator", od);
    trainer.generator_->load(g);
    trainer.discriminator_->load(d);
    trainer.opt_g_->load(og);
    trainer.opt_d_->load(od);
    trainer.scheduler_.restore(meta.at("scheduler"));
  } catch (const std::exception& e) {
    throw CheckpointError("cannot load checkpoint '" + dir.string() + "': " + e.what());
  }
  trainer.iteration_ = meta.at("iteration").get<std::int64_t>();
  trainer.d_steps_ = meta.at("d_steps").get<std::int64_t>();
  trainer.g_steps_ = meta.at("g_steps").get<std::int64_t>();
  return trainer;
}

LoadedGenerator load_generator(const fs::path& dir, const std::optional<AttributeSchema>& expected) {
  const auto meta = read_meta(dir);
  checked_schema(meta, expected, dir);
  LoadedGenerator out;
  out.config = TrainingConfig::from_json(meta.at("config"));
  out.iteration = meta.at("iteration").get<std::int64_t>();
  out.generator = Generator(out.config.generator_config());
  try {
    torch::serialize::InputArchive root, g;
    root.load_from((dir / "weights.pt").string());
    root.read("generator", g);
    out.generator->load(g);
  } catch (const std::exception& e) {
    throw CheckpointError("cannot load generator from '" + dir.string() + "': " + e.what());
  }
  return out;
}

std::uint32_t file_crc32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read '" + path.string() + "'");
  uLong crc = crc32(0L, Z_NULL, 0);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto n = in.gcount();
    if (n > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

std::uint64_t parameter_hash(const torch::nn::Module& module) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : module.parameters()) {
    const auto c = p.detach().contiguous();
    const auto* bytes = static_cast<const unsigned char*>(c.data_ptr());
    const auto n = static_cast<std::size_t>(c.numel()) * c.element_size();
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

}  // namespace sggan
