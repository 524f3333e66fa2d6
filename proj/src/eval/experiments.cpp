#include "sggan/eval/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "sggan/errors.hpp"

namespace sggan {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

ConditionResult run_condition(const TrainingConfig& config, std::shared_ptr<const SparselyGroupedDataset> train,
                              const SparselyGroupedDataset& test, AttributeClassifier& classifier,
                              const std::string& condition, const std::optional<fs::path>& run_dir,
                              const ProgressFn& progress) {
  const auto start = std::chrono::steady_clock::now();
  ConditionResult out;
  out.condition = condition;
  out.trainer = std::make_shared<Trainer>(config, std::move(train));
  std::function<void(const StepRecord&)> on_log;
  if (progress) on_log = [&](const StepRecord& r) { progress(condition, r); };
  out.trainer->run(run_dir, on_log);
  out.report = evaluate_translations(generator_translator(out.trainer->generator()), classifier, test,
                                     condition + "@" + std::to_string(out.trainer->iteration()), condition);
  if (run_dir) out.report.write_csv(*run_dir / "reports" / "report.csv");
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

SparselyGroupedDataset prepare_unbalanced(const SparselyGroupedDataset& full, std::size_t attribute,
                                          std::size_t mi_size, std::uint64_t seed) {
  const auto& schema = full.schema();
  if (attribute >= schema.size()) throw ConfigError("sweep attribute index out of range");
  if (schema.cardinality(attribute) != 2) throw ConfigError("unbalanced sweep needs a binary attribute");
  const int minority = minority_value(full, attribute);
  auto pool = full.grouped(attribute, minority);
  if (mi_size == 0 || mi_size > pool.size())
    throw DataError("minority size " + std::to_string(mi_size) + " not in [1, " + std::to_string(pool.size()) +
                    "] for attribute '" + schema[attribute].name + "'");
  std::mt19937_64 rng(seed ^ 0x3151'0000ULL);
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<bool> drop(full.size(), false);
  for (std::size_t k = mi_size; k < pool.size(); ++k) drop[pool[k]] = true;
  std::vector<std::size_t> keep;
  for (std::size_t id = 0; id < full.size(); ++id)
    if (!drop[id]) keep.push_back(id);
  return balance_unbalanced(full.subset(keep), attribute, seed);
}

double discriminator_accuracy(Discriminator& discriminator, const torch::Tensor& images, std::size_t attribute,
                              int expected) {
  if (images.size(0) == 0) return 0.0;
  torch::NoGradGuard no_grad;
  const auto logits = discriminator->forward(images).logits.at(attribute);
  return 100.0 * logits.argmax(1).eq(expected).to(torch::kFloat64).mean().item<double>();
}

std::vector<SweepPoint> run_unbalanced_sweep(const SparselyGroupedDataset& full_train,
                                             const SparselyGroupedDataset& test, std::size_t attribute,
                                             std::span<const std::size_t> mi_sizes, const TrainingConfig& config,
                                             AttributeClassifier& classifier, const std::optional<fs::path>& out_dir,
                                             const ProgressFn& progress) {
  const int minority = minority_value(full_train, attribute);
  const int majority = 1 - minority;
  const auto& mi_test = test.grouped(attribute, minority);
  const auto& ma_test = test.grouped(attribute, majority);
  if (mi_test.empty() || ma_test.empty()) throw DataError("sweep test set needs both values of the attribute");

  std::vector<SweepPoint> points;
  for (std::size_t index = 0; index < mi_sizes.size(); ++index) {
    const auto s = mi_sizes[index];
    auto run_config = config;
    run_config.seed = config.seed + index;
    auto prepared = std::make_shared<const SparselyGroupedDataset>(
        prepare_unbalanced(full_train, attribute, s, run_config.seed));

    SweepPoint point;
    point.mi_size = s;
    point.minority = minority;
    point.majority = majority;
    point.dataset_size = prepared->size();
    point.grouped_pool_size = prepared->grouped_count(attribute);

    const auto label = "mi" + std::to_string(s);
    std::optional<fs::path> run_dir;
    if (out_dir) run_dir = *out_dir / label;
    auto result = run_condition(run_config, prepared, test, classifier, label, run_dir, progress);
    point.report = result.report;
    point.report.mi_size = s;

    auto& gen = result.trainer->generator();
    const auto direction = [&](const std::vector<std::size_t>& ids, int target) {
      torch::NoGradGuard no_grad;
      double hits = 0;
      for (std::size_t lo = 0; lo < ids.size(); lo += 50) {
        const std::span<const std::size_t> chunk(ids.data() + lo, std::min<std::size_t>(50, ids.size() - lo));
        const auto out = translate(gen, test.stack(chunk), attribute, target);
        const auto pred = classifier.predict(out).select(1, static_cast<std::int64_t>(attribute));
        hits += pred.eq(target).sum().item<double>();
      }
      return 100.0 * hits / static_cast<double>(ids.size());
    };
    point.mi_to_ma = direction(mi_test, majority);
    point.ma_to_mi = direction(ma_test, minority);
    point.d_real_mi_accuracy =
        discriminator_accuracy(result.trainer->discriminator(), test.stack(mi_test), attribute, minority);
    if (run_dir) point.report.write_csv(*run_dir / "reports" / "report.csv");
    points.push_back(std::move(point));
  }
  if (out_dir) write_text(*out_dir / "sweep.csv", sweep_csv(points));
  return points;
}

AblationRow ablation_row(ResidualMode mode, const EvalReport& report) {
  AblationRow row;
  row.mode = mode;
  row.report = report;
  for (const auto& r : report.rows) row.targeted.push_back(r.targeted());
  return row;
}

std::vector<AblationRow> run_ablation(std::shared_ptr<const SparselyGroupedDataset> train,
                                      const SparselyGroupedDataset& test, const TrainingConfig& config,
                                      std::span<const ResidualMode> variants, AttributeClassifier& classifier,
                                      const std::optional<fs::path>& out_dir, std::vector<AblationRow> reuse,
                                      const ProgressFn& progress) {
  std::vector<AblationRow> rows;
  for (const auto mode : variants) {
    auto found = std::find_if(reuse.begin(), reuse.end(), [&](const AblationRow& r) { return r.mode == mode; });
    if (found != reuse.end()) {
      rows.push_back(*found);
      continue;
    }
    auto variant = config;
    variant.residual = mode;
    const auto label = "residual_" + to_string(mode);
    std::optional<fs::path> run_dir;
    if (out_dir) run_dir = *out_dir / label;
    const auto result = run_condition(variant, train, test, classifier, label, run_dir, progress);
    rows.push_back(ablation_row(mode, result.report));
  }
  if (out_dir) write_text(*out_dir / "ablation.csv", ablation_csv(rows, test.schema()));
  return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows, const AttributeSchema& schema) {
  std::ostringstream out;
  out << "method";
  for (const auto& a : schema) out << ',' << a.name;
  out << '\n' << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << to_string(r.mode);
    for (double v : r.targeted) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::ostringstream out;
  out << "mi_size,dataset_size,grouped_pool,mi_to_ma,ma_to_mi,d_real_mi_accuracy\n" << std::fixed;
  for (const auto& p : points)
    out << p.mi_size << ',' << p.dataset_size << ',' << p.grouped_pool_size << ',' << std::setprecision(2)
        << p.mi_to_ma << ',' << p.ma_to_mi << ',' << p.d_real_mi_accuracy << '\n';
  return out.str();
}

}  // namespace sggan
