#include "sggan/data/scheduler.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "sggan/errors.hpp"

namespace sggan {

BatchScheduler::BatchScheduler(std::shared_ptr<const SparselyGroupedDataset> dataset, SchedulerConfig config)
    : dataset_(std::move(dataset)), config_(config) {
  if (!dataset_ || dataset_->empty()) throw DataError("batch scheduler needs a non-empty dataset");
  if (config_.batch_size == 0) throw ConfigError("batch size must be positive");
  if (config_.grouped_per_cycle == 0) throw ConfigError("grouped_per_cycle must be positive");
  std::seed_seq seq{static_cast<std::uint32_t>(config_.seed), static_cast<std::uint32_t>(config_.seed >> 32),
                    0xba7c4u};
  rng_.seed(seq);

  const auto& schema = dataset_->schema();
  grouped_.resize(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    for (int v = 0; v < schema.cardinality(j); ++v) {
      Pool pool{dataset_->grouped(j, v), 0};
      std::shuffle(pool.order.begin(), pool.order.end(), rng_);
      grouped_[j].push_back(std::move(pool));
    }
  }
  mixed_.order = dataset_->mixed_any();
  std::shuffle(mixed_.order.begin(), mixed_.order.end(), rng_);
}

void BatchScheduler::validate() const {
  const auto& schema = dataset_->schema();
  for (std::size_t j = 0; j < schema.size(); ++j)
    for (int v = 0; v < schema.cardinality(j); ++v)
      if (grouped_[j][v].order.empty())
        throw DataError("grouped pool for attribute '" + schema[j].name + "' value " + std::to_string(v) +
                        " is empty; sparsify or balance the dataset so every value keeps labelled examples");
}

std::size_t BatchScheduler::draw(Pool& pool) {
  if (pool.cursor == pool.order.size()) {
    std::shuffle(pool.order.begin(), pool.order.end(), rng_);
    pool.cursor = 0;
  }
  return pool.order[pool.cursor++];
}

Batch BatchScheduler::grouped_batch(std::size_t attribute) {
  const auto& schema = dataset_->schema();
  const int m = schema.cardinality(attribute);
  for (int v = 0; v < m; ++v)
    if (grouped_[attribute][v].order.empty())
      throw DataError("grouped pool for attribute '" + schema[attribute].name + "' value " + std::to_string(v) +
                      " is empty; sparsify or balance the dataset so every value keeps labelled examples");

  const std::size_t b = config_.batch_size;
  std::vector<int> values;
  values.reserve(b);
  if (config_.balanced_batches) {
    for (int v = 0; v < m; ++v) values.insert(values.end(), b / m, v);
    std::vector<int> extra(m);
    std::iota(extra.begin(), extra.end(), 0);
    std::shuffle(extra.begin(), extra.end(), rng_);
    for (std::size_t k = 0; k < b % m; ++k) values.push_back(extra[k]);
  } else {
    std::uniform_int_distribution<int> pick(0, m - 1);
    for (std::size_t k = 0; k < b; ++k) values.push_back(pick(rng_));
  }

  Batch batch;
  batch.kind = BatchKind::Grouped;
  batch.attribute = attribute;
  for (int v : values) batch.ids.push_back(draw(grouped_[attribute][v]));
  batch.images = dataset_->stack(batch.ids);
  batch.labels = dataset_->label_tensor(batch.ids, attribute);
  return batch;
}

Batch BatchScheduler::mixed_batch() {
  Batch batch;
  batch.kind = BatchKind::Mixed;
  for (std::size_t k = 0; k < config_.batch_size; ++k) batch.ids.push_back(draw(mixed_));
  batch.images = dataset_->stack(batch.ids);
  return batch;
}

Batch BatchScheduler::next() {
  const std::size_t cycle = config_.grouped_per_cycle + config_.mixed_per_cycle;
  const bool grouped = mixed_.order.empty() || (step_ % cycle) < config_.grouped_per_cycle;
  ++step_;
  if (!grouped) return mixed_batch();
  const std::size_t j = next_attribute_;
  next_attribute_ = (next_attribute_ + 1) % dataset_->schema().size();
  return grouped_batch(j);
}

nlohmann::json BatchScheduler::state() const {
  std::ostringstream rng;
  rng << rng_;
  auto pool_json = [](const Pool& p) { return nlohmann::json{{"order", p.order}, {"cursor", p.cursor}}; };
  nlohmann::json grouped = nlohmann::json::array();
  for (const auto& per_value : grouped_) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& p : per_value) row.push_back(pool_json(p));
    grouped.push_back(row);
  }
  return {{"rng", rng.str()},
          {"step", step_},
          {"next_attribute", next_attribute_},
          {"grouped", grouped},
          {"mixed", pool_json(mixed_)}};
}

void BatchScheduler::restore(const nlohmann::json& state) {
  auto load_pool = [](const nlohmann::json& j, const Pool& current) {
    Pool p{j.at("order").get<std::vector<std::size_t>>(), j.at("cursor").get<std::size_t>()};
    auto a = p.order, b = current.order;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b || p.cursor > p.order.size()) throw DataError("scheduler state does not match this dataset");
    return p;
  };
  const auto& grouped = state.at("grouped");
  if (grouped.size() != grouped_.size()) throw DataError("scheduler state has a different attribute count");
  decltype(grouped_) restored(grouped_.size());
  for (std::size_t j = 0; j < grouped_.size(); ++j) {
    if (grouped[j].size() != grouped_[j].size()) throw DataError("scheduler state has a different cardinality");
    for (std::size_t v = 0; v < grouped_[j].size(); ++v) restored[j].push_back(load_pool(grouped[j][v], grouped_[j][v]));
  }
  Pool mixed = load_pool(state.at("mixed"), mixed_);
  std::istringstream rng(state.at("rng").get<std::string>());
  rng >> rng_;
  grouped_ = std::move(restored);
  mixed_ = std::move(mixed);
  step_ = state.at("step").get<std::uint64_t>();
  next_attribute_ = state.at("next_attribute").get<std::size_t>();
}

}  // namespace sggan
