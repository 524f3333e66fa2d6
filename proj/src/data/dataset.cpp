#include "sggan/data/dataset.hpp"

#include <algorithm>
#include <random>

#include "sggan/errors.hpp"

namespace sggan {

namespace {

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

std::vector<Labels> copy_labels(const SparselyGroupedDataset& ds) {
  std::vector<Labels> labels;
  labels.reserve(ds.size());
  for (const auto& ex : ds.examples()) labels.push_back(ex.labels);
  return labels;
}

}  // namespace

SparselyGroupedDataset::SparselyGroupedDataset(AttributeSchema schema, std::vector<Example> examples)
    : schema_(std::move(schema)), examples_(std::move(examples)) {
  if (schema_.empty()) throw ConfigError("dataset needs a non-empty schema");
  for (std::size_t id = 0; id < examples_.size(); ++id) {
    const auto& ex = examples_[id];
    if (ex.labels.size() != schema_.size())
      throw DataError("example " + std::to_string(id) + " has " + std::to_string(ex.labels.size()) +
                      " labels, schema has " + std::to_string(schema_.size()));
    for (std::size_t j = 0; j < schema_.size(); ++j) {
      if (ex.labels[j] && (*ex.labels[j] < 0 || *ex.labels[j] >= schema_.cardinality(j)))
        throw DataError("example " + std::to_string(id) + ": label " + std::to_string(*ex.labels[j]) +
                        " out of range for attribute '" + schema_[j].name + "'");
    }
    if (!ex.image.defined() || ex.image.dim() != 3)
      throw DataError("example " + std::to_string(id) + " image must be (C,H,W)");
    if (id > 0 && ex.image.sizes() != examples_[0].image.sizes())
      throw DataError("example " + std::to_string(id) + " image shape differs from example 0");
  }
  build_index();
}

void SparselyGroupedDataset::build_index() {
  grouped_.assign(schema_.size(), {});
  mixed_.assign(schema_.size(), {});
  for (std::size_t j = 0; j < schema_.size(); ++j) grouped_[j].resize(schema_.cardinality(j));
  for (std::size_t id = 0; id < examples_.size(); ++id) {
    for (std::size_t j = 0; j < schema_.size(); ++j) {
      if (const auto& l = examples_[id].labels[j])
        grouped_[j][*l].push_back(id);
      else
        mixed_[j].push_back(id);
    }
  }
}

const std::vector<std::size_t>& SparselyGroupedDataset::grouped(std::size_t j, int value) const {
  return grouped_.at(j).at(value);
}

const std::vector<std::size_t>& SparselyGroupedDataset::mixed(std::size_t j) const { return mixed_.at(j); }

std::size_t SparselyGroupedDataset::grouped_count(std::size_t j) const {
  std::size_t total = 0;
  for (const auto& pool : grouped_.at(j)) total += pool.size();
  return total;
}

std::vector<std::size_t> SparselyGroupedDataset::mixed_any() const {
  std::vector<std::size_t> ids;
  for (std::size_t id = 0; id < examples_.size(); ++id) {
    const auto& labels = examples_[id].labels;
    if (std::any_of(labels.begin(), labels.end(), [](const Label& l) { return !l.has_value(); })) ids.push_back(id);
  }
  return ids;
}

std::int64_t SparselyGroupedDataset::image_size() const {
  return examples_.empty() ? 0 : examples_[0].image.size(1);
}

std::int64_t SparselyGroupedDataset::channels() const {
  return examples_.empty() ? 0 : examples_[0].image.size(0);
}

torch::Tensor SparselyGroupedDataset::stack(std::span<const std::size_t> ids) const {
  std::vector<torch::Tensor> images;
  images.reserve(ids.size());
  for (auto id : ids) images.push_back(examples_.at(id).image);
  return torch::stack(images);
}

torch::Tensor SparselyGroupedDataset::stack_all() const {
  std::vector<std::size_t> ids(examples_.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return stack(ids);
}

torch::Tensor SparselyGroupedDataset::label_tensor(std::span<const std::size_t> ids, std::size_t j) const {
  auto out = torch::empty({static_cast<std::int64_t>(ids.size())}, torch::kInt64);
  auto acc = out.accessor<std::int64_t, 1>();
  for (std::size_t i = 0; i < ids.size(); ++i) acc[i] = examples_.at(ids[i]).labels.at(j).value_or(-1);
  return out;
}

SparselyGroupedDataset SparselyGroupedDataset::relabel(std::vector<Labels> labels) const {
  if (labels.size() != examples_.size()) throw DataError("relabel: label count does not match example count");
  std::vector<Example> out;
  out.reserve(examples_.size());
  for (std::size_t id = 0; id < examples_.size(); ++id) out.push_back({examples_[id].image, std::move(labels[id])});
  return SparselyGroupedDataset(schema_, std::move(out));
}

SparselyGroupedDataset SparselyGroupedDataset::subset(std::span<const std::size_t> ids) const {
  std::vector<Example> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(examples_.at(id));
  return SparselyGroupedDataset(schema_, std::move(out));
}

SparselyGroupedDataset sparsify(const SparselyGroupedDataset& dataset, std::size_t per_group, std::uint64_t seed) {
  const auto& schema = dataset.schema();
  auto labels = copy_labels(dataset);
  for (std::size_t j = 0; j < schema.size(); ++j) {
    auto rng = seeded_rng(seed, j);
    for (int v = 0; v < schema.cardinality(j); ++v) {
      auto pool = dataset.grouped(j, v);
      if (pool.size() < per_group)
        throw DataError("sparsify: attribute '" + schema[j].name + "' value " + std::to_string(v) + " has only " +
                        std::to_string(pool.size()) + " labelled examples, need " + std::to_string(per_group));
      std::shuffle(pool.begin(), pool.end(), rng);
      for (std::size_t k = per_group; k < pool.size(); ++k) labels[pool[k]][j].reset();
    }
  }
  return dataset.relabel(std::move(labels));
}

SparselyGroupedDataset balance_unbalanced(const SparselyGroupedDataset& dataset, std::size_t attribute,
                                          std::uint64_t seed) {
  const auto& schema = dataset.schema();
  if (attribute >= schema.size()) throw ConfigError("balance: attribute index out of range");
  std::size_t smallest = dataset.size();
  for (int v = 0; v < schema.cardinality(attribute); ++v) {
    const auto n = dataset.grouped(attribute, v).size();
    if (n == 0)
      throw DataError("balance: attribute '" + schema[attribute].name + "' value " + std::to_string(v) +
                      " has no labelled examples");
    smallest = std::min(smallest, n);
  }
  auto labels = copy_labels(dataset);
  auto rng = seeded_rng(seed, 0xba1a'0000ULL + attribute);
  for (int v = 0; v < schema.cardinality(attribute); ++v) {
    auto pool = dataset.grouped(attribute, v);
    if (pool.size() == smallest) continue;
    std::shuffle(pool.begin(), pool.end(), rng);
    for (std::size_t k = smallest; k < pool.size(); ++k) labels[pool[k]][attribute].reset();
  }
  return dataset.relabel(std::move(labels));
}

int minority_value(const SparselyGroupedDataset& dataset, std::size_t attribute) {
  int best = 0;
  for (int v = 1; v < dataset.schema().cardinality(attribute); ++v)
    if (dataset.grouped(attribute, v).size() < dataset.grouped(attribute, best).size()) best = v;
  return best;
}

}  // namespace sggan
