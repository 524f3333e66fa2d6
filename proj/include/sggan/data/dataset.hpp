#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "sggan/schema.hpp"

namespace sggan {

struct Example {
  torch::Tensor image;  // (C,H,W), float, [-1, 1]
  Labels labels;        // one entry per schema attribute
};

/// Examples plus, per attribute, the partition of example ids into grouped
/// pools (one per value) and the mixed pool (unlabelled for that attribute).
///
/// Immutable after construction; the partition is derived from the labels, so
/// it always covers every id exactly once per attribute. Operations that
/// change labels return a new dataset sharing the image storage.
class SparselyGroupedDataset {
 public:
  SparselyGroupedDataset() = default;
  /// Validates label ranges and that all images share one shape.
  SparselyGroupedDataset(AttributeSchema schema, std::vector<Example> examples);

  const AttributeSchema& schema() const { return schema_; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  const Example& operator[](std::size_t id) const { return examples_.at(id); }
  const std::vector<Example>& examples() const { return examples_; }

  /// Ids labelled `value` for attribute j, ascending.
  const std::vector<std::size_t>& grouped(std::size_t j, int value) const;
  /// Ids unlabelled for attribute j, ascending.
  const std::vector<std::size_t>& mixed(std::size_t j) const;
  std::size_t grouped_count(std::size_t j) const;
  /// Ids unlabelled for at least one attribute, ascending.
  std::vector<std::size_t> mixed_any() const;

  /// 0 for an empty dataset.
  std::int64_t image_size() const;
  std::int64_t channels() const;

  /// (N,C,H,W) stack of the given ids.
  torch::Tensor stack(std::span<const std::size_t> ids) const;
  torch::Tensor stack_all() const;
  /// (N,) int64 labels of attribute j, -1 where unlabelled.
  torch::Tensor label_tensor(std::span<const std::size_t> ids, std::size_t j) const;

  /// Same images, new labels (one Labels per example).
  SparselyGroupedDataset relabel(std::vector<Labels> labels) const;
  /// Examples restricted to `ids`, in the given order.
  SparselyGroupedDataset subset(std::span<const std::size_t> ids) const;

 private:
  void build_index();

  AttributeSchema schema_;
  std::vector<Example> examples_;
  std::vector<std::vector<std::vector<std::size_t>>> grouped_;  // [j][v] -> ids
  std::vector<std::vector<std::size_t>> mixed_;                 // [j] -> ids
};

/// Keeps exactly `per_group` labels per (attribute, value), chosen uniformly
/// without replacement; every other label is erased. Throws DataError naming
/// the attribute and value when a group is smaller than `per_group`.
SparselyGroupedDataset sparsify(const SparselyGroupedDataset& dataset, std::size_t per_group, std::uint64_t seed);

/// Undersamples every grouped pool of `attribute` to the smallest pool's
/// size. Removed examples keep their image and join the mixed pool; nothing
/// is deleted. Throws DataError if some value has no labelled example.
SparselyGroupedDataset balance_unbalanced(const SparselyGroupedDataset& dataset, std::size_t attribute,
                                          std::uint64_t seed = 0);

/// Value of `attribute` with the fewest labelled examples (lowest value on
/// ties).
int minority_value(const SparselyGroupedDataset& dataset, std::size_t attribute);

}  // namespace sggan
