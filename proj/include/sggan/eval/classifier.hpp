#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <torch/torch.h>

#include "sggan/data/dataset.hpp"
#include "sggan/schema.hpp"

namespace sggan {

/// Predicts every schema attribute for a batch of images.
class AttributeClassifier {
 public:
  virtual ~AttributeClassifier() = default;
  /// (N,C,H,W) images -> (N, n_attributes) int64 predicted values.
  virtual torch::Tensor predict(const torch::Tensor& images) = 0;
  virtual const AttributeSchema& schema() const = 0;
};

/// Closed-form pixel rules of the synthetic renderers; exact on rendered
/// images. Ties resolve to value 0.
std::vector<int> oracle_classify(const torch::Tensor& image, const AttributeSchema& schema);

class OracleClassifier final : public AttributeClassifier {
 public:
  explicit OracleClassifier(AttributeSchema schema);
  torch::Tensor predict(const torch::Tensor& images) override;
  const AttributeSchema& schema() const override { return schema_; }

 private:
  AttributeSchema schema_;
};

struct ClassifierConfig {
  std::int64_t steps = 2000;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::int64_t base_width = 16;
  std::uint64_t seed = 0;
};

/// Four stride-2 3x3 conv blocks (leaky ReLU), global average pooling, one
/// linear softmax head per attribute.
class EvalClassifierNetImpl : public torch::nn::Module {
 public:
  EvalClassifierNetImpl(const AttributeSchema& schema, std::int64_t channels, std::int64_t base_width);
  std::vector<torch::Tensor> forward(const torch::Tensor& x);

 private:
  torch::nn::Sequential body_{nullptr};
  std::vector<torch::nn::Linear> heads_;
};
TORCH_MODULE(EvalClassifierNet);

class LearnedClassifier final : public AttributeClassifier {
 public:
  LearnedClassifier(AttributeSchema schema, EvalClassifierNet net);
  torch::Tensor predict(const torch::Tensor& images) override;
  const AttributeSchema& schema() const override { return schema_; }
  EvalClassifierNet& net() { return net_; }

 private:
  AttributeSchema schema_;
  EvalClassifierNet net_;
};

struct TrainedClassifier {
  std::shared_ptr<LearnedClassifier> classifier;
  std::vector<double> heldout_accuracy;  // percent, per attribute
};

/// Trains on the labelled cells of `train` (unlabelled cells are masked out
/// of the loss) and reports accuracy on the labelled cells of `heldout`.
/// Deterministic in config.seed. Throws DataError when some attribute has no
/// labelled training example.
TrainedClassifier train_eval_classifier(const SparselyGroupedDataset& train, const SparselyGroupedDataset& heldout,
                                        const ClassifierConfig& config);

/// Percent of labelled cells of attribute j where the classifier agrees.
std::vector<double> classifier_accuracy(AttributeClassifier& classifier, const SparselyGroupedDataset& data);

}  // namespace sggan
