#include "sggan/eval/classifier.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "sggan/data/synth.hpp"
#include "sggan/errors.hpp"

namespace sggan {

namespace nn = torch::nn;

std::vector<int> oracle_classify(const torch::Tensor& image, const AttributeSchema& schema) {
  return classify_rendered(image, schema);
}

OracleClassifier::OracleClassifier(AttributeSchema schema) : schema_(std::move(schema)) {
  for (const auto& a : schema_)
    if (!synth_max_cardinality(a.name)) throw ConfigError("oracle has no rule for attribute '" + a.name + "'");
}

torch::Tensor OracleClassifier::predict(const torch::Tensor& images) {
  const auto n = images.size(0);
  auto out = torch::empty({n, static_cast<std::int64_t>(schema_.size())}, torch::kInt64);
  auto acc = out.accessor<std::int64_t, 2>();
  for (std::int64_t i = 0; i < n; ++i) {
    const auto labels = classify_rendered(images[i], schema_);
    for (std::size_t j = 0; j < labels.size(); ++j) acc[i][j] = labels[j];
  }
  return out;
}

EvalClassifierNetImpl::EvalClassifierNetImpl(const AttributeSchema& schema, std::int64_t channels,
                                             std::int64_t base_width) {
  nn::Sequential body;
  std::int64_t in = channels;
  for (int block = 0; block < 4; ++block) {
    const auto out = base_width << block;
    body->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 3).stride(2).padding(1)));
    body->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)));
    in = out;
  }
  body_ = register_module("body", body);
  for (std::size_t j = 0; j < schema.size(); ++j)
    heads_.push_back(register_module("head" + std::to_string(j), nn::Linear(in, schema.cardinality(j))));
}

std::vector<torch::Tensor> EvalClassifierNetImpl::forward(const torch::Tensor& x) {
  const auto pooled = body_->forward(x).mean({2, 3});
  std::vector<torch::Tensor> logits;
  for (auto& h : heads_) logits.push_back(h(pooled));
  return logits;
}

LearnedClassifier::LearnedClassifier(AttributeSchema schema, EvalClassifierNet net)
    : schema_(std::move(schema)), net_(std::move(net)) {}

torch::Tensor LearnedClassifier::predict(const torch::Tensor& images) {
  torch::NoGradGuard no_grad;
  const auto logits = net_->forward(images);
  std::vector<torch::Tensor> preds;
  for (const auto& l : logits) preds.push_back(l.argmax(1));
  return torch::stack(preds, 1);
}

TrainedClassifier train_eval_classifier(const SparselyGroupedDataset& train, const SparselyGroupedDataset& heldout,
                                        const ClassifierConfig& config) {
  const auto& schema = train.schema();
  if (train.empty()) throw DataError("evaluation classifier needs training data");
  for (std::size_t j = 0; j < schema.size(); ++j)
    if (train.grouped_count(j) == 0)
      throw DataError("evaluation classifier: attribute '" + schema[j].name + "' has no labelled training examples");

  torch::manual_seed(config.seed);
  EvalClassifierNet net(schema, train.channels(), config.base_width);
  torch::optim::Adam opt(net->parameters(), torch::optim::AdamOptions(config.lr));

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t cursor = 0;

  for (std::int64_t step = 0; step < config.steps; ++step) {
    std::vector<std::size_t> ids;
    for (std::size_t k = 0; k < config.batch_size; ++k) {
      if (cursor == order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      ids.push_back(order[cursor++]);
    }
    const auto images = train.stack(ids);
    const auto logits = net->forward(images);
    auto loss = torch::zeros({});
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto labels = train.label_tensor(ids, j);
      if ((labels >= 0).any().item<bool>())
        loss = loss + torch::nn::functional::cross_entropy(
                          logits[j], labels, torch::nn::functional::CrossEntropyFuncOptions().ignore_index(-1));
    }
    opt.zero_grad();
    loss.backward();
    opt.step();
  }

  TrainedClassifier out;
  out.classifier = std::make_shared<LearnedClassifier>(schema, net);
  out.heldout_accuracy = classifier_accuracy(*out.classifier, heldout);
  return out;
}

std::vector<double> classifier_accuracy(AttributeClassifier& classifier, const SparselyGroupedDataset& data) {
  const auto& schema = classifier.schema();
  std::vector<double> correct(schema.size(), 0), total(schema.size(), 0);
  constexpr std::size_t kChunk = 100;
  for (std::size_t lo = 0; lo < data.size(); lo += kChunk) {
    std::vector<std::size_t> ids;
    for (std::size_t id = lo; id < std::min(data.size(), lo + kChunk); ++id) ids.push_back(id);
    const auto pred = classifier.predict(data.stack(ids));
    auto acc = pred.accessor<std::int64_t, 2>();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (std::size_t j = 0; j < schema.size(); ++j) {
        const auto& l = data[ids[i]].labels[j];
        if (!l) continue;
        total[j] += 1;
        if (acc[static_cast<std::int64_t>(i)][static_cast<std::int64_t>(j)] == *l) correct[j] += 1;
      }
    }
  }
  std::vector<double> out(schema.size(), 0.0);
  for (std::size_t j = 0; j < schema.size(); ++j) out[j] = total[j] > 0 ? 100.0 * correct[j] / total[j] : 0.0;
  return out;
}

}  // namespace sggan
