#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <torch/torch.h>

#include "sggan/schema.hpp"

namespace sggan {

struct DiscriminatorConfig {
  std::int64_t image_size = 128;
  std::int64_t channels = 3;
  AttributeSchema schema;
  std::int64_t base_width = 64;
  /// Number of 5x5 stride-2 trunk convs. Defaults to log2(image_size) - 1
  /// clamped to [3, 6], which is 6 at 128 px and 4 at 32 px.
  std::optional<std::int64_t> depth;
  double leaky_slope = 0.2;

  std::int64_t resolved_depth() const;
  /// Spatial side of the trunk output, image_size / 2^depth (rounded up).
  std::int64_t trunk_size() const;
  void validate() const;
};

struct DiscriminatorOutputs {
  torch::Tensor critic;              // (B,1,s,s), unbounded
  std::vector<torch::Tensor> logits;  // per attribute, (B,m_j), unnormalized
};

/// Multi-task patch discriminator: an unnormalized leaky-ReLU trunk with a
/// 3x3 critic head and one valid-padding classification head per attribute
/// whose kernel covers the whole trunk output.
///
/// Trunk widths follow 64,128,256,512,512,1024 scaled by base_width / 64.
class DiscriminatorImpl : public torch::nn::Module {
 public:
  explicit DiscriminatorImpl(DiscriminatorConfig config);

  DiscriminatorOutputs forward(const torch::Tensor& x);
  /// Critic head only.
  torch::Tensor critic(const torch::Tensor& x);
  torch::Tensor trunk(const torch::Tensor& x);

  torch::nn::Conv2d& critic_head() { return critic_head_; }
  torch::nn::Conv2d& cls_head(std::size_t attribute);
  std::size_t cls_head_count() const { return cls_heads_.size(); }

  const DiscriminatorConfig& config() const { return config_; }

 private:
  DiscriminatorConfig config_;
  torch::nn::Sequential trunk_{nullptr};
  torch::nn::Conv2d critic_head_{nullptr};
  std::vector<torch::nn::Conv2d> cls_heads_;
};
TORCH_MODULE(Discriminator);

}  // namespace sggan
