#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "sggan/schema.hpp"

namespace sggan {

/// How the decoder output becomes a translated image.
enum class ResidualMode {
  None,      // refine conv over decoder features only
  Original,  // input + tanh(refine conv over features), clamped to [-1, 1]
  Adapted,   // refine conv over concat(features, input)
};

std::string to_string(ResidualMode mode);
ResidualMode residual_mode_from_string(const std::string& text);

struct GeneratorConfig {
  std::int64_t image_size = 128;
  std::int64_t channels = 3;
  AttributeSchema schema;
  std::int64_t base_width = 64;
  std::int64_t residual_blocks = 6;
  ResidualMode residual = ResidualMode::Adapted;

  void validate() const;
};

/// [attribute][value] -> (B,C,H,W) translated batch.
using GeneratorOutputs = std::vector<std::vector<torch::Tensor>>;

/// One-input multi-output generator.
///
///   7x7 s1 conv -> 4x4 s2 conv -> 4x4 s2 conv      (encoder, w, 2w, 4w)
///   residual blocks of one 3x3 s1 conv each         (bottleneck, 4w)
///   4x4 s2 deconv -> 4x4 s2 deconv                  (decoder, 2w, w)
///   one 7x7 s1 conv + tanh per (attribute, value)   (heads)
///
/// Every non-head conv is followed by ReLU then instance norm (per sample,
/// per channel, eps 1e-5, no running statistics). With ResidualMode::Adapted
/// the heads read the decoder features concatenated with the raw input.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(GeneratorConfig config);

  /// Shared trunk output, i.e. what every head consumes: (B, w[+C], H, W).
  torch::Tensor trunk(const torch::Tensor& x);
  /// Head `flat` (see AttributeSchema::head_offset) applied to a trunk output
  /// computed from `x`.
  torch::Tensor head(const torch::Tensor& trunk_out, const torch::Tensor& x, std::size_t flat);

  /// All heads, attribute-major.
  std::vector<torch::Tensor> forward_flat(const torch::Tensor& x);
  GeneratorOutputs forward(const torch::Tensor& x);

  const GeneratorConfig& config() const { return config_; }

 private:
  void check_input(const torch::Tensor& x) const;

  GeneratorConfig config_;
  torch::nn::Sequential encoder_{nullptr};
  torch::nn::ModuleList bottleneck_{nullptr};
  torch::nn::Sequential decoder_{nullptr};
  torch::nn::ModuleList heads_{nullptr};
};
TORCH_MODULE(Generator);

/// Output of head (attribute, value) for a (C,H,W) image or a batch. Throws
/// ConfigError when either index is out of range.
torch::Tensor translate(Generator& generator, const torch::Tensor& x, std::size_t attribute, int value);

/// Zero-mean Gaussian (std 0.02) conv weights, zero biases.
void init_weights(torch::nn::Module& module);

std::int64_t parameter_count(const torch::nn::Module& module);

}  // namespace sggan
