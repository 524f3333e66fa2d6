#include "sggan/model/discriminator.hpp"

#include <algorithm>
#include <array>
#include <bit>

#include "sggan/errors.hpp"
#include "sggan/model/generator.hpp"

namespace sggan {

namespace nn = torch::nn;

namespace {
constexpr std::array<std::int64_t, 6> kWidthMultiplier{1, 2, 4, 8, 8, 16};
}

std::int64_t DiscriminatorConfig::resolved_depth() const {
  if (depth) return *depth;
  const auto log2 = static_cast<std::int64_t>(std::bit_width(static_cast<std::uint64_t>(image_size))) - 1;
  return std::clamp<std::int64_t>(log2 - 1, 3, 6);
}

std::int64_t DiscriminatorConfig::trunk_size() const {
  std::int64_t s = image_size;
  for (std::int64_t i = 0; i < resolved_depth(); ++i) s = (s + 1) / 2;
  return s;
}

void DiscriminatorConfig::validate() const {
  if (image_size < 1) throw ConfigError("discriminator image size must be positive");
  if (channels < 1) throw ConfigError("discriminator needs at least one channel");
  if (base_width < 1) throw ConfigError("discriminator base width must be positive");
  if (schema.empty()) throw ConfigError("discriminator needs a non-empty attribute schema");
  const auto d = resolved_depth();
  if (d < 1 || d > static_cast<std::int64_t>(kWidthMultiplier.size()))
    throw ConfigError("discriminator depth must be in [1, 6], got " + std::to_string(d));
  if (image_size < (std::int64_t{1} << d))
    throw ConfigError("discriminator depth " + std::to_string(d) + " reduces a " + std::to_string(image_size) +
                      " px input below 1x1; lower the depth");
  if (leaky_slope < 0) throw ConfigError("leaky slope must be non-negative");
}

DiscriminatorImpl::DiscriminatorImpl(DiscriminatorConfig config) : config_(std::move(config)) {
  config_.validate();
  nn::Sequential trunk;
  std::int64_t in = config_.channels;
  for (std::int64_t i = 0; i < config_.resolved_depth(); ++i) {
    const auto out = config_.base_width * kWidthMultiplier[i];
    trunk->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, 5).stride(2).padding(2)));
    trunk->push_back(nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(config_.leaky_slope)));
    in = out;
  }
  trunk_ = register_module("trunk", trunk);
  critic_head_ = register_module("critic", nn::Conv2d(nn::Conv2dOptions(in, 1, 3).padding(1)));
  const auto k = config_.trunk_size();
  for (std::size_t j = 0; j < config_.schema.size(); ++j)
    cls_heads_.push_back(register_module("cls" + std::to_string(j),
                                         nn::Conv2d(nn::Conv2dOptions(in, config_.schema.cardinality(j), k))));
  init_weights(*this);
}

torch::Tensor DiscriminatorImpl::trunk(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != config_.channels || x.size(2) != config_.image_size ||
      x.size(3) != config_.image_size)
    throw ConfigError("discriminator expects (B," + std::to_string(config_.channels) + "," +
                      std::to_string(config_.image_size) + "," + std::to_string(config_.image_size) +
                      ") input, got " + c10::str(x.sizes()));
  return trunk_->forward(x);
}

torch::Tensor DiscriminatorImpl::critic(const torch::Tensor& x) { return critic_head_(trunk(x)); }

DiscriminatorOutputs DiscriminatorImpl::forward(const torch::Tensor& x) {
  const auto features = trunk(x);
  DiscriminatorOutputs out;
  out.critic = critic_head_(features);
  for (auto& head : cls_heads_) out.logits.push_back(head(features).flatten(1));
  return out;
}

nn::Conv2d& DiscriminatorImpl::cls_head(std::size_t attribute) { return cls_heads_.at(attribute); }

}  // namespace sggan
