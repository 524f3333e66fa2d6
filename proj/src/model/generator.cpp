#include "sggan/model/generator.hpp"

#include "sggan/errors.hpp"

namespace sggan {

namespace nn = torch::nn;

namespace {

nn::InstanceNorm2d instance_norm(std::int64_t channels) {
  return nn::InstanceNorm2d(nn::InstanceNorm2dOptions(channels).eps(1e-5).affine(false).track_running_stats(false));
}

void conv_block(nn::Sequential& seq, std::int64_t in, std::int64_t out, std::int64_t kernel, std::int64_t stride,
                std::int64_t padding) {
  seq->push_back(nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(padding)));
  seq->push_back(nn::ReLU());
  seq->push_back(instance_norm(out));
}

void deconv_block(nn::Sequential& seq, std::int64_t in, std::int64_t out) {
  seq->push_back(nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1)));
  seq->push_back(nn::ReLU());
  seq->push_back(instance_norm(out));
}

// x + IN(ReLU(conv3x3(x)))
class ResidualBlockImpl : public nn::Module {
 public:
  explicit ResidualBlockImpl(std::int64_t channels)
      : conv_(register_module("conv", nn::Conv2d(nn::Conv2dOptions(channels, channels, 3).padding(1)))),
        norm_(register_module("norm", instance_norm(channels))) {}

  torch::Tensor forward(const torch::Tensor& x) { return x + norm_(torch::relu(conv_(x))); }

 private:
  nn::Conv2d conv_;
  nn::InstanceNorm2d norm_;
};
TORCH_MODULE(ResidualBlock);

}  // namespace

std::string to_string(ResidualMode mode) {
  switch (mode) {
    case ResidualMode::None: return "none";
    case ResidualMode::Original: return "original";
    case ResidualMode::Adapted: return "adapted";
  }
  return "adapted";
}

ResidualMode residual_mode_from_string(const std::string& text) {
  if (text == "none") return ResidualMode::None;
  if (text == "original") return ResidualMode::Original;
  if (text == "adapted") return ResidualMode::Adapted;
  throw ConfigError("unknown residual mode '" + text + "' (expected none, original or adapted)");
}

void GeneratorConfig::validate() const {
  if (image_size < 4 || image_size % 4 != 0)
    throw ConfigError("generator image size must be a positive multiple of 4, got " + std::to_string(image_size));
  if (channels < 1) throw ConfigError("generator needs at least one channel");
  if (base_width < 1) throw ConfigError("generator base width must be positive");
  if (residual_blocks < 0) throw ConfigError("residual block count must be non-negative");
  if (schema.empty()) throw ConfigError("generator needs a non-empty attribute schema");
}

GeneratorImpl::GeneratorImpl(GeneratorConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto w = config_.base_width;
  const auto c = config_.channels;

  nn::Sequential encoder;
  conv_block(encoder, c, w, 7, 1, 3);
  conv_block(encoder, w, 2 * w, 4, 2, 1);
  conv_block(encoder, 2 * w, 4 * w, 4, 2, 1);
  encoder_ = register_module("encoder", encoder);

  nn::ModuleList bottleneck;
  for (std::int64_t i = 0; i < config_.residual_blocks; ++i) bottleneck->push_back(ResidualBlock(4 * w));
  bottleneck_ = register_module("bottleneck", bottleneck);

  nn::Sequential decoder;
  deconv_block(decoder, 4 * w, 2 * w);
  deconv_block(decoder, 2 * w, w);
  decoder_ = register_module("decoder", decoder);

  const auto head_in = config_.residual == ResidualMode::Adapted ? w + c : w;
  nn::ModuleList heads;
  for (std::size_t h = 0; h < config_.schema.total_heads(); ++h)
    heads->push_back(nn::Conv2d(nn::Conv2dOptions(head_in, c, 7).padding(3)));
  heads_ = register_module("heads", heads);

  init_weights(*this);
}

void GeneratorImpl::check_input(const torch::Tensor& x) const {
  if (x.dim() != 4 || x.size(1) != config_.channels || x.size(2) != config_.image_size ||
      x.size(3) != config_.image_size)
    throw ConfigError("generator expects (B," + std::to_string(config_.channels) + "," +
                      std::to_string(config_.image_size) + "," + std::to_string(config_.image_size) +
                      ") input, got " + c10::str(x.sizes()));
}

torch::Tensor GeneratorImpl::trunk(const torch::Tensor& x) {
  check_input(x);
  auto h = encoder_->forward(x);
  for (const auto& block : *bottleneck_) h = block->as<ResidualBlockImpl>()->forward(h);
  h = decoder_->forward(h);
  if (config_.residual == ResidualMode::Adapted) h = torch::cat({h, x}, 1);
  return h;
}

torch::Tensor GeneratorImpl::head(const torch::Tensor& trunk_out, const torch::Tensor& x, std::size_t flat) {
  auto out = torch::tanh(heads_[flat]->as<nn::Conv2dImpl>()->forward(trunk_out));
  if (config_.residual == ResidualMode::Original) out = torch::clamp(x + out, -1.0, 1.0);
  return out;
}

std::vector<torch::Tensor> GeneratorImpl::forward_flat(const torch::Tensor& x) {
  const auto t = trunk(x);
  std::vector<torch::Tensor> out;
  out.reserve(heads_->size());
  for (std::size_t h = 0; h < heads_->size(); ++h) out.push_back(head(t, x, h));
  return out;
}

GeneratorOutputs GeneratorImpl::forward(const torch::Tensor& x) {
  auto flat = forward_flat(x);
  GeneratorOutputs out(config_.schema.size());
  std::size_t h = 0;
  for (std::size_t j = 0; j < config_.schema.size(); ++j)
    for (int v = 0; v < config_.schema.cardinality(j); ++v) out[j].push_back(std::move(flat[h++]));
  return out;
}

torch::Tensor translate(Generator& generator, const torch::Tensor& x, std::size_t attribute, int value) {
  const auto& schema = generator->config().schema;
  if (attribute >= schema.size())
    throw ConfigError("attribute index " + std::to_string(attribute) + " out of range for schema " + schema.to_string());
  if (value < 0 || value >= schema.cardinality(attribute))
    throw ConfigError("target value " + std::to_string(value) + " out of range for attribute '" +
                      schema[attribute].name + "'");
  const bool single = x.dim() == 3;
  const auto batch = single ? x.unsqueeze(0) : x;
  auto out = generator->head(generator->trunk(batch), batch, schema.head_offset(attribute) + value);
  return single ? out.squeeze(0) : out;
}

void init_weights(nn::Module& module) {
  torch::NoGradGuard no_grad;
  for (auto& m : module.modules(/*include_self=*/false)) {
    auto init = [](torch::Tensor& weight, torch::Tensor& bias) {
      weight.normal_(0.0, 0.02);
      if (bias.defined()) bias.zero_();
    };
    if (auto* conv = m->as<nn::Conv2dImpl>())
      init(conv->weight, conv->bias);
    else if (auto* deconv = m->as<nn::ConvTranspose2dImpl>())
      init(deconv->weight, deconv->bias);
  }
}

std::int64_t parameter_count(const nn::Module& module) {
  std::int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

}  // namespace sggan
