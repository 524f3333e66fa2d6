#include "sggan/loss.hpp"

#include "sggan/errors.hpp"

namespace sggan {

namespace F = torch::nn::functional;

namespace {

void require_finite(const torch::Tensor& t, const char* what) {
  if (!torch::isfinite(t).all().item<bool>()) throw NumericError(std::string("non-finite values in ") + what);
}

torch::Tensor cross_entropy(const torch::Tensor& logits, const torch::Tensor& labels, const char* what) {
  TORCH_CHECK(logits.dim() == 2, what, " expects (B,m) logits");
  TORCH_CHECK(labels.dim() == 1 && labels.size(0) == logits.size(0), what, " expects (B,) labels");
  require_finite(logits, what);
  if (labels.numel() > 0 && (labels.min().item<std::int64_t>() < 0 || labels.max().item<std::int64_t>() >= logits.size(1)))
    throw ConfigError(std::string(what) + ": label out of range for " + std::to_string(logits.size(1)) + " groups");
  return F::cross_entropy(logits, labels.to(torch::kInt64));
}

torch::Tensor per_sample_score(const torch::Tensor& critic_map) { return critic_map.flatten(1).mean(1); }

// Second-pass reconstruction terms for the given attributes, one trunk pass
// over every first-pass output involved.
torch::Tensor reconstruction(Generator& generator, const GeneratorOutputs& first, std::span<const std::size_t> attributes,
                             bool all_pairs) {
  const auto& schema = generator->config().schema;
  std::vector<torch::Tensor> inputs;
  for (auto j : attributes) {
    if (schema.cardinality(j) != 2 && !all_pairs)
      throw ConfigError("reconstruction loss is defined for two groups; attribute '" + schema[j].name +
                        "' has " + std::to_string(schema.cardinality(j)) + " (enable all-pairs to generalize)");
    for (const auto& out : first.at(j)) inputs.push_back(out);
  }
  const auto stacked = torch::cat(inputs, 0);
  const auto trunk = generator->trunk(stacked);
  const auto b = first.at(attributes.front()).front().size(0);

  auto total = torch::zeros({}, stacked.options());
  std::int64_t chunk = 0;
  for (auto j : attributes) {
    const int m = schema.cardinality(j);
    for (int a = 0; a < m; ++a, ++chunk) {
      const auto t = trunk.slice(0, chunk * b, (chunk + 1) * b);
      const auto x = stacked.slice(0, chunk * b, (chunk + 1) * b);
      for (int c = 0; c < m; ++c) {
        if (c == a) continue;
        const auto second = generator->head(t, x, schema.head_offset(j) + c);
        total = total + (second - first[j][c]).abs().mean();
      }
    }
  }
  return total;
}

}  // namespace

void LossWeights::validate() const {
  if (!(alpha >= 0) || !(lambda >= 0)) throw ConfigError("loss weights alpha and lambda must be non-negative");
}

torch::Tensor d_cls_loss(const torch::Tensor& logits, const torch::Tensor& labels) {
  return cross_entropy(logits, labels, "d_cls_loss");
}

torch::Tensor g_cls_loss(const torch::Tensor& logits_of_fake, const torch::Tensor& targets) {
  return cross_entropy(logits_of_fake, targets, "g_cls_loss");
}

std::vector<torch::Tensor> gradient_penalties(const CriticFn& critic, const torch::Tensor& real,
                                              std::span<const torch::Tensor> fakes, std::uint64_t seed) {
  if (fakes.empty()) return {};
  const auto b = real.size(0);
  for (const auto& f : fakes)
    if (f.sizes() != real.sizes()) throw ConfigError("gradient penalty: real and fake shapes differ");

  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  const auto heads = static_cast<std::int64_t>(fakes.size());
  std::vector<int64_t> t_shape{heads * b};
  for (std::int64_t d = 1; d < real.dim(); ++d) t_shape.push_back(1);
  const auto t = torch::rand(t_shape, gen, real.options().requires_grad(false));

  std::vector<torch::Tensor> fake_list(fakes.begin(), fakes.end());
  std::vector<int64_t> reps(real.dim(), 1);
  reps[0] = heads;
  const auto real_rep = real.detach().repeat(reps);
  const auto fake_cat = torch::cat(fake_list, 0).detach();
  auto x_hat = (t * real_rep + (1 - t) * fake_cat).detach().requires_grad_(true);

  const auto scores = per_sample_score(critic(x_hat));
  const auto grad = torch::autograd::grad({scores.sum()}, {x_hat}, {}, /*retain_graph=*/true,
                                          /*create_graph=*/true)[0];
  require_finite(grad, "gradient penalty gradient");
  const auto norms = grad.flatten(1).norm(2, 1);
  const auto per_sample = (norms - 1).pow(2);

  std::vector<torch::Tensor> out;
  out.reserve(fakes.size());
  for (std::int64_t h = 0; h < heads; ++h) out.push_back(per_sample.slice(0, h * b, (h + 1) * b).mean());
  return out;
}

torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               std::uint64_t seed) {
  const torch::Tensor fakes[] = {fake};
  return gradient_penalties(critic, real, fakes, seed).front();
}

torch::Tensor gradient_penalty(Discriminator& discriminator, const torch::Tensor& real, const torch::Tensor& fake,
                               std::uint64_t seed) {
  return gradient_penalty([&](const torch::Tensor& x) { return discriminator->critic(x); }, real, fake, seed);
}

torch::Tensor adv_loss_d(const torch::Tensor& critic_real, std::span<const torch::Tensor> critic_fakes,
                         std::span<const torch::Tensor> penalties, double lambda) {
  if (penalties.size() != critic_fakes.size())
    throw ConfigError("adv_loss_d: " + std::to_string(critic_fakes.size()) + " fake heads but " +
                      std::to_string(penalties.size()) + " penalties");
  auto loss = -static_cast<double>(critic_fakes.size()) * critic_real.mean();
  for (std::size_t i = 0; i < critic_fakes.size(); ++i) loss = loss + critic_fakes[i].mean() + lambda * penalties[i];
  return loss;
}

torch::Tensor adv_loss_g(std::span<const torch::Tensor> critic_fakes) {
  auto loss = torch::zeros({});
  for (const auto& f : critic_fakes) loss = loss - f.mean();
  return loss;
}

torch::Tensor rec_loss(Generator& generator, const GeneratorOutputs& first_pass, std::size_t attribute,
                       bool all_pairs) {
  if (attribute >= generator->config().schema.size()) throw ConfigError("rec_loss: attribute index out of range");
  const std::size_t attrs[] = {attribute};
  return reconstruction(generator, first_pass, attrs, all_pairs);
}

torch::Tensor rec_loss(Generator& generator, const torch::Tensor& x, std::size_t attribute, bool all_pairs) {
  return rec_loss(generator, generator->forward(x), attribute, all_pairs);
}

torch::Tensor rec_loss_all(Generator& generator, const GeneratorOutputs& first_pass, bool all_pairs) {
  std::vector<std::size_t> attrs(generator->config().schema.size());
  for (std::size_t j = 0; j < attrs.size(); ++j) attrs[j] = j;
  return reconstruction(generator, first_pass, attrs, all_pairs);
}

DiscriminatorLoss d_total(const Batch& batch, Generator& generator, Discriminator& discriminator,
                          const LossWeights& weights, std::uint64_t seed) {
  const auto& real = batch.images;
  const auto b = real.size(0);
  std::vector<torch::Tensor> fakes;
  {
    torch::NoGradGuard no_grad;
    fakes = generator->forward_flat(real);
  }
  const auto heads = static_cast<std::int64_t>(fakes.size());

  std::vector<torch::Tensor> all{real};
  all.insert(all.end(), fakes.begin(), fakes.end());
  const auto features = discriminator->trunk(torch::cat(all, 0));
  const auto critic = discriminator->critic_head()(features);

  const auto critic_real = critic.slice(0, 0, b);
  std::vector<torch::Tensor> critic_fakes;
  for (std::int64_t h = 0; h < heads; ++h) critic_fakes.push_back(critic.slice(0, (h + 1) * b, (h + 2) * b));

  const auto penalties =
      gradient_penalties([&](const torch::Tensor& x) { return discriminator->critic(x); }, real, fakes, seed);

  DiscriminatorLoss out;
  out.adv = adv_loss_d(critic_real, critic_fakes, penalties, weights.lambda);
  out.penalty = torch::stack(penalties).sum();
  if (batch.kind == BatchKind::Grouped) {
    const auto j = batch.attribute.value();
    const auto logits = discriminator->cls_head(j)(features.slice(0, 0, b)).flatten(1);
    out.cls = d_cls_loss(logits, batch.labels);
  } else {
    out.cls = torch::zeros({});
  }
  out.total = out.adv + out.cls;
  {
    torch::NoGradGuard no_grad;
    auto fake_mean = torch::zeros({});
    for (const auto& f : critic_fakes) fake_mean = fake_mean + f.mean();
    out.critic_gap = critic_real.mean() - fake_mean / static_cast<double>(heads);
  }
  return out;
}

GeneratorLoss g_total(const Batch& batch, Generator& generator, Discriminator& discriminator,
                      const LossWeights& weights, bool rec_all_pairs) {
  const auto& schema = generator->config().schema;
  const auto first = generator->forward(batch.images);
  const auto b = batch.images.size(0);

  std::vector<torch::Tensor> flat;
  for (const auto& per_attr : first) flat.insert(flat.end(), per_attr.begin(), per_attr.end());
  const auto scored = discriminator->forward(torch::cat(flat, 0));

  std::vector<torch::Tensor> critic_fakes;
  for (std::size_t h = 0; h < flat.size(); ++h) {
    const auto lo = static_cast<std::int64_t>(h) * b;
    critic_fakes.push_back(scored.critic.slice(0, lo, lo + b));
  }

  GeneratorLoss out;
  out.adv = adv_loss_g(critic_fakes);
  out.cls = torch::zeros({});
  for (std::size_t j = 0; j < schema.size(); ++j) {
    for (int v = 0; v < schema.cardinality(j); ++v) {
      const auto lo = static_cast<std::int64_t>(schema.head_offset(j) + v) * b;
      const auto targets = torch::full({b}, v, torch::kInt64);
      out.cls = out.cls + g_cls_loss(scored.logits[j].slice(0, lo, lo + b), targets);
    }
  }
  out.rec = rec_loss_all(generator, first, rec_all_pairs);
  out.total = out.adv + out.cls + weights.alpha * out.rec;
  return out;
}

}  // namespace sggan
