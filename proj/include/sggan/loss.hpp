#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "sggan/data/scheduler.hpp"
#include "sggan/model/discriminator.hpp"
#include "sggan/model/generator.hpp"

namespace sggan {

struct LossWeights {
  double alpha = 10.0;   // reconstruction
  double lambda = 10.0;  // gradient penalty

  void validate() const;
};

// Sign convention: every function here returns a value that its player
// minimizes. Critic maps are reduced by their mean over batch and space.

/// Softmax cross-entropy -log softmax(logits)[label], averaged over the
/// batch. logits (B,m), labels (B,) int64. Throws NumericError on non-finite
/// logits and ConfigError on out-of-range labels.
torch::Tensor d_cls_loss(const torch::Tensor& logits, const torch::Tensor& labels);

/// Same form as d_cls_loss, evaluated on the discriminator's logits for
/// generated images against the head's own target value.
torch::Tensor g_cls_loss(const torch::Tensor& logits_of_fake, const torch::Tensor& targets);

/// Maps a batch to a critic map (B, ...). The per-sample score is the mean
/// of the sample's map.
using CriticFn = std::function<torch::Tensor(const torch::Tensor&)>;

/// Mean over samples of (||grad_xhat score(xhat)|| - 1)^2 with
/// xhat = t * real + (1 - t) * fake, one t ~ U[0,1) per sample drawn from
/// `seed`. The norm runs over all input coordinates of a sample. Unscaled.
/// The returned tensor is differentiable with respect to the critic's
/// parameters.
torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               std::uint64_t seed);
torch::Tensor gradient_penalty(Discriminator& discriminator, const torch::Tensor& real, const torch::Tensor& fake,
                               std::uint64_t seed);

/// One penalty per fake batch, each paired with the same real batch, computed
/// in a single double-backward pass. Per-sample independence of the critic
/// makes this equal to separate gradient_penalty calls with the same draws of
/// t (t is drawn for all fakes at once, fake-major).
std::vector<torch::Tensor> gradient_penalties(const CriticFn& critic, const torch::Tensor& real,
                                              std::span<const torch::Tensor> fakes, std::uint64_t seed);

/// Critic loss: sum_i mean(fake_i) - m * mean(real) + lambda * sum_i penalty_i,
/// with m the number of fake heads. Throws ConfigError when the penalty
/// count differs from the fake count.
torch::Tensor adv_loss_d(const torch::Tensor& critic_real, std::span<const torch::Tensor> critic_fakes,
                         std::span<const torch::Tensor> penalties, double lambda);

/// Generator adversarial loss: -sum_i mean(fake_i).
torch::Tensor adv_loss_g(std::span<const torch::Tensor> critic_fakes);

/// Cross-output reconstruction loss for attribute j: for m = 2,
///   mean|G(G(x)^0)^1 - G(x)^1| + mean|G(G(x)^1)^0 - G(x)^0|.
/// With all_pairs the sum runs over every ordered pair (a, b), a != b, which
/// is the same expression at m = 2. Throws ConfigError when m != 2 and
/// all_pairs is false.
torch::Tensor rec_loss(Generator& generator, const torch::Tensor& x, std::size_t attribute, bool all_pairs = false);
/// Same, reusing first-pass outputs G(x).
torch::Tensor rec_loss(Generator& generator, const GeneratorOutputs& first_pass, std::size_t attribute,
                       bool all_pairs = false);
/// Sum of rec_loss over every attribute, sharing one generator pass for all
/// second-pass inputs.
torch::Tensor rec_loss_all(Generator& generator, const GeneratorOutputs& first_pass, bool all_pairs = false);

struct DiscriminatorLoss {
  torch::Tensor total;    // adv + cls
  torch::Tensor adv;      // adv_loss_d, gradient penalty included
  torch::Tensor cls;      // zero for mixed batches
  torch::Tensor penalty;  // sum of unscaled penalties
  torch::Tensor critic_gap;  // mean(real) - mean over heads of mean(fake), detached
};

/// Discriminator objective for one batch. Grouped batches add d_cls_loss for
/// the batch's attribute only; mixed batches carry the adversarial term
/// alone. Fakes are generated without gradient.
DiscriminatorLoss d_total(const Batch& batch, Generator& generator, Discriminator& discriminator,
                          const LossWeights& weights, std::uint64_t seed);

struct GeneratorLoss {
  torch::Tensor total;  // adv + cls + alpha * rec
  torch::Tensor adv;
  torch::Tensor cls;    // summed over every (attribute, value) head
  torch::Tensor rec;    // summed over attributes, unweighted
};

/// Generator objective for one batch (labels are not used).
GeneratorLoss g_total(const Batch& batch, Generator& generator, Discriminator& discriminator,
                      const LossWeights& weights, bool rec_all_pairs = false);

}  // namespace sggan
