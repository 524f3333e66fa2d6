#pragma once

#include <cstdint>

#include <torch/torch.h>

namespace sggan {

/// Single-scale structural similarity of two (C,H,W) images in [-1, 1],
/// using a uniform window x window sliding kernel with unbiased local
/// statistics, C1 = (0.01)^2 and C2 = (0.03)^2 on the [0, 1] rescaled data.
/// Averaged over window positions and channels, clamped to [0, 1].
double structural_similarity(const torch::Tensor& x, const torch::Tensor& y, std::int64_t window = 8);

/// Side of the top-left background crop.
inline constexpr std::int64_t kBackgroundCrop = 10;

/// structural_similarity over the 10x10 top-left corner with an 8x8 window.
/// Multi-scale SSIM needs far more than 10 px per side, so the corner is
/// scored at one scale.
double background_similarity(const torch::Tensor& x, const torch::Tensor& y);

}  // namespace sggan
