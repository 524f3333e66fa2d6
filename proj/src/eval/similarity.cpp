#include "sggan/eval/similarity.hpp"

#include <algorithm>

#include "sggan/errors.hpp"

namespace sggan {

double structural_similarity(const torch::Tensor& x, const torch::Tensor& y, std::int64_t window) {
  if (x.sizes() != y.sizes() || x.dim() != 3) throw ConfigError("structural_similarity expects two (C,H,W) images of one shape");
  if (window < 2 || x.size(1) < window || x.size(2) < window)
    throw ConfigError("structural_similarity window larger than the image");
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const auto a = x.detach().to(torch::kFloat64).add(1.0).mul(0.5).unsqueeze(0);
  const auto b = y.detach().to(torch::kFloat64).add(1.0).mul(0.5).unsqueeze(0);
  namespace F = torch::nn::functional;
  const auto pool = [&](const torch::Tensor& t) { return F::avg_pool2d(t, F::AvgPool2dFuncOptions(window).stride(1)); };
  const double n = static_cast<double>(window * window);
  const double unbias = n / (n - 1.0);

  const auto mu_a = pool(a), mu_b = pool(b);
  const auto var_a = (pool(a * a) - mu_a * mu_a) * unbias;
  const auto var_b = (pool(b * b) - mu_b * mu_b) * unbias;
  const auto cov = (pool(a * b) - mu_a * mu_b) * unbias;
  const auto ssim = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
  return std::clamp(ssim.mean().item<double>(), 0.0, 1.0);
}

double background_similarity(const torch::Tensor& x, const torch::Tensor& y) {
  const auto crop = [](const torch::Tensor& t) {
    return t.slice(1, 0, kBackgroundCrop).slice(2, 0, kBackgroundCrop);
  };
  return structural_similarity(crop(x), crop(y), 8);
}

}  // namespace sggan
