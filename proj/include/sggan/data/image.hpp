#pragma once

#include <cstdint>
#include <filesystem>

#include <torch/torch.h>

namespace sggan {

// Images are float32 tensors laid out (channels, height, width) with values
// in [-1, 1]. Batches add a leading dimension. Bytes map affinely:
// b -> b / 127.5 - 1, so a byte image survives the round trip exactly.

/// uint8 (C,H,W) or (N,C,H,W) -> float in [-1, 1].
torch::Tensor image_from_bytes(const torch::Tensor& bytes);

/// float in [-1, 1] -> uint8, rounding to nearest and clamping.
torch::Tensor image_to_bytes(const torch::Tensor& image);

/// Throws ConfigError unless size is a power of two in [min_size, 128].
void check_image_size(std::int64_t size, std::int64_t min_size = 32);

/// Reads any format OpenCV decodes, center-crops to a square and resizes to
/// size x size. Returns a 3-channel float image. Throws LoadError.
torch::Tensor read_image(const std::filesystem::path& path, std::int64_t size);

/// Writes a (C,H,W) float image losslessly; the format follows the
/// extension (use .png).
void write_image(const std::filesystem::path& path, const torch::Tensor& image);

/// Tiles a (rows, cols) grid of equally sized (C,H,W) images with a pad-pixel
/// white border. Empty cells are allowed as undefined tensors.
torch::Tensor tile_images(const std::vector<std::vector<torch::Tensor>>& cells, std::int64_t pad = 2);

}  // namespace sggan
