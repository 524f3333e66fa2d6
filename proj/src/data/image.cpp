#include "sggan/data/image.hpp"

#include <algorithm>
#include <bit>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "sggan/errors.hpp"

namespace sggan {

torch::Tensor image_from_bytes(const torch::Tensor& bytes) {
  return bytes.to(torch::kFloat32).div(127.5).sub(1.0);
}

torch::Tensor image_to_bytes(const torch::Tensor& image) {
  return image.detach().add(1.0).mul(127.5).round().clamp(0, 255).to(torch::kUInt8);
}

void check_image_size(std::int64_t size, std::int64_t min_size) {
  if (size < min_size || size > 128 || !std::has_single_bit(static_cast<std::uint64_t>(size)))
    throw ConfigError("image size must be a power of two in [" + std::to_string(min_size) + ", 128], got " +
                      std::to_string(size));
}

torch::Tensor read_image(const std::filesystem::path& path, std::int64_t size) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw LoadError("cannot read image '" + path.string() + "'");
  const int side = std::min(bgr.rows, bgr.cols);
  const cv::Rect crop((bgr.cols - side) / 2, (bgr.rows - side) / 2, side, side);
  cv::Mat square = bgr(crop);
  cv::Mat resized;
  if (side != size) {
    const int interp = side > size ? cv::INTER_AREA : cv::INTER_LINEAR;
    cv::resize(square, resized, cv::Size(static_cast<int>(size), static_cast<int>(size)), 0, 0, interp);
  } else {
    resized = square.clone();
  }
  cv::Mat rgb;
  cv::cvtColor(resized, rgb, cv::COLOR_BGR2RGB);
  auto hwc = torch::from_blob(rgb.data, {size, size, 3}, torch::kUInt8).clone();
  return image_from_bytes(hwc.permute({2, 0, 1}).contiguous());
}

void write_image(const std::filesystem::path& path, const torch::Tensor& image) {
  TORCH_CHECK(image.dim() == 3, "write_image expects (C,H,W)");
  auto hwc = image_to_bytes(image).permute({1, 2, 0}).contiguous();
  const int h = static_cast<int>(hwc.size(0));
  const int w = static_cast<int>(hwc.size(1));
  const int c = static_cast<int>(hwc.size(2));
  cv::Mat mat(h, w, CV_8UC(c), hwc.data_ptr<std::uint8_t>());
  cv::Mat out;
  if (c == 3)
    cv::cvtColor(mat, out, cv::COLOR_RGB2BGR);
  else
    out = mat;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), out)) throw std::runtime_error("cannot write image '" + path.string() + "'");
}

torch::Tensor tile_images(const std::vector<std::vector<torch::Tensor>>& cells, std::int64_t pad) {
  TORCH_CHECK(!cells.empty(), "tile_images needs at least one row");
  torch::Tensor proto;
  std::size_t cols = 0;
  for (const auto& row : cells) {
    cols = std::max(cols, row.size());
    for (const auto& c : row)
      if (c.defined() && !proto.defined()) proto = c;
  }
  TORCH_CHECK(proto.defined(), "tile_images needs at least one image");
  const auto ch = proto.size(0), h = proto.size(1), w = proto.size(2);
  const auto rows = static_cast<std::int64_t>(cells.size());
  auto canvas = torch::ones({ch, rows * (h + pad) + pad, static_cast<std::int64_t>(cols) * (w + pad) + pad});
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      if (!cells[r][c].defined()) continue;
      const auto y0 = pad + r * (h + pad);
      const auto x0 = pad + static_cast<std::int64_t>(c) * (w + pad);
      canvas.slice(1, y0, y0 + h).slice(2, x0, x0 + w).copy_(cells[r][c].detach());
    }
  }
  return canvas;
}

}  // namespace sggan
