#include "sggan/eval/plots.hpp"

#include <algorithm>
#include <cstdio>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "sggan/data/image.hpp"
#include "sggan/errors.hpp"

namespace sggan {

namespace fs = std::filesystem;

std::vector<fs::path> write_translation_grids(const Translator& translator, const torch::Tensor& inputs,
                                              const AttributeSchema& schema, const fs::path& dir) {
  if (inputs.dim() != 4 || inputs.size(0) == 0) throw ConfigError("translation grid needs a non-empty batch");
  fs::create_directories(dir);
  const auto outputs = translator(inputs);
  std::vector<fs::path> written;
  for (std::size_t j = 0; j < schema.size(); ++j) {
    std::vector<std::vector<torch::Tensor>> cells;
    for (std::int64_t i = 0; i < inputs.size(0); ++i) {
      std::vector<torch::Tensor> row{inputs[i]};
      for (const auto& head : outputs.at(j)) row.push_back(head[i]);
      cells.push_back(std::move(row));
    }
    const auto path = dir / ("grid_" + schema[j].name + ".png");
    write_image(path, tile_images(cells));
    written.push_back(path);
  }
  return written;
}

void write_bar_chart(const fs::path& path, const std::string& title, const std::vector<Bar>& bars) {
  constexpr int kBarWidth = 36, kGap = 14, kLeft = 50, kTop = 40, kPlotHeight = 200, kBottom = 70;
  const int n = static_cast<int>(bars.size());
  const int width = std::max(320, kLeft + n * (kBarWidth + kGap) + kGap);
  const int height = kTop + kPlotHeight + kBottom;
  cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));
  const auto font = cv::FONT_HERSHEY_SIMPLEX;
  cv::putText(canvas, title, {10, 22}, font, 0.5, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);

  const int base = kTop + kPlotHeight;
  for (int tick = 0; tick <= 100; tick += 25) {
    const int y = base - tick * kPlotHeight / 100;
    cv::line(canvas, {kLeft - 4, y}, {width - 5, y}, cv::Scalar(220, 220, 220), 1);
    cv::putText(canvas, std::to_string(tick), {8, y + 4}, font, 0.35, cv::Scalar(80, 80, 80), 1, cv::LINE_AA);
  }
  cv::line(canvas, {kLeft, kTop}, {kLeft, base}, cv::Scalar(0, 0, 0), 1);

  for (int i = 0; i < n; ++i) {
    const double v = std::clamp(bars[i].value, 0.0, 100.0);
    const int x0 = kLeft + kGap + i * (kBarWidth + kGap);
    const int h = static_cast<int>(v * kPlotHeight / 100.0);
    cv::rectangle(canvas, {x0, base - h}, {x0 + kBarWidth, base}, cv::Scalar(180, 110, 40), cv::FILLED);
    char value[16];
    std::snprintf(value, sizeof value, "%.1f", bars[i].value);
    cv::putText(canvas, value, {x0, base - h - 4}, font, 0.33, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    const auto& label = bars[i].label;
    cv::putText(canvas, label.substr(0, 8), {x0, base + 16}, font, 0.33, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
    if (label.size() > 8)
      cv::putText(canvas, label.substr(8, 8), {x0, base + 30}, font, 0.33, cv::Scalar(0, 0, 0), 1, cv::LINE_AA);
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), canvas)) throw std::runtime_error("cannot write plot '" + path.string() + "'");
}

fs::path plot_report(const EvalReport& report, const fs::path& dir) {
  std::vector<Bar> bars;
  for (const auto& r : report.rows) bars.push_back({report.schema[r.translated].name, r.targeted()});
  const auto path = dir / "accuracy.png";
  write_bar_chart(path, "targeted accuracy: " + report.condition, bars);
  return path;
}

fs::path plot_sweep(const std::vector<SweepPoint>& points, const fs::path& dir) {
  std::vector<Bar> bars;
  for (const auto& p : points) {
    bars.push_back({std::to_string(p.mi_size) + " mi>ma", p.mi_to_ma});
    bars.push_back({std::to_string(p.mi_size) + " ma>mi", p.ma_to_mi});
  }
  const auto path = dir / "sweep.png";
  write_bar_chart(path, "translation accuracy by minority size", bars);
  return path;
}

fs::path plot_ablation(const std::vector<AblationRow>& rows, const AttributeSchema& schema, const fs::path& dir) {
  std::vector<Bar> bars;
  for (const auto& r : rows)
    for (std::size_t j = 0; j < r.targeted.size() && j < schema.size(); ++j)
      bars.push_back({to_string(r.mode) + " " + schema[j].name, r.targeted[j]});
  const auto path = dir / "ablation.png";
  write_bar_chart(path, "targeted accuracy by residual mode", bars);
  return path;
}

}  // namespace sggan
