#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "sggan/eval/experiments.hpp"
#include "sggan/eval/protocol.hpp"

namespace sggan {

/// One grid per attribute: each row is an input followed by its translation
/// to every value. Written as grid_<attribute>.png. Returns the paths.
std::vector<std::filesystem::path> write_translation_grids(const Translator& translator,
                                                           const torch::Tensor& inputs,
                                                           const AttributeSchema& schema,
                                                           const std::filesystem::path& dir);

struct Bar {
  std::string label;
  double value = 0;  // percent, drawn on a 0..100 axis
};

/// Plain bar chart rendered with OpenCV, saved as PNG.
void write_bar_chart(const std::filesystem::path& path, const std::string& title, const std::vector<Bar>& bars);

/// accuracy.png: targeted accuracy per attribute.
std::filesystem::path plot_report(const EvalReport& report, const std::filesystem::path& dir);
/// sweep.png: both translation directions per minority size.
std::filesystem::path plot_sweep(const std::vector<SweepPoint>& points, const std::filesystem::path& dir);
/// ablation.png: targeted accuracy per residual mode and attribute.
std::filesystem::path plot_ablation(const std::vector<AblationRow>& rows, const AttributeSchema& schema,
                                    const std::filesystem::path& dir);

}  // namespace sggan
