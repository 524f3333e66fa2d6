#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "sggan/data/dataset.hpp"
#include "sggan/data/synth.hpp"

namespace sggan::test {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("sggan_test_" + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

/// Rendered synthetic examples, or zero images with random labels when
/// pixels are not needed.
inline SparselyGroupedDataset tiny_dataset(std::size_t count, const std::string& schema, std::uint64_t seed,
                                           bool pixels = true) {
  const auto s = AttributeSchema::parse(schema);
  if (pixels) {
    SynthParams p;
    p.count = count;
    p.seed = seed;
    p.schema = s;
    return synth_generate(p);
  }
  std::mt19937_64 rng(seed);
  std::vector<Example> ex;
  const auto img = torch::zeros({3, 32, 32});
  for (std::size_t i = 0; i < count; ++i) {
    Labels l;
    for (const auto& a : s) l.push_back(static_cast<int>(rng() % static_cast<unsigned>(a.cardinality)));
    ex.push_back({img, l});
  }
  return SparselyGroupedDataset(s, std::move(ex));
}

}  // namespace sggan::test
