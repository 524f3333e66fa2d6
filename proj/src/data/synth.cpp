#include "sggan/data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "sggan/data/image.hpp"
#include "sggan/errors.hpp"

namespace sggan {

namespace {

// Bands are shifted by +-kStripeShift so stripes leave the mean brightness alone.
constexpr int kStripeShift = 48;
// Light-minus-dark band contrast needed to call a background striped.
constexpr double kStripeThreshold = kStripeShift;
constexpr double kPaleMinThreshold = 90.0;
constexpr double kPaleChromaThreshold = 40.0;

// Dominant channel for each color value: red, blue, green.
constexpr std::array<int, 3> kHueChannel{0, 2, 1};

struct Registered {
  const char* name;
  int max_cardinality;
};
constexpr std::array<Registered, 3> kRegistry{{{"color", 3}, {"stripe", 2}, {"pale", 2}}};

struct Scene {
  int color = 0;
  int color_levels = 2;
  bool stripe = false;
  bool pale = false;
};

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
  return std::mt19937_64(seq);
}

int stripe_band(std::int64_t size) { return static_cast<int>(std::max<std::int64_t>(1, size / 4)); }
// Width of the border columns the stripe rule reads; they never touch the disc.
std::int64_t rule_columns(std::int64_t size) { return std::max<std::int64_t>(1, size / 8); }
bool is_dark_band(std::int64_t y, int band) { return (y / band) % 2 == 1; }

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Renders one scene as (3,H,W) bytes.
torch::Tensor render(const Scene& scene, std::int64_t size, std::mt19937_64& rng) {
  const int s = static_cast<int>(size);
  std::array<int, 3> tint{};
  for (auto& t : tint) t = uniform_int(rng, 90, 165);
  const int gx = uniform_int(rng, -40, 40);
  const int gy = uniform_int(rng, -40, 40);
  const double radius = std::uniform_real_distribution<double>(0.22, 0.32)(rng) * s;

  std::array<int, 3> disc{};
  for (auto& d : disc) d = uniform_int(rng, 0, 50);
  disc[kHueChannel[scene.color]] = uniform_int(rng, 190, 255);
  if (scene.pale)
    for (auto& d : disc) d += (255 - d) / 2;

  auto bytes = torch::empty({3, size, size}, torch::kUInt8);
  auto acc = bytes.accessor<std::uint8_t, 3>();
  const double center = (s - 1) / 2.0;
  const int band = stripe_band(s);
  for (int y = 0; y < s; ++y) {
    const int stripe = scene.stripe ? (is_dark_band(y, band) ? -kStripeShift : kStripeShift) : 0;
    const int ramp = static_cast<int>(std::lround(gy * (y - center) / (s - 1)));
    for (int x = 0; x < s; ++x) {
      const double dx = x - center, dy = y - center;
      const bool in_disc = dx * dx + dy * dy <= radius * radius;
      for (int c = 0; c < 3; ++c) {
        int v;
        if (in_disc) {
          v = disc[c];
        } else {
          v = tint[c] + ramp + stripe + static_cast<int>(std::lround(gx * (x - center) / (s - 1)));
        }
        acc[c][y][x] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
      }
    }
  }
  return bytes;
}

std::vector<int> draw_labels(std::mt19937_64& rng, std::size_t count, const std::vector<double>& probs,
                             MarginalMode mode) {
  std::vector<int> labels(count, 0);
  if (mode == MarginalMode::Sampled) {
    std::discrete_distribution<int> dist(probs.begin(), probs.end());
    for (auto& l : labels) l = dist(rng);
    return labels;
  }
  std::size_t cursor = 0;
  for (std::size_t v = 1; v < probs.size(); ++v) {
    const auto n = static_cast<std::size_t>(std::floor(probs[v] * static_cast<double>(count) + 1e-9));
    for (std::size_t k = 0; k < n && cursor < count; ++k) labels[cursor++] = static_cast<int>(v);
  }
  std::shuffle(labels.begin(), labels.end(), rng);
  return labels;
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

}  // namespace

void SynthParams::validate() const {
  check_image_size(image_size);
  if (count == 0) throw ConfigError("synthetic corpus count must be positive");
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto max_m = synth_max_cardinality(schema[j].name);
    if (!max_m) throw ConfigError("no synthetic renderer for attribute '" + schema[j].name + "'");
    if (schema.cardinality(j) > *max_m)
      throw ConfigError("synthetic attribute '" + schema[j].name + "' supports at most " + std::to_string(*max_m) +
                        " values");
  }
  if (!marginals.empty()) {
    if (marginals.size() != schema.size()) throw ConfigError("marginals must list one entry per attribute");
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto& p = marginals[j];
      if (p.empty()) continue;
      if (p.size() != static_cast<std::size_t>(schema.cardinality(j)))
        throw ConfigError("marginal for '" + schema[j].name + "' needs " + std::to_string(schema.cardinality(j)) +
                          " probabilities");
      double total = 0;
      for (double q : p) {
        if (!(q >= 0)) throw ConfigError("marginal probabilities must be non-negative");
        total += q;
      }
      if (std::abs(total - 1.0) > 1e-6) throw ConfigError("marginal for '" + schema[j].name + "' must sum to 1");
    }
  }
}

std::vector<std::string> synth_attribute_names() {
  std::vector<std::string> names;
  for (const auto& r : kRegistry) names.emplace_back(r.name);
  return names;
}

std::optional<int> synth_max_cardinality(const std::string& name) {
  for (const auto& r : kRegistry)
    if (name == r.name) return r.max_cardinality;
  return std::nullopt;
}

SparselyGroupedDataset synth_generate(const SynthParams& params) {
  params.validate();
  const auto& schema = params.schema;

  std::vector<std::vector<int>> per_attribute(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    std::vector<double> probs(schema.cardinality(j), 1.0 / schema.cardinality(j));
    if (!params.marginals.empty() && !params.marginals[j].empty()) probs = params.marginals[j];
    auto rng = stream_rng(params.seed, 0x1abe1'0000ULL + j);
    per_attribute[j] = draw_labels(rng, params.count, probs, params.mode);
  }

  const auto color_j = schema.index_of("color");
  const auto stripe_j = schema.index_of("stripe");
  const auto pale_j = schema.index_of("pale");

  std::vector<Example> examples;
  examples.reserve(params.count);
  for (std::size_t i = 0; i < params.count; ++i) {
    auto rng = stream_rng(params.seed, i + 1);
    Scene scene;
    scene.color_levels = color_j ? schema.cardinality(*color_j) : 2;
    scene.color = color_j ? per_attribute[*color_j][i] : uniform_int(rng, 0, 1);
    scene.stripe = stripe_j ? per_attribute[*stripe_j][i] == 1 : uniform_int(rng, 0, 1) == 1;
    scene.pale = pale_j ? per_attribute[*pale_j][i] == 1 : uniform_int(rng, 0, 1) == 1;

    Labels labels(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) labels[j] = per_attribute[j][i];
    examples.push_back({image_from_bytes(render(scene, params.image_size, rng)), std::move(labels)});
  }
  return SparselyGroupedDataset(schema, std::move(examples));
}

std::vector<int> classify_rendered(const torch::Tensor& image, const AttributeSchema& schema) {
  TORCH_CHECK(image.dim() == 3 && image.size(0) == 3, "classify_rendered expects a (3,H,W) image");
  const auto bytes = image_to_bytes(image).to(torch::kFloat64);
  const std::int64_t s = bytes.size(1);
  const std::int64_t patch = std::max<std::int64_t>(2, s / 8);
  const std::int64_t lo = s / 2 - patch / 2;
  const auto center = bytes.slice(1, lo, lo + patch).slice(2, lo, lo + patch).mean({1, 2});
  std::array<double, 3> mean{center[0].item<double>(), center[1].item<double>(), center[2].item<double>()};

  std::vector<int> out(schema.size(), 0);
  for (std::size_t j = 0; j < schema.size(); ++j) {
    const auto& name = schema[j].name;
    if (name == "color") {
      int best = 0;
      for (int v = 1; v < schema.cardinality(j); ++v)
        if (mean[kHueChannel[v]] > mean[kHueChannel[best]]) best = v;
      out[j] = best;
    } else if (name == "pale") {
      const auto [mn, mx] = std::minmax_element(mean.begin(), mean.end());
      out[j] = (*mn > kPaleMinThreshold && *mx - *mn > kPaleChromaThreshold) ? 1 : 0;
    } else if (name == "stripe") {
      // Border columns stay clear of the disc; compare light and dark bands.
      const auto band = stripe_band(s);
      const auto w = rule_columns(s);
      const auto cols = torch::cat({bytes.slice(2, 0, w), bytes.slice(2, s - w, s)}, 2).mean({0, 2});
      auto rows = cols.accessor<double, 1>();
      double light = 0, dark = 0;
      std::int64_t n_light = 0, n_dark = 0;
      for (std::int64_t y = 0; y < s; ++y) {
        if (is_dark_band(y, band)) {
          dark += rows[y];
          ++n_dark;
        } else {
          light += rows[y];
          ++n_light;
        }
      }
      out[j] = light / n_light - dark / n_dark > kStripeThreshold ? 1 : 0;
    } else {
      throw ConfigError("no pixel rule for attribute '" + name + "'");
    }
  }
  return out;
}

std::filesystem::path write_corpus(const SparselyGroupedDataset& dataset, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  const auto manifest = dir / "manifest.csv";
  std::ofstream out(manifest);
  if (!out) throw std::runtime_error("cannot write manifest '" + manifest.string() + "'");
  out << "image_path";
  for (const auto& a : dataset.schema()) out << ',' << a.name << ':' << a.cardinality;
  out << '\n';
  for (std::size_t id = 0; id < dataset.size(); ++id) {
    char name[32];
    std::snprintf(name, sizeof(name), "images/%06zu.png", id);
    write_image(dir / name, dataset[id].image);
    out << name;
    for (const auto& l : dataset[id].labels) {
      out << ',';
      if (l) out << *l;
    }
    out << '\n';
  }
  return manifest;
}

SparselyGroupedDataset load_manifest(const std::filesystem::path& path, std::int64_t image_size,
                                     const std::optional<AttributeSchema>& expected) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open manifest '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) return expected ? SparselyGroupedDataset(*expected, {}) : SparselyGroupedDataset{};

  auto header = split_csv_row(line);
  if (header.size() < 2) throw LoadError(path.string() + ": header row must name at least one attribute");
  if (header[0] != "image_path")
    throw LoadError(path.string() + ": header must start with 'image_path', found '" + header[0] + "'");
  std::string schema_text;
  for (std::size_t k = 1; k < header.size(); ++k) schema_text += (k > 1 ? "," : "") + header[k];
  AttributeSchema schema;
  try {
    schema = AttributeSchema::parse(schema_text);
  } catch (const ConfigError& e) {
    throw LoadError(path.string() + ": bad header: " + e.what());
  }
  if (expected) {
    if (auto diff = describe_schema_mismatch(*expected, schema); !diff.empty())
      throw LoadError(path.string() + ": schema mismatch: " + diff);
  }

  const auto base = path.parent_path();
  std::vector<Example> examples;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto where = path.string() + " row " + std::to_string(row);
    auto cells = split_csv_row(line);
    if (cells.size() != header.size())
      throw LoadError(where + ": expected " + std::to_string(header.size()) + " cells, found " +
                      std::to_string(cells.size()));
    Labels labels(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto& cell = cells[j + 1];
      if (cell.empty()) continue;
      int v = 0;
      std::size_t used = 0;
      try {
        v = std::stoi(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size()) throw LoadError(where + ": label '" + cell + "' is not an integer");
      if (v < 0 || v >= schema.cardinality(j))
        throw LoadError(where + ": label " + cell + " out of range for attribute '" + schema[j].name + "' (m=" +
                        std::to_string(schema.cardinality(j)) + ")");
      labels[j] = v;
    }
    std::filesystem::path image_path = cells[0];
    if (image_path.is_relative()) image_path = base / image_path;
    torch::Tensor image;
    try {
      image = read_image(image_path, image_size);
    } catch (const LoadError& e) {
      throw LoadError(where + ": " + e.what());
    }
    examples.push_back({image, std::move(labels)});
  }
  return SparselyGroupedDataset(std::move(schema), std::move(examples));
}

}  // namespace sggan
