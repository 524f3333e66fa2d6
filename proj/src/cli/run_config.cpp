#include "sggan/cli/run_config.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "sggan/errors.hpp"

namespace sggan {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

std::size_t parse_count(std::string_view text, const std::string& what) {
  std::size_t value = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) throw ConfigError("bad " + what + " '" + std::string(text) + "'");
  return value;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, sep);) parts.push_back(item);
  return parts;
}

std::string mode_name(MarginalMode mode) { return mode == MarginalMode::Stratified ? "stratified" : "sampled"; }

}  // namespace

std::optional<std::size_t> parse_per_group(const std::string& text) {
  if (text == "all") return std::nullopt;
  const auto n = parse_count(text, "per-group value (expected 'all' or a positive integer)");
  if (n == 0) throw ConfigError("per-group must be positive");
  return n;
}

std::string per_group_to_string(const std::optional<std::size_t>& per_group) {
  return per_group ? std::to_string(*per_group) : "all";
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& part : split(text, ',')) {
    const auto n = parse_count(part, "size list entry");
    if (n == 0) throw ConfigError("size list entries must be positive");
    out.push_back(n);
  }
  if (out.empty()) throw ConfigError("empty size list");
  return out;
}

std::vector<ResidualMode> parse_variants(const std::string& text) {
  std::vector<ResidualMode> out;
  for (const auto& part : split(text, ',')) out.push_back(residual_mode_from_string(part));
  if (out.empty()) throw ConfigError("empty variant list");
  return out;
}

std::pair<std::string, std::vector<double>> parse_marginal(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("marginal must look like name=p0,p1,...: '" + text + "'");
  std::vector<double> probs;
  for (const auto& part : split(text.substr(eq + 1), ',')) {
    try {
      std::size_t used = 0;
      probs.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw ConfigError("bad probability '" + part + "' in marginal '" + text + "'");
    }
  }
  return {text.substr(0, eq), probs};
}

json RunConfig::to_json() const {
  json marginals = json::object();
  for (std::size_t j = 0; j < synth.marginals.size() && j < synth.schema.size(); ++j)
    if (!synth.marginals[j].empty()) marginals[synth.schema[j].name] = synth.marginals[j];
  json variants = json::array();
  for (auto v : eval.variants) variants.push_back(to_string(v));
  auto train_json = train.to_json();
  if (train.schema.empty()) train_json.erase("schema");

  const auto opt_path = [](const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); };
  return {
      {"name", name},
      {"runs_dir", runs_dir.string()},
      {"preset", preset},
      {"synth",
       {{"image_size", synth.image_size},
        {"count", synth.count},
        {"seed", synth.seed},
        {"schema", synth.schema.to_string()},
        {"marginals", marginals},
        {"mode", mode_name(synth.mode)}}},
      {"data",
       {{"manifest", opt_path(data.manifest)},
        {"test_manifest", opt_path(data.test_manifest)},
        {"test_count", data.test_count},
        {"per_group", per_group_to_string(data.per_group)},
        {"balance", data.balance ? json(*data.balance) : json(nullptr)}}},
      {"train", train_json},
      {"eval",
       {{"classifier", eval.classifier},
        {"classifier_data", opt_path(eval.classifier_data)},
        {"classifier_steps", eval.classifier_config.steps},
        {"classifier_seed", eval.classifier_config.seed},
        {"mi", eval.mi},
        {"sweep_attribute", eval.sweep_attribute},
        {"variants", variants},
        {"grid_images", eval.grid_images}}},
  };
}

RunConfig RunConfig::from_json(const json& j) {
  reject_unknown(j, {"name", "runs_dir", "preset", "synth", "data", "train", "eval"}, "run config");
  RunConfig c;
  try {
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    if (j.contains("runs_dir")) c.runs_dir = j.at("runs_dir").get<std::string>();
    if (j.contains("preset")) c.preset = j.at("preset").get<std::string>();
    if (c.preset != "desk" && c.preset != "full") throw ConfigError("preset must be 'desk' or 'full'");
    if (c.preset == "full") c.train = TrainingConfig{};

    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      reject_unknown(s, {"image_size", "count", "seed", "schema", "marginals", "mode"}, "synth section");
      if (s.contains("image_size")) c.synth.image_size = s.at("image_size").get<std::int64_t>();
      if (s.contains("count")) c.synth.count = s.at("count").get<std::size_t>();
      if (s.contains("seed")) c.synth.seed = s.at("seed").get<std::uint64_t>();
      if (s.contains("schema")) c.synth.schema = AttributeSchema::parse(s.at("schema").get<std::string>());
      if (s.contains("mode")) {
        const auto mode = s.at("mode").get<std::string>();
        if (mode != "sampled" && mode != "stratified") throw ConfigError("synth mode must be sampled or stratified");
        c.synth.mode = mode == "stratified" ? MarginalMode::Stratified : MarginalMode::Sampled;
      }
      if (s.contains("marginals")) {
        const auto& m = s.at("marginals");
        if (!m.is_object()) throw ConfigError("synth marginals must be an object");
        c.synth.marginals.assign(c.synth.schema.size(), {});
        for (const auto& [key, probs] : m.items())
          c.synth.marginals[c.synth.schema.require(key)] = probs.get<std::vector<double>>();
      }
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      reject_unknown(d, {"manifest", "test_manifest", "test_count", "per_group", "balance"}, "data section");
      const auto opt_path = [&](const char* key, std::optional<fs::path>& field) {
        if (d.contains(key) && !d.at(key).is_null()) field = d.at(key).get<std::string>();
      };
      opt_path("manifest", c.data.manifest);
      opt_path("test_manifest", c.data.test_manifest);
      if (d.contains("test_count")) c.data.test_count = d.at("test_count").get<std::size_t>();
      if (d.contains("per_group")) {
        const auto& pg = d.at("per_group");
        c.data.per_group = pg.is_string() ? parse_per_group(pg.get<std::string>())
                                          : parse_per_group(std::to_string(pg.get<std::int64_t>()));
      }
      if (d.contains("balance") && !d.at("balance").is_null()) c.data.balance = d.at("balance").get<std::string>();
    }
    if (j.contains("train")) c.train = TrainingConfig::from_json(j.at("train"), c.train);
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      reject_unknown(e,
                     {"classifier", "classifier_data", "classifier_steps", "classifier_seed", "mi", "sweep_attribute",
                      "variants", "grid_images"},
                     "eval section");
      if (e.contains("classifier")) c.eval.classifier = e.at("classifier").get<std::string>();
      if (e.contains("classifier_data") && !e.at("classifier_data").is_null())
        c.eval.classifier_data = e.at("classifier_data").get<std::string>();
      if (e.contains("classifier_steps")) c.eval.classifier_config.steps = e.at("classifier_steps").get<std::int64_t>();
      if (e.contains("classifier_seed")) c.eval.classifier_config.seed = e.at("classifier_seed").get<std::uint64_t>();
      if (e.contains("mi")) c.eval.mi = e.at("mi").get<std::vector<std::size_t>>();
      if (e.contains("sweep_attribute")) c.eval.sweep_attribute = e.at("sweep_attribute").get<std::string>();
      if (e.contains("variants")) {
        c.eval.variants.clear();
        for (const auto& v : e.at("variants")) c.eval.variants.push_back(residual_mode_from_string(v.get<std::string>()));
      }
      if (e.contains("grid_images")) c.eval.grid_images = e.at("grid_images").get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad run config value: ") + e.what());
  }
  if (c.eval.classifier != "oracle" && c.eval.classifier != "learned")
    throw ConfigError("eval classifier must be 'oracle' or 'learned'");
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void RunConfig::save(const fs::path& path) const {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << to_json().dump(2) << '\n';
}

fs::path make_run_directory(const fs::path& runs_dir, const std::string& name) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  localtime_r(&now, &tm);
  std::ostringstream stamp;
  stamp << std::put_time(&tm, "%Y%m%d-%H%M%S");
  auto dir = runs_dir / name / stamp.str();
  for (int k = 1; fs::exists(dir); ++k) dir = runs_dir / name / (stamp.str() + "-" + std::to_string(k));
  fs::create_directories(dir);
  return dir;
}

fs::path resolve_manifest(const fs::path& path) {
  if (fs::is_directory(path)) return path / "manifest.csv";
  return path;
}

SparselyGroupedDataset load_training_corpus(const RunConfig& config) {
  if (config.data.manifest) return load_manifest(resolve_manifest(*config.data.manifest), config.train.image_size);
  auto params = config.synth;
  params.image_size = config.train.image_size;
  return synth_generate(params);
}

SparselyGroupedDataset load_test_corpus(const RunConfig& config, const AttributeSchema& schema) {
  if (config.data.test_manifest)
    return load_manifest(resolve_manifest(*config.data.test_manifest), config.train.image_size, schema);
  auto params = config.synth;
  params.image_size = config.train.image_size;
  params.schema = schema;
  params.count = config.data.test_count;
  params.seed = config.synth.seed + 1;
  params.marginals.clear();
  params.mode = MarginalMode::Sampled;
  return synth_generate(params);
}

SparselyGroupedDataset prepare_training_data(const SparselyGroupedDataset& full, const RunConfig& config) {
  auto data = config.data.per_group ? sparsify(full, *config.data.per_group, config.train.seed) : full;
  if (config.data.balance) data = balance_unbalanced(data, data.schema().require(*config.data.balance), config.train.seed);
  return data;
}

std::string dataset_summary(const SparselyGroupedDataset& dataset) {
  std::ostringstream out;
  out << "attribute,value,count\n";
  const auto& schema = dataset.schema();
  for (std::size_t j = 0; j < schema.size(); ++j) {
    for (int v = 0; v < schema.cardinality(j); ++v)
      out << schema[j].name << ',' << v << ',' << dataset.grouped(j, v).size() << '\n';
    out << schema[j].name << ",mixed," << dataset.mixed(j).size() << '\n';
  }
  return out.str();
}

}  // namespace sggan
