#include "testing.hpp"

#include <fstream>
#include <sstream>

#include "sggan/cli/app.hpp"
#include "sggan/cli/run_config.hpp"
#include "sggan/errors.hpp"
#include "test_util.hpp"

using namespace sggan;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  args.insert(args.begin(), "sggan");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path only_child(const fs::path& dir) {
  std::vector<fs::path> kids;
  for (const auto& e : fs::directory_iterator(dir)) kids.push_back(e.path());
  REQUIRE(kids.size() == 1);
  return kids[0];
}

}  // namespace

TEST_CASE("run config json round trip rejects unknown keys") {
  RunConfig c;
  c.name = "x";
  c.data.per_group = 500;
  c.data.balance = "stripe";
  c.eval.mi = {10, 50};
  c.synth.schema = AttributeSchema::parse("color,pale");
  c.synth.marginals = {{}, {0.9, 0.1}};
  const auto back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(*back.data.per_group == 500);

  auto j = c.to_json();
  j["data"]["perGroup"] = 3;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j = c.to_json();
  j["extra"] = true;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j = c.to_json();
  j["train"]["lr"] = 0.1;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);

  CHECK_FALSE(parse_per_group("all").has_value());
  CHECK(*parse_per_group("5000") == 5000);
  CHECK_THROWS_AS(parse_per_group("0"), ConfigError);
  CHECK_THROWS_AS(parse_per_group("lots"), ConfigError);
  CHECK((parse_size_list("10,50,500") == std::vector<std::size_t>{10, 50, 500}));
  CHECK_THROWS_AS(parse_size_list("10,,5"), ConfigError);
  CHECK((parse_marginal("pale=0.9,0.1").second == std::vector<double>{0.9, 0.1}));
}

TEST_CASE("synth command defaults, determinism and usage errors") {
  test::TempDir dir;
  const auto a = cli({"synth", "--out", (dir.path / "a").string(), "--seed", "7", "--count", "30"});
  REQUIRE(a.code == 0);
  CHECK(a.out.find("color,0,") != std::string::npos);
  const auto b = cli({"synth", "--out", (dir.path / "b").string(), "--seed", "7", "--count", "30"});
  REQUIRE(b.code == 0);
  CHECK(slurp(dir.path / "a" / "manifest.csv") == slurp(dir.path / "b" / "manifest.csv"));
  for (const auto& e : fs::directory_iterator(dir.path / "a" / "images"))
    CHECK(slurp(e.path()) == slurp(dir.path / "b" / "images" / e.path().filename()));

  const auto defaults = load_manifest(dir.path / "a" / "manifest.csv", 32);
  CHECK(defaults.image_size() == 32);

  CHECK((cli({"synth", "--out", (dir.path / "c").string(), "--size", "48"}).code == kExitUsage));
  CHECK((cli({"synth"}).code == kExitUsage));
  CHECK((cli({"synth", "--out", (dir.path / "c").string(), "--schema", "smile"}).code == kExitUsage));
  CHECK((cli({"frobnicate"}).code == kExitUsage));
  CHECK((cli({"--help"}).code == kExitOk));
}

TEST_CASE("default synth command renders 4000 images at 32 px") {
  test::TempDir dir;
  const auto r = cli({"synth", "--out", dir.path.string()});
  REQUIRE(r.code == 0);
  std::size_t n = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path / "images")) ++n;
  CHECK(n == 4000);
}

TEST_CASE("train, resume, eval and translate end to end") {
  test::TempDir dir;
  const auto data = dir.path / "data";
  REQUIRE((cli({"synth", "--out", data.string(), "--count", "80", "--seed", "3"}).code == 0));
  REQUIRE((cli({"synth", "--out", (dir.path / "test").string(), "--count", "20", "--seed", "4"}).code == 0));
  const auto runs = dir.path / "runs";
  const std::vector<std::string> small{"--gen-width", "4", "--disc-width", "4", "--batch-size", "4",
                                       "--checkpoint-every", "5", "--log-every", "5"};

  auto args = std::vector<std::string>{"train", "--data", data.string(), "--test", (dir.path / "test").string(),
                                       "--per-group", "10", "--iterations", "5", "--runs-dir", runs.string(),
                                       "--name", "t"};
  args.insert(args.end(), small.begin(), small.end());
  const auto trained = cli(args);
  REQUIRE_MESSAGE(trained.code == 0, trained.err);
  const auto run_dir = only_child(runs / "t");
  CHECK(fs::exists(run_dir / "config.json"));
  CHECK(fs::exists(run_dir / "ckpt_5" / "meta.json"));
  CHECK(fs::exists(run_dir / "metrics.csv"));
  CHECK(fs::exists(run_dir / "reports" / "report.csv"));
  CHECK(fs::exists(run_dir / "plots" / "grid_color.png"));
  CHECK(trained.out.find("translated,color,stripe,background,background_ssim") != std::string::npos);

  const auto echoed = RunConfig::load(run_dir / "config.json");
  CHECK(*echoed.data.per_group == 10);
  CHECK(echoed.train.gen_base_width == 4);
  CHECK(echoed.train.schema.to_string() == "color:2,stripe:2");

  const auto resumed = cli({"train", "--resume", (run_dir / "ckpt_5").string(), "--iterations", "10"});
  REQUIRE_MESSAGE(resumed.code == 0, resumed.err);
  CHECK(fs::exists(run_dir / "ckpt_10" / "weights.pt"));

  const auto ev = cli({"eval", "--ckpt", (run_dir / "ckpt_10").string(), "--test", (dir.path / "test").string(),
                       "--out", (dir.path / "ev").string()});
  REQUIRE_MESSAGE(ev.code == 0, ev.err);
  CHECK(fs::exists(dir.path / "ev" / "reports" / "report.csv"));
  CHECK(fs::exists(dir.path / "ev" / "plots" / "accuracy.png"));

  const auto image = (data / "images" / "000000.png").string();
  const auto tr = cli({"translate", "--ckpt", (run_dir / "ckpt_10").string(), "--image", image, "--target",
                       "color=1", "--target", "stripe=0", "--out", (dir.path / "tr").string()});
  REQUIRE_MESSAGE(tr.code == 0, tr.err);
  CHECK(fs::exists(dir.path / "tr" / "000000_color1.png"));
  CHECK(fs::exists(dir.path / "tr" / "000000_stripe0.png"));
  CHECK(fs::exists(dir.path / "tr" / "grid.png"));

  CHECK(cli({"translate", "--ckpt", (run_dir / "ckpt_10").string(), "--image", image, "--target", "color=2"}).code ==
        kExitUsage);
  CHECK(cli({"translate", "--ckpt", (run_dir / "ckpt_10").string(), "--image", image, "--target", "pale=1"}).code ==
        kExitUsage);
  const auto mismatch = cli({"translate", "--ckpt", (run_dir / "ckpt_10").string(), "--image", image, "--target",
                             "color=1", "--schema", "color:2,pale:2", "--out", (dir.path / "tr2").string()});
  CHECK(mismatch.code == kExitRuntime);
  CHECK(mismatch.err.find("schema") != std::string::npos);

  // Too few labels for the requested sparsity is a runtime failure.
  auto greedy = args;
  greedy[6] = "1000";
  CHECK(cli(greedy).code == kExitRuntime);
}

TEST_CASE("config file keys are overridden by flags") {
  test::TempDir dir;
  RunConfig c;
  c.name = "from_file";
  c.runs_dir = dir.path / "runs";
  c.synth.count = 40;
  c.train.gen_base_width = 4;
  c.train.disc_base_width = 4;
  c.train.batch_size = 4;
  c.train.max_iterations = 2;
  c.data.test_count = 10;
  c.eval.grid_images = 0;
  c.save(dir.path / "cfg.json");

  const auto r = cli({"train", "--config", (dir.path / "cfg.json").string(), "--name", "flagged"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(fs::exists(dir.path / "runs" / "flagged"));
  CHECK_FALSE(fs::exists(dir.path / "runs" / "from_file"));
  const auto echoed = RunConfig::load(only_child(dir.path / "runs" / "flagged") / "config.json");
  CHECK(*echoed.train.max_iterations == 2);

  std::ofstream(dir.path / "bad.json") << R"({"name": "x", "colour": 1})";
  CHECK((cli({"train", "--config", (dir.path / "bad.json").string()}).code == kExitUsage));
}
