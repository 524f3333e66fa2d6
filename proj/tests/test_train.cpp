#include "testing.hpp"

#include <fstream>

#include "sggan/errors.hpp"
#include "sggan/train/config.hpp"
#include "sggan/train/trainer.hpp"
#include "test_util.hpp"

using namespace sggan;
namespace fs = std::filesystem;

namespace {

TrainingConfig tiny_config(const AttributeSchema& schema) {
  auto c = TrainingConfig::desk(schema);
  c.gen_base_width = 4;
  c.disc_base_width = 4;
  c.residual_blocks = 1;
  c.batch_size = 4;
  c.seed = 5;
  c.checkpoint_every = 5;
  c.log_every = 2;
  return c;
}

std::shared_ptr<const SparselyGroupedDataset> tiny_data() {
  static const auto ds = std::make_shared<const SparselyGroupedDataset>(
      sparsify(test::tiny_dataset(64, "color:2,stripe:2", 4), 8, 1));
  return ds;
}

}  // namespace

TEST_CASE("learning-rate schedule fixed points") {
  TrainingConfig c;
  CHECK(lr_at(0, c) == doctest::Approx(1e-4));
  CHECK(lr_at(9999, c) == doctest::Approx(1e-4));
  CHECK(lr_at(10000, c) == doctest::Approx(1e-4));
  CHECK(lr_at(15000, c) == doctest::Approx(5e-5));
  CHECK(lr_at(20000, c) == 0.0);
  CHECK(lr_at(25000, c) == 0.0);
  const auto desk = TrainingConfig::desk(AttributeSchema::parse("color"));
  CHECK(lr_at(3000, desk) == doctest::Approx(1e-4));
  CHECK(lr_at(4000, desk) == doctest::Approx(5e-5));
  CHECK(lr_at(5000, desk) == 0.0);
  CHECK(desk.total_iterations() == 5000);
}

TEST_CASE("training config json round trip and validation") {
  auto c = tiny_config(AttributeSchema::parse("color:3,stripe"));
  c.residual = ResidualMode::Original;
  c.max_iterations = 17;
  const auto back = TrainingConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  CHECK(back.schema == c.schema);
  CHECK(back.residual == ResidualMode::Original);

  auto j = c.to_json();
  j["learning_rate"] = 1;
  CHECK_THROWS_AS(TrainingConfig::from_json(j), ConfigError);
  j = c.to_json();
  j["n_critic"] = "five";
  CHECK_THROWS_AS(TrainingConfig::from_json(j), ConfigError);

  c.n_critic = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("ten iterations run ten critic and two generator updates") {
  Trainer t(tiny_config(tiny_data()->schema()), tiny_data());
  auto last_g = parameter_hash(*t.generator());
  auto last_d = parameter_hash(*t.discriminator());
  for (int k = 0; k < 10; ++k) {
    const auto r = t.step();
    CHECK(r.iteration == k);
    CHECK(r.g_step == (k % 5 == 4));
    const auto g = parameter_hash(*t.generator());
    const auto d = parameter_hash(*t.discriminator());
    CHECK(d != last_d);
    CHECK((g != last_g) == r.g_step);
    last_g = g;
    last_d = d;
  }
  CHECK(t.d_steps() == 10);
  CHECK(t.g_steps() == 2);
  CHECK(t.iteration() == 10);
}

TEST_CASE("critic ratio holds over any window") {
  auto c = tiny_config(tiny_data()->schema());
  c.n_critic = 3;
  Trainer t(c, tiny_data());
  std::vector<int> g;
  for (int k = 0; k < 12; ++k) g.push_back(t.step().g_step ? 1 : 0);
  for (std::size_t lo = 0; lo + 3 <= g.size(); ++lo) CHECK(g[lo] + g[lo + 1] + g[lo + 2] == 1);
}

TEST_CASE("run writes metrics and checkpoints") {
  test::TempDir dir;
  auto c = tiny_config(tiny_data()->schema());
  c.max_iterations = 7;
  Trainer t(c, tiny_data());
  t.run(dir.path);
  CHECK(fs::exists(dir.path / "ckpt_5" / "weights.pt"));
  CHECK(fs::exists(dir.path / "ckpt_7" / "meta.json"));
  std::ifstream in(dir.path / "metrics.csv");
  std::string header, line;
  std::getline(in, header);
  CHECK(header == kMetricsHeader);
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("checkpoint round trip is exact and resume continues identically") {
  test::TempDir dir;
  auto c = tiny_config(tiny_data()->schema());
  c.max_iterations = 10;
  Trainer straight(c, tiny_data());
  straight.run();

  c.max_iterations = 5;
  Trainer first(c, tiny_data());
  first.run();
  first.save_checkpoint(dir.path / "ck");

  auto again = Trainer::resume(dir.path / "ck", tiny_data());
  CHECK(parameter_hash(*again.generator()) == parameter_hash(*first.generator()));
  CHECK(parameter_hash(*again.discriminator()) == parameter_hash(*first.discriminator()));
  CHECK(again.iteration() == 5);
  CHECK(again.g_steps() == 1);

  auto longer = c;
  longer.max_iterations = 10;
  auto resumed = Trainer::resume(dir.path / "ck", tiny_data(), longer);
  resumed.run();
  CHECK(resumed.iteration() == 10);
  CHECK(parameter_hash(*resumed.generator()) == parameter_hash(*straight.generator()));
  CHECK(parameter_hash(*resumed.discriminator()) == parameter_hash(*straight.discriminator()));

  const auto loaded = load_generator(dir.path / "ck", tiny_data()->schema());
  CHECK(parameter_hash(*loaded.generator) == parameter_hash(*first.generator()));
  CHECK(loaded.iteration == 5);
}

TEST_CASE("corrupted or mismatched checkpoints are rejected") {
  test::TempDir dir;
  auto c = tiny_config(tiny_data()->schema());
  Trainer t(c, tiny_data());
  t.save_checkpoint(dir.path / "ck");

  CHECK_THROWS_AS(load_generator(dir.path / "ck", AttributeSchema::parse("color:2,pale:2")), CheckpointError);
  try {
    load_generator(dir.path / "ck", AttributeSchema::parse("color:2,pale:2"));
  } catch (const CheckpointError& e) {
    CHECK(std::string(e.what()).find("stripe") != std::string::npos);
  }
  CHECK_THROWS_AS(load_generator(dir.path / "missing"), CheckpointError);

  {
    std::fstream f(dir.path / "ck" / "weights.pt", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(200);
    char byte = 0;
    f.read(&byte, 1);
    f.seekp(200);
    byte = static_cast<char>(byte ^ 0x5a);
    f.write(&byte, 1);
  }
  CHECK_THROWS_AS(load_generator(dir.path / "ck"), CheckpointError);
  CHECK_THROWS_AS(Trainer::resume(dir.path / "ck", tiny_data()), CheckpointError);
}

TEST_CASE("trainer rejects a dataset that does not fit the config") {
  auto c = tiny_config(AttributeSchema::parse("color:2,pale:2"));
  CHECK_THROWS_AS(Trainer(c, tiny_data()), ConfigError);
  c = tiny_config(tiny_data()->schema());
  c.image_size = 64;
  CHECK_THROWS_AS(Trainer(c, tiny_data()), ConfigError);
}
