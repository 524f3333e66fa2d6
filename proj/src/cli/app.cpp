#include "sggan/cli/app.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "sggan/cli/run_config.hpp"
#include "sggan/data/image.hpp"
#include "sggan/errors.hpp"
#include "sggan/eval/experiments.hpp"
#include "sggan/eval/plots.hpp"
#include "sggan/train/trainer.hpp"

namespace sggan {

namespace fs = std::filesystem;

namespace {

// Flags shared by every command that reads the run configuration. Each one
// overrides its config key only when given on the command line.
struct CommonFlags {
  std::string config;
  std::string name;
  std::string runs_dir;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;

  void add(CLI::App& app) {
    app.add_option("--config", config, "JSON run configuration; flags override its keys")->check(CLI::ExistingFile);
    app.add_option("--name", name, "run name (runs/<name>/<timestamp>)");
    app.add_option("--runs-dir", runs_dir, "root of run directories");
    seed_opt = app.add_option("--seed", seed, "training seed (also drives sparsify/balance)");
  }

  RunConfig resolve() const {
    auto c = config.empty() ? RunConfig{} : RunConfig::load(config);
    if (!name.empty()) c.name = name;
    if (!runs_dir.empty()) c.runs_dir = runs_dir;
    if (seed_opt->count()) c.train.seed = seed;
    return c;
  }
};

struct DataFlags {
  std::string data, test, per_group, balance;
  std::size_t synth_count = 0;
  std::uint64_t synth_seed = 0;
  std::string synth_schema;
  CLI::Option *count_opt = nullptr, *seed_opt = nullptr;

  void add(CLI::App& app) {
    app.add_option("--data", data, "training manifest (file or corpus directory); synthesized when absent");
    app.add_option("--test", test, "evaluation manifest; synthesized when absent");
    app.add_option("--per-group", per_group, "labels kept per attribute value: all or N");
    app.add_option("--balance", balance, "undersample this attribute's grouped pools to its minority size");
    app.add_option("--synth-schema", synth_schema, "schema of a synthesized corpus, e.g. color:2,stripe:2");
    count_opt = app.add_option("--synth-count", synth_count, "images in a synthesized training corpus");
    seed_opt = app.add_option("--synth-seed", synth_seed, "seed of a synthesized corpus");
  }

  void apply(RunConfig& c) const {
    if (!data.empty()) c.data.manifest = data;
    if (!test.empty()) c.data.test_manifest = test;
    if (!per_group.empty()) c.data.per_group = parse_per_group(per_group);
    if (!balance.empty()) c.data.balance = balance;
    if (!synth_schema.empty()) c.synth.schema = AttributeSchema::parse(synth_schema);
    if (count_opt->count()) c.synth.count = synth_count;
    if (seed_opt->count()) c.synth.seed = synth_seed;
  }
};

struct TrainFlags {
  std::int64_t iterations = 0, warm = 0, decay = 0, size = 0, n_critic = 0, gen_width = 0, disc_width = 0;
  std::int64_t checkpoint_every = 0, log_every = 0;
  std::size_t batch_size = 0;
  double lr = 0;
  std::string residual, preset;
  std::vector<CLI::Option*> opts;

  void add(CLI::App& app) {
    opts = {
        app.add_option("--iterations", iterations, "stop after this many discriminator steps"),
        app.add_option("--warm", warm, "constant learning-rate steps"),
        app.add_option("--decay", decay, "linear decay steps"),
        app.add_option("--size", size, "image size (power of two, 32..128)"),
        app.add_option("--n-critic", n_critic, "discriminator steps per generator step"),
        app.add_option("--gen-width", gen_width, "generator base width"),
        app.add_option("--disc-width", disc_width, "discriminator base width"),
        app.add_option("--checkpoint-every", checkpoint_every, "checkpoint interval"),
        app.add_option("--log-every", log_every, "metrics row interval"),
        app.add_option("--batch-size", batch_size, "batch size"),
        app.add_option("--lr", lr, "initial learning rate"),
        app.add_option("--residual", residual, "adapted, original or none"),
    };
    app.add_option("--preset", preset, "desk (32 px, 5000 steps) or full (128 px, 20000 steps)")
        ->check(CLI::IsMember({"desk", "full"}));
  }

  bool given(std::size_t k) const { return opts[k]->count() > 0; }

  void apply(RunConfig& c) const {
    if (!preset.empty() && preset != c.preset) {
      auto schema = c.train.schema;
      auto seed = c.train.seed;
      c.preset = preset;
      c.train = preset == "full" ? TrainingConfig{} : TrainingConfig::desk({});
      c.train.schema = schema;
      c.train.seed = seed;
    }
    auto& t = c.train;
    if (given(0)) t.max_iterations = iterations;
    if (given(1)) t.warm_iterations = warm;
    if (given(2)) t.decay_iterations = decay;
    if (given(3)) t.image_size = size;
    if (given(4)) t.n_critic = n_critic;
    if (given(5)) t.gen_base_width = gen_width;
    if (given(6)) t.disc_base_width = disc_width;
    if (given(7)) t.checkpoint_every = checkpoint_every;
    if (given(8)) t.log_every = log_every;
    if (given(9)) t.batch_size = batch_size;
    if (given(10)) t.lr_initial = lr;
    if (given(11)) t.residual = residual_mode_from_string(residual);
  }
};

struct EvalFlags {
  std::string classifier, classifier_data;
  std::int64_t classifier_steps = 0;
  CLI::Option* steps_opt = nullptr;

  void add(CLI::App& app) {
    app.add_option("--classifier", classifier, "oracle (synthetic pixel rules) or learned")
        ->check(CLI::IsMember({"oracle", "learned"}));
    app.add_option("--classifier-data", classifier_data, "labelled manifest for the learned classifier");
    steps_opt = app.add_option("--classifier-steps", classifier_steps, "learned classifier training steps");
  }

  void apply(RunConfig& c) const {
    if (!classifier.empty()) c.eval.classifier = classifier;
    if (!classifier_data.empty()) c.eval.classifier_data = classifier_data;
    if (steps_opt->count()) c.eval.classifier_config.steps = classifier_steps;
  }
};

/// Fixes the schema a run trains on: the corpus decides, a schema already in
/// the config must agree.
void bind_schema(RunConfig& c, const AttributeSchema& corpus) {
  if (!c.train.schema.empty() && c.train.schema != corpus)
    throw ConfigError("configured schema " + c.train.schema.to_string() + " does not match the corpus: " +
                      describe_schema_mismatch(c.train.schema, corpus));
  c.train.schema = corpus;
  c.train.validate();
}

std::unique_ptr<AttributeClassifier> make_classifier(const RunConfig& c, const SparselyGroupedDataset& full_train,
                                                     const SparselyGroupedDataset& test, std::ostream& err) {
  const auto& schema = test.schema();
  if (c.eval.classifier == "oracle") {
    for (const auto& a : schema)
      if (!synth_max_cardinality(a.name))
        throw ConfigError("attribute '" + a.name + "' has no pixel rule; use --classifier learned");
    return std::make_unique<OracleClassifier>(schema);
  }
  const auto labelled = c.eval.classifier_data
                            ? load_manifest(resolve_manifest(*c.eval.classifier_data), c.train.image_size, schema)
                            : full_train;
  auto trained = train_eval_classifier(labelled, test, c.eval.classifier_config);
  err << "learned classifier held-out accuracy:";
  for (std::size_t j = 0; j < schema.size(); ++j) err << ' ' << schema[j].name << '=' << trained.heldout_accuracy[j];
  err << '\n';
  struct Holder final : AttributeClassifier {
    std::shared_ptr<LearnedClassifier> inner;
    torch::Tensor predict(const torch::Tensor& x) override { return inner->predict(x); }
    const AttributeSchema& schema() const override { return inner->schema(); }
  };
  auto holder = std::make_unique<Holder>();
  holder->inner = trained.classifier;
  return holder;
}

ProgressFn progress_printer(std::ostream& err) {
  return [&err](const std::string& label, const StepRecord& r) {
    err << label << " it=" << r.iteration + 1 << " lr=" << r.lr << " l_d=" << r.l_d << " gp=" << r.penalty;
    if (r.g_step) err << " l_g=" << r.l_g << " rec=" << r.l_rec;
    err << '\n';
  };
}

torch::Tensor grid_inputs(const SparselyGroupedDataset& test, std::size_t n) {
  std::vector<std::size_t> ids;
  for (std::size_t id = 0; id < std::min(n, test.size()); ++id) ids.push_back(id);
  return test.stack(ids);
}

void write_eval_outputs(const EvalReport& report, const Translator& translator, const SparselyGroupedDataset& test,
                        const RunConfig& c, const fs::path& dir) {
  report.write_csv(dir / "reports" / "report.csv");
  plot_report(report, dir / "plots");
  if (c.eval.grid_images > 0) write_translation_grids(translator, grid_inputs(test, c.eval.grid_images), test.schema(), dir / "plots");
}

fs::path run_dir_of_checkpoint(const fs::path& ckpt) { return fs::absolute(ckpt).lexically_normal().parent_path(); }

// ---- commands -----------------------------------------------------------

int cmd_synth(const SynthParams& params, const fs::path& out_dir, std::ostream& out) {
  params.validate();
  const auto dataset = synth_generate(params);
  const auto manifest = write_corpus(dataset, out_dir);
  out << "# manifest: " << manifest.string() << '\n' << dataset_summary(dataset);
  return kExitOk;
}

int cmd_train(RunConfig c, const std::string& resume, std::ostream& out, std::ostream& err) {
  fs::path run_dir;
  std::optional<Trainer> trainer;
  std::shared_ptr<const SparselyGroupedDataset> train;
  SparselyGroupedDataset full;
  if (!resume.empty()) {
    run_dir = run_dir_of_checkpoint(resume);
    auto saved = RunConfig::load(run_dir / "config.json");
    // Only run-length and logging keys may change on resume.
    saved.train.max_iterations = c.train.max_iterations ? c.train.max_iterations : saved.train.max_iterations;
    saved.train.checkpoint_every = c.train.checkpoint_every;
    saved.train.log_every = c.train.log_every;
    c = saved;
    full = load_training_corpus(c);
    train = std::make_shared<const SparselyGroupedDataset>(prepare_training_data(full, c));
    trainer.emplace(Trainer::resume(resume, train, c.train));
    err << "resuming " << run_dir.string() << " at iteration " << trainer->iteration() << '\n';
  } else {
    full = load_training_corpus(c);
    bind_schema(c, full.schema());
    train = std::make_shared<const SparselyGroupedDataset>(prepare_training_data(full, c));
    run_dir = make_run_directory(c.runs_dir, c.name);
    c.save(run_dir / "config.json");
    trainer.emplace(c.train, train);
  }
  trainer->run(run_dir, [&](const StepRecord& r) { progress_printer(err)(c.name, r); });

  const auto test = load_test_corpus(c, c.train.schema);
  auto classifier = make_classifier(c, full, test, err);
  const auto translator = generator_translator(trainer->generator());
  auto report = evaluate_translations(translator, *classifier, test,
                                      c.name + "@" + std::to_string(trainer->iteration()), "per_group=" + per_group_to_string(c.data.per_group));
  write_eval_outputs(report, translator, test, c, run_dir);
  out << "# run_dir: " << run_dir.string() << '\n' << report.to_csv();
  return kExitOk;
}

int cmd_translate(const std::string& ckpt, const std::vector<std::string>& images,
                  const std::vector<std::string>& targets, const std::string& schema_text, const fs::path& out_dir,
                  std::ostream& out) {
  std::optional<AttributeSchema> expected;
  if (!schema_text.empty()) expected = AttributeSchema::parse(schema_text);
  auto loaded = load_generator(ckpt, expected);
  const auto& schema = loaded.config.schema;

  std::vector<std::pair<std::size_t, int>> parsed;
  for (const auto& t : targets) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("target must look like attribute=value: '" + t + "'");
    const auto j = schema.index_of(t.substr(0, eq));
    if (!j) throw ConfigError("unknown attribute '" + t.substr(0, eq) + "'; checkpoint schema is " + schema.to_string());
    int v = -1;
    try {
      v = std::stoi(t.substr(eq + 1));
    } catch (const std::exception&) {
      throw ConfigError("bad target value in '" + t + "'");
    }
    if (v < 0 || v >= schema.cardinality(*j))
      throw ConfigError("target value " + std::to_string(v) + " out of range [0, " +
                        std::to_string(schema.cardinality(*j) - 1) + "] for '" + schema[*j].name + "'");
    parsed.emplace_back(*j, v);
  }

  fs::create_directories(out_dir);
  std::vector<std::vector<torch::Tensor>> cells;
  for (const auto& path : images) {
    const auto x = read_image(path, loaded.config.image_size);
    std::vector<torch::Tensor> row{x};
    torch::NoGradGuard no_grad;
    for (const auto& [j, v] : parsed) {
      const auto y = translate(loaded.generator, x, j, v);
      const auto file = out_dir / (fs::path(path).stem().string() + "_" + schema[j].name + std::to_string(v) + ".png");
      write_image(file, y);
      out << file.string() << '\n';
      row.push_back(y);
    }
    cells.push_back(std::move(row));
  }
  const auto grid = out_dir / "grid.png";
  write_image(grid, tile_images(cells));
  out << grid.string() << '\n';
  return kExitOk;
}

int cmd_eval(RunConfig c, const std::string& ckpt, const std::string& out_arg, std::ostream& out,
             std::ostream& err) {
  auto loaded = load_generator(ckpt);
  c.train.schema = loaded.config.schema;
  c.train.image_size = loaded.config.image_size;
  const auto test = load_test_corpus(c, c.train.schema);
  const auto full = c.eval.classifier == "learned" && !c.eval.classifier_data ? load_training_corpus(c) : SparselyGroupedDataset{};
  auto classifier = make_classifier(c, full, test, err);
  const auto translator = generator_translator(loaded.generator);
  const auto report = evaluate_translations(translator, *classifier, test,
                                            fs::path(ckpt).filename().string() + "@" + std::to_string(loaded.iteration), "eval");
  const fs::path dir = out_arg.empty() ? run_dir_of_checkpoint(ckpt) : fs::path(out_arg);
  write_eval_outputs(report, translator, test, c, dir);
  out << report.to_csv();
  return kExitOk;
}

int cmd_sweep(RunConfig c, std::ostream& out, std::ostream& err) {
  const auto full = load_training_corpus(c);
  bind_schema(c, full.schema());
  const auto attribute = c.eval.sweep_attribute.empty() ? 0 : full.schema().require(c.eval.sweep_attribute);
  c.eval.sweep_attribute = full.schema()[attribute].name;
  const auto test = load_test_corpus(c, full.schema());
  auto classifier = make_classifier(c, full, test, err);
  const auto run_dir = make_run_directory(c.runs_dir, c.name);
  c.save(run_dir / "config.json");
  // Sparsify first when asked; the sweep then undersamples the result.
  auto base = c.data.per_group ? sparsify(full, *c.data.per_group, c.train.seed) : full;
  const auto points =
      run_unbalanced_sweep(base, test, attribute, c.eval.mi, c.train, *classifier, run_dir, progress_printer(err));
  plot_sweep(points, run_dir / "plots");
  out << "# run_dir: " << run_dir.string() << '\n' << sweep_csv(points);
  return kExitOk;
}

int cmd_ablation(RunConfig c, std::ostream& out, std::ostream& err) {
  const auto full = load_training_corpus(c);
  bind_schema(c, full.schema());
  const auto train = std::make_shared<const SparselyGroupedDataset>(prepare_training_data(full, c));
  const auto test = load_test_corpus(c, full.schema());
  auto classifier = make_classifier(c, full, test, err);
  const auto run_dir = make_run_directory(c.runs_dir, c.name);
  c.save(run_dir / "config.json");
  const auto rows = run_ablation(train, test, c.train, c.eval.variants, *classifier, run_dir, {}, progress_printer(err));
  plot_ablation(rows, full.schema(), run_dir / "plots");
  out << "# run_dir: " << run_dir.string() << '\n' << ablation_csv(rows, full.schema());
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sparsely grouped multi-attribute image translation"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every command");

  // synth
  auto* synth = app.add_subcommand("synth", "render a labelled synthetic corpus (images/ + manifest.csv)");
  SynthParams sp;
  std::string synth_out, synth_schema = sp.schema.to_string();
  std::vector<std::string> marginals;
  bool stratified = false;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--size", sp.image_size, "image size (power of two, 32..128)")->capture_default_str();
  synth->add_option("--count", sp.count, "number of images")->capture_default_str();
  synth->add_option("--seed", sp.seed, "random seed")->capture_default_str();
  synth->add_option("--schema", synth_schema, "attributes, e.g. color:2,stripe:2,pale:2")->capture_default_str();
  synth->add_option("--marginal", marginals, "value probabilities, e.g. pale=0.875,0.125 (repeatable)");
  synth->add_flag("--stratified", stratified, "exact value counts instead of i.i.d. draws");

  // train
  auto* train = app.add_subcommand("train", "train on a (sparsified) corpus; writes checkpoints, metrics and a report");
  CommonFlags train_common;
  DataFlags train_data;
  TrainFlags train_flags;
  EvalFlags train_eval;
  std::string resume;
  train_common.add(*train);
  train_data.add(*train);
  train_flags.add(*train);
  train_eval.add(*train);
  train->add_option("--resume", resume, "checkpoint directory to continue from")->check(CLI::ExistingDirectory);

  // translate
  auto* tr = app.add_subcommand("translate", "translate images to attribute values with a trained generator");
  std::string tr_ckpt, tr_schema, tr_out = ".";
  std::vector<std::string> tr_images, tr_targets;
  tr->add_option("--ckpt", tr_ckpt, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--image", tr_images, "input image (repeatable)")->required()->check(CLI::ExistingFile);
  tr->add_option("--target", tr_targets, "attribute=value (repeatable)")->required();
  tr->add_option("--schema", tr_schema, "expected schema; a mismatch with the checkpoint is an error");
  tr->add_option("--out", tr_out, "output directory")->capture_default_str();

  // eval
  auto* ev = app.add_subcommand("eval", "translation accuracy report and plots for a checkpoint");
  CommonFlags ev_common;
  DataFlags ev_data;
  EvalFlags ev_eval;
  std::string ev_ckpt, ev_out;
  ev_common.add(*ev);
  ev_data.add(*ev);
  ev_eval.add(*ev);
  ev->add_option("--ckpt", ev_ckpt, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--out", ev_out, "output directory (default: the checkpoint's run directory)");

  // sweep
  auto* sw = app.add_subcommand("sweep", "unbalanced-attribute sweep over minority sizes");
  CommonFlags sw_common;
  DataFlags sw_data;
  TrainFlags sw_flags;
  EvalFlags sw_eval;
  std::string sw_mi, sw_attr;
  sw_common.add(*sw);
  sw_data.add(*sw);
  sw_flags.add(*sw);
  sw_eval.add(*sw);
  sw->add_option("--mi", sw_mi, "minority sizes, e.g. 10,50,500");
  sw->add_option("--attribute", sw_attr, "binary attribute to unbalance (default: first)");

  // ablation
  auto* ab = app.add_subcommand("ablation", "train residual-learning variants with one config");
  CommonFlags ab_common;
  DataFlags ab_data;
  TrainFlags ab_flags;
  EvalFlags ab_eval;
  std::string ab_variants;
  ab_common.add(*ab);
  ab_data.add(*ab);
  ab_flags.add(*ab);
  ab_eval.add(*ab);
  ab->add_option("--variants", ab_variants, "comma-separated: adapted,original,none");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) {
      sp.schema = AttributeSchema::parse(synth_schema);
      sp.marginals.assign(sp.schema.size(), {});
      for (const auto& m : marginals) {
        auto [name, probs] = parse_marginal(m);
        sp.marginals[sp.schema.require(name)] = std::move(probs);
      }
      sp.mode = stratified ? MarginalMode::Stratified : MarginalMode::Sampled;
      return cmd_synth(sp, synth_out, out);
    }
    if (*train) {
      auto c = train_common.resolve();
      train_data.apply(c);
      train_flags.apply(c);
      train_eval.apply(c);
      return cmd_train(std::move(c), resume, out, err);
    }
    if (*tr) return cmd_translate(tr_ckpt, tr_images, tr_targets, tr_schema, tr_out, out);
    if (*ev) {
      auto c = ev_common.resolve();
      ev_data.apply(c);
      ev_eval.apply(c);
      return cmd_eval(std::move(c), ev_ckpt, ev_out, out, err);
    }
    if (*sw) {
      auto c = sw_common.resolve();
      sw_data.apply(c);
      sw_flags.apply(c);
      sw_eval.apply(c);
      if (!sw_mi.empty()) c.eval.mi = parse_size_list(sw_mi);
      if (!sw_attr.empty()) c.eval.sweep_attribute = sw_attr;
      return cmd_sweep(std::move(c), out, err);
    }
    if (*ab) {
      auto c = ab_common.resolve();
      ab_data.apply(c);
      ab_flags.apply(c);
      ab_eval.apply(c);
      if (!ab_variants.empty()) c.eval.variants = parse_variants(ab_variants);
      return cmd_ablation(std::move(c), out, err);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace sggan
