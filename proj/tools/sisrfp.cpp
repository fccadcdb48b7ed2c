#include <filesystem>
#include <functional>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sisrfp/sisrfp.hpp"

namespace fs = std::filesystem;
using namespace sisrfp;
using pipeline::ExperimentConfig;

namespace {

struct Globals {
  std::string config = "sisrfp.json";
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool deterministic = false;
  int jobs = 0;
};

ExperimentConfig load(const Globals& g) {
  auto cfg = pipeline::load_config(g.config);
  if (g.seed_set) cfg.master_seed = g.seed;
  if (g.deterministic) cfg.deterministic = true;
  if (g.jobs > 0) cfg.jobs = g.jobs;
  if (cfg.jobs < 1) fail("bad-config", "jobs must be >= 1", ErrorKind::usage);
  cfg.classifier.master_seed = cfg.master_seed;
  return cfg;
}

int exit_code(ErrorKind k) { return static_cast<int>(k); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Super-resolution model fingerprinting: attribution, parsing and PRNU baselines"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config, "JSON experiment config")->capture_default_str();
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { g.seed = s, g.seed_set = true; }, "override the master seed");
  app.add_flag("--deterministic", g.deterministic, "force deterministic mode");
  app.add_option("--jobs", g.jobs, "worker threads for dataset generation")->check(CLI::PositiveNumber);

  std::function<void()> action;
  auto with_config = [&](CLI::App* sub, std::function<void(const ExperimentConfig&)> fn) {
    sub->callback([&, fn] { action = [&, fn] { fn(load(g)); }; });
  };

  // init
  std::string init_out;
  auto* init = app.add_subcommand("init", "write a default config file");
  init->add_option("path", init_out, "destination (defaults to --config)");
  init->callback([&] {
    action = [&] {
      const fs::path p = init_out.empty() ? fs::path(g.config) : fs::path(init_out);
      if (fs::exists(p)) fail("exists", p.string() + " already exists", ErrorKind::usage);
      pipeline::write_json(p, nlohmann::json(ExperimentConfig{}));
      std::cout << "wrote " << p.string() << '\n';
    };
  });

  // synth-corpus
  std::string synth_dir;
  int synth_count = 64, synth_h = 96, synth_w = 96;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth-corpus", "write procedural source images");
  synth->add_option("dir", synth_dir, "output directory")->required();
  synth->add_option("--count", synth_count)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--height", synth_h)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--width", synth_w)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--corpus-seed", synth_seed)->capture_default_str();
  synth->callback([&] {
    action = [&] {
      pipeline::write_synthetic_corpus(synth_dir, synth_count, synth_h, synth_w, synth_seed);
      std::cout << "wrote " << synth_count << " images to " << synth_dir << '\n';
    };
  });

  with_config(app.add_subcommand("ingest", "check the source corpus"), [](const ExperimentConfig& cfg) {
    const auto r = pipeline::ingest_corpus(cfg.corpus_dir, cfg.ingest, &std::cerr);
    for (const auto& s : r.images) {
      std::cout << s.image_id << '\t' << s.image.height() << 'x' << s.image.width() << '\n';
    }
    std::cout << r.images.size() << " usable, " << r.skipped.size() << " skipped\n";
  });

  with_config(app.add_subcommand("zoo-build", "write the model zoo description"), [](const ExperimentConfig& cfg) {
    const auto z = pipeline::make_zoo(cfg);
    zoo::write_zoo_description(cfg.root() / "zoo.json", z, cfg.master_seed, cfg.tuning);
    for (const auto& m : z) std::cout << m.id() << '\n';
    std::cout << z.size() << " models written to " << (cfg.root() / "zoo.json").string() << '\n';
  });

  std::size_t stop_after = 0;
  auto* ds = app.add_subcommand("dataset-build", "generate the super-resolved dataset (resumable)");
  ds->add_option("--stop-after", stop_after, "stop after this many new images");
  with_config(ds, [&](const ExperimentConfig& cfg) {
    const auto s = pipeline::step_dataset(cfg, std::cout, stop_after);
    if (!s.complete) std::cout << "incomplete; rerun to resume\n";
  });

  with_config(app.add_subcommand("attr-train", "train attribution classifiers"),
              [](const ExperimentConfig& cfg) { pipeline::step_attr_train(cfg, std::cout); });
  with_config(app.add_subcommand("attr-eval", "grouped attribution accuracy"),
              [](const ExperimentConfig& cfg) { pipeline::step_attr_eval(cfg, std::cout); });
  with_config(app.add_subcommand("attr-tsne", "2-D t-SNE of classifier features"),
              [](const ExperimentConfig& cfg) { pipeline::step_attr_tsne(cfg, std::cout); });
  with_config(app.add_subcommand("attr-ratio", "pairwise distance ratios of classifier features"),
              [](const ExperimentConfig& cfg) { pipeline::step_attr_ratio(cfg, std::cout); });

  auto* pb = app.add_subcommand("prnu-build", "build PRNU fingerprints from the train split");
  pb->alias("fingerprint-build");
  with_config(pb, [](const ExperimentConfig& cfg) { pipeline::step_prnu_build(cfg, std::cout); });
  auto* pe = app.add_subcommand("prnu-eval", "PRNU attribution accuracy on the test split");
  pe->alias("fingerprint-eval");
  with_config(pe, [](const ExperimentConfig& cfg) { pipeline::step_prnu_eval(cfg, std::cout); });
  std::string attribute_image;
  int top = 5;
  auto* pa = app.add_subcommand("prnu-attribute", "rank fingerprints for one image");
  pa->alias("fingerprint-attribute");
  pa->add_option("image", attribute_image, "PNG file")->required()->check(CLI::ExistingFile);
  pa->add_option("--top", top)->check(CLI::PositiveNumber)->capture_default_str();
  with_config(pa, [&](const ExperimentConfig& cfg) {
    const auto db_path = cfg.prnu_dir() / "fingerprints.db";
    pipeline::require(db_path, "prnu-build");
    const auto db = prnu::load_fingerprint_db(db_path);
    const auto ranked = prnu::attribute_nearest(read_png(attribute_image), db.entries, db.config);
    for (std::size_t i = 0; i < ranked.size() && int(i) < top; ++i) {
      std::cout << i + 1 << '\t' << ranked[i].model_id << '\t' << ranked[i].distance << '\n';
    }
  });

  with_config(app.add_subcommand("parse-train", "train the model-parsing classifiers"),
              [](const ExperimentConfig& cfg) { pipeline::step_parse_train(cfg, std::cout); });
  with_config(app.add_subcommand("parse-eval", "evaluate parsers and print the task table"),
              [](const ExperimentConfig& cfg) { pipeline::step_parse_eval(cfg, std::cout); });
  with_config(app.add_subcommand("stats", "corpus statistics CSV"),
              [](const ExperimentConfig& cfg) { pipeline::step_stats(cfg, std::cout); });

  std::string experiment;
  auto* run = app.add_subcommand("run", "run one experiment end to end");
  run->add_option("experiment", experiment, "attribution | seed-triplet | unseen | parsing | prnu | stats")
      ->required();
  with_config(run, [&](const ExperimentConfig& cfg) {
    const auto rec = pipeline::run_experiment(cfg, experiment, std::cout);
    std::cout << "run record: " << (cfg.runs_dir() / (experiment + ".json")).string() << " ("
              << rec["wall_seconds"].get<double>() << " s)\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorKind::usage);
  }
  try {
    action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(ErrorKind::data);
  }
  return 0;
}
