#pragma once

#include <chrono>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/attribution/attribution.hpp"
#include "sisrfp/attribution/ratio.hpp"
#include "sisrfp/attribution/triplets.hpp"
#include "sisrfp/attribution/tsne.hpp"
#include "sisrfp/parsing/parsing.hpp"
#include "sisrfp/pipeline/dataset.hpp"
#include "sisrfp/prnu/seed_eval.hpp"
#include "sisrfp/stats.hpp"
#include "sisrfp/version.hpp"

namespace sisrfp::pipeline {

// Everything a run depends on. Stored as JSON; unknown keys are rejected by
// the loader so that typos do not silently fall back to defaults.
struct ExperimentConfig {
  std::string corpus_dir = "corpus";
  IngestOptions ingest;
  std::string output_root = "out";
  std::uint64_t master_seed = 1;
  zoo::GridConfig zoo;
  zoo::SyntheticTuning tuning;
  SplitConfig splits;
  attribution::ClassifierSetup classifier;
  prnu::PrnuConfig prnu;
  parsing::TaskGrid parsing;
  attribution::TsneConfig tsne;
  std::string unseen_holdout = "seed=3";  // models matching this are kept from the unseen-experiment classifier
  int jobs = 1;
  bool deterministic = true;

  std::filesystem::path root() const { return output_root; }
  std::filesystem::path dataset_dir() const { return root() / "dataset"; }
  std::filesystem::path attribution_dir() const { return root() / "attribution"; }
  std::filesystem::path prnu_dir() const { return root() / "prnu"; }
  std::filesystem::path parsing_dir() const { return root() / "parsing"; }
  std::filesystem::path unseen_dir() const { return root() / "unseen"; }
  std::filesystem::path stats_dir() const { return root() / "stats"; }
  std::filesystem::path runs_dir() const { return root() / "runs"; }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(IngestOptions, max_dim, min_dim)

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = {{"corpus_dir", c.corpus_dir}, {"ingest", c.ingest},         {"output_root", c.output_root},
       {"master_seed", c.master_seed}, {"zoo", c.zoo},             {"tuning", c.tuning},
       {"splits", c.splits},           {"classifier", c.classifier}, {"prnu", c.prnu},
       {"parsing", c.parsing},         {"tsne", c.tsne},           {"unseen_holdout", c.unseen_holdout},
       {"jobs", c.jobs},               {"deterministic", c.deterministic}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  static const std::set<std::string> known = {"corpus_dir", "ingest",     "output_root", "master_seed", "zoo",
                                              "tuning",     "splits",     "classifier",  "prnu",        "parsing",
                                              "tsne",       "unseen_holdout", "jobs",     "deterministic"};
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) fail("bad-config", "unknown config key '" + k + "'", ErrorKind::usage);
  }
  ExperimentConfig d;
  c.corpus_dir = j.value("corpus_dir", d.corpus_dir);
  c.ingest = j.value("ingest", d.ingest);
  c.output_root = j.value("output_root", d.output_root);
  c.master_seed = j.value("master_seed", d.master_seed);
  c.zoo = j.value("zoo", d.zoo);
  c.tuning = j.value("tuning", d.tuning);
  c.splits = j.value("splits", d.splits);
  c.classifier = j.value("classifier", d.classifier);
  c.prnu = j.value("prnu", d.prnu);
  c.parsing = j.value("parsing", d.parsing);
  c.tsne = j.value("tsne", d.tsne);
  c.unseen_holdout = j.value("unseen_holdout", d.unseen_holdout);
  c.jobs = j.value("jobs", d.jobs);
  c.deterministic = j.value("deterministic", d.deterministic);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail("missing-config", path.string() + " not found", ErrorKind::usage);
  const auto bytes = read_file_bytes(path);
  try {
    return nlohmann::json::parse(bytes.begin(), bytes.end()).get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail("bad-config", path.string() + ": " + e.what(), ErrorKind::usage);
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  write_file_atomic(path, text.data(), text.size());
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

// ---------------------------------------------------------------------------
// Steps. Each reads its prerequisites from disk and fails with the command
// that produces them when one is missing.

inline void require(const std::filesystem::path& p, const std::string& command) {
  if (!std::filesystem::exists(p)) {
    fail("missing-artifact", p.string() + " not found; produce it with: sisrfp " + command + " --config <config>");
  }
}

inline zoo::Zoo make_zoo(const ExperimentConfig& cfg) { return zoo::build_zoo(cfg.zoo, cfg.master_seed, cfg.tuning); }

inline std::vector<zoo::ModelSpec> zoo_specs(const zoo::Zoo& z) {
  std::vector<zoo::ModelSpec> out;
  for (const auto& m : z) out.push_back(m.spec());
  return out;
}

inline DatasetSummary step_dataset(const ExperimentConfig& cfg, std::ostream& log, std::size_t stop_after = 0) {
  const auto sources = ingest_corpus(cfg.corpus_dir, cfg.ingest, &log);
  const auto z = make_zoo(cfg);
  zoo::write_zoo_description(cfg.root() / "zoo.json", z, cfg.master_seed, cfg.tuning);
  DatasetOptions opt;
  opt.splits = cfg.splits;
  opt.master_seed = cfg.master_seed;
  opt.jobs = cfg.jobs;
  opt.stop_after = stop_after;
  return build_dataset(sources.images, z, cfg.dataset_dir(), opt, &log);
}

inline Manifest dataset_manifest(const ExperimentConfig& cfg) {
  require(cfg.dataset_dir() / kManifestFile, "dataset-build");
  return read_manifest(cfg.dataset_dir() / kManifestFile);
}

struct DatasetView {
  Manifest manifest;
  attribution::ImageSet train;
  attribution::ImageSet test;
  std::vector<std::string> model_ids;
};

inline DatasetView load_dataset(const ExperimentConfig& cfg, bool with_train = true) {
  DatasetView v;
  v.manifest = dataset_manifest(cfg);
  v.model_ids = v.manifest.model_ids();
  if (with_train) v.train = load_split(v.manifest, cfg.dataset_dir(), Split::train);
  v.test = load_split(v.manifest, cfg.dataset_dir(), Split::test);
  if (v.test.empty()) fail("empty-split", "the dataset has no test images");
  return v;
}

inline std::filesystem::path classifier_path(const std::filesystem::path& dir, int k) {
  return dir / ("classifier_" + std::to_string(k) + ".ckpt");
}

inline std::vector<attribution::Classifier> load_classifiers(const std::filesystem::path& dir, int n,
                                                             const std::string& command) {
  std::vector<attribution::Classifier> out;
  for (int k = 0; k < n; ++k) {
    require(classifier_path(dir, k), command);
    out.push_back(attribution::load_classifier(classifier_path(dir, k)));
  }
  return out;
}

inline auto epoch_logger(std::ostream& log, const std::string& what) {
  return [&log, what](int k, const nn::EpochRecord& r) {
    log << what << " seed " << k << " epoch " << r.epoch << " loss " << r.mean_loss << " train-acc "
        << r.accuracy << '\n';
  };
}

inline std::vector<attribution::Classifier> step_attr_train(const ExperimentConfig& cfg, std::ostream& log) {
  const auto v = load_dataset(cfg);
  auto clfs = attribution::train_attributor(v.train, v.model_ids, cfg.classifier, nullptr,
                                            epoch_logger(log, "attribution"));
  std::filesystem::remove(cfg.attribution_dir() / "embeddings.csv");
  for (std::size_t k = 0; k < clfs.size(); ++k) {
    attribution::save_classifier(classifier_path(cfg.attribution_dir(), int(k)), clfs[k]);
    nn::write_loss_curve_csv((cfg.attribution_dir() / ("curve_" + std::to_string(k) + ".csv")).string(),
                             clfs[k].curve);
  }
  return clfs;
}

// Per-seed checks of the qualitative ordering: adversarial >= L1, 4x >= 2x,
// and overall accuracy at least five times chance.
inline nlohmann::json ordering_checks(const attribution::AttributionReport& r) {
  nlohmann::json j = nlohmann::json::array();
  const double chance = 1.0 / double(r.classes.size());
  auto group = [&](const std::string& axis, const std::string& value) -> const attribution::GroupAccuracy* {
    const auto a = r.grouped.find(axis);
    if (a == r.grouped.end()) return nullptr;
    const auto g = a->second.find(value);
    return g == a->second.end() ? nullptr : &g->second;
  };
  for (std::size_t k = 0; k < r.per_seed.size(); ++k) {
    const auto* l1 = group("loss", "l1");
    double adv = 0.0;
    std::size_t adv_n = 0;
    for (const char* name : {"vgg-adv", "resnet-adv"}) {
      if (const auto* g = group("loss", name)) {
        adv += double(g->correct[k]);
        adv_n += g->images;
      }
    }
    const auto* x2 = group("scale", "2x");
    const auto* x4 = group("scale", "4x");
    nlohmann::json s = {{"seed_index", k}, {"overall", r.per_seed[k]}, {"chance", chance}};
    s["overall_ge_5x_chance"] = r.per_seed[k] >= 5.0 * chance;
    if (l1 && adv_n) {
      s["adv"] = adv / double(adv_n);
      s["l1"] = l1->per_seed[k];
      s["adv_ge_l1"] = adv / double(adv_n) >= l1->per_seed[k];
    }
    if (x2 && x4) {
      s["4x"] = x4->per_seed[k];
      s["2x"] = x2->per_seed[k];
      s["4x_ge_2x"] = x4->per_seed[k] >= x2->per_seed[k];
    }
    j.push_back(s);
  }
  return j;
}

inline attribution::AttributionReport step_attr_eval(const ExperimentConfig& cfg, std::ostream& log) {
  const auto v = load_dataset(cfg);
  const auto clfs = load_classifiers(cfg.attribution_dir(), cfg.classifier.n_seeds, "attr-train");
  const auto rep = attribution::evaluate_grouped(clfs, v.train, v.test);
  const auto dir = cfg.attribution_dir();
  write_text(dir / "report.txt", attribution::report_text(rep));
  write_text(dir / "grouped.csv", attribution::grouped_csv(rep));
  write_text(dir / "confusion.csv", attribution::confusion_csv(rep));
  auto j = attribution::to_json(rep);
  j["ordering"] = ordering_checks(rep);
  write_json(dir / "report.json", j);
  log << attribution::report_text(rep);
  return rep;
}

// Test-set features of the first attribution classifier, cached as
// attribution/embeddings.csv.
inline attribution::EmbeddingSet attr_embeddings(const ExperimentConfig& cfg) {
  const auto path = cfg.attribution_dir() / "embeddings.csv";
  if (std::filesystem::exists(path)) return attribution::read_embedding_csv(path);
  const auto clf = load_classifiers(cfg.attribution_dir(), 1, "attr-train").front();
  const auto m = dataset_manifest(cfg);
  auto emb = attribution::embed(clf, load_split(m, cfg.dataset_dir(), Split::test));
  attribution::write_embedding_csv(path, emb);
  return emb;
}

inline attribution::DistanceRatioMatrix step_attr_ratio(const ExperimentConfig& cfg, std::ostream& log) {
  const auto r = attribution::distance_ratio_matrix(attr_embeddings(cfg));
  write_text(cfg.attribution_dir() / "ratio.csv", attribution::ratio_csv(r));
  log << "ratio: " << r.models.size() << " models written to " << (cfg.attribution_dir() / "ratio.csv").string()
      << '\n';
  return r;
}

inline attribution::TsneResult step_attr_tsne(const ExperimentConfig& cfg, std::ostream& log) {
  const auto emb = attr_embeddings(cfg);
  auto tcfg = cfg.tsne;
  tcfg.perplexity = std::min(tcfg.perplexity, (double(emb.size()) - 1.0) / 3.0 - 1e-9);
  auto r = attribution::tsne_export(emb, tcfg);
  write_text(cfg.attribution_dir() / "tsne.csv", attribution::tsne_csv(emb, r));
  log << "tsne: " << emb.size() << " points written to " << (cfg.attribution_dir() / "tsne.csv").string() << '\n';
  return r;
}

// Mean accuracy over the triplets whose loss is adversarial, per scorer.
inline std::vector<double> adversarial_triplet_accuracy(const attribution::TripletReport& r) {
  std::vector<double> correct, images;
  for (const auto& row : r.rows) {
    const auto spec = zoo::ModelSpec::parse(row.members.front());
    if (!zoo::is_adversarial(spec.loss)) continue;
    correct.resize(row.per_run.size(), 0.0);
    images.resize(row.per_run.size(), 0.0);
    for (std::size_t k = 0; k < row.per_run.size(); ++k) {
      correct[k] += row.per_run[k] * double(row.images);
      images[k] += double(row.images);
    }
  }
  for (std::size_t k = 0; k < correct.size(); ++k) correct[k] = images[k] > 0 ? correct[k] / images[k] : 0.0;
  return correct;
}

struct TripletComparison {
  attribution::TripletReport learned;
  attribution::TripletReport prnu;
  MeanStd learned_adv;
  MeanStd prnu_adv;
};

inline TripletComparison step_seed_triplet(const ExperimentConfig& cfg, std::ostream& log) {
  const auto v = load_dataset(cfg);
  const auto clfs = load_classifiers(cfg.attribution_dir(), cfg.classifier.n_seeds, "attr-train");
  TripletComparison c;
  c.learned = attribution::seed_triplet_eval(clfs, v.test, {{}, true});
  c.prnu = prnu::prnu_seed_eval(v.train, v.test, cfg.prnu);
  c.learned_adv = mean_std(adversarial_triplet_accuracy(c.learned));
  c.prnu_adv = mean_std(adversarial_triplet_accuracy(c.prnu));
  const auto dir = cfg.root() / "seed_triplet";
  std::string text = "learned attribution\n" + attribution::triplet_text(c.learned) + "\nPRNU baseline\n" +
                     attribution::triplet_text(c.prnu) + "\nadversarial triplets: learned " +
                     attribution::percent(c.learned_adv) + ", PRNU " + attribution::percent(c.prnu_adv) + "\n";
  write_text(dir / "report.txt", text);
  write_text(dir / "learned.csv", attribution::triplet_csv(c.learned));
  write_text(dir / "prnu.csv", attribution::triplet_csv(c.prnu));
  write_json(dir / "report.json", {{"learned", attribution::to_json(c.learned)},
                                   {"prnu", attribution::to_json(c.prnu)},
                                   {"adversarial", {{"learned", c.learned_adv.mean}, {"prnu", c.prnu_adv.mean}}}});
  log << text;
  return c;
}

inline prnu::FingerprintDb step_prnu_build(const ExperimentConfig& cfg, std::ostream& log) {
  const auto m = dataset_manifest(cfg);
  prnu::FingerprintDb db;
  db.config = cfg.prnu;
  db.entries = prnu::build_database(load_split(m, cfg.dataset_dir(), Split::train), cfg.prnu);
  save_fingerprint_db(cfg.prnu_dir() / "fingerprints.db", db);
  log << "prnu: " << db.entries.size() << " fingerprints\n";
  return db;
}

inline attribution::AttributionReport step_prnu_eval(const ExperimentConfig& cfg, std::ostream& log) {
  require(cfg.prnu_dir() / "fingerprints.db", "prnu-build");
  const auto db = prnu::load_fingerprint_db(cfg.prnu_dir() / "fingerprints.db");
  const auto m = dataset_manifest(cfg);
  const auto test = load_split(m, cfg.dataset_dir(), Split::test);
  const auto rep = attribution::grouped_report({prnu::score_fingerprints(db.entries, test, db.config)});
  write_text(cfg.prnu_dir() / "report.txt", attribution::report_text(rep));
  write_text(cfg.prnu_dir() / "grouped.csv", attribution::grouped_csv(rep));
  write_json(cfg.prnu_dir() / "report.json", attribution::to_json(rep));
  log << attribution::report_text(rep);
  return rep;
}

inline std::filesystem::path parser_dir(const ExperimentConfig& cfg, const parsing::ParserTask& t) {
  return cfg.parsing_dir() / t.name();
}

inline std::vector<parsing::ParserTask> sensible_cells(const parsing::TaskGrid& g) {
  std::vector<parsing::ParserTask> out;
  for (const auto& t : g.cells()) {
    if (parsing::nonsensical_reason(t).empty()) out.push_back(t);
  }
  return out;
}

inline void step_parse_train(const ExperimentConfig& cfg, std::ostream& log) {
  const auto v = load_dataset(cfg);
  std::vector<zoo::ModelSpec> specs;
  for (const auto& id : v.model_ids) specs.push_back(zoo::ModelSpec::parse(id));
  for (const auto& t : sensible_cells(cfg.parsing)) {
    const auto split = parsing::make_split(specs, t);
    auto logger = epoch_logger(log, t.name());
    const auto parsers = parsing::train_parser(split, v.train, cfg.classifier, logger);
    for (std::size_t k = 0; k < parsers.size(); ++k) {
      attribution::save_classifier(classifier_path(parser_dir(cfg, t), int(k)), parsers[k], {{"task", t}});
    }
  }
}

inline std::map<std::string, parsing::ParserReport> step_parse_eval(const ExperimentConfig& cfg, std::ostream& log) {
  const auto v = load_dataset(cfg, false);
  std::vector<zoo::ModelSpec> specs;
  for (const auto& id : v.model_ids) specs.push_back(zoo::ModelSpec::parse(id));
  std::map<std::string, parsing::ParserReport> reports;
  nlohmann::json j = nlohmann::json::object();
  std::string hist;
  for (const auto& t : sensible_cells(cfg.parsing)) {
    const auto split = parsing::make_split(specs, t);
    const auto parsers = load_classifiers(parser_dir(cfg, t), cfg.classifier.n_seeds, "parse-train");
    auto rep = parsing::evaluate_parser(parsers, split, v.test);
    j[t.name()] = parsing::to_json(rep);
    hist += parsing::histogram_text(rep) + "\n";
    reports.emplace(t.name(), std::move(rep));
  }
  const std::string table = parsing::task_table(cfg.parsing, reports, specs);
  write_text(cfg.parsing_dir() / "table.txt", table);
  write_text(cfg.parsing_dir() / "histograms.txt", hist);
  write_json(cfg.parsing_dir() / "report.json", j);
  log << table;
  return reports;
}

// Trains a classifier on the models not matching the holdout value and
// measures how well its features separate the held-out models.
inline attribution::UnseenReport step_unseen(const ExperimentConfig& cfg, std::ostream& log) {
  const auto v = load_dataset(cfg);
  const auto holdout = parsing::TestValue::parse(cfg.unseen_holdout);
  std::vector<std::string> seen_ids;
  std::set<std::string> unseen_ids;
  for (const auto& id : v.model_ids) {
    if (holdout.matches(zoo::ModelSpec::parse(id))) {
      unseen_ids.insert(id);
    } else {
      seen_ids.push_back(id);
    }
  }
  if (seen_ids.empty() || unseen_ids.size() < 2) {
    fail("bad-holdout", cfg.unseen_holdout + " leaves " + std::to_string(seen_ids.size()) + " seen and " +
                            std::to_string(unseen_ids.size()) + " unseen models", ErrorKind::usage);
  }
  auto setup = cfg.classifier;
  setup.n_seeds = 1;
  const auto clf = attribution::train_attributor(v.train, seen_ids, setup, nullptr, epoch_logger(log, "unseen")).front();
  attribution::ImageSet unseen;
  for (const auto& li : v.test) {
    if (unseen_ids.count(li.model_id)) unseen.push_back(li);
  }
  auto rep = attribution::unseen_model_eval(clf, unseen);
  const auto dir = cfg.unseen_dir();
  attribution::save_classifier(classifier_path(dir, 0), clf, {{"holdout", cfg.unseen_holdout}});
  attribution::write_embedding_csv(dir / "embeddings.csv", rep.embeddings);
  write_text(dir / "ratio.csv", attribution::ratio_csv(rep.ratios));
  nlohmann::json j = {{"holdout", cfg.unseen_holdout}, {"group_mean_ratio", rep.group_mean}};
  write_json(dir / "report.json", j);
  auto tcfg = cfg.tsne;
  tcfg.perplexity = std::min(tcfg.perplexity, (double(rep.embeddings.size()) - 1.0) / 3.0 - 1e-9);
  write_text(dir / "tsne.csv", attribution::tsne_csv(rep.embeddings, attribution::tsne_export(rep.embeddings, tcfg)));
  for (const auto& [g, r] : rep.group_mean) log << "unseen " << g << ": mean off-diagonal R " << r << '\n';
  return rep;
}

inline std::string corpus_stats_csv(const std::vector<std::pair<std::string, CorpusStats>>& rows) {
  std::ostringstream s;
  s.precision(6);
  s << "corpus,images,mean_ppi,bpp_png_mean,bpp_png_std,entropy_mean,entropy_std\n";
  for (const auto& [name, st] : rows) {
    s << name << ',' << st.image_count << ',' << st.mean_ppi << ',' << st.bpp_png.mean << ',' << st.bpp_png.stddev
      << ',' << st.entropy.mean << ',' << st.entropy.stddev << '\n';
  }
  return s.str();
}

// Corpus statistics of the sources and, when a dataset exists, of the
// generated test images of each model.
inline std::string step_stats(const ExperimentConfig& cfg, std::ostream& log) {
  const auto sources = ingest_corpus(cfg.corpus_dir, cfg.ingest, &log);
  std::vector<Image> imgs;
  for (const auto& s : sources.images) imgs.push_back(s.image);
  std::vector<std::pair<std::string, CorpusStats>> rows = {{"sources", corpus_stats(imgs)}};
  if (std::filesystem::exists(cfg.dataset_dir() / kManifestFile)) {
    const auto m = dataset_manifest(cfg);
    std::map<std::string, std::vector<Image>> per_model;
    for (auto& li : load_split(m, cfg.dataset_dir(), Split::test)) per_model[li.model_id].push_back(std::move(li.image));
    for (const auto& [id, v] : per_model) rows.emplace_back(id, corpus_stats(v));
  }
  const std::string csv = corpus_stats_csv(rows);
  write_text(cfg.stats_dir() / "corpus_stats.csv", csv);
  log << csv;
  return csv;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = {"attribution", "seed-triplet", "unseen", "parsing", "prnu", "stats"};
  return names;
}

// Runs one experiment end to end and writes runs/<name>.json with the config,
// seeds, versions and wall time. Reports themselves carry no timing, so in
// deterministic mode a rerun reproduces them byte for byte.
inline nlohmann::json run_experiment(const ExperimentConfig& cfg, const std::string& name, std::ostream& log) {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    fail("unknown-experiment", "unknown experiment '" + name + "'; valid names: " + list, ErrorKind::usage);
  }
  const auto t0 = std::chrono::steady_clock::now();
  nlohmann::json result = nlohmann::json::object();
  if (name == "attribution") {
    step_attr_train(cfg, log);
    result = ordering_checks(step_attr_eval(cfg, log));
  } else if (name == "seed-triplet") {
    const auto c = step_seed_triplet(cfg, log);
    result = {{"learned_adv", c.learned_adv.mean}, {"prnu_adv", c.prnu_adv.mean}};
  } else if (name == "unseen") {
    result = step_unseen(cfg, log).group_mean;
  } else if (name == "parsing") {
    step_parse_train(cfg, log);
    for (const auto& [task, r] : step_parse_eval(cfg, log)) result[task] = r.accuracy.mean;
  } else if (name == "prnu") {
    step_prnu_build(cfg, log);
    result = {{"overall", step_prnu_eval(cfg, log).overall.mean}};
  } else {
    step_stats(cfg, log);
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  nlohmann::json record = {{"experiment", name},
                           {"config", cfg},
                           {"master_seed", cfg.master_seed},
                           {"classifier_seeds", nlohmann::json::array()},
                           {"versions",
                            {{"sisrfp", kVersion},
                             {"manifest", kManifestHeader},
                             {"zoo_format", zoo::kZooFileVersion},
                             {"denoiser", cfg.prnu.denoiser.version()}}},
                           {"wall_seconds", wall},
                           {"result", result}};
  for (int k = 0; k < cfg.classifier.n_seeds; ++k) record["classifier_seeds"].push_back(cfg.classifier.seed_for(k));
  write_json(cfg.runs_dir() / (name + ".json"), record);
  return record;
}

}  // namespace sisrfp::pipeline
