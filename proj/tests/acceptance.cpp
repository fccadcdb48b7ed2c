// Acceptance gate: one PASS/FAIL line per criterion; exit status is non-zero
// when any criterion fails. Criteria 4-6 share one end-to-end run on a
// 36-model synthetic zoo, so they take most of the wall time.

#include <bit>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "scratch_dir.hpp"
#include "sisrfp/sisrfp.hpp"

using namespace sisrfp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  // Records a failed condition; the first few are reported.
  void require(bool ok, const std::string& what) {
    if (ok) return;
    if (failures < 4) detail << (detail.tellp() > 0 ? "; " : "") << what;
    pass = false;
    ++failures;
  }
  void note(const std::string& s) {
    if (pass) detail << (detail.tellp() > 0 ? "; " : "") << s;
  }

  int failures = 0;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.precision(digits);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// 1. gradients

template <typename T>
nn::Tensor<T> random_tensor(nn::Shape s, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  Rng rng(seed);
  nn::Tensor<T> t(std::move(s));
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

double relative_error(double numeric, double analytic) {
  return std::fabs(numeric - analytic) / std::max({std::fabs(numeric), std::fabs(analytic), 1e-6});
}

// Worst relative error over every parameter and input element of `net`
// under L = sum(r * net(x)), or the cross-entropy head when present.
double network_grad_error(nn::Network<double>& net, nn::Tensor<double> x, std::uint64_t seed,
                          const std::vector<int>& labels) {
  nn::Tensor<double> r;
  if (!net.has_xent_head()) r = random_tensor<double>(net.output_shape(x.dim(0)), seed);
  auto value = [&] {
    const auto y = net.forward(x);
    if (net.has_xent_head()) return nn::softmax_xent(y, labels).loss;
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
    return s;
  };
  const auto tape = net.forward_tape(x);
  nn::Tensor<double> g = net.has_xent_head() ? nn::softmax_xent(tape.output(), labels).grad : r;
  auto grads = net.zero_grads();
  const nn::Tensor<double> gx = net.backward(tape, g, grads, 0, true);
  double worst = 0.0;
  for (std::size_t li = 0; li < net.size(); ++li) {
    auto params = net.layer(li).params();
    for (std::size_t p = 0; p < params.size(); ++p) {
      for (std::size_t i = 0; i < params[p].size(); ++i) {
        worst = std::max(worst, relative_error(oracle::central_diff(value, params[p][i], 1e-4), grads[li][p][i]));
      }
    }
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, relative_error(oracle::central_diff(value, x[i], 1e-4), gx[i]));
  }
  return worst;
}

template <typename F>
double loss_grad_error(nn::Tensor<double>& x, F&& loss_and_grad) {
  const nn::Tensor<double> g = loss_and_grad().second;
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double num = oracle::central_diff([&] { return loss_and_grad().first; }, x[i], 1e-4);
    worst = std::max(worst, relative_error(num, g[i]));
  }
  return worst;
}

Verdict criterion_gradients() {
  using nn::LayerKind;
  Verdict v;
  const auto t0 = Clock::now();
  std::set<LayerKind> covered;
  double worst = 0.0;
  auto check_net = [&](std::vector<nn::LayerSpec> specs, nn::Shape in, std::uint64_t seed, std::vector<int> labels = {}) {
    for (const auto& s : specs) covered.insert(s.kind);
    nn::Network<double> net(std::move(specs), in, seed);
    nn::Shape xs = {std::size_t(2)};
    xs.insert(xs.end(), in.begin(), in.end());
    worst = std::max(worst, network_grad_error(net, random_tensor<double>(xs, seed + 1), seed + 2, labels));
  };
  for (auto [stride, pad] : {std::pair{1, 1}, std::pair{2, 0}, std::pair{2, 1}}) {
    check_net({{LayerKind::conv2d, "c", 2, 3, 3, stride, pad}}, {2, 6, 5}, 100 + stride * 10 + pad);
  }
  check_net({{LayerKind::conv2d, "c1", 3, 4, 3, 1, 1},
             {LayerKind::relu, "r1"},
             {LayerKind::maxpool, "p1", 0, 0, 2},
             {LayerKind::conv2d, "c2", 4, 4, 3, 1, 1},
             {LayerKind::batchless_norm, "n2"},
             {LayerKind::relu, "r2"},
             {LayerKind::global_avg_pool, "gap"},
             {LayerKind::linear, "fc", 4, 3},
             {LayerKind::softmax_xent, "loss"}},
            {3, 8, 8}, 21, {0, 2});
  check_net({{LayerKind::upsample, "up", 0, 0, 3, 1, 1, 2},
             {LayerKind::conv2d, "c", 2, 2, 3, 1, 1},
             {LayerKind::batchless_norm, "n4"},
             {LayerKind::sigmoid, "s"},
             {LayerKind::global_avg_pool, "gap"},
             {LayerKind::linear, "fc", 2, 5},
             {LayerKind::batchless_norm, "n2"},
             {LayerKind::sigmoid, "s2"}},
            {2, 3, 3}, 31);
  nn::ClassifierConfig small;
  small.input_size = 8;
  small.conv_widths = {3, 4};
  small.feature_width = 5;
  small.normalize = true;
  check_net(nn::classifier_specs(small, 3), {3, 8, 8}, 41, {1, 2});
  check_net(nn::discriminator_specs(2), {3, 8, 8}, 51);
  const int kinds = int(LayerKind::upsample) + 1;
  v.require(int(covered.size()) == kinds,
            "layer kinds covered " + std::to_string(covered.size()) + " of " + std::to_string(kinds));

  // Elementwise losses and the composite SR loss, w.r.t. the prediction.
  auto pred = random_tensor<double>({2, 3, 4, 4}, 61, 0.05, 0.95);
  const auto target = random_tensor<double>({2, 3, 4, 4}, 62, 0.05, 0.95);
  worst = std::max(worst, loss_grad_error(pred, [&] {
                     auto r = nn::l1_loss(pred, target);
                     return std::pair{r.loss, r.grad};
                   }));
  worst = std::max(worst, loss_grad_error(pred, [&] {
                     auto r = nn::mse_loss(pred, target);
                     return std::pair{r.loss, r.grad};
                   }));
  for (double t : {0.0, 1.0}) {
    worst = std::max(worst, loss_grad_error(pred, [&] {
                       auto r = nn::bce_loss(pred, t);
                       return std::pair{r.loss, r.grad};
                     }));
  }
  nn::ClassifierConfig phi_cfg;
  phi_cfg.input_size = 8;
  phi_cfg.conv_widths = {3, 4};
  phi_cfg.feature_width = 4;
  auto phi = std::make_shared<const nn::Network<double>>(nn::classifier_specs(phi_cfg, 2), nn::Shape{3, 8, 8}, 5);
  auto disc = std::make_shared<const nn::Network<double>>(nn::discriminator_specs(2), nn::Shape{3, 8, 8}, 6);
  for (const bool resnet : {true, false}) {
    zoo::LossSpec<double> spec;
    spec.kind = zoo::LossSpec<double>::Kind::composite;
    spec.adv_weight = 0.5;
    spec.perceptual = resnet ? zoo::resnet_style_perceptual(phi) : zoo::vgg_style_perceptual(phi);
    spec.discriminator = disc;
    auto sr = random_tensor<double>({1, 3, 8, 8}, 70 + resnet, 0.0, 1.0);
    const auto hr = random_tensor<double>({1, 3, 8, 8}, 72, 0.0, 1.0);
    worst = std::max(worst, loss_grad_error(sr, [&] {
                       auto r = zoo::composite_loss(spec, sr, hr);
                       return std::pair{r.loss, r.grad};
                     }));
  }
  const double secs = seconds_since(t0);
  v.require(worst < 1e-3, "max relative error " + fmt(worst) + " >= 1e-3");
  v.require(secs < 60.0, "took " + fmt(secs) + " s >= 60 s");
  v.note("max rel err " + fmt(worst) + ", " + fmt(secs) + " s");
  return v;
}

// ---------------------------------------------------------------------------
// 2. R(A,B)

Verdict criterion_distance_ratio() {
  Verdict v;
  Rng rng(2024);
  double worst = 0.0, worst_inv = 0.0;
  bool self_exact = true;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 1 + rng.below(8);
    const auto a = oracle::random_points(rng, 2 + rng.below(29), dim, 0.0);
    const auto b = oracle::random_points(rng, 2 + rng.below(29), dim, rng.uniform(0, 3));
    const double r = attribution::distance_ratio(a, b);
    worst = std::max(worst, std::fabs(r - oracle::brute_ratio(a, b)));
    self_exact = self_exact && attribution::distance_ratio(a, a) == 1.0 && attribution::distance_ratio(b, b) == 1.0;

    const auto rot = oracle::random_rotation(rng, dim);
    std::vector<double> shift(dim), zero(dim, 0.0);
    for (double& s : shift) s = rng.uniform(-50, 50);
    std::vector<std::vector<double>> ident(dim, std::vector<double>(dim, 0.0));
    for (std::size_t i = 0; i < dim; ++i) ident[i][i] = 1.0;
    const double scale = rng.uniform(0.01, 100);
    const double moved =
        attribution::distance_ratio(oracle::transform(a, rot, shift, 1.0), oracle::transform(b, rot, shift, 1.0));
    const double scaled =
        attribution::distance_ratio(oracle::transform(a, ident, zero, scale), oracle::transform(b, ident, zero, scale));
    worst_inv = std::max({worst_inv, std::fabs(moved - r), std::fabs(scaled - r)});
  }
  v.require(worst <= 1e-9, "brute-force gap " + fmt(worst));
  v.require(self_exact, "R(A,A) != 1");
  v.require(worst_inv <= 1e-9, "invariance gap " + fmt(worst_inv));
  v.note("oracle gap " + fmt(worst) + ", invariance gap " + fmt(worst_inv));
  return v;
}

// ---------------------------------------------------------------------------
// 3. PRNU on planted patterns

Verdict criterion_prnu() {
  Verdict v;
  const auto t0 = Clock::now();
  constexpr int kSources = 5, kPerSplit = 50, kSize = 64;
  constexpr double kAmp = 0.02, kNoise = 0.01;
  // Walsh-Hadamard rows: entry (-1)^popcount(row & i); distinct rows are orthogonal.
  std::vector<Plane> patterns;
  for (int k = 0; k < kSources; ++k) {
    const unsigned row = 1u + unsigned(k) * 613u;
    Plane p(kSize, kSize);
    for (int i = 0; i < kSize * kSize; ++i) p.data[i] = (std::popcount(row & unsigned(i)) % 2) ? -1.0f : 1.0f;
    patterns.push_back(p);
  }
  for (int i = 0; i < kSources; ++i) {
    for (int j = i + 1; j < kSources; ++j) {
      double dot = 0.0;
      for (std::size_t t = 0; t < patterns[i].data.size(); ++t) dot += patterns[i].data[t] * patterns[j].data[t];
      v.require(dot == 0.0, "patterns not orthogonal");
    }
  }
  prnu::PrnuConfig cfg;
  cfg.crop = kSize;
  auto make = [&](int k, std::uint64_t seed) {
    Rng rng(hash_combine(seed, 77));
    Image img = oracle::natural_probe(seed, kSize, kSize, 3);
    for (int y = 0; y < kSize; ++y) {
      for (int x = 0; x < kSize; ++x) {
        for (int c = 0; c < 3; ++c) {
          img.at(y, x, c) += static_cast<float>(kAmp * patterns[k].at(y, x) + kNoise * rng.normal());
        }
      }
    }
    img.clamp01();
    return img;
  };
  std::vector<prnu::Fingerprint> db;
  for (int k = 0; k < kSources; ++k) {
    prnu::FingerprintAccumulator acc;
    for (int i = 0; i < kPerSplit; ++i) acc.add(prnu::residual(make(k, 10000 * k + i), cfg));
    db.push_back(acc.finish("source" + std::to_string(k)));
  }
  int correct = 0;
  for (int k = 0; k < kSources; ++k) {
    for (int i = 0; i < kPerSplit; ++i) {
      correct += prnu::attribute_nearest(make(k, 10000 * k + 5000 + i), db, cfg).front().model_id ==
                 "source" + std::to_string(k);
    }
  }
  const double acc = double(correct) / (kSources * kPerSplit);
  const double secs = seconds_since(t0);
  v.require(acc >= 0.95, "top-1 " + fmt(100 * acc) + "% < 95%");
  v.require(secs < 120.0, "took " + fmt(secs) + " s");
  v.note("top-1 " + fmt(100 * acc) + "%, " + fmt(secs) + " s");
  return v;
}

// ---------------------------------------------------------------------------
// 4-6. End-to-end run on the 36-model zoo

struct EndToEnd {
  bool ok = false;
  std::string error;
  double dataset_seconds = 0, attribution_seconds = 0;
  nlohmann::json attribution, triplet, parsing;
  std::string parsing_table;
};

pipeline::ExperimentConfig desk_config(const fs::path& root) {
  pipeline::ExperimentConfig c;
  c.corpus_dir = (root / "corpus").string();
  c.output_root = (root / "out").string();
  c.master_seed = 7;
  c.zoo.architectures = {zoo::Architecture::bicubic, zoo::Architecture::learned};
  c.zoo.datasets = {zoo::Dataset::div2k};
  c.zoo.scales = {2, 4};
  c.zoo.losses = {zoo::Loss::l1, zoo::Loss::vgg_adv, zoo::Loss::resnet_adv};
  c.zoo.seeds = {1, 2, 3};
  c.splits = {48, 2, 20};
  c.classifier.master_seed = c.master_seed;
  c.classifier.n_seeds = 3;
  c.prnu.crop = 64;
  c.parsing.predicted = {zoo::Axis::scale};
  c.parsing.test_values = {"seed=3", "loss=l1"};
  return c;
}

EndToEnd run_end_to_end(const fs::path& root) {
  EndToEnd e;
  try {
    const auto cfg = desk_config(root);
    pipeline::write_synthetic_corpus(cfg.corpus_dir, 70, 96, 96, 11);
    std::ofstream log(root / "run.log");
    auto t0 = Clock::now();
    const auto sum = pipeline::step_dataset(cfg, log);
    e.dataset_seconds = seconds_since(t0);
    if (!sum.complete || sum.failed) fail("dataset", std::to_string(sum.failed) + " generation failures");
    t0 = Clock::now();
    e.attribution = pipeline::run_experiment(cfg, "attribution", log)["result"];
    e.attribution_seconds = seconds_since(t0);
    e.triplet = pipeline::run_experiment(cfg, "seed-triplet", log)["result"];
    e.parsing = pipeline::run_experiment(cfg, "parsing", log)["result"];
    std::ifstream table(cfg.parsing_dir() / "table.txt");
    e.parsing_table.assign(std::istreambuf_iterator<char>(table), {});
    e.ok = true;
  } catch (const std::exception& ex) {
    e.error = ex.what();
  }
  return e;
}

Verdict criterion_attribution(const EndToEnd& e) {
  Verdict v;
  if (!e.ok) {
    v.require(false, "run failed: " + e.error);
    return v;
  }
  v.require(e.attribution.size() == 3, "expected 3 classifier seeds");
  for (const auto& s : e.attribution) {
    const std::string k = "seed " + std::to_string(s["seed_index"].get<int>());
    v.require(s.value("adv_ge_l1", false), k + ": adv " + fmt(s.value("adv", 0.0)) + " < l1 " + fmt(s.value("l1", 0.0)));
    v.require(s.value("4x_ge_2x", false), k + ": 4x " + fmt(s.value("4x", 0.0)) + " < 2x " + fmt(s.value("2x", 0.0)));
    v.require(s.value("overall_ge_5x_chance", false),
              k + ": overall " + fmt(s["overall"].get<double>()) + " < 5x chance " + fmt(5 * s["chance"].get<double>()));
    v.note(k + " overall " + fmt(100 * s["overall"].get<double>()) + "% adv " + fmt(100 * s.value("adv", 0.0)) +
           "% l1 " + fmt(100 * s.value("l1", 0.0)) + "% 4x " + fmt(100 * s.value("4x", 0.0)) + "% 2x " +
           fmt(100 * s.value("2x", 0.0)) + "%");
  }
  const double total = e.dataset_seconds + e.attribution_seconds;
  v.require(total < 1800.0, "end to end " + fmt(total) + " s >= 1800 s");
  v.note("36 models, dataset " + fmt(e.dataset_seconds) + " s + attribution " + fmt(e.attribution_seconds) + " s");
  return v;
}

Verdict criterion_seed_triplets(const EndToEnd& e) {
  Verdict v;
  if (!e.ok) {
    v.require(false, "run failed: " + e.error);
    return v;
  }
  const double learned = e.triplet["learned_adv"].get<double>();
  const double prnu = e.triplet["prnu_adv"].get<double>();
  v.require(learned > 0.90, "learned " + fmt(100 * learned) + "% <= 90%");
  v.require(learned > prnu, "learned " + fmt(100 * learned) + "% <= PRNU " + fmt(100 * prnu) + "%");
  v.note("adv triplets: learned " + fmt(100 * learned) + "%, PRNU " + fmt(100 * prnu) + "%");
  return v;
}

// Cells of the default 4 x 6 parsing grid that must be rejected.
Verdict check_dashes() {
  Verdict v;
  const parsing::TaskGrid grid;
  const std::set<std::pair<std::string, std::string>> expected = {
      {"loss", "loss=vgg-adv"},          {"loss", "loss=l1"},
      {"architecture", "architecture=edge"}, {"architecture", "architecture=nonlocal"},
      {"dataset", "seed=3"},             {"dataset", "dataset=flickr2k"}};
  std::set<std::pair<std::string, std::string>> got;
  zoo::GridConfig full;
  full.datasets = {zoo::kDatasets.begin(), zoo::kDatasets.end()};
  const auto specs = full.enumerate();
  for (const auto& t : grid.cells()) {
    const bool rejected = !parsing::nonsensical_reason(t).empty();
    if (rejected) got.insert({zoo::to_string(t.predicted), t.test_value->str()});
    bool threw = false;
    try {
      parsing::make_split(specs, t);
    } catch (const Error& ex) {
      threw = ex.code() == "nonsensical-task";
    }
    v.require(threw == rejected, t.name() + ": make_split disagrees with the rejection rule");
  }
  v.require(got == expected, "rejected cells differ from the 6 expected dashes");
  // The rendered table carries exactly those dashes.
  const std::string table = parsing::task_table(grid, {}, specs);
  std::size_t dashes = 0;
  for (std::size_t p = table.find("--"); p != std::string::npos; p = table.find("--", p + 2)) ++dashes;
  v.require(dashes == expected.size(), "table shows " + std::to_string(dashes) + " dashes");
  return v;
}

Verdict criterion_parsing(const EndToEnd& e) {
  Verdict v = check_dashes();
  if (!e.ok) {
    v.require(false, "run failed: " + e.error);
    return v;
  }
  const double seed_acc = e.parsing.value("predict-scale_without-seed=3", -1.0);
  const double l1_acc = e.parsing.value("predict-scale_without-loss=l1", -1.0);
  v.require(seed_acc >= 0.95, "scale without seed=3 " + fmt(100 * seed_acc) + "% < 95%");
  v.require(std::fabs(l1_acc - 0.5) <= 0.10, "scale without l1 " + fmt(100 * l1_acc) + "% outside 50 +- 10");
  v.note("scale/seed=3 " + fmt(100 * seed_acc) + "%, scale/l1 " + fmt(100 * l1_acc) + "%, 6 dashes exact");
  return v;
}

// ---------------------------------------------------------------------------
// 7. dataset plumbing

Verdict criterion_dataset(const fs::path& root) {
  Verdict v;
  std::vector<pipeline::SourceImage> sources;
  for (int i = 0; i < 20; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "img%02d", i);
    sources.push_back({id, root / (std::string(id) + ".png"), pipeline::synthesize_source(hash_combine(3, i), 48, 48)});
  }
  zoo::GridConfig g;
  g.architectures = {zoo::Architecture::bicubic, zoo::Architecture::learned};
  g.datasets = {zoo::Dataset::div2k};
  g.seeds = {1};
  const auto z = zoo::build_zoo(g, 5);
  v.require(z.size() == 12, "zoo has " + std::to_string(z.size()) + " models");

  pipeline::DatasetOptions opt;  // 800/100/100 scaled to 20 sources
  opt.master_seed = 9;
  const auto clean = root / "clean", resumed = root / "resumed";
  pipeline::build_dataset(sources, z, clean, opt);
  auto o1 = opt;
  o1.stop_after = 97;
  o1.jobs = 2;
  const auto first = pipeline::build_dataset(sources, z, resumed, o1);
  v.require(!first.complete, "interrupted run reported complete");
  // Tear the journal's last line, as a crash mid-write would.
  {
    const auto j = resumed / pipeline::kJournalFile;
    auto bytes = read_file_bytes(j);
    std::ofstream(j, std::ios::binary | std::ios::trunc).write(reinterpret_cast<const char*>(bytes.data()),
                                                                std::streamsize(bytes.size() - 7));
  }
  const auto second = pipeline::build_dataset(sources, z, resumed, opt);
  v.require(second.complete && second.reused > 0, "resume did not reuse finished rows");

  const auto m = pipeline::read_manifest(clean / pipeline::kManifestFile);
  v.require(m.records.size() == 240, std::to_string(m.records.size()) + " rows, expected 240");
  for (const auto& id : m.model_ids()) {
    const auto tr = m.count(id, pipeline::Split::train), va = m.count(id, pipeline::Split::val),
               te = m.count(id, pipeline::Split::test);
    v.require(tr == 16 && va == 2 && te == 2, id + " split " + std::to_string(tr) + "/" + std::to_string(va) + "/" +
                                                  std::to_string(te));
  }
  std::map<std::string, pipeline::Split> split_of;
  for (const auto& r : m.records) {
    const auto [it, inserted] = split_of.emplace(r.image_id, r.split);
    v.require(inserted || it->second == r.split, r.image_id + " crosses splits");
  }
  v.require(read_file_bytes(clean / pipeline::kManifestFile) == read_file_bytes(resumed / pipeline::kManifestFile),
            "manifests differ between clean and resumed runs");
  for (const auto& r : m.records) {
    if (read_file_bytes(clean / r.generated_path) != read_file_bytes(resumed / r.generated_path)) {
      v.require(false, r.generated_path + " differs");
      break;
    }
  }

  Rng rng(17);
  Image img(41, 38, 3);
  for (float& p : img.data()) p = static_cast<float>(rng.uniform());
  for (int s : {2, 4}) {
    v.require(degrade(img, s) == bicubic_resample(gaussian_blur(img, s / 2.0), 1.0 / s),
              "degrade x" + std::to_string(s) + " is not blur then bicubic");
  }
  v.note("240 rows, 16/2/2 per model, resumed manifest byte-identical (" + std::to_string(second.reused) +
         " rows reused)");
  return v;
}

// ---------------------------------------------------------------------------
// 8. t-SNE

Verdict criterion_tsne() {
  Verdict v;
  Rng rng(88);
  const auto x = oracle::random_points(rng, 12, 5, 0.0);
  const auto p = attribution::tsne_affinities(x, 3.0);
  attribution::Matrix y(24);
  for (double& t : y) t = rng.normal();
  const auto g = attribution::tsne_gradient(p, y);
  double worst = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double fd = oracle::central_diff([&] { return attribution::tsne_kl(p, y); }, y[k], 1e-5);
    worst = std::max(worst, relative_error(fd, g[k]));
  }
  v.require(worst < 1e-3, "gradient rel err " + fmt(worst));

  std::vector<std::vector<double>> pts;
  std::vector<int> labels;
  for (int blob = 0; blob < 2; ++blob) {
    for (int i = 0; i < 30; ++i) {
      std::vector<double> q(10);
      for (double& t : q) t = rng.normal() + (blob ? 8.0 : 0.0);
      pts.push_back(q);
      labels.push_back(blob);
    }
  }
  attribution::TsneConfig cfg;
  cfg.perplexity = 10;
  cfg.iterations = 500;
  const auto r = attribution::tsne(pts, cfg);
  std::vector<std::vector<double>> y2;
  for (std::size_t i = 0; i < pts.size(); ++i) y2.push_back({r.y[2 * i], r.y[2 * i + 1]});
  const double sil = oracle::silhouette(y2, labels);
  v.require(sil > 0.5, "silhouette " + fmt(sil));
  v.require(attribution::tsne(pts, cfg).y == r.y, "not deterministic for a fixed seed");
  v.note("grad rel err " + fmt(worst) + ", silhouette " + fmt(sil));
  return v;
}

// ---------------------------------------------------------------------------
// 9. corpus statistics

Verdict criterion_stats() {
  Verdict v;
  const double flat = grayscale_entropy(Image(20, 20, 3, 0.7f));
  Image uniform(16, 16, 1);
  for (int i = 0; i < 256; ++i) uniform.at(i / 16, i % 16) = float(i) / 255.0f;
  const double full = grayscale_entropy(uniform);
  v.require(flat == 0.0, "constant image entropy " + fmt(flat));
  v.require(full == 8.0, "uniform histogram entropy " + fmt(full, 17));
  double worst = 0.0;
  for (int c : {1, 3}) {
    for (std::uint64_t seed : {1u, 2u}) {
      Rng rng(seed * 31 + c);
      Image img(64, 64, c);
      for (float& p : img.data()) p = static_cast<float>(rng.uniform());
      img = quantize8(img);
      const double ours = png_bits_per_pixel(img);
      const double ref = 8.0 * double(oracle::reference_png(img).size()) / double(img.pixel_count());
      worst = std::max(worst, std::fabs(ours - ref) / ref);
    }
  }
  v.require(worst <= 0.10, "bpp off by " + fmt(100 * worst) + "%");
  v.note("entropy 0 and 8 exact, bpp within " + fmt(100 * worst) + "% of reference");
  return v;
}

}  // namespace

int main() {
  ScratchDir scratch("acceptance");
  int failed = 0;
  auto report = [&](int n, const std::string& name, const Verdict& v) {
    std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << "  " << name << "  (" << v.detail.str()
              << ")" << std::endl;
    failed += !v.pass;
  };
  auto guarded = [](auto&& fn) {
    try {
      return fn();
    } catch (const std::exception& ex) {
      Verdict v;
      v.require(false, std::string("exception: ") + ex.what());
      return v;
    }
  };
  report(1, "gradient checks", guarded(criterion_gradients));
  report(2, "R(A,B) oracle", guarded(criterion_distance_ratio));
  report(3, "PRNU planted patterns", guarded(criterion_prnu));
  fs::create_directories(scratch / "e2e");
  const EndToEnd e2e = run_end_to_end(scratch / "e2e");
  report(4, "attribution ordering", guarded([&] { return criterion_attribution(e2e); }));
  report(5, "seed-triplet distinction", guarded([&] { return criterion_seed_triplets(e2e); }));
  report(6, "parsing protocol", guarded([&] { return criterion_parsing(e2e); }));
  fs::create_directories(scratch / "dataset");
  report(7, "dataset plumbing", guarded([&] { return criterion_dataset(scratch / "dataset"); }));
  report(8, "t-SNE", guarded(criterion_tsne));
  report(9, "corpus statistics", guarded(criterion_stats));
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
