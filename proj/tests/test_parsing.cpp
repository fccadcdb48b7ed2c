#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sisrfp/parsing/parsing.hpp"

using namespace sisrfp;
using namespace sisrfp::parsing;

namespace {

std::vector<ModelSpec> default_zoo() { return zoo::GridConfig{}.enumerate(); }

std::vector<ModelSpec> four_dataset_zoo() {
  zoo::GridConfig g;
  g.datasets = {zoo::kDatasets.begin(), zoo::kDatasets.end()};
  return g.enumerate();
}

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST(MakeSplit, HeldOutSeed) {
  const auto split = make_split(default_zoo(), {Axis::scale, TestValue::parse("seed=3")});
  for (const auto& m : split.train) EXPECT_NE(m.seed, 3);
  for (const auto& m : split.test) EXPECT_EQ(m.seed, 3);
  std::set<int> train_seeds;
  for (const auto& m : split.train) train_seeds.insert(m.seed);
  EXPECT_EQ(train_seeds, (std::set<int>{1, 2}));
  EXPECT_EQ(split.train.size() + split.test.size(), default_zoo().size());
  EXPECT_EQ(split.class_set, (std::vector<std::string>{"2x", "4x"}));
  EXPECT_EQ(split.chance_baseline(), 0.5);
}

TEST(MakeSplit, DashCellsMatchTheParserTable) {
  const auto zoo = four_dataset_zoo();
  // rows: scale, loss, architecture, dataset; columns as in TaskGrid defaults
  const std::vector<std::vector<bool>> dash = {{false, false, false, false, false, false},
                                               {false, false, false, false, true, true},
                                               {false, false, true, true, false, false},
                                               {true, true, false, false, false, false}};
  const TaskGrid grid;
  int sensible = 0;
  for (std::size_t r = 0; r < grid.predicted.size(); ++r) {
    for (std::size_t c = 0; c < grid.test_values.size(); ++c) {
      const ParserTask t{grid.predicted[r], TestValue::parse(grid.test_values[c])};
      const std::string code = code_of([&] { make_split(zoo, t); });
      EXPECT_EQ(code == "nonsensical-task", dash[r][c]) << t.name();
      if (!dash[r][c]) {
        ++sensible;
        EXPECT_EQ(code, "") << t.name();
      }
    }
  }
  EXPECT_EQ(sensible, 18);
}

TEST(MakeSplit, NonsensicalErrorNamesTheRule) {
  try {
    make_split(default_zoo(), {Axis::loss, TestValue::parse("loss=l1")});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "nonsensical-task");
    EXPECT_NE(std::string(e.what()).find("removes that class"), std::string::npos);
  }
  EXPECT_EQ(code_of([] { make_split(default_zoo(), {Axis::seed, std::nullopt}); }), "nonsensical-task");
}

TEST(MakeSplit, AlwaysDisjointAndExhaustive) {
  const auto zoo = four_dataset_zoo();
  for (const auto& t : TaskGrid{}.cells()) {
    if (!nonsensical_reason(t).empty()) continue;
    const auto split = make_split(zoo, t);
    std::set<ModelSpec> train(split.train.begin(), split.train.end());
    for (const auto& m : split.test) {
      EXPECT_FALSE(train.count(m)) << t.name();
      EXPECT_TRUE(t.test_value->matches(m));
    }
    EXPECT_FALSE(split.test.empty()) << t.name();
  }
}

TEST(MakeSplit, ChanceBaselines) {
  const auto zoo = four_dataset_zoo();
  EXPECT_DOUBLE_EQ(make_split(zoo, {Axis::scale, TestValue::parse("loss=l1")}).chance_baseline(), 0.5);
  EXPECT_DOUBLE_EQ(make_split(zoo, {Axis::loss, TestValue::parse("seed=3")}).chance_baseline(), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(make_split(zoo, {Axis::architecture, TestValue::parse("loss=l1")}).chance_baseline(), 0.2);
  EXPECT_DOUBLE_EQ(make_split(zoo, {Axis::dataset, TestValue::parse("loss=l1")}).chance_baseline(), 0.25);
}

TEST(MakeSplit, DatasetParserUsesOnlySeedOne) {
  const auto split = make_split(four_dataset_zoo(), {Axis::dataset, TestValue::parse("architecture=edge")});
  for (const auto& m : split.train) EXPECT_EQ(m.seed, 1);
  for (const auto& m : split.test) EXPECT_EQ(m.seed, 1);
  std::map<std::string, int> freq;
  for (const auto& m : split.train) ++freq[m.value(Axis::dataset)];
  for (const auto& [d, n] : freq) EXPECT_EQ(n, freq.begin()->second) << d;
}

TEST(MakeSplit, UnknownTestValue) {
  EXPECT_EQ(code_of([] { make_split(default_zoo(), {Axis::scale, TestValue::parse("seed=9")}); }),
            "unknown-test-value");
}

TEST(TrainParser, ClassMissingFromTraining) {
  // 4x exists only among L1 models, so holding out L1 leaves no 4x training model
  std::vector<ModelSpec> zoo;
  for (int seed : {1, 2}) {
    zoo.push_back({zoo::Architecture::bicubic, zoo::Dataset::div2k, 2, zoo::Loss::vgg_adv, seed});
    zoo.push_back({zoo::Architecture::bicubic, zoo::Dataset::div2k, 4, zoo::Loss::l1, seed});
  }
  const auto split = make_split(zoo, {Axis::scale, TestValue::parse("loss=l1")});
  EXPECT_EQ(code_of([&] { train_parser(split, {}, {}); }), "class-absent-in-train");
}

TEST(ParserReport, ConstantParserScoresClassFrequency) {
  std::vector<std::string> ids;
  for (int i = 0; i < 7; ++i) ids.push_back(ModelSpec{zoo::Architecture::edge, zoo::Dataset::div2k, 2}.id());
  for (int i = 0; i < 3; ++i) ids.push_back(ModelSpec{zoo::Architecture::edge, zoo::Dataset::div2k, 4}.id());
  const std::vector<std::vector<int>> always_2x(2, std::vector<int>(ids.size(), 0));
  const auto rep = parser_report("t", {"2x", "4x"}, Axis::scale, ids, always_2x);
  EXPECT_DOUBLE_EQ(rep.accuracy.mean, 0.7);
  EXPECT_EQ(rep.chance_baseline, 0.5);
  for (const auto& h : rep.histograms) {
    for (const auto& run : h.per_run) {
      std::size_t sum = 0;
      for (std::size_t c : run) sum += c;
      EXPECT_EQ(sum, h.images);
    }
  }
}

TEST(ParserReport, OutOfClassSetIsHistogramOnly) {
  const std::vector<std::string> ids = {
      ModelSpec{zoo::Architecture::edge, zoo::Dataset::div2k, 2, zoo::Loss::l1}.id(),
      ModelSpec{zoo::Architecture::edge, zoo::Dataset::div2k, 2, zoo::Loss::resnet_adv}.id()};
  const auto rep = parser_report("t", {"l1", "vgg-adv"}, Axis::loss, ids, {{0, 1}});
  EXPECT_EQ(rep.scored_images, 1u);
  EXPECT_EQ(rep.accuracy.mean, 1.0);
  ASSERT_EQ(rep.histograms.size(), 2u);
  EXPECT_FALSE(rep.histograms[1].in_class_set);
  EXPECT_NE(histogram_text(rep).find("out of class set"), std::string::npos);
}

TEST(ParserEndToEnd, ScaleParserOnSeparableImages) {
  // 4x images carry column stripes, 2x images do not; hold out seed 2
  std::vector<ModelSpec> zoo;
  for (int scale : {2, 4}) {
    for (int seed : {1, 2}) zoo.push_back({zoo::Architecture::bicubic, zoo::Dataset::div2k, scale, zoo::Loss::l1, seed});
  }
  attribution::ImageSet images;
  for (const auto& m : zoo) {
    for (int i = 0; i < 16; ++i) {
      Image img = oracle::natural_probe(std::uint64_t(i + 40 * m.seed), 20, 20);
      if (m.scale == 4) {
        for (int y = 0; y < 20; ++y) {
          for (int x = 0; x < 20; ++x) {
            for (int c = 0; c < 3; ++c) img.at(y, x, c) += (x % 2 ? 0.1f : -0.1f);
          }
        }
        img.clamp01();
      }
      images.push_back({"i" + std::to_string(i), m.id(), img});
    }
  }
  const auto split = make_split(zoo, {Axis::scale, TestValue::parse("seed=2")});
  attribution::ClassifierSetup setup;
  setup.arch.input_size = 16;
  setup.arch.conv_widths = {4, 8};
  setup.arch.feature_width = 8;
  setup.schedule = {1, 40, 1};
  setup.optimizer.learning_rate = 0.01;
  setup.n_seeds = 2;
  const auto parsers = train_parser(split, images, setup);
  const auto rep = evaluate_parser(parsers, split, images);
  EXPECT_EQ(rep.scored_images, 32u);
  EXPECT_GE(rep.accuracy.mean, 0.9);
  std::map<std::string, ParserReport> reports = {{rep.task, rep}};
  TaskGrid g;
  g.predicted = {Axis::scale, Axis::loss};
  g.test_values = {"seed=2", "loss=l1"};
  const auto table = task_table(g, reports, zoo);
  EXPECT_NE(table.find("--"), std::string::npos);
}
