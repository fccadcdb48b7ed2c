#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/attribution/attribution.hpp"
#include "sisrfp/zoo/model_spec.hpp"

namespace sisrfp::parsing {

using attribution::ImageSet;
using zoo::Axis;
using zoo::ModelSpec;

// A hyperparameter value held out of a parser's training models ("seed=3",
// "loss=l1", "dataset=flickr2k", "scale=4x", "architecture=edge").
struct TestValue {
  Axis axis = Axis::seed;
  std::string value;

  static TestValue parse(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) fail("bad-task", "test value '" + s + "' is not axis=value", ErrorKind::usage);
    return {zoo::parse_axis(s.substr(0, eq)), s.substr(eq + 1)};
  }
  std::string str() const { return zoo::to_string(axis) + "=" + value; }
  bool matches(const ModelSpec& m) const { return m.value(axis) == value; }
};

struct ParserTask {
  Axis predicted = Axis::scale;
  std::optional<TestValue> test_value;  // none: train on everything

  std::string name() const {
    return "predict-" + zoo::to_string(predicted) + (test_value ? "_without-" + test_value->str() : "");
  }
};

inline void to_json(nlohmann::json& j, const ParserTask& t) {
  j = {{"predict", zoo::to_string(t.predicted)}};
  if (t.test_value) j["test_value"] = t.test_value->str();
}

inline void from_json(const nlohmann::json& j, ParserTask& t) {
  t.predicted = zoo::parse_axis(j.at("predict").get<std::string>());
  if (j.contains("test_value") && !j["test_value"].is_null()) t.test_value = TestValue::parse(j["test_value"]);
}

// Why a task would be meaningless, or empty if it is sensible.
inline std::string nonsensical_reason(const ParserTask& t) {
  if (t.predicted == Axis::seed) return "the seed is not a parsed hyperparameter";
  if (!t.test_value) return {};
  if (t.test_value->axis == t.predicted) {
    return "holding out " + t.test_value->str() + " removes that class from training, so predicting " +
           zoo::to_string(t.predicted) + " on the held-out models cannot succeed";
  }
  if (t.predicted == Axis::dataset && t.test_value->axis == Axis::seed) {
    return "dataset parsers use only seed-1 models, so no model carries the held-out seed";
  }
  return {};
}

struct ParserSplit {
  ParserTask task;
  std::vector<ModelSpec> train;
  std::vector<ModelSpec> test;
  std::vector<std::string> class_set;  // values of the predicted axis, sorted

  double chance_baseline() const { return 1.0 / double(class_set.size()); }
  bool in_train(const std::string& id) const {
    const auto s = ModelSpec::parse(id);
    return std::find(train.begin(), train.end(), s) != train.end();
  }
  bool in_test(const std::string& id) const {
    const auto s = ModelSpec::parse(id);
    return std::find(test.begin(), test.end(), s) != test.end();
  }
};

// Partitions the zoo: models carrying the test value are the test side, the
// rest train. Dataset parsers drop seeds other than 1 from both sides.
inline ParserSplit make_split(const std::vector<ModelSpec>& zoo_specs, const ParserTask& task) {
  if (const auto why = nonsensical_reason(task); !why.empty()) {
    fail("nonsensical-task", task.name() + ": " + why, ErrorKind::usage);
  }
  ParserSplit split{task, {}, {}, {}};
  std::set<std::string> classes;
  bool value_seen = !task.test_value;
  for (const auto& m : zoo_specs) {
    if (task.predicted == Axis::dataset && m.seed != 1) continue;
    classes.insert(m.value(task.predicted));
    if (task.test_value && task.test_value->matches(m)) {
      split.test.push_back(m);
      value_seen = true;
    } else {
      split.train.push_back(m);
    }
  }
  if (!value_seen) {
    fail("unknown-test-value", "no model in the zoo has " + task.test_value->str(), ErrorKind::usage);
  }
  split.class_set.assign(classes.begin(), classes.end());
  return split;
}

// One classifier per seed over the class set; trained on train-side models only.
inline std::vector<attribution::Classifier> train_parser(const ParserSplit& split, const ImageSet& images,
                                                         const attribution::ClassifierSetup& setup,
                                                         const std::function<void(int, const nn::EpochRecord&)>& on_epoch = {}) {
  std::set<std::string> present;
  for (const auto& m : split.train) present.insert(m.value(split.task.predicted));
  for (const auto& c : split.class_set) {
    if (!present.count(c)) {
      fail("class-absent-in-train", split.task.name() + ": no training model has " +
                                        zoo::to_string(split.task.predicted) + "=" + c);
    }
  }
  std::set<ModelSpec> train_set(split.train.begin(), split.train.end());
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < split.class_set.size(); ++i) index[split.class_set[i]] = int(i);
  auto label = [&](const attribution::LabeledImage& li) {
    const auto s = ModelSpec::parse(li.model_id);
    if (!train_set.count(s)) return -1;
    return index.at(s.value(split.task.predicted));
  };
  std::vector<attribution::Classifier> out;
  for (int k = 0; k < setup.n_seeds; ++k) {
    out.push_back(attribution::train_classifier(images, label, split.class_set, setup, k, nullptr,
                                                [&](const nn::EpochRecord& r) {
                                                  if (on_epoch) on_epoch(k, r);
                                                }));
  }
  return out;
}

struct ModelHistogram {
  std::string model_id;
  std::string true_value;
  bool in_class_set = true;
  std::size_t images = 0;
  std::vector<MeanStd> counts;                    // per class, across parser seeds
  std::vector<std::vector<std::size_t>> per_run;  // [run][class]
};

struct ParserReport {
  std::string task;
  std::vector<std::string> class_set;
  double chance_baseline = 0.0;
  MeanStd accuracy;
  std::vector<double> per_run;
  std::size_t scored_images = 0;                    // in-class-set test images per run
  std::vector<std::vector<std::size_t>> confusion;  // [truth][predicted], summed over runs
  std::vector<ModelHistogram> histograms;
};

// predictions[run][i] is the class predicted for image i.
inline ParserReport parser_report(const std::string& task, const std::vector<std::string>& class_set, Axis predicted,
                                  const std::vector<std::string>& model_ids,
                                  const std::vector<std::vector<int>>& predictions) {
  if (predictions.empty()) fail("no-classifiers", "nothing to evaluate", ErrorKind::usage);
  ParserReport rep;
  rep.task = task;
  rep.class_set = class_set;
  rep.chance_baseline = 1.0 / double(class_set.size());
  const std::size_t k = class_set.size();
  rep.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < k; ++i) index[class_set[i]] = int(i);
  std::vector<int> truth;
  std::map<std::string, std::size_t> hist_of;
  for (const auto& id : model_ids) {
    const std::string v = ModelSpec::parse(id).value(predicted);
    const auto it = index.find(v);
    truth.push_back(it == index.end() ? -1 : it->second);
    if (!hist_of.count(id)) {
      hist_of[id] = rep.histograms.size();
      ModelHistogram h{id, v, it != index.end(), 0, {}, {}};
      h.per_run.assign(predictions.size(), std::vector<std::size_t>(k, 0));
      rep.histograms.push_back(std::move(h));
    }
    ++rep.histograms[hist_of[id]].images;
  }
  for (int t : truth) rep.scored_images += t >= 0;
  for (std::size_t r = 0; r < predictions.size(); ++r) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < model_ids.size(); ++i) {
      const int p = predictions[r][i];
      ++rep.histograms[hist_of[model_ids[i]]].per_run[r][std::size_t(p)];
      if (truth[i] < 0) continue;
      ++rep.confusion[std::size_t(truth[i])][std::size_t(p)];
      correct += p == truth[i];
    }
    rep.per_run.push_back(rep.scored_images ? double(correct) / double(rep.scored_images) : 0.0);
  }
  rep.accuracy = mean_std(rep.per_run);
  for (auto& h : rep.histograms) {
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> v;
      for (const auto& run : h.per_run) v.push_back(double(run[c]));
      h.counts.push_back(mean_std(v));
    }
  }
  return rep;
}

// Accuracy on the test-side models' images (other images are ignored).
inline ParserReport evaluate_parser(const std::vector<attribution::Classifier>& parsers, const ParserSplit& split,
                                    const ImageSet& images, int batch = 32) {
  std::set<ModelSpec> test_set(split.test.begin(), split.test.end());
  ImageSet test;
  for (const auto& li : images) {
    if (test_set.count(ModelSpec::parse(li.model_id))) test.push_back(li);
  }
  if (test.empty()) fail("no-test-images", split.task.name() + ": no images of the held-out models");
  std::vector<std::string> ids;
  for (const auto& li : test) ids.push_back(li.model_id);
  std::vector<std::vector<int>> preds;
  for (const auto& p : parsers) {
    if (p.classes != split.class_set) fail("mismatched-runs", "parser classes differ from the task's class set");
    std::vector<int> row;
    for (const auto& l : attribution::logits(p, test, batch)) row.push_back(attribution::argmax(l));
    preds.push_back(std::move(row));
  }
  return parser_report(split.task.name(), split.class_set, split.task.predicted, ids, preds);
}

// Histogram rows for display: counts rounded to integers.
inline std::string histogram_text(const ParserReport& r) {
  std::ostringstream s;
  s << "model";
  for (const auto& c : r.class_set) s << "  " << c;
  s << '\n';
  for (const auto& h : r.histograms) {
    s << h.model_id;
    for (const auto& c : h.counts) s << "  " << std::llround(c.mean) << "+-" << std::llround(c.stddev);
    if (!h.in_class_set) s << "  (true value " << h.true_value << " out of class set)";
    s << '\n';
  }
  return s.str();
}

inline nlohmann::json to_json(const ParserReport& r) {
  nlohmann::json j = {{"task", r.task},
                      {"class_set", r.class_set},
                      {"chance_baseline", r.chance_baseline},
                      {"accuracy", {{"mean", r.accuracy.mean}, {"stddev", r.accuracy.stddev}}},
                      {"per_run", r.per_run},
                      {"confusion", r.confusion}};
  for (const auto& h : r.histograms) {
    nlohmann::json counts = nlohmann::json::array();
    for (const auto& c : h.counts) counts.push_back({{"mean", c.mean}, {"stddev", c.stddev}});
    j["histograms"].push_back({{"model", h.model_id}, {"true_value", h.true_value},
                               {"in_class_set", h.in_class_set}, {"images", h.images}, {"counts", counts}});
  }
  return j;
}

// The predicted x held-out grid, including cells that are rejected.
struct TaskGrid {
  std::vector<Axis> predicted{Axis::scale, Axis::loss, Axis::architecture, Axis::dataset};
  std::vector<std::string> test_values{"seed=3", "dataset=flickr2k", "architecture=edge",
                                       "architecture=nonlocal", "loss=vgg-adv", "loss=l1"};

  std::vector<ParserTask> cells() const {
    std::vector<ParserTask> out;
    for (Axis p : predicted) {
      for (const auto& v : test_values) out.push_back({p, TestValue::parse(v)});
    }
    return out;
  }
};

inline void to_json(nlohmann::json& j, const TaskGrid& g) {
  std::vector<std::string> p;
  for (Axis a : g.predicted) p.push_back(zoo::to_string(a));
  j = {{"predicted", p}, {"test_values", g.test_values}};
}

inline void from_json(const nlohmann::json& j, TaskGrid& g) {
  if (j.contains("predicted")) {
    g.predicted.clear();
    for (const auto& s : j["predicted"]) g.predicted.push_back(zoo::parse_axis(s.get<std::string>()));
  }
  if (j.contains("test_values")) g.test_values = j["test_values"].get<std::vector<std::string>>();
}

// Table-3-shaped text: chance column, then one column per held-out value;
// rejected cells print "--".
inline std::string task_table(const TaskGrid& g, const std::map<std::string, ParserReport>& reports,
                              const std::vector<ModelSpec>& zoo_specs) {
  std::ostringstream s;
  s << "predicted  chance";
  for (const auto& v : g.test_values) s << "  " << v;
  s << '\n';
  for (Axis p : g.predicted) {
    std::set<std::string> values;
    for (const auto& m : zoo_specs) {
      if (p != Axis::dataset || m.seed == 1) values.insert(m.value(p));
    }
    s << zoo::to_string(p) << "  " << attribution::percent({values.empty() ? 0.0 : 1.0 / double(values.size()), 0.0});
    for (const auto& v : g.test_values) {
      const ParserTask t{p, TestValue::parse(v)};
      const auto it = reports.find(t.name());
      if (!nonsensical_reason(t).empty()) {
        s << "  --";
      } else if (it == reports.end()) {
        s << "  n/a";
      } else {
        s << "  " << attribution::percent(it->second.accuracy);
      }
    }
    s << '\n';
  }
  return s.str();
}

}  // namespace sisrfp::parsing
