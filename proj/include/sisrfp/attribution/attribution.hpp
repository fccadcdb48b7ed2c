#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/attribution/classifier.hpp"
#include "sisrfp/stats.hpp"
#include "sisrfp/zoo/model_spec.hpp"

namespace sisrfp::attribution {

// Scores of one scorer (a classifier seed, or the PRNU matcher) over a test
// set: higher is more likely. truth[i] indexes classes.
struct ScoredSet {
  std::vector<std::string> classes;
  std::vector<std::string> image_ids;
  std::vector<int> truth;
  std::vector<std::vector<double>> scores;
};

inline int argmax(const std::vector<double>& row) {
  return int(std::max_element(row.begin(), row.end()) - row.begin());
}

// Class indices for each test image; images of unknown models are rejected.
inline std::vector<int> truth_indices(const std::vector<std::string>& classes, const ImageSet& test) {
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < classes.size(); ++i) index[classes[i]] = int(i);
  std::vector<int> out;
  out.reserve(test.size());
  for (const auto& li : test) {
    const auto it = index.find(li.model_id);
    if (it == index.end()) fail("unknown-class", "test image " + li.image_id + " comes from " + li.model_id);
    out.push_back(it->second);
  }
  return out;
}

inline ScoredSet score(const Classifier& clf, const ImageSet& test, int batch = 32) {
  ScoredSet s{clf.classes, {}, truth_indices(clf.classes, test), logits(clf, test, batch)};
  for (const auto& li : test) s.image_ids.push_back(li.image_id);
  return s;
}

// Trains n_seeds classifiers whose classes are the given model ids. Images of
// models outside the subset are ignored.
inline std::vector<Classifier> train_attributor(const ImageSet& train, const std::vector<std::string>& model_ids,
                                                const ClassifierSetup& setup, const Classifier* warm_start = nullptr,
                                                const std::function<void(int, const nn::EpochRecord&)>& on_epoch = {}) {
  if (model_ids.empty()) fail("empty-grid", "no models to attribute", ErrorKind::usage);
  std::map<std::string, int> index;
  for (std::size_t i = 0; i < model_ids.size(); ++i) {
    if (!index.emplace(model_ids[i], int(i)).second) fail("duplicate-model", model_ids[i]);
  }
  std::vector<Classifier> out;
  for (int k = 0; k < setup.n_seeds; ++k) {
    out.push_back(train_classifier(
        train,
        [&](const LabeledImage& li) {
          const auto it = index.find(li.model_id);
          return it == index.end() ? -1 : it->second;
        },
        model_ids, setup, k, warm_start,
        [&](const nn::EpochRecord& r) {
          if (on_epoch) on_epoch(k, r);
        }));
  }
  return out;
}

struct GroupAccuracy {
  MeanStd accuracy;
  std::vector<double> per_seed;
  std::size_t images = 0;                 // test images in the group, per seed
  std::vector<std::size_t> correct;       // per seed
};

struct AttributionReport {
  std::vector<std::string> classes;
  MeanStd overall;
  std::vector<double> per_seed;
  std::size_t test_images = 0;  // per seed
  std::map<std::string, std::map<std::string, GroupAccuracy>> grouped;  // axis -> value -> accuracy
  std::vector<std::vector<std::size_t>> confusion;                       // [truth][predicted], summed over seeds
  std::vector<GroupAccuracy> per_model;
};

namespace detail {

inline GroupAccuracy finish_group(std::vector<std::size_t> correct, std::size_t images) {
  GroupAccuracy g;
  g.images = images;
  g.correct = std::move(correct);
  for (std::size_t c : g.correct) g.per_seed.push_back(images ? double(c) / double(images) : 0.0);
  g.accuracy = mean_std(g.per_seed);
  return g;
}

}  // namespace detail

// Accuracy aggregated over classifier seeds, overall, per model and per value
// of every hyperparameter axis (classes must be model ids).
inline AttributionReport grouped_report(const std::vector<ScoredSet>& runs) {
  if (runs.empty()) fail("no-classifiers", "nothing to evaluate", ErrorKind::usage);
  AttributionReport rep;
  rep.classes = runs.front().classes;
  const std::size_t k = rep.classes.size();
  const std::vector<int>& truth = runs.front().truth;
  rep.test_images = truth.size();
  rep.confusion.assign(k, std::vector<std::size_t>(k, 0));
  std::vector<zoo::ModelSpec> specs;
  for (const auto& c : rep.classes) specs.push_back(zoo::ModelSpec::parse(c));

  std::vector<std::size_t> model_images(k, 0);
  for (int t : truth) ++model_images[std::size_t(t)];
  std::vector<std::vector<std::size_t>> model_correct(k);
  std::vector<std::size_t> overall_correct;
  for (const auto& run : runs) {
    if (run.classes != rep.classes || run.truth != truth) fail("mismatched-runs", "runs cover different test sets");
    std::vector<std::size_t> correct(k, 0);
    std::size_t total = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const int p = argmax(run.scores[i]);
      ++rep.confusion[std::size_t(truth[i])][std::size_t(p)];
      if (p == truth[i]) {
        ++correct[std::size_t(truth[i])];
        ++total;
      }
    }
    overall_correct.push_back(total);
    for (std::size_t m = 0; m < k; ++m) model_correct[m].push_back(correct[m]);
  }
  const GroupAccuracy overall = detail::finish_group(overall_correct, truth.size());
  rep.overall = overall.accuracy;
  rep.per_seed = overall.per_seed;
  for (std::size_t m = 0; m < k; ++m) rep.per_model.push_back(detail::finish_group(model_correct[m], model_images[m]));

  for (zoo::Axis axis : {zoo::Axis::architecture, zoo::Axis::dataset, zoo::Axis::scale, zoo::Axis::loss,
                         zoo::Axis::seed}) {
    std::map<std::string, std::pair<std::vector<std::size_t>, std::size_t>> acc;
    for (std::size_t m = 0; m < k; ++m) {
      auto& [corr, images] = acc[specs[m].value(axis)];
      corr.resize(runs.size(), 0);
      for (std::size_t r = 0; r < runs.size(); ++r) corr[r] += model_correct[m][r];
      images += model_images[m];
    }
    auto& out = rep.grouped[zoo::to_string(axis)];
    for (auto& [value, ci] : acc) out[value] = detail::finish_group(ci.first, ci.second);
  }
  return rep;
}

// Scores the test images with every classifier after checking that no test
// image id was used for training.
inline AttributionReport evaluate_grouped(const std::vector<Classifier>& classifiers, const ImageSet& train,
                                          const ImageSet& test, int batch = 32) {
  std::set<std::string> train_ids;
  for (const auto& li : train) train_ids.insert(li.image_id);
  for (const auto& li : test) {
    if (train_ids.count(li.image_id)) fail("split-leak", "image " + li.image_id + " is in both train and test");
  }
  std::vector<ScoredSet> runs;
  for (const auto& c : classifiers) runs.push_back(score(c, test, batch));
  return grouped_report(runs);
}

inline std::string percent(const MeanStd& m) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(1);
  s << 100.0 * m.mean << " +-" << 100.0 * m.stddev;
  return s.str();
}

inline std::string report_text(const AttributionReport& r) {
  std::ostringstream s;
  s << "overall accuracy (%): " << percent(r.overall) << "  [" << r.per_seed.size() << " classifier seeds, "
    << r.test_images << " test images, chance " << percent({1.0 / double(r.classes.size()), 0.0}) << "]\n";
  for (const auto& [axis, groups] : r.grouped) {
    s << axis << ":\n";
    for (const auto& [value, g] : groups) s << "  " << value << "  " << percent(g.accuracy) << "  (n=" << g.images << ")\n";
  }
  return s.str();
}

inline std::string grouped_csv(const AttributionReport& r) {
  std::ostringstream s;
  s.precision(9);
  s << "axis,value,images,mean_accuracy,stddev_accuracy\n";
  s << "overall,all," << r.test_images << ',' << r.overall.mean << ',' << r.overall.stddev << '\n';
  for (const auto& [axis, groups] : r.grouped) {
    for (const auto& [value, g] : groups) {
      s << axis << ',' << value << ',' << g.images << ',' << g.accuracy.mean << ',' << g.accuracy.stddev << '\n';
    }
  }
  for (std::size_t m = 0; m < r.classes.size(); ++m) {
    const auto& g = r.per_model[m];
    s << "model," << r.classes[m] << ',' << g.images << ',' << g.accuracy.mean << ',' << g.accuracy.stddev << '\n';
  }
  return s.str();
}

inline std::string confusion_csv(const AttributionReport& r) {
  std::ostringstream s;
  s << "truth";
  for (const auto& c : r.classes) s << ',' << c;
  s << '\n';
  for (std::size_t i = 0; i < r.classes.size(); ++i) {
    s << r.classes[i];
    for (std::size_t v : r.confusion[i]) s << ',' << v;
    s << '\n';
  }
  return s.str();
}

inline nlohmann::json to_json(const AttributionReport& r) {
  nlohmann::json j = {{"classes", r.classes},
                      {"overall", {{"mean", r.overall.mean}, {"stddev", r.overall.stddev}}},
                      {"per_seed", r.per_seed},
                      {"test_images", r.test_images},
                      {"confusion", r.confusion}};
  for (const auto& [axis, groups] : r.grouped) {
    for (const auto& [value, g] : groups) {
      j["grouped"][axis][value] = {{"mean", g.accuracy.mean}, {"stddev", g.accuracy.stddev}, {"per_seed", g.per_seed},
                                   {"images", g.images}};
    }
  }
  return j;
}

}  // namespace sisrfp::attribution
