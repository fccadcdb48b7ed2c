#pragma once

#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sisrfp/attribution/attribution.hpp"

namespace sisrfp::attribution {

struct TripletOptions {
  std::vector<std::string> exclude;  // triplet keys (ModelSpec::id_without(seed)) to leave out
  bool strict = false;               // incomplete triplets are an error instead of being skipped
};

struct TripletRow {
  std::string key;
  std::string group;  // "<loss>,<scale>"
  std::vector<std::string> members;
  std::size_t images = 0;  // per scorer
  std::vector<double> per_run;
  MeanStd accuracy;
};

struct TripletReport {
  std::vector<TripletRow> rows;
  std::map<std::string, MeanStd> groups;  // per (loss, scale)
  MeanStd total;
  std::vector<double> total_per_run;
  std::vector<std::string> excluded;
  std::vector<std::string> incomplete;  // key: reason
};

namespace detail {

struct Triplet {
  std::string key;
  std::string group;
  std::vector<int> members;  // class indices
};

inline std::vector<Triplet> find_triplets(const std::vector<std::string>& classes, const std::vector<int>& truth,
                                          const TripletOptions& opt, TripletReport& rep) {
  std::map<std::string, Triplet> by_key;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const auto spec = zoo::ModelSpec::parse(classes[c]);
    auto& t = by_key[spec.id_without(zoo::Axis::seed)];
    t.key = spec.id_without(zoo::Axis::seed);
    t.group = spec.value(zoo::Axis::loss) + "," + spec.value(zoo::Axis::scale);
    t.members.push_back(int(c));
  }
  std::vector<std::size_t> images(classes.size(), 0);
  for (int t : truth) ++images[std::size_t(t)];
  const std::set<std::string> excluded(opt.exclude.begin(), opt.exclude.end());
  for (const auto& e : excluded) {
    if (!by_key.count(e)) fail("unknown-triplet", "excluded triplet '" + e + "' is not in the zoo", ErrorKind::usage);
  }
  std::vector<Triplet> out;
  for (auto& [key, t] : by_key) {
    if (excluded.count(key)) {
      rep.excluded.push_back(key);
      continue;
    }
    std::string reason;
    if (t.members.size() != 3) reason = std::to_string(t.members.size()) + " member(s)";
    for (int m : t.members) {
      if (images[std::size_t(m)] == 0) reason = classes[std::size_t(m)] + " has no test images";
    }
    if (!reason.empty()) {
      if (opt.strict) fail("incomplete-triplet", key + ": " + reason);
      rep.incomplete.push_back(key + ": " + reason);
      continue;
    }
    out.push_back(t);
  }
  return out;
}

}  // namespace detail

// Three-way distinction inside each seed triplet: the prediction for an image
// is the best-scoring member of its own model's triplet.
inline TripletReport seed_triplet_report(const std::vector<ScoredSet>& runs, const TripletOptions& opt = {}) {
  if (runs.empty()) fail("no-classifiers", "nothing to evaluate", ErrorKind::usage);
  TripletReport rep;
  const auto& classes = runs.front().classes;
  const auto& truth = runs.front().truth;
  const auto triplets = detail::find_triplets(classes, truth, opt, rep);
  std::vector<int> triplet_of(classes.size(), -1);
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    for (int m : triplets[t].members) triplet_of[std::size_t(m)] = int(t);
  }
  std::vector<std::vector<std::size_t>> correct(triplets.size(), std::vector<std::size_t>(runs.size(), 0));
  std::vector<std::size_t> images(triplets.size(), 0);
  for (int t : truth) {
    if (triplet_of[std::size_t(t)] >= 0) ++images[std::size_t(triplet_of[std::size_t(t)])];
  }
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const auto& run = runs[r];
    if (run.classes != classes || run.truth != truth) fail("mismatched-runs", "runs cover different test sets");
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const int t = triplet_of[std::size_t(truth[i])];
      if (t < 0) continue;
      int best = -1;
      for (int m : triplets[std::size_t(t)].members) {
        if (best < 0 || run.scores[i][std::size_t(m)] > run.scores[i][std::size_t(best)]) best = m;
      }
      if (best == truth[i]) ++correct[std::size_t(t)][r];
    }
  }
  std::map<std::string, std::pair<std::vector<std::size_t>, std::size_t>> groups;
  std::vector<std::size_t> total_correct(runs.size(), 0);
  std::size_t total_images = 0;
  for (std::size_t t = 0; t < triplets.size(); ++t) {
    TripletRow row{triplets[t].key, triplets[t].group, {}, images[t], {}, {}};
    for (int m : triplets[t].members) row.members.push_back(classes[std::size_t(m)]);
    auto& g = groups[row.group];
    g.first.resize(runs.size(), 0);
    for (std::size_t r = 0; r < runs.size(); ++r) {
      row.per_run.push_back(double(correct[t][r]) / double(images[t]));
      g.first[r] += correct[t][r];
      total_correct[r] += correct[t][r];
    }
    g.second += images[t];
    total_images += images[t];
    row.accuracy = mean_std(row.per_run);
    rep.rows.push_back(std::move(row));
  }
  auto rates = [&](const std::vector<std::size_t>& c, std::size_t n) {
    std::vector<double> v;
    for (std::size_t x : c) v.push_back(n ? double(x) / double(n) : 0.0);
    return v;
  };
  for (const auto& [key, g] : groups) {
    const auto v = rates(g.first, g.second);
    rep.groups[key] = mean_std(v);
  }
  rep.total_per_run = rates(total_correct, total_images);
  rep.total = mean_std(rep.total_per_run);
  return rep;
}

inline TripletReport seed_triplet_eval(const std::vector<Classifier>& classifiers, const ImageSet& test,
                                       const TripletOptions& opt = {}, int batch = 32) {
  std::vector<ScoredSet> runs;
  for (const auto& c : classifiers) runs.push_back(score(c, test, batch));
  return seed_triplet_report(runs, opt);
}

// Fig.-2-shaped table: one row per (loss, scale) group plus the total.
inline std::string triplet_text(const TripletReport& r, const std::string& label = "accuracy (%)") {
  std::ostringstream s;
  s << "group            " << label << '\n';
  for (const auto& [g, m] : r.groups) {
    std::string name = g;
    name.resize(std::max<std::size_t>(name.size(), 16), ' ');
    s << name << ' ' << percent(m) << '\n';
  }
  s << "Total            " << percent(r.total) << '\n';
  for (const auto& e : r.excluded) s << "excluded: " << e << '\n';
  for (const auto& e : r.incomplete) s << "incomplete (skipped): " << e << '\n';
  return s.str();
}

inline std::string triplet_csv(const TripletReport& r) {
  std::ostringstream s;
  s.precision(9);
  s << "triplet,group,images,mean_accuracy,stddev_accuracy\n";
  for (const auto& row : r.rows) {
    s << row.key << ',' << '"' << row.group << '"' << ',' << row.images << ',' << row.accuracy.mean << ','
      << row.accuracy.stddev << '\n';
  }
  for (const auto& [g, m] : r.groups) s << "group," << '"' << g << '"' << ",," << m.mean << ',' << m.stddev << '\n';
  s << "total,,," << r.total.mean << ',' << r.total.stddev << '\n';
  return s.str();
}

inline nlohmann::json to_json(const TripletReport& r) {
  nlohmann::json j = {{"total", {{"mean", r.total.mean}, {"stddev", r.total.stddev}}},
                      {"total_per_run", r.total_per_run},
                      {"excluded", r.excluded},
                      {"incomplete", r.incomplete}};
  for (const auto& [g, m] : r.groups) j["groups"][g] = {{"mean", m.mean}, {"stddev", m.stddev}};
  for (const auto& row : r.rows) {
    j["triplets"].push_back({{"key", row.key}, {"members", row.members}, {"images", row.images},
                             {"per_run", row.per_run}, {"mean", row.accuracy.mean}});
  }
  return j;
}

}  // namespace sisrfp::attribution
