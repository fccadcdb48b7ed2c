#pragma once

#include <map>
#include <string>
#include <vector>

#include "sisrfp/attribution/triplets.hpp"
#include "sisrfp/prnu/prnu.hpp"

namespace sisrfp::prnu {

// One fingerprint per model from its training images, in model-id order.
inline std::vector<Fingerprint> build_database(const attribution::ImageSet& train, const PrnuConfig& cfg) {
  std::map<std::string, FingerprintAccumulator> acc;
  for (const auto& li : train) acc[li.model_id].add(residual(li.image, cfg));
  std::vector<Fingerprint> db;
  for (const auto& [id, a] : acc) db.push_back(a.finish(id));
  return db;
}

// Scores each test image against every fingerprint (score = -distance).
inline attribution::ScoredSet score_fingerprints(const std::vector<Fingerprint>& db, const attribution::ImageSet& test,
                                                 const PrnuConfig& cfg) {
  if (db.empty()) fail("empty-database", "no fingerprints to match against");
  attribution::ScoredSet s;
  for (const auto& f : db) s.classes.push_back(f.model_id);
  s.truth = attribution::truth_indices(s.classes, test);
  for (const auto& li : test) {
    const auto r = residual(li.image, cfg);
    std::vector<double> row;
    row.reserve(db.size());
    for (const auto& f : db) row.push_back(-euclidean(r, f.data));
    s.scores.push_back(std::move(row));
    s.image_ids.push_back(li.image_id);
  }
  return s;
}

// Nearest-fingerprint distinction inside each seed triplet, grouped by
// (loss, scale). Every triplet must be complete.
inline attribution::TripletReport prnu_seed_eval(const attribution::ImageSet& train, const attribution::ImageSet& test,
                                                 const PrnuConfig& cfg, std::vector<std::string> exclude = {}) {
  const auto db = build_database(train, cfg);
  attribution::TripletOptions opt{std::move(exclude), true};
  return attribution::seed_triplet_report({score_fingerprints(db, test, cfg)}, opt);
}

}  // namespace sisrfp::prnu
