#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sisrfp/attribution/classifier.hpp"
#include "sisrfp/zoo/model_spec.hpp"

namespace sisrfp::attribution {

using Point = std::vector<double>;

inline double euclidean(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

namespace detail {

// Mean distance over unordered pairs of distinct samples.
inline double intra_mean(std::span<const Point> a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) s += euclidean(a[i], a[j]);
  }
  return s / (double(a.size()) * double(a.size() - 1) / 2.0);
}

// Number of cross pairs that are the same sample seen from both sides: a
// one-to-one matching of bitwise-equal points.
inline std::size_t coincident_pairs(std::span<const Point> a, std::span<const Point> b) {
  std::map<Point, std::size_t> count;
  for (const auto& p : b) ++count[p];
  std::size_t m = 0;
  for (const auto& p : a) {
    auto it = count.find(p);
    if (it != count.end() && it->second > 0) {
      --it->second;
      ++m;
    }
  }
  return m;
}

inline double cross_mean(std::span<const Point> a, std::span<const Point> b) {
  double s = 0.0;
  for (const auto& p : a) {
    for (const auto& q : b) s += euclidean(p, q);
  }
  const double pairs = double(a.size()) * double(b.size()) - double(coincident_pairs(a, b));
  return pairs > 0 ? s / pairs : 0.0;
}

inline bool same_multiset(std::span<const Point> a, std::span<const Point> b) {
  if (a.size() != b.size()) return false;
  std::vector<Point> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  return x == y;
}

inline void check_points(std::span<const Point> a, const char* name) {
  if (a.size() < 2) {
    fail("undefined-intra-distance", std::string("class ") + name + " has " + std::to_string(a.size()) +
                                         " point(s); at least 2 are needed");
  }
  for (const auto& p : a) {
    if (p.size() != a.front().size()) fail("dimension-mismatch", "points differ in dimension");
  }
}

inline double ratio_from_means(double intra_a, double intra_b, double cross) {
  if (cross == 0.0) return 1.0;  // every point coincides: the classes are the same
  return (std::min(intra_a, intra_b) + std::max(intra_a, intra_b)) / (2.0 * cross);
}

}  // namespace detail

// R(A,B) = (E|a1-a2| + E|b1-b2|) / (2 E|a-b|), each expectation an exact mean
// over pairs of distinct samples. Within a class that means unordered pairs
// i<j. Across classes it is every (a, b) pair, except that a point present in
// both sets is not paired with its own copy, so R(A,A) = 1.
inline double distance_ratio(std::span<const Point> a, std::span<const Point> b) {
  detail::check_points(a, "A");
  detail::check_points(b, "B");
  if (a.front().size() != b.front().size()) fail("dimension-mismatch", "A and B differ in dimension");
  if (detail::same_multiset(a, b)) return 1.0;
  // fixed argument order makes R(A,B) and R(B,A) bitwise equal
  if (std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end())) std::swap(a, b);
  return detail::ratio_from_means(detail::intra_mean(a), detail::intra_mean(b), detail::cross_mean(a, b));
}

// Feature vectors labelled by model and image.
struct EmbeddingSet {
  std::size_t dimension = 0;
  std::vector<Point> points;
  std::vector<std::string> model_ids;
  std::vector<std::string> image_ids;

  std::size_t size() const noexcept { return points.size(); }

  void add(Point p, std::string model_id, std::string image_id) {
    if (points.empty()) dimension = p.size();
    if (p.size() != dimension) fail("dimension-mismatch", "embedding of " + image_id + " has the wrong width");
    points.push_back(std::move(p));
    model_ids.push_back(std::move(model_id));
    image_ids.push_back(std::move(image_id));
  }

  // Models in first-appearance order.
  std::vector<std::string> models() const {
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& m : model_ids) {
      if (seen.insert(m).second) out.push_back(m);
    }
    return out;
  }

  std::vector<Point> points_of(const std::string& model) const {
    std::vector<Point> out;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (model_ids[i] == model) out.push_back(points[i]);
    }
    return out;
  }
};

// Penultimate-layer features of center crops.
inline EmbeddingSet embed(const Classifier& clf, const ImageSet& images, int batch = 32) {
  EmbeddingSet emb;
  for_each_batch(images, clf.crop, clf.highpass_sigma, batch, [&](std::size_t first, const nn::Tensor<float>& x) {
    const auto f = nn::extract_features(clf.net, x);
    for (std::size_t b = 0; b < f.dim(0); ++b) {
      const auto row = f.sample(b);
      emb.add(Point(row.begin(), row.end()), images[first + b].model_id, images[first + b].image_id);
    }
  });
  return emb;
}

inline void write_embedding_csv(const std::filesystem::path& path, const EmbeddingSet& emb) {
  std::ostringstream s;
  s.precision(9);
  s << "model_id,image_id";
  for (std::size_t d = 0; d < emb.dimension; ++d) s << ",f" << d;
  s << '\n';
  for (std::size_t i = 0; i < emb.size(); ++i) {
    s << emb.model_ids[i] << ',' << emb.image_ids[i];
    for (double v : emb.points[i]) s << ',' << v;
    s << '\n';
  }
  const std::string text = s.str();
  write_file_atomic(path, text.data(), text.size());
}

inline EmbeddingSet read_embedding_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("io-error", "cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  EmbeddingSet emb;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string model, image, cell;
    std::getline(ss, model, ',');
    std::getline(ss, image, ',');
    Point p;
    while (std::getline(ss, cell, ',')) {
      try {
        p.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail("corrupt-file", path.string() + ": bad number '" + cell + "'");
      }
    }
    emb.add(std::move(p), model, image);
  }
  return emb;
}

struct DistanceRatioMatrix {
  std::vector<std::string> models;
  std::vector<std::vector<double>> r;

  // Mean of the off-diagonal entries among the listed model indices.
  double mean_off_diagonal(const std::vector<std::size_t>& idx) const {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t j = i + 1; j < idx.size(); ++j) {
        s += r[idx[i]][idx[j]];
        ++n;
      }
    }
    return n ? s / double(n) : 0.0;
  }
};

// All pairwise R over the models of an embedding set; diagonal exactly 1.
inline DistanceRatioMatrix distance_ratio_matrix(const EmbeddingSet& emb) {
  DistanceRatioMatrix m;
  m.models = emb.models();
  const std::size_t k = m.models.size();
  std::vector<std::vector<Point>> pts;
  std::vector<double> intra;
  for (const auto& id : m.models) {
    pts.push_back(emb.points_of(id));
    detail::check_points(pts.back(), id.c_str());
    intra.push_back(detail::intra_mean(pts.back()));
  }
  m.r.assign(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double v = detail::same_multiset(pts[i], pts[j])
                           ? 1.0
                           : detail::ratio_from_means(intra[i], intra[j], detail::cross_mean(pts[i], pts[j]));
      m.r[i][j] = m.r[j][i] = v;
    }
  }
  return m;
}

inline std::string ratio_csv(const DistanceRatioMatrix& m) {
  std::ostringstream s;
  s.precision(9);
  s << "model";
  for (const auto& id : m.models) s << ',' << id;
  s << '\n';
  for (std::size_t i = 0; i < m.models.size(); ++i) {
    s << m.models[i];
    for (double v : m.r[i]) s << ',' << v;
    s << '\n';
  }
  return s.str();
}

struct UnseenReport {
  EmbeddingSet embeddings;
  DistanceRatioMatrix ratios;
  std::map<std::string, double> group_mean;  // mean off-diagonal R within each group
};

// Embeds images of models the classifier never saw and measures how well its
// feature space still separates them. Groups are values of `group_axis`.
inline UnseenReport unseen_model_eval(const Classifier& clf, const ImageSet& unseen,
                                      zoo::Axis group_axis = zoo::Axis::loss, int batch = 32) {
  std::set<zoo::ModelSpec> seen;
  for (const auto& c : clf.classes) seen.insert(zoo::ModelSpec::parse(c));
  for (const auto& li : unseen) {
    if (seen.count(zoo::ModelSpec::parse(li.model_id))) {
      fail("not-unseen", li.model_id + " is one of the classifier's training classes", ErrorKind::usage);
    }
  }
  UnseenReport rep;
  rep.embeddings = embed(clf, unseen, batch);
  rep.ratios = distance_ratio_matrix(rep.embeddings);
  std::map<std::string, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < rep.ratios.models.size(); ++i) {
    groups[zoo::ModelSpec::parse(rep.ratios.models[i]).value(group_axis)].push_back(i);
  }
  for (const auto& [g, idx] : groups) {
    if (idx.size() >= 2) rep.group_mean[g] = rep.ratios.mean_off_diagonal(idx);
  }
  return rep;
}

}  // namespace sisrfp::attribution
