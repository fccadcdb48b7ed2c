#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "sisrfp/error.hpp"
#include "sisrfp/png_io.hpp"
#include "sisrfp/rng.hpp"
#include "sisrfp/zoo/model_spec.hpp"

namespace sisrfp::pipeline {

enum class Split { train, val, test, unused };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unused: return "unused";
  }
  return "?";
}

inline Split parse_split(std::string_view s) {
  for (Split v : {Split::train, Split::val, Split::test, Split::unused}) {
    if (to_string(v) == s) return v;
  }
  fail("bad-split", "unknown split '" + std::string(s) + "'");
}

// Per-model image counts for each split.
struct SplitConfig {
  int train = 800;
  int val = 100;
  int test = 100;

  int total() const { return train + val + test; }
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SplitConfig, train, val, test)

// Split counts for `n` sources. With fewer sources than the configured total
// the counts shrink proportionally (largest remainder, leftovers to train);
// sources past the total are left unused.
inline SplitConfig scaled_split(const SplitConfig& cfg, std::size_t n) {
  if (cfg.train < 0 || cfg.val < 0 || cfg.test < 0 || cfg.total() == 0) {
    fail("bad-config", "split counts must be non-negative with a positive total", ErrorKind::usage);
  }
  if (n >= std::size_t(cfg.total())) return cfg;
  const double f = double(n) / cfg.total();
  SplitConfig s{0, int(cfg.val * f), int(cfg.test * f)};
  s.train = int(n) - s.val - s.test;
  return s;
}

// Split of every image id. Ids are ranked by hash(id, master seed); the first
// `train` go to train, the next `val` to val, then `test`. The split therefore
// depends on the id only, never on the model.
inline std::map<std::string, Split> assign_splits(const std::vector<std::string>& image_ids, const SplitConfig& cfg,
                                                  std::uint64_t master_seed) {
  std::vector<std::pair<std::uint64_t, std::string>> ranked;
  std::set<std::string> seen;
  for (const auto& id : image_ids) {
    if (!seen.insert(id).second) fail("duplicate-image", "image id " + id + " appears twice");
    ranked.emplace_back(hash_combine(hash_string(id), master_seed), id);
  }
  std::sort(ranked.begin(), ranked.end());
  const SplitConfig s = scaled_split(cfg, ranked.size());
  std::map<std::string, Split> out;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    Split sp = Split::unused;
    if (i < std::size_t(s.train)) {
      sp = Split::train;
    } else if (i < std::size_t(s.train + s.val)) {
      sp = Split::val;
    } else if (i < std::size_t(s.total())) {
      sp = Split::test;
    }
    out[ranked[i].second] = sp;
  }
  return out;
}

struct ManifestRecord {
  std::string image_id;
  std::string model_id;
  std::string source_path;
  std::string generated_path;  // relative to the dataset root
  Split split = Split::train;
  std::uint64_t crop_seed = 0;
  bool ok = true;
  std::string error;  // why generation failed, when !ok

  std::pair<std::string, std::string> key() const { return {image_id, model_id}; }
};

inline constexpr const char* kManifestHeader = "# sisrfp-manifest v1";
inline constexpr const char* kManifestColumns =
    "image_id\tmodel_id\tsource_path\tgenerated_path\tsplit\tcrop_seed\tstatus\terror";

namespace detail {

inline std::string clean_field(std::string s) {
  for (char& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    out.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return out;
}

}  // namespace detail

inline std::string format_record(const ManifestRecord& r) {
  std::ostringstream s;
  s << detail::clean_field(r.image_id) << '\t' << r.model_id << '\t' << detail::clean_field(r.source_path) << '\t'
    << detail::clean_field(r.generated_path) << '\t' << to_string(r.split) << '\t' << r.crop_seed << '\t'
    << (r.ok ? "ok" : "failed") << '\t' << detail::clean_field(r.error);
  return s.str();
}

inline ManifestRecord parse_record(const std::string& line, const std::string& where) {
  const auto f = detail::split_tabs(line);
  if (f.size() != 8) fail("corrupt-manifest", where + ": expected 8 fields, got " + std::to_string(f.size()));
  ManifestRecord r;
  r.image_id = f[0];
  r.model_id = f[1];
  r.source_path = f[2];
  r.generated_path = f[3];
  try {
    zoo::ModelSpec::parse(r.model_id);
    r.split = parse_split(f[4]);
    r.crop_seed = std::stoull(f[5]);
  } catch (const std::exception& e) {
    fail("corrupt-manifest", where + ": " + e.what());
  }
  if (f[6] != "ok" && f[6] != "failed") fail("corrupt-manifest", where + ": bad status '" + f[6] + "'");
  r.ok = f[6] == "ok";
  r.error = f[7];
  return r;
}

// The dataset index: one record per (image, model), in canonical order
// (image id, then model id).
struct Manifest {
  std::vector<ManifestRecord> records;

  void canonicalize() {
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (records[i].key() == records[i - 1].key()) {
        fail("duplicate-record", records[i].image_id + " / " + records[i].model_id);
      }
    }
  }

  std::vector<std::string> model_ids() const {
    std::set<std::string> s;
    for (const auto& r : records) s.insert(r.model_id);
    return {s.begin(), s.end()};
  }

  std::size_t failed() const {
    return std::size_t(std::count_if(records.begin(), records.end(), [](const auto& r) { return !r.ok; }));
  }

  // Count of ok records of a model in a split.
  std::size_t count(const std::string& model_id, Split split) const {
    return std::size_t(std::count_if(records.begin(), records.end(), [&](const auto& r) {
      return r.ok && r.model_id == model_id && r.split == split;
    }));
  }

  std::string text() const {
    std::string out = std::string(kManifestHeader) + "\n" + kManifestColumns + "\n";
    for (const auto& r : records) out += format_record(r) + "\n";
    return out;
  }
};

inline void write_manifest(const std::filesystem::path& path, Manifest m) {
  m.canonicalize();
  const std::string t = m.text();
  write_file_atomic(path, t.data(), t.size());
}

// Reads records from a manifest or a journal. A journal may end in a torn
// line, which is dropped when `tolerate_torn_tail` is set.
inline std::vector<ManifestRecord> read_records(const std::filesystem::path& path, bool tolerate_torn_tail = false) {
  const auto bytes = read_file_bytes(path);
  const std::string text(bytes.begin(), bytes.end());
  std::vector<ManifestRecord> out;
  std::size_t pos = 0;
  int line_no = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      if (tolerate_torn_tail) break;
      fail("corrupt-manifest", path.string() + ": missing final newline");
    }
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != kManifestHeader) fail("unsupported-version", path.string() + ": header '" + line + "'");
      continue;
    }
    if (line_no == 2 || line.empty()) continue;
    out.push_back(parse_record(line, path.string() + ":" + std::to_string(line_no)));
  }
  if (line_no == 0 && !tolerate_torn_tail) fail("corrupt-manifest", path.string() + ": empty file");
  return out;
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    fail("missing-artifact", path.string() + " not found; build it with: sisrfp dataset-build --config <config>");
  }
  Manifest m{read_records(path)};
  m.canonicalize();
  return m;
}

}  // namespace sisrfp::pipeline
