#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <thread>

#include "sisrfp/attribution/classifier.hpp"
#include "sisrfp/pipeline/corpus.hpp"
#include "sisrfp/pipeline/manifest.hpp"
#include "sisrfp/zoo/zoo.hpp"

namespace sisrfp::pipeline {

struct DatasetOptions {
  SplitConfig splits;
  std::uint64_t master_seed = 1;
  int jobs = 1;
  // Stop (as if interrupted) after this many newly generated rows; 0 = never.
  std::size_t stop_after = 0;
  // Refuse to start when the estimate exceeds the free space on the target.
  bool check_disk = true;
};

struct DatasetSummary {
  std::size_t planned = 0;    // rows the finished manifest will hold
  std::size_t reused = 0;     // valid rows carried over from an earlier run
  std::size_t generated = 0;  // rows produced by this run
  std::size_t failed = 0;
  std::size_t estimated_bytes = 0;
  bool complete = false;  // false when stopped early
  std::vector<std::string> failures;
};

inline constexpr const char* kManifestFile = "manifest.tsv";
inline constexpr const char* kJournalFile = "manifest.journal";

inline std::string generated_relpath(const std::string& model_id, const std::string& image_id) {
  return "images/" + model_id + "/" + image_id + ".png";
}

// PNG size guess: 8-bit RGB at roughly 60% of raw, plus a fixed overhead.
inline std::size_t estimate_dataset_bytes(const std::vector<SourceImage>& sources, const zoo::Zoo& zoo,
                                          const std::map<std::string, Split>& splits) {
  std::size_t total = 0;
  for (const auto& s : sources) {
    if (splits.at(s.image_id) == Split::unused) continue;
    for (const auto& m : zoo) {
      const int sc = m.spec().scale;
      const std::size_t h = std::size_t(s.image.height() / sc) * sc, w = std::size_t(s.image.width() / sc) * sc;
      total += h * w * 3 * 6 / 10 + 1024;
    }
  }
  return total;
}

// Renders every (source, model) pair into `root`: LR = degrade(source, scale),
// HR' = generate(LR), saved as PNG, one manifest record per pair. Finished
// pairs are journalled as they complete, so a rerun after an interruption only
// redoes the missing ones. The final manifest is written in canonical order
// and does not depend on job count or interruptions.
inline DatasetSummary build_dataset(const std::vector<SourceImage>& sources, const zoo::Zoo& zoo,
                                    const std::filesystem::path& root, const DatasetOptions& opt = {},
                                    std::ostream* log = nullptr) {
  if (sources.empty()) fail("empty-corpus", "no source images");
  if (zoo.empty()) fail("empty-grid", "no models", ErrorKind::usage);
  std::vector<std::string> ids;
  for (const auto& s : sources) ids.push_back(s.image_id);
  const auto splits = assign_splits(ids, opt.splits, opt.master_seed);

  struct Job {
    const SourceImage* src;
    const zoo::ZooModel* model;
    ManifestRecord rec;
  };
  std::vector<Job> jobs;
  for (const auto& s : sources) {
    const Split sp = splits.at(s.image_id);
    if (sp == Split::unused) continue;
    for (const auto& m : zoo) {
      ManifestRecord r;
      r.image_id = s.image_id;
      r.model_id = m.id();
      r.source_path = s.path.string();
      r.generated_path = generated_relpath(r.model_id, r.image_id);
      r.split = sp;
      r.crop_seed = hash_combine(hash_combine(hash_string(r.image_id), hash_string(r.model_id)), opt.master_seed);
      jobs.push_back({&s, &m, r});
    }
  }

  DatasetSummary sum;
  sum.planned = jobs.size();
  sum.estimated_bytes = estimate_dataset_bytes(sources, zoo, splits);
  std::filesystem::create_directories(root);
  if (log) *log << "dataset: " << jobs.size() << " images planned, about " << (sum.estimated_bytes >> 20) << " MiB\n";
  if (opt.check_disk) {
    const auto space = std::filesystem::space(root);
    if (space.available < sum.estimated_bytes) {
      fail("disk-budget", "estimated " + std::to_string(sum.estimated_bytes) + " bytes but only " +
                              std::to_string(space.available) + " available under " + root.string());
    }
  }

  // Rows known from an earlier run, valid only if they still match the plan
  // and (for ok rows) their image is on disk.
  std::map<std::pair<std::string, std::string>, ManifestRecord> done;
  for (const char* name : {kManifestFile, kJournalFile}) {
    const auto p = root / name;
    if (!std::filesystem::exists(p)) continue;
    for (auto& r : read_records(p, name == std::string(kJournalFile))) done[r.key()] = r;
  }
  std::vector<ManifestRecord> final_rows(jobs.size());
  std::vector<std::size_t> todo;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const auto it = done.find(jobs[i].rec.key());
    const bool valid = it != done.end() && it->second.ok && it->second.split == jobs[i].rec.split &&
                       it->second.crop_seed == jobs[i].rec.crop_seed &&
                       it->second.generated_path == jobs[i].rec.generated_path &&
                       std::filesystem::exists(root / it->second.generated_path);
    if (valid) {
      final_rows[i] = it->second;
      ++sum.reused;
    } else {
      todo.push_back(i);
    }
  }

  // Journal of rows finished in this run; rewritten to hold the reused rows
  // first so that it is self-contained.
  const auto journal_path = root / kJournalFile;
  {
    std::string text = std::string(kManifestHeader) + "\n" + kManifestColumns + "\n";
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      if (!final_rows[i].image_id.empty()) text += format_record(final_rows[i]) + "\n";
    }
    write_file_atomic(journal_path, text.data(), text.size());
  }
  std::ofstream journal(journal_path, std::ios::app);
  if (!journal) fail("io-error", "cannot append to " + journal_path.string());

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> produced{0};
  std::atomic<bool> stop{false};
  auto worker = [&] {
    while (!stop) {
      const std::size_t t = next++;
      if (t >= todo.size()) return;
      if (opt.stop_after && produced.fetch_add(1) >= opt.stop_after) {
        stop = true;
        return;
      }
      const Job& job = jobs[todo[t]];
      ManifestRecord rec = job.rec;
      try {
        const Image lr = degrade(job.src->image, job.model->spec().scale);
        write_png(root / rec.generated_path, quantize8(job.model->generate(lr)));
      } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
      }
      std::lock_guard lock(mu);
      journal << format_record(rec) << '\n' << std::flush;
      final_rows[todo[t]] = rec;
      ++sum.generated;
      if (!rec.ok) {
        ++sum.failed;
        sum.failures.push_back(rec.image_id + " / " + rec.model_id + ": " + rec.error);
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(opt.jobs, int(todo.size())));
  std::vector<std::thread> threads;
  for (int k = 1; k < n_threads; ++k) threads.emplace_back(worker);
  worker();
  for (auto& th : threads) th.join();
  journal.close();

  if (stop) {
    if (log) *log << "dataset: stopped after " << sum.generated << " new images\n";
    return sum;
  }
  Manifest m{std::move(final_rows)};
  write_manifest(root / kManifestFile, m);
  std::filesystem::remove(journal_path);
  sum.complete = true;
  if (log) {
    *log << "dataset: " << sum.reused << " reused, " << sum.generated << " generated, " << sum.failed << " failed\n";
    for (const auto& f : sum.failures) *log << "  failed: " << f << '\n';
  }
  return sum;
}

// Loads the generated images of one split, optionally restricted to a model set.
inline attribution::ImageSet load_split(const Manifest& m, const std::filesystem::path& root, Split split,
                                        const std::set<std::string>& models = {}) {
  attribution::ImageSet out;
  for (const auto& r : m.records) {
    if (!r.ok || r.split != split) continue;
    if (!models.empty() && !models.count(r.model_id)) continue;
    out.push_back({r.image_id, r.model_id, read_png(root / r.generated_path)});
  }
  return out;
}

}  // namespace sisrfp::pipeline
