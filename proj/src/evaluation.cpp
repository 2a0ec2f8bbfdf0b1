#include "siglang/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <thread>

#include "siglang/bvh.hpp"
#include "siglang/error.hpp"
#include "siglang/evalstats.hpp"

namespace siglang {

namespace fs = std::filesystem;

namespace {

struct Job {
  EvalItem item;
  std::function<MotionSequence()> load;
};

// Results land in their job slot, so worker count never changes the output.
void run_jobs(std::vector<Job>& jobs, const ReferenceDatabase& db, std::size_t workers, const AssessmentConfig& cfg) {
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        AssessmentConfig one = cfg;
        one.threads = 1;
        jobs[i].item.composite = assess(jobs[i].load(), jobs[i].item.vocab, db, one).composite;
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

EvalSummary summarize(std::vector<Job>& jobs) {
  EvalSummary s;
  std::map<std::string, std::vector<std::size_t>> by_vocab;
  for (std::size_t i = 0; i < jobs.size(); ++i) by_vocab[jobs[i].item.vocab].push_back(i);

  double total = 0.0;
  std::size_t used = 0;
  for (const auto& [vocab, idx] : by_vocab) {
    EvalSet set;
    set.vocab = vocab;
    set.size = idx.size();
    std::vector<double> composite, truth;
    for (std::size_t i : idx) {
      composite.push_back(jobs[i].item.composite);
      truth.push_back(jobs[i].item.truth);
    }
    const std::vector<double> ranks = rank(composite);
    for (std::size_t k = 0; k < idx.size(); ++k) jobs[idx[k]].item.rank = ranks[k];
    try {
      if (idx.size() < 2) throw Error(ErrorKind::DegenerateInput, "a single student cannot be ranked");
      set.rho = spearman(composite, truth);
      total += *set.rho;
      ++used;
    } catch (const Error& e) {
      set.note = std::string(to_string(e.kind())) + ": " + e.what();
    }
    s.sets.push_back(std::move(set));
  }
  if (used == 0) throw Error(ErrorKind::DegenerateInput, "no vocabulary set had enough distinct students");
  s.average_rho = total / static_cast<double>(used);

  for (Job& j : jobs) s.items.push_back(std::move(j.item));
  std::sort(s.items.begin(), s.items.end(), [](const EvalItem& a, const EvalItem& b) { return a.id < b.id; });
  return s;
}

}  // namespace

EvalSummary evaluate_synthetic(const ReferenceDatabase& db, std::uint64_t seed, const std::vector<double>& levels,
                               std::size_t takes_per_level, std::size_t workers, const AssessmentConfig& cfg) {
  std::vector<Job> jobs;
  std::uint64_t stream = 0;
  for (const VocabEntry& entry : db.entries()) {
    // Each vocabulary draws from its own seed so sets are independent of one another.
    auto students = std::make_shared<std::vector<GradedStudent>>(
        graded_corpus(entry.takes.front().motion, levels, takes_per_level, seed * 1000003ULL + stream++));
    for (std::size_t k = 0; k < students->size(); ++k) {
      const GradedStudent& g = (*students)[k];
      Job job;
      job.item.id = g.id;
      job.item.vocab = entry.label;
      job.item.truth = -g.sigma;
      job.load = [students, k] { return (*students)[k].motion; };
      jobs.push_back(std::move(job));
    }
  }
  run_jobs(jobs, db, workers, cfg);
  return summarize(jobs);
}

EvalSummary evaluate_corpus(const ReferenceDatabase& db, const std::string& corpus_dir,
                            const std::string& ratings_csv, std::size_t workers, const AssessmentConfig& cfg) {
  std::error_code ec;
  if (!fs::is_directory(corpus_dir, ec)) throw Error(ErrorKind::IoError, "corpus directory not found: " + corpus_dir);
  std::map<std::string, double> ratings;
  for (const auto& [id, score] : read_ratings_csv(ratings_csv)) ratings[id] = score;

  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(corpus_dir)) {
    if (de.is_regular_file() && de.path().extension() == ".bvh") files.push_back(de.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::EmptyCorpus, "empty corpus: no .bvh files in " + corpus_dir);

  std::vector<Job> jobs;
  const double scale = db.config().bvh_scale;
  for (const fs::path& f : files) {
    Job job;
    job.item.id = f.stem().string();
    job.item.vocab = label_from_filename(f.filename().string()).first;
    auto it = ratings.find(job.item.id);
    if (it == ratings.end()) throw Error(ErrorKind::InvalidArgument, "no rating for " + job.item.id);
    job.item.truth = it->second;
    const std::string path = f.string();
    job.load = [path, scale] {
      try {
        return load_bvh(path, BvhOptions{scale});
      } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
      }
    };
    jobs.push_back(std::move(job));
  }
  run_jobs(jobs, db, workers, cfg);
  return summarize(jobs);
}

std::string summary_csv(const EvalSummary& summary) {
  std::string out = "id,composite,rank\n";
  char buf[64];
  for (const EvalItem& item : summary.items) {
    std::snprintf(buf, sizeof buf, ",%.9g,%g\n", item.composite, item.rank);
    out += item.id + buf;
  }
  return out;
}

}  // namespace siglang
