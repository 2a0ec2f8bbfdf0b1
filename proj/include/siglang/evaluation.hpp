#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "siglang/assessment.hpp"
#include "siglang/refdb.hpp"

namespace siglang {

struct EvalItem {
  std::string id;
  std::string vocab;
  double truth = 0.0;  // ground-truth score, higher is better
  double composite = 0.0;
  double rank = 0.0;  // within its vocabulary set
};

struct EvalSet {
  std::string vocab;
  std::size_t size = 0;
  std::optional<double> rho;  // empty when the set was skipped
  std::string note;
};

struct EvalSummary {
  std::vector<EvalItem> items;  // sorted by id
  std::vector<EvalSet> sets;    // sorted by vocab
  double average_rho = 0.0;
};

inline const std::vector<double> kDefaultNoiseLevels{0.0, 0.05, 0.1, 0.2, 0.4};

/// Grades synthetic students derived from the first stored take of every
/// vocabulary. Ground truth orders students by noise level.
EvalSummary evaluate_synthetic(const ReferenceDatabase& db, std::uint64_t seed,
                               const std::vector<double>& levels = kDefaultNoiseLevels,
                               std::size_t takes_per_level = 1, std::size_t workers = 1,
                               const AssessmentConfig& cfg = {});

/// Grades every `<vocab>__<id>.bvh` in `corpus_dir` against external
/// ratings keyed by file stem.
EvalSummary evaluate_corpus(const ReferenceDatabase& db, const std::string& corpus_dir,
                            const std::string& ratings_csv, std::size_t workers = 1,
                            const AssessmentConfig& cfg = {});

std::string summary_csv(const EvalSummary& summary);

}  // namespace siglang
