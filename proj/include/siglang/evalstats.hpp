#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "siglang/motion.hpp"

namespace siglang {

/// Descending ranks, 1 = highest score; tied scores share the mean of the
/// positions they occupy.
std::vector<double> rank(std::span<const double> scores);

/// Pearson correlation of the tie-averaged rank vectors. Throws
/// InvalidArgument on a length mismatch, EmptyInput below two items and
/// DegenerateInput when either side has zero rank variance.
double spearman(std::span<const double> a, std::span<const double> b);

struct GradedStudent {
  std::string id;
  std::size_t level = 0;  // index into the noise levels; lower is better
  double sigma = 0.0;
  MotionSequence motion;
};

/// Synthetic students at increasing degradation. Every level above zero
/// re-times the teacher piecewise (four segments, each sped up or slowed
/// down by up to 20%) and then perturbs every joint rotation by an i.i.d.
/// rotation vector with per-axis standard deviation sigma (radians, full
/// angle). A sigma of zero reproduces the teacher.
std::vector<GradedStudent> graded_corpus(const MotionSequence& teacher, std::span<const double> levels,
                                         std::size_t takes_per_level, std::uint64_t seed);

/// Reads `id,score` rows (header required).
std::vector<std::pair<std::string, double>> read_ratings_csv(const std::string& path);

}  // namespace siglang
