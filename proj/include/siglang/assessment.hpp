#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "siglang/embedding.hpp"
#include "siglang/motion.hpp"
#include "siglang/smoothing.hpp"

namespace siglang {

class ReferenceDatabase;

struct ClusterModel {
  std::vector<std::vector<double>> centroids;
  std::vector<std::string> labels;
  double temperature = 1.0;

  std::size_t size() const { return centroids.size(); }
  std::size_t dim() const { return centroids.empty() ? 0 : centroids.front().size(); }
  /// Throws EmptyModel / DimensionMismatch / InvalidArgument.
  void validate() const;

  bool operator==(const ClusterModel&) const = default;
};

struct ConfusionResult {
  std::vector<double> distribution;  // aligned with the model's labels
  std::vector<double> distances;
  std::size_t assigned_index = 0;
  std::string assigned_label;
  double confusion = 0.0;  // normalized entropy, 0 for a single class
};

/// Softmax over negated centroid distances divided by the temperature; the
/// nearest centroid wins. Ties go to the lower index.
ConfusionResult class_distribution(const SegmentEmbedding& e, const ClusterModel& model);

/// Per-interval angular velocities, rad/s: intervals[t][joint].
struct GradientSequence {
  std::vector<std::vector<Vec3>> intervals;
  double fps = 30.0;

  std::size_t size() const { return intervals.size(); }
  std::size_t joint_count() const { return intervals.empty() ? 0 : intervals.front().size(); }
  bool operator==(const GradientSequence&) const = default;
};

/// ω_i(t) = 2·log(q_i(t)* q_i(t+1))·fps. Throws EmptyMotion below 2 frames.
GradientSequence angular_velocity(const MotionSequence& motion);

inline constexpr double kJointWeightFloor = 1e-3;  // rad/s

/// weight_i ∝ floor + mean_t |ω_i(t)|, normalized to sum to one.
std::vector<double> joint_weights(const GradientSequence& teacher);
std::vector<double> joint_weights(const MotionSequence& teacher);

struct AlignmentResult {
  double distance = 0.0;
  double normalized_score = 1.0;
  std::vector<std::pair<std::size_t, std::size_t>> path;  // (student, teacher)
  std::vector<double> per_joint_error;

  /// Fraction of teacher intervals visited by the warp path.
  double teacher_coverage(std::size_t teacher_len) const;
};

struct DtwOptions {
  std::optional<std::size_t> band;  // Sakoe-Chiba half-width, in intervals
  double reference_scale = 1.0;     // rad/s
  std::size_t threads = 1;          // workers for the local-cost matrix
};

/// Derivative DTW over angular-velocity sequences with joint-weighted L1
/// local cost. Backtracking prefers the diagonal, then a teacher-only step,
/// then a student-only step.
AlignmentResult ddtw(const GradientSequence& stu, const GradientSequence& tea, std::span<const double> weights,
                     const DtwOptions& opts = {});

struct CompositeWeights {
  double confusion = 1.0 / 3.0;
  double smoothness = 1.0 / 3.0;
  double alignment = 1.0 / 3.0;

  void validate() const;
};

struct AssessmentConfig {
  CompositeWeights composite;
  std::optional<std::size_t> band;
  std::size_t threads = 1;
};

struct AssessmentReport {
  std::string vocab;
  std::vector<std::string> labels;
  std::vector<std::string> joint_names;
  ConfusionResult confusion;
  SmoothnessResult smoothness;
  AlignmentResult alignment;
  std::string matched_take;
  double composite = 0.0;  // 0..100
  std::vector<std::string> worst_joints;
};

double composite_score(const CompositeWeights& w, double confusion, double smoothness, double alignment);

/// Scores a student take against the stored references for `vocab`. The
/// student is matched to the database skeleton by joint name and resampled
/// to the database frame rate; alignment uses the closest stored take.
AssessmentReport assess(const MotionSequence& student, const std::string& vocab, const ReferenceDatabase& db,
                        const AssessmentConfig& cfg = {});

/// Report JSON with stable key order and floats rounded to 9 significant
/// digits.
std::string report_to_json(const AssessmentReport& report);

/// Rounds to `digits` significant decimal digits.
double round_significant(double v, int digits = 9);

}  // namespace siglang
