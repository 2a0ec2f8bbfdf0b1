#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "siglang/kinematics.hpp"
#include "siglang/motion.hpp"

namespace siglang {

inline constexpr const char* kWeightsJsonVersion = "siglang-weights/1";

/// Row-major 3x3 matrix.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  Vec3 operator*(const Vec3& v) const {
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  bool operator==(const Mat3&) const = default;
};

/// Per-joint affine weights and the two propagation constants. An empty
/// `per_joint` means identity for every joint.
struct EmbeddingWeights {
  std::vector<Mat3> per_joint;
  double m1 = 1.0;  // normalizer on the local term
  double m2 = 0.5;  // share of the parent's difference carried to the child

  /// Throws InvalidArgument / DimensionMismatch if unusable for `joints`.
  void validate(std::size_t joints) const;
  const Mat3& matrix(std::size_t joint) const;

  bool operator==(const EmbeddingWeights&) const = default;
};

nlohmann::json weights_to_json(const EmbeddingWeights& w);
EmbeddingWeights weights_from_json(const nlohmann::json& j);
EmbeddingWeights load_weights(const std::string& path);

struct FrameDifference {
  std::vector<Vec3> per_joint;
  double scalar = 0.0;  // sqrt of the summed squared per-joint norms
};

/// log(q_tea · q_stu*) under the half-angle convention.
Vec3 joint_log_diff(const Quat& q_tea, const Quat& q_stu);

/// Parent-propagated difference embedding:
///   D_i = (1/m1) W_i d_i + m2 D_parent(i),  D_parent(root) = 0.
FrameDifference frame_difference(const Pose& tea, const Pose& stu, const EmbeddingWeights& w,
                                 const SkeletonTopology& topo);

inline constexpr std::size_t kDefaultDescriptorFrames = 32;

/// Fixed-length descriptor of a motion: resampled to `frames` frames, each
/// frame embedded against the rest pose, then per-joint temporal mean and
/// population standard deviation of every channel. Layout per joint is
/// [mean x, mean y, mean z, std x, std y, std z]; length 6N.
std::vector<double> segment_descriptor(const MotionSequence& motion, const EmbeddingWeights& w,
                                       std::size_t frames = kDefaultDescriptorFrames);

struct ProjectionBasis {
  std::vector<double> center;
  std::vector<std::vector<double>> columns;  // orthonormal, each the size of center

  std::size_t dim() const { return columns.size(); }
  bool operator==(const ProjectionBasis&) const = default;
};

struct SegmentEmbedding {
  std::vector<double> vector;
  std::optional<std::string> source_label;

  std::size_t n() const { return vector.size(); }
  bool operator==(const SegmentEmbedding&) const = default;
};

/// Principal basis of the rows of `descriptors` (one descriptor per row),
/// centered on their mean. Keeps min(max_dim, rank) components ordered by
/// decreasing variance, each with its largest-magnitude entry positive. A
/// rank-0 corpus yields the single unit vector e_0.
ProjectionBasis fit_projection_basis(std::span<const std::vector<double>> descriptors,
                                     std::size_t max_dim = 64);

SegmentEmbedding project(std::span<const double> descriptor, const ProjectionBasis& basis);

}  // namespace siglang
