#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "siglang/kinematics.hpp"

namespace siglang {

struct MotionSequence {
  SkeletonTopology topology;
  std::vector<Pose> frames;
  double fps = 30.0;
  std::optional<std::string> label;

  std::size_t frame_count() const { return frames.size(); }
  std::size_t joint_count() const { return topology.size(); }
  double duration() const { return frames.empty() ? 0.0 : (frames.size() - 1) / fps; }
  bool operator==(const MotionSequence&) const = default;
};

/// Throws EmptyMotion / TopologyMismatch / InvalidArgument when the sequence
/// breaks its invariants.
void validate(const MotionSequence& motion);

enum class Axis { X = 0, Y = 1, Z = 2 };

/// Rotation channel order as declared by a BVH CHANNELS line.
struct EulerOrder {
  std::array<Axis, 3> axes{Axis::Z, Axis::X, Axis::Y};

  /// Parses "ZXY"-style strings; throws InvalidArgument unless the three
  /// labels are distinct.
  static EulerOrder parse(const std::string& text);
  std::string str() const;
};

/// Intrinsic composition: angles[k] (degrees) is applied about axes[k], so
/// the result is R(axes[0]) · R(axes[1]) · R(axes[2]).
Quat euler_to_quat(const Vec3& angles_deg, const EulerOrder& order);

/// Inverse of euler_to_quat for the ZXY order, in degrees.
Vec3 quat_to_euler_zxy(const Quat& q);

/// Resamples to `target_fps`: the output spans the same duration (rounded to
/// whole output frames) and keeps the first and last poses exactly.
MotionSequence resample(const MotionSequence& motion, double target_fps);

/// Resamples to exactly `frame_count` frames spread uniformly over the
/// original duration.
MotionSequence resample_to_count(const MotionSequence& motion, std::size_t frame_count);

/// Pose at fractional frame position `pos` (SLERP per joint, linear root).
Pose interpolate_pose(const MotionSequence& motion, double pos);

/// Reorders joints so names follow `names`. Throws TopologyMismatch when the
/// joint-name sets differ.
MotionSequence reorder_joints(const MotionSequence& motion, const SkeletonTopology& target);

}  // namespace siglang
