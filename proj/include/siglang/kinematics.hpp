#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace siglang {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  bool operator==(const Vec3&) const = default;

  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Hamilton quaternion, scalar first. Rotations are represented by unit
/// quaternions; q and -q describe the same rotation.
struct Quat {
  double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

  static Quat identity() { return {}; }
  /// Rotation of `angle` radians about `axis` (normalized internally).
  static Quat from_axis_angle(const Vec3& axis, double angle);

  Vec3 vec() const { return {x, y, z}; }
  double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
  Quat conj() const { return {w, -x, -y, -z}; }
  Quat operator-() const { return {-w, -x, -y, -z}; }
  bool operator==(const Quat&) const = default;
};

Quat quat_mul(const Quat& a, const Quat& b);
inline Quat operator*(const Quat& a, const Quat& b) { return quat_mul(a, b); }

Quat normalized(const Quat& q);

/// Computes q v q^-1 for unit q.
Vec3 quat_rotate(const Quat& q, const Vec3& v);

/// Picks the double-cover representative with w > 0. When w == 0 the first
/// nonzero vector component is made positive.
Quat quat_canonicalize(const Quat& q);

/// Half-angle logarithm: (cos θ/2, sin θ/2·axis) maps to (θ/2)·axis, so the
/// result has norm at most π/2 for canonical input.
Vec3 quat_log(const Quat& q);

/// Inverse of quat_log. Returns a canonical unit quaternion.
Quat quat_exp(const Vec3& half_angle_axis);

/// Geodesic interpolation along the shortest arc.
Quat slerp(const Quat& a, const Quat& b, double t);

/// Rotation angle in [0, π] between two orientations.
double geodesic_angle(const Quat& a, const Quat& b);

inline constexpr std::size_t kNoParent = std::numeric_limits<std::size_t>::max();

/// Joint tree. Construction reindexes joints so that every parent precedes
/// its children, which lets forward kinematics run in a single pass.
class SkeletonTopology {
 public:
  SkeletonTopology() = default;
  /// `parents[i] == kNoParent` marks the root. Throws TopologyMismatch if
  /// the links do not form a single-rooted tree.
  SkeletonTopology(std::vector<std::string> names, std::vector<std::size_t> parents,
                   std::vector<Vec3> rest_offsets);

  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<std::size_t>& parents() const { return parents_; }
  const std::vector<Vec3>& rest_offsets() const { return offsets_; }
  const std::string& name(std::size_t i) const { return names_[i]; }
  std::size_t parent(std::size_t i) const { return parents_[i]; }
  const Vec3& rest_offset(std::size_t i) const { return offsets_[i]; }

  /// Index of the joint called `name`, or kNoParent.
  std::size_t find(const std::string& name) const;

  /// Maps a caller-supplied joint index to its position after reindexing.
  const std::vector<std::size_t>& input_order() const { return input_order_; }

  bool operator==(const SkeletonTopology& o) const {
    return names_ == o.names_ && parents_ == o.parents_ && offsets_ == o.offsets_;
  }

 private:
  std::vector<std::string> names_;
  std::vector<std::size_t> parents_;
  std::vector<Vec3> offsets_;
  std::vector<std::size_t> input_order_;
};

struct Pose {
  std::vector<Quat> rotations;  // local, relative to the parent frame
  Vec3 root_translation;

  static Pose rest(std::size_t joint_count) {
    return Pose{std::vector<Quat>(joint_count), Vec3{}};
  }
  bool operator==(const Pose&) const = default;
};

/// Global joint positions: position[root] is the root translation and each
/// child sits at its parent's position plus the parent's accumulated global
/// rotation applied to the child's rest offset.
std::vector<Vec3> forward_kinematics(const SkeletonTopology& topo, const Pose& pose);

/// Accumulated root-to-joint rotation for every joint.
std::vector<Quat> global_rotations(const SkeletonTopology& topo, const Pose& pose);

}  // namespace siglang
