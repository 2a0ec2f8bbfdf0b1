#include "siglang/kinematics.hpp"

#include <algorithm>
#include <string>

#include "siglang/error.hpp"

namespace siglang {

namespace {

constexpr double kSmallAngle = 1e-6;

}  // namespace

Quat Quat::from_axis_angle(const Vec3& axis, double angle) {
  const double n = axis.norm();
  if (n == 0.0) return identity();
  const double s = std::sin(angle / 2.0) / n;
  return {std::cos(angle / 2.0), axis.x * s, axis.y * s, axis.z * s};
}

Quat quat_mul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quat normalized(const Quat& q) {
  const double n = q.norm();
  if (n == 0.0 || !std::isfinite(n)) return Quat::identity();
  return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Vec3 quat_rotate(const Quat& q, const Vec3& v) {
  // v' = v + 2w(u × v) + 2u × (u × v), the expanded form of q v q*.
  const Vec3 u = q.vec();
  const Vec3 t{2.0 * (u.y * v.z - u.z * v.y), 2.0 * (u.z * v.x - u.x * v.z),
               2.0 * (u.x * v.y - u.y * v.x)};
  return {v.x + q.w * t.x + (u.y * t.z - u.z * t.y),
          v.y + q.w * t.y + (u.z * t.x - u.x * t.z),
          v.z + q.w * t.z + (u.x * t.y - u.y * t.x)};
}

Quat quat_canonicalize(const Quat& q) {
  if (q.w > 0.0) return q;
  if (q.w < 0.0) return -q;
  for (double c : {q.x, q.y, q.z}) {
    if (c > 0.0) return q;
    if (c < 0.0) return -q;
  }
  return q;
}

Vec3 quat_log(const Quat& q) {
  const Quat c = quat_canonicalize(q);
  const Vec3 v = c.vec();
  const double s = v.norm();
  if (s < kSmallAngle) return v;
  return v * (std::atan2(s, c.w) / s);
}

Quat quat_exp(const Vec3& u) {
  const double h = u.norm();
  Quat q;
  if (h < kSmallAngle) {
    const double k = 1.0 - h * h / 6.0;
    q = {1.0 - h * h / 2.0, u.x * k, u.y * k, u.z * k};
  } else {
    const double k = std::sin(h) / h;
    q = {std::cos(h), u.x * k, u.y * k, u.z * k};
  }
  return quat_canonicalize(normalized(q));
}

Quat slerp(const Quat& a, const Quat& b, double t) {
  if (t <= 0.0) return quat_canonicalize(a);
  if (t >= 1.0) return quat_canonicalize(b);
  const Quat rel = quat_canonicalize(a.conj() * b);
  return quat_canonicalize(normalized(a * quat_exp(quat_log(rel) * t)));
}

double geodesic_angle(const Quat& a, const Quat& b) {
  // Vector part of a* b, grouped so that identical inputs cancel exactly.
  const Vec3 v{(a.w * b.x - b.w * a.x) - (a.y * b.z - a.z * b.y),
               (a.w * b.y - b.w * a.y) - (a.z * b.x - a.x * b.z),
               (a.w * b.z - b.w * a.z) - (a.x * b.y - a.y * b.x)};
  return 2.0 * std::atan2(v.norm(), std::abs(a.dot(b)));
}

SkeletonTopology::SkeletonTopology(std::vector<std::string> names,
                                   std::vector<std::size_t> parents,
                                   std::vector<Vec3> rest_offsets) {
  const std::size_t n = names.size();
  if (parents.size() != n || rest_offsets.size() != n) {
    throw Error(ErrorKind::TopologyMismatch,
                "skeleton: names, parents and offsets differ in length");
  }
  if (n == 0) throw Error(ErrorKind::TopologyMismatch, "skeleton: no joints");

  std::size_t root = kNoParent;
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (parents[i] == kNoParent) {
      if (root != kNoParent) {
        throw Error(ErrorKind::TopologyMismatch, "skeleton: more than one root");
      }
      root = i;
    } else if (parents[i] >= n || parents[i] == i) {
      throw Error(ErrorKind::TopologyMismatch,
                  "skeleton: joint '" + names[i] + "' has an invalid parent");
    } else {
      children[parents[i]].push_back(i);
    }
  }
  if (root == kNoParent) throw Error(ErrorKind::TopologyMismatch, "skeleton: no root");

  // Preorder walk from the root; joints unreachable from it sit on a cycle.
  std::vector<std::size_t> order;
  order.reserve(n);
  std::vector<std::size_t> stack{root};
  while (!stack.empty()) {
    const std::size_t j = stack.back();
    stack.pop_back();
    order.push_back(j);
    for (auto it = children[j].rbegin(); it != children[j].rend(); ++it) stack.push_back(*it);
  }
  if (order.size() != n) throw Error(ErrorKind::TopologyMismatch, "skeleton: parent links form a cycle");

  input_order_.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) input_order_[order[k]] = k;

  names_.reserve(n);
  parents_.reserve(n);
  offsets_.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t old = order[k];
    names_.push_back(std::move(names[old]));
    parents_.push_back(parents[old] == kNoParent ? kNoParent : input_order_[parents[old]]);
    offsets_.push_back(rest_offsets[old]);
  }
}

std::size_t SkeletonTopology::find(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  return it == names_.end() ? kNoParent : static_cast<std::size_t>(it - names_.begin());
}

std::vector<Quat> global_rotations(const SkeletonTopology& topo, const Pose& pose) {
  if (pose.rotations.size() != topo.size()) {
    throw Error(ErrorKind::TopologyMismatch,
                "pose has " + std::to_string(pose.rotations.size()) + " rotations, skeleton has " +
                    std::to_string(topo.size()) + " joints");
  }
  std::vector<Quat> global(topo.size());
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const std::size_t p = topo.parent(i);
    global[i] = p == kNoParent ? pose.rotations[i] : normalized(global[p] * pose.rotations[i]);
  }
  return global;
}

std::vector<Vec3> forward_kinematics(const SkeletonTopology& topo, const Pose& pose) {
  const std::vector<Quat> global = global_rotations(topo, pose);
  std::vector<Vec3> pos(topo.size());
  for (std::size_t i = 0; i < topo.size(); ++i) {
    const std::size_t p = topo.parent(i);
    pos[i] = p == kNoParent ? pose.root_translation
                            : pos[p] + quat_rotate(global[p], topo.rest_offset(i));
  }
  return pos;
}

}  // namespace siglang
