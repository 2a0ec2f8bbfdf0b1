#include "siglang/motion.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

#include "siglang/error.hpp"

namespace siglang {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Quat axis_rotation(Axis axis, double radians) {
  const double c = std::cos(radians / 2.0);
  const double s = std::sin(radians / 2.0);
  switch (axis) {
    case Axis::X: return {c, s, 0.0, 0.0};
    case Axis::Y: return {c, 0.0, s, 0.0};
    case Axis::Z: return {c, 0.0, 0.0, s};
  }
  return Quat::identity();
}

double component(const Vec3& v, std::size_t k) { return k == 0 ? v.x : (k == 1 ? v.y : v.z); }

}  // namespace

void validate(const MotionSequence& motion) {
  if (motion.frames.empty()) throw Error(ErrorKind::EmptyMotion, "motion has no frames");
  if (!(motion.fps > 0.0) || !std::isfinite(motion.fps)) {
    throw Error(ErrorKind::InvalidArgument, "motion fps must be finite and positive");
  }
  for (const Pose& p : motion.frames) {
    if (p.rotations.size() != motion.topology.size()) {
      throw Error(ErrorKind::TopologyMismatch, "frame rotation count differs from joint count");
    }
  }
}

EulerOrder EulerOrder::parse(const std::string& text) {
  if (text.size() != 3) throw Error(ErrorKind::InvalidArgument, "euler order must have 3 axes: " + text);
  EulerOrder order;
  bool seen[3] = {false, false, false};
  for (std::size_t k = 0; k < 3; ++k) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(text[k])));
    if (c < 'X' || c > 'Z') throw Error(ErrorKind::InvalidArgument, "bad euler axis in " + text);
    const int idx = c - 'X';
    if (seen[idx]) throw Error(ErrorKind::InvalidArgument, "repeated euler axis in " + text);
    seen[idx] = true;
    order.axes[k] = static_cast<Axis>(idx);
  }
  return order;
}

std::string EulerOrder::str() const {
  std::string s;
  for (Axis a : axes) s.push_back(static_cast<char>('X' + static_cast<int>(a)));
  return s;
}

Quat euler_to_quat(const Vec3& angles_deg, const EulerOrder& order) {
  Quat q;
  for (std::size_t k = 0; k < 3; ++k) {
    q = q * axis_rotation(order.axes[k], component(angles_deg, k) * kDeg);
  }
  return quat_canonicalize(normalized(q));
}

Vec3 quat_to_euler_zxy(const Quat& raw) {
  const Quat q = normalized(raw);
  const double r00 = 1.0 - 2.0 * (q.y * q.y + q.z * q.z);
  const double r01 = 2.0 * (q.x * q.y - q.w * q.z);
  const double r10 = 2.0 * (q.x * q.y + q.w * q.z);
  const double r11 = 1.0 - 2.0 * (q.x * q.x + q.z * q.z);
  const double r20 = 2.0 * (q.x * q.z - q.w * q.y);
  const double r21 = 2.0 * (q.y * q.z + q.w * q.x);
  const double r22 = 1.0 - 2.0 * (q.x * q.x + q.y * q.y);

  // R = Rz(a) Rx(b) Ry(c): r21 = sin b, r20 = -cos b sin c, r22 = cos b cos c,
  // r01 = -sin a cos b, r11 = cos a cos b.
  const double cb = std::hypot(r20, r22);
  const double b = std::atan2(r21, cb);
  double a = 0.0, c = 0.0;
  if (cb > 1e-12) {
    a = std::atan2(-r01, r11);
    c = std::atan2(-r20, r22);
  } else {
    a = std::atan2(r10, r00);
  }
  return {a / kDeg, b / kDeg, c / kDeg};
}

Pose interpolate_pose(const MotionSequence& motion, double pos) {
  const std::size_t last = motion.frames.size() - 1;
  if (pos <= 0.0) return motion.frames.front();
  if (pos >= static_cast<double>(last)) return motion.frames.back();
  const auto i = static_cast<std::size_t>(std::floor(pos));
  const double t = pos - static_cast<double>(i);
  if (t == 0.0) return motion.frames[i];

  const Pose& a = motion.frames[i];
  const Pose& b = motion.frames[i + 1];
  Pose out;
  out.rotations.resize(a.rotations.size());
  for (std::size_t j = 0; j < a.rotations.size(); ++j) {
    out.rotations[j] = slerp(a.rotations[j], b.rotations[j], t);
  }
  out.root_translation = a.root_translation * (1.0 - t) + b.root_translation * t;
  return out;
}

MotionSequence resample_to_count(const MotionSequence& motion, std::size_t frame_count) {
  validate(motion);
  if (frame_count == 0) throw Error(ErrorKind::InvalidArgument, "resample to zero frames");

  MotionSequence out;
  out.topology = motion.topology;
  out.label = motion.label;
  const double duration = motion.duration();
  out.fps = (duration > 0.0 && frame_count > 1) ? (frame_count - 1) / duration : motion.fps;

  const double span = static_cast<double>(motion.frames.size() - 1);
  out.frames.reserve(frame_count);
  for (std::size_t k = 0; k < frame_count; ++k) {
    const double pos = frame_count == 1 ? 0.0 : k * span / static_cast<double>(frame_count - 1);
    out.frames.push_back(interpolate_pose(motion, pos));
  }
  return out;
}

MotionSequence resample(const MotionSequence& motion, double target_fps) {
  if (!(target_fps > 0.0) || !std::isfinite(target_fps)) {
    throw Error(ErrorKind::InvalidArgument, "target fps must be finite and positive");
  }
  validate(motion);
  const auto count = static_cast<std::size_t>(std::llround(motion.duration() * target_fps)) + 1;
  MotionSequence out = resample_to_count(motion, count);
  out.fps = target_fps;
  return out;
}

MotionSequence reorder_joints(const MotionSequence& motion, const SkeletonTopology& target) {
  const SkeletonTopology& src = motion.topology;
  if (src.size() != target.size()) {
    throw Error(ErrorKind::TopologyMismatch, "joint counts differ (" + std::to_string(src.size()) +
                                                 " vs " + std::to_string(target.size()) + ")");
  }
  std::vector<std::size_t> from(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    const std::size_t j = src.find(target.name(i));
    if (j == kNoParent) throw Error(ErrorKind::TopologyMismatch, "missing joint '" + target.name(i) + "'");
    const std::size_t tp = target.parent(i);
    const std::size_t sp = src.parent(j);
    const bool same_parent = (tp == kNoParent && sp == kNoParent) ||
                             (tp != kNoParent && sp != kNoParent && target.name(tp) == src.name(sp));
    if (!same_parent) {
      throw Error(ErrorKind::TopologyMismatch, "joint '" + target.name(i) + "' has a different parent");
    }
    from[i] = j;
  }

  MotionSequence out;
  out.topology = target;
  out.fps = motion.fps;
  out.label = motion.label;
  out.frames.reserve(motion.frames.size());
  for (const Pose& p : motion.frames) {
    Pose q;
    q.root_translation = p.root_translation;
    q.rotations.resize(target.size());
    for (std::size_t i = 0; i < target.size(); ++i) q.rotations[i] = p.rotations[from[i]];
    out.frames.push_back(std::move(q));
  }
  return out;
}

}  // namespace siglang
