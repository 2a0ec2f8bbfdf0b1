#include "siglang/smoothing.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "siglang/error.hpp"

namespace siglang {

void SmoothingConfig::validate() const {
  if (window < 3 || window % 2 == 0) throw Error(ErrorKind::InvalidArgument, "smoothing window must be odd and >= 3");
  if (poly_order < 1 || poly_order >= window) {
    throw Error(ErrorKind::InvalidArgument, "polynomial order must be >= 1 and below the window");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::InvalidArgument, "alpha must be positive");
}

namespace {

// weights(p, j): contribution of window sample j to the fitted polynomial
// evaluated at sample p.
Eigen::MatrixXd savgol_weights(std::size_t window, std::size_t order) {
  const auto w = static_cast<Eigen::Index>(window);
  const auto k = static_cast<Eigen::Index>(order) + 1;
  const double half = static_cast<double>(window / 2);
  Eigen::MatrixXd a(w, k);
  for (Eigen::Index j = 0; j < w; ++j) {
    const double t = (static_cast<double>(j) - half) / half;
    double pw = 1.0;
    for (Eigen::Index c = 0; c < k; ++c, pw *= t) a(j, c) = pw;
  }
  const Eigen::MatrixXd fit = a.colPivHouseholderQr().solve(Eigen::MatrixXd::Identity(w, w));
  return a * fit;
}

// Sum is taken over deviations from signal[at], so constant input comes
// back bit-identical.
double apply(const Eigen::MatrixXd& weights, Eigen::Index row, std::span<const double> signal,
             std::size_t start, std::size_t at) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < weights.cols(); ++j) {
    acc += weights(row, j) * (signal[start + static_cast<std::size_t>(j)] - signal[at]);
  }
  return signal[at] + acc;
}

}  // namespace

std::vector<double> savgol_filter(std::span<const double> signal, std::size_t window, std::size_t poly_order) {
  SmoothingConfig{window, poly_order, 1.0}.validate();
  std::vector<double> out(signal.begin(), signal.end());
  const std::size_t len = signal.size();
  if (len < window) return out;

  const Eigen::MatrixXd weights = savgol_weights(window, poly_order);
  const std::size_t half = window / 2;
  for (std::size_t i = 0; i < len; ++i) {
    if (i < half) {
      out[i] = apply(weights, static_cast<Eigen::Index>(i), signal, 0, i);
    } else if (i + half >= len) {
      const std::size_t start = len - window;
      out[i] = apply(weights, static_cast<Eigen::Index>(i - start), signal, start, i);
    } else {
      out[i] = apply(weights, static_cast<Eigen::Index>(half), signal, i - half, i);
    }
  }
  return out;
}

Quat mean_rotation(std::span<const Quat> rotations) {
  if (rotations.empty()) return Quat::identity();
  const Quat& ref = rotations.front();
  Quat sum{0.0, 0.0, 0.0, 0.0};
  for (const Quat& q : rotations) {
    const double s = q.dot(ref) < 0.0 ? -1.0 : 1.0;
    sum.w += s * q.w;
    sum.x += s * q.x;
    sum.y += s * q.y;
    sum.z += s * q.z;
  }
  if (sum.norm() < 1e-12) return quat_canonicalize(ref);
  return quat_canonicalize(normalized(sum));
}

MotionSequence smooth_sequence(const MotionSequence& motion, const SmoothingConfig& cfg) {
  cfg.validate();
  validate(motion);
  MotionSequence out = motion;
  const std::size_t frames = motion.frame_count();
  if (frames < cfg.window) return out;

  std::vector<Quat> track(frames);
  std::vector<double> channel(frames);
  std::vector<std::vector<double>> logs(3, std::vector<double>(frames));
  for (std::size_t j = 0; j < motion.joint_count(); ++j) {
    for (std::size_t f = 0; f < frames; ++f) track[f] = motion.frames[f].rotations[j];
    const Quat mean = mean_rotation(track);
    const Quat mean_inv = mean.conj();
    for (std::size_t f = 0; f < frames; ++f) {
      const Vec3 u = quat_log(mean_inv * track[f]);
      logs[0][f] = u.x;
      logs[1][f] = u.y;
      logs[2][f] = u.z;
    }
    std::vector<double> fx = savgol_filter(logs[0], cfg.window, cfg.poly_order);
    std::vector<double> fy = savgol_filter(logs[1], cfg.window, cfg.poly_order);
    std::vector<double> fz = savgol_filter(logs[2], cfg.window, cfg.poly_order);
    for (std::size_t f = 0; f < frames; ++f) {
      if (fx[f] == logs[0][f] && fy[f] == logs[1][f] && fz[f] == logs[2][f]) continue;
      out.frames[f].rotations[j] = quat_canonicalize(normalized(mean * quat_exp({fx[f], fy[f], fz[f]})));
    }
  }

  for (int c = 0; c < 3; ++c) {
    auto get = [c](const Vec3& v) -> double { return c == 0 ? v.x : (c == 1 ? v.y : v.z); };
    for (std::size_t f = 0; f < frames; ++f) channel[f] = get(motion.frames[f].root_translation);
    const std::vector<double> filtered = savgol_filter(channel, cfg.window, cfg.poly_order);
    for (std::size_t f = 0; f < frames; ++f) {
      Vec3& t = out.frames[f].root_translation;
      (c == 0 ? t.x : (c == 1 ? t.y : t.z)) = filtered[f];
    }
  }
  return out;
}

SmoothnessResult smoothness(const MotionSequence& motion, const SmoothingConfig& cfg) {
  SmoothnessResult r;
  r.smoothed = smooth_sequence(motion, cfg);
  double total = 0.0;
  for (std::size_t f = 0; f < motion.frame_count(); ++f) {
    for (std::size_t j = 0; j < motion.joint_count(); ++j) {
      total += geodesic_angle(motion.frames[f].rotations[j], r.smoothed.frames[f].rotations[j]);
    }
  }
  r.d_s = total / static_cast<double>(motion.frame_count() * motion.joint_count());
  r.score = std::exp(-cfg.alpha * r.d_s);
  return r;
}

}  // namespace siglang
