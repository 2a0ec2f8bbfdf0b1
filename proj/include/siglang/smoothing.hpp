#pragma once

#include <span>
#include <vector>

#include "siglang/motion.hpp"

namespace siglang {

struct SmoothingConfig {
  std::size_t window = 7;      // odd, >= 3
  std::size_t poly_order = 3;  // >= 1, < window
  double alpha = 8.0;          // score sharpness, 1/rad

  void validate() const;
};

struct SmoothnessResult {
  MotionSequence smoothed;
  double d_s = 0.0;    // mean per-frame per-joint geodesic distance, radians
  double score = 1.0;  // exp(-alpha * d_s)
};

/// Least-squares polynomial (Savitzky-Golay) filter. Interior samples use
/// the centered window; the first and last window/2 samples are evaluated
/// on the polynomial fitted to the first/last full window, so polynomials
/// up to `poly_order` pass through unchanged everywhere. Signals shorter
/// than the window are returned as is.
std::vector<double> savgol_filter(std::span<const double> signal, std::size_t window, std::size_t poly_order);

/// Chordal mean of a set of rotations, sign-aligned to the first.
Quat mean_rotation(std::span<const Quat> rotations);

/// Filters every joint's rotation track in log space about its temporal
/// mean, and the root translation componentwise.
MotionSequence smooth_sequence(const MotionSequence& motion, const SmoothingConfig& cfg = {});

SmoothnessResult smoothness(const MotionSequence& motion, const SmoothingConfig& cfg = {});

}  // namespace siglang
