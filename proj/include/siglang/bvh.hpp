#pragma once

#include <istream>
#include <string>

#include "siglang/motion.hpp"

namespace siglang {

struct BvhOptions {
  double scale = 0.01;  // meters per BVH unit
};

/// Reads a Biovision hierarchy. End Site blocks are consumed but not turned
/// into joints; position channels on non-root joints are ignored.
MotionSequence parse_bvh(std::istream& in, const BvhOptions& opts = {});
MotionSequence parse_bvh(const std::string& text, const BvhOptions& opts = {});
MotionSequence load_bvh(const std::string& path, const BvhOptions& opts = {});

/// Emits ZXY rotation channels for every joint and position channels on the
/// root.
std::string write_bvh(const MotionSequence& motion, const BvhOptions& opts = {});

}  // namespace siglang
