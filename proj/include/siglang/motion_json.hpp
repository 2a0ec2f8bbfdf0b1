#pragma once

#include "json.hpp"
#include <string>

#include "siglang/motion.hpp"

namespace siglang {

inline constexpr const char* kMotionJsonVersion = "siglang-motion/1";

nlohmann::json motion_to_json(const MotionSequence& motion);
MotionSequence motion_from_json(const nlohmann::json& j);

/// Loads either format, picked by extension (.bvh or .json).
MotionSequence load_motion(const std::string& path, double bvh_scale = 0.01);
void save_motion(const MotionSequence& motion, const std::string& path, double bvh_scale = 0.01);

}  // namespace siglang
