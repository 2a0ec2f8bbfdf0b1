#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "siglang/motion.hpp"
#include "siglang/refdb.hpp"

namespace siglang::fixtures {

Quat random_unit_quat(std::mt19937_64& rng);
Vec3 random_vec(std::mt19937_64& rng, double scale);

/// Random tree with `joints` joints whose parents are drawn from earlier
/// joints, listed in shuffled order.
SkeletonTopology random_topology(std::mt19937_64& rng, std::size_t joints);

/// Hips, spine, neck, head and both arms down to the hands (13 joints).
SkeletonTopology upper_body();

/// Constant pose repeated `frames` times.
MotionSequence constant_motion(const SkeletonTopology& topo, const Pose& pose, std::size_t frames, double fps = 30.0);

/// Synthetic sign `vocab` performed as take `take`: each arm joint holds a
/// vocabulary-specific base rotation and oscillates about it; takes differ
/// slightly in tempo, amplitude and base.
MotionSequence sign_motion(std::size_t vocab, std::size_t take, double fps = 30.0);

std::string vocab_name(std::size_t vocab);

/// Every rotation right-multiplied by exp(e/2), e ~ N(0, sigma^2 I).
MotionSequence with_noise(const MotionSequence& m, double sigma, std::uint64_t seed);

/// Writes `<vocab>__t<k>.bvh` files for the first `vocab_count` signs.
void write_sign_corpus(const std::string& dir, std::size_t vocab_count, std::size_t takes);

std::vector<LabeledMotion> sign_corpus(std::size_t vocab_count, std::size_t takes);

/// Fresh empty directory under the system temp dir.
std::string temp_dir(const std::string& name);

}  // namespace siglang::fixtures
