#include "fixtures.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>

#include "siglang/motion_json.hpp"

namespace siglang::fixtures {

namespace fs = std::filesystem;

Quat random_unit_quat(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return quat_canonicalize(normalized({g(rng), g(rng), g(rng), g(rng)}));
}

Vec3 random_vec(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return {u(rng), u(rng), u(rng)};
}

SkeletonTopology random_topology(std::mt19937_64& rng, std::size_t joints) {
  std::vector<std::size_t> parent(joints, kNoParent);
  for (std::size_t i = 1; i < joints; ++i) parent[i] = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);

  std::vector<std::size_t> listing(joints);
  std::iota(listing.begin(), listing.end(), 0);
  std::shuffle(listing.begin(), listing.end(), rng);
  std::vector<std::size_t> slot(joints);
  for (std::size_t k = 0; k < joints; ++k) slot[listing[k]] = k;

  std::vector<std::string> names(joints);
  std::vector<std::size_t> parents(joints);
  std::vector<Vec3> offsets(joints);
  for (std::size_t i = 0; i < joints; ++i) {
    names[slot[i]] = "j" + std::to_string(i);
    parents[slot[i]] = parent[i] == kNoParent ? kNoParent : slot[parent[i]];
    offsets[slot[i]] = random_vec(rng, 0.3);
  }
  return SkeletonTopology(names, parents, offsets);
}

SkeletonTopology upper_body() {
  std::vector<std::string> names{"Hips",      "Spine", "Chest",    "Neck",     "Head",  "LShoulder", "LArm",
                                 "LForearm",  "LHand", "RShoulder", "RArm",     "RForearm", "RHand"};
  std::vector<std::size_t> parents{kNoParent, 0, 1, 2, 3, 2, 5, 6, 7, 2, 9, 10, 11};
  std::vector<Vec3> offsets{{0, 0.9, 0},     {0, 0.1, 0},   {0, 0.15, 0},  {0, 0.2, 0},    {0, 0.1, 0},
                            {0.05, 0.17, 0}, {0.12, 0, 0},  {0.28, 0, 0},  {0.25, 0, 0},   {-0.05, 0.17, 0},
                            {-0.12, 0, 0},   {-0.28, 0, 0}, {-0.25, 0, 0}};
  return SkeletonTopology(names, parents, offsets);
}

MotionSequence constant_motion(const SkeletonTopology& topo, const Pose& pose, std::size_t frames, double fps) {
  MotionSequence m;
  m.topology = topo;
  m.fps = fps;
  m.frames.assign(frames, pose);
  return m;
}

std::string vocab_name(std::size_t vocab) {
  static const char* kWords[] = {"hello", "thanks", "please", "sorry", "water", "family", "friend", "school",
                                 "teacher", "learn", "home", "eat", "drink", "help", "good", "bad",
                                 "yes", "no", "name", "sign"};
  return vocab < std::size(kWords) ? kWords[vocab] : "word" + std::to_string(vocab);
}

MotionSequence sign_motion(std::size_t vocab, std::size_t take, double fps) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  std::mt19937_64 rng(7919 * vocab + 17);
  std::mt19937_64 take_rng(104729 * vocab + 31 * take + 5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  auto direction = [&](std::mt19937_64& r) {
    const Vec3 v{gauss(r), gauss(r), gauss(r)};
    return v * (1.0 / v.norm());
  };

  const SkeletonTopology topo = upper_body();
  const std::size_t n = topo.size();
  struct Track {
    Vec3 base;
    Vec3 axis;
    double amplitude;
    double cycles;
    double phase;
  };
  static constexpr double kCycles[] = {1.0, 1.5, 2.0, 3.0};
  std::vector<Track> tracks(n);
  for (std::size_t j = 0; j < n; ++j) {
    const bool arm = j >= 5;
    Track& t = tracks[j];
    t.base = direction(rng) * (arm ? 0.4 + 1.0 * unit(rng) : 0.15 * unit(rng));
    t.axis = direction(rng);
    t.amplitude = arm ? 0.25 + 0.45 * unit(rng) : 0.05;
    t.cycles = kCycles[static_cast<std::size_t>(unit(rng) * 4.0) % 4];
    t.phase = kTwoPi * unit(rng);
  }

  const double tempo = take == 0 ? 1.0 : 1.0 + 0.16 * (unit(take_rng) - 0.5);
  const double gain = take == 0 ? 1.0 : 1.0 + 0.1 * (unit(take_rng) - 0.5);
  for (Track& t : tracks) {
    if (take != 0) t.base += Vec3{gauss(take_rng), gauss(take_rng), gauss(take_rng)} * 0.02;
    t.amplitude *= gain;
  }

  const double duration = 2.0 * tempo;
  const auto frames = static_cast<std::size_t>(std::llround(duration * fps)) + 1;
  MotionSequence m;
  m.topology = topo;
  m.fps = fps;
  m.label = vocab_name(vocab);
  for (std::size_t f = 0; f < frames; ++f) {
    const double tau = static_cast<double>(f) / static_cast<double>(frames - 1);
    Pose p = Pose::rest(n);
    p.root_translation = topo.rest_offset(0);
    for (std::size_t j = 0; j < n; ++j) {
      const Track& t = tracks[j];
      const double swing = t.amplitude * std::sin(kTwoPi * t.cycles * tau + t.phase);
      p.rotations[j] = quat_canonicalize(normalized(quat_exp(t.base * 0.5) * quat_exp(t.axis * (0.5 * swing))));
    }
    m.frames.push_back(std::move(p));
  }
  return m;
}

std::vector<LabeledMotion> sign_corpus(std::size_t vocab_count, std::size_t takes) {
  std::vector<LabeledMotion> out;
  for (std::size_t v = 0; v < vocab_count; ++v) {
    for (std::size_t k = 0; k < takes; ++k) out.push_back({vocab_name(v), "t" + std::to_string(k), sign_motion(v, k)});
  }
  return out;
}

void write_sign_corpus(const std::string& dir, std::size_t vocab_count, std::size_t takes) {
  fs::create_directories(dir);
  for (std::size_t v = 0; v < vocab_count; ++v) {
    for (std::size_t k = 0; k < takes; ++k) {
      save_motion(sign_motion(v, k), (fs::path(dir) / (vocab_name(v) + "__t" + std::to_string(k) + ".bvh")).string());
    }
  }
}

std::string temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("siglang_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

MotionSequence with_noise(const MotionSequence& m, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  MotionSequence out = m;
  for (Pose& p : out.frames) {
    for (Quat& q : p.rotations) {
      const Vec3 e{n(rng) * sigma, n(rng) * sigma, n(rng) * sigma};
      q = quat_canonicalize(q * quat_exp(e * 0.5));
    }
  }
  return out;
}

}  // namespace siglang::fixtures
