#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "siglang/assessment.hpp"
#include "siglang/embedding.hpp"
#include "siglang/motion.hpp"
#include "siglang/smoothing.hpp"

namespace siglang {

inline constexpr const char* kDatabaseVersion = "siglang-db/1";

struct BuildConfig {
  double fps = 30.0;
  std::size_t max_dim = 64;
  std::size_t descriptor_frames = kDefaultDescriptorFrames;
  // Descriptor distances are half-angle radians; well-separated signs sit
  // about 1.5 apart, which 1.0 would smear into near-uniform distributions.
  double temperature = 0.25;
  double bvh_scale = 0.01;
  SmoothingConfig smoothing;
  EmbeddingWeights weights;

  bool operator==(const BuildConfig& o) const {
    return fps == o.fps && max_dim == o.max_dim && descriptor_frames == o.descriptor_frames &&
           temperature == o.temperature && bvh_scale == o.bvh_scale && smoothing.window == o.smoothing.window &&
           smoothing.poly_order == o.smoothing.poly_order && smoothing.alpha == o.smoothing.alpha &&
           weights == o.weights;
  }
};

struct TeacherTake {
  std::string take_id;
  MotionSequence motion;  // resampled to the database rate and smoothed
  GradientSequence gradient;
  std::vector<double> joint_weights;
  std::vector<double> descriptor;
  SegmentEmbedding embedding;
  double self_confusion = 0.0;
  double self_smoothness = 1.0;

  bool operator==(const TeacherTake&) const = default;
};

struct VocabEntry {
  std::string label;
  std::vector<TeacherTake> takes;  // sorted by take id

  bool operator==(const VocabEntry&) const = default;
};

struct LabeledMotion {
  std::string label;
  std::string take_id;
  MotionSequence motion;
};

/// Teacher reference set. Immutable once built or loaded, so one instance
/// can serve any number of concurrent assessments.
class ReferenceDatabase {
 public:
  /// Reads every `<vocab>__<take>.bvh` in `corpus_dir` (a manifest.json of
  /// the form {"files": {"name.bvh": "label"}} overrides labels).
  static ReferenceDatabase build(const std::string& corpus_dir, const BuildConfig& cfg = {});
  static ReferenceDatabase build(std::vector<LabeledMotion> takes, const BuildConfig& cfg = {});

  static ReferenceDatabase load(const std::string& path);
  static ReferenceDatabase deserialize(const std::vector<std::uint8_t>& bytes);
  std::vector<std::uint8_t> serialize() const;
  void save(const std::string& path) const;

  /// Copy whose descriptors, basis, centroids and teacher confusion are
  /// recomputed under other embedding weights.
  ReferenceDatabase with_weights(const EmbeddingWeights& weights) const;

  double fps() const { return config_.fps; }
  const BuildConfig& config() const { return config_; }
  const SkeletonTopology& topology() const { return topology_; }
  const ProjectionBasis& basis() const { return basis_; }
  const ClusterModel& cluster_model() const { return cluster_; }
  const std::vector<VocabEntry>& entries() const { return entries_; }
  bool contains(const std::string& vocab) const;
  /// Throws UnknownVocab.
  const VocabEntry& entry(const std::string& vocab) const;

  bool operator==(const ReferenceDatabase& o) const;

 private:
  void fit_classifier();

  BuildConfig config_;
  SkeletonTopology topology_;
  ProjectionBasis basis_;
  ClusterModel cluster_;
  std::vector<VocabEntry> entries_;
};

/// Splits `<vocab>__<take>.bvh` into label and take id; a name without the
/// separator is its own label.
std::pair<std::string, std::string> label_from_filename(const std::string& filename);

}  // namespace siglang
