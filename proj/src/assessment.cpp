#include "siglang/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <thread>

#include "json.hpp"
#include "siglang/error.hpp"
#include "siglang/refdb.hpp"

namespace siglang {

void ClusterModel::validate() const {
  if (centroids.empty()) throw Error(ErrorKind::EmptyModel, "cluster model has no centroids");
  if (labels.size() != centroids.size()) throw Error(ErrorKind::InvalidArgument, "centroid/label count mismatch");
  if (!(temperature > 0.0)) throw Error(ErrorKind::InvalidArgument, "temperature must be positive");
  const std::size_t n = centroids.front().size();
  for (const auto& c : centroids) {
    if (c.size() != n) throw Error(ErrorKind::DimensionMismatch, "centroids differ in dimension");
  }
}

ConfusionResult class_distribution(const SegmentEmbedding& e, const ClusterModel& model) {
  model.validate();
  if (e.n() != model.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "embedding dimension " + std::to_string(e.n()) +
                                                  " differs from model dimension " + std::to_string(model.dim()));
  }
  const std::size_t k = model.size();
  ConfusionResult r;
  r.distances.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    double s = 0.0;
    for (std::size_t d = 0; d < e.n(); ++d) {
      const double diff = e.vector[d] - model.centroids[i][d];
      s += diff * diff;
    }
    r.distances[i] = std::sqrt(s);
  }

  const std::size_t nearest =
      static_cast<std::size_t>(std::min_element(r.distances.begin(), r.distances.end()) - r.distances.begin());
  const double dmin = r.distances[nearest];
  r.distribution.resize(k);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    r.distribution[i] = std::exp(-(r.distances[i] - dmin) / model.temperature);
    z += r.distribution[i];
  }
  for (double& p : r.distribution) p /= z;

  r.assigned_index = nearest;
  r.assigned_label = model.labels[nearest];
  if (k >= 2) {
    double h = 0.0;
    for (double p : r.distribution) {
      if (p > 0.0) h -= p * std::log(p);
    }
    r.confusion = std::clamp(h / std::log(static_cast<double>(k)), 0.0, 1.0);
  }
  return r;
}

GradientSequence angular_velocity(const MotionSequence& motion) {
  validate(motion);
  if (motion.frame_count() < 2) throw Error(ErrorKind::EmptyMotion, "angular velocity needs at least two frames");
  GradientSequence g;
  g.fps = motion.fps;
  g.intervals.resize(motion.frame_count() - 1);
  for (std::size_t t = 0; t + 1 < motion.frame_count(); ++t) {
    const Pose& a = motion.frames[t];
    const Pose& b = motion.frames[t + 1];
    auto& row = g.intervals[t];
    row.resize(motion.joint_count());
    for (std::size_t j = 0; j < row.size(); ++j) {
      row[j] = quat_log(quat_canonicalize(a.rotations[j].conj() * b.rotations[j])) * (2.0 * motion.fps);
    }
  }
  return g;
}

std::vector<double> joint_weights(const GradientSequence& teacher) {
  const std::size_t n = teacher.joint_count();
  if (n == 0) return {};
  std::vector<double> w(n, 0.0);
  for (const auto& row : teacher.intervals) {
    for (std::size_t j = 0; j < n; ++j) w[j] += row[j].norm();
  }
  double total = 0.0;
  for (double& v : w) {
    v = kJointWeightFloor + v / static_cast<double>(teacher.size());
    total += v;
  }
  for (double& v : w) v /= total;
  return w;
}

std::vector<double> joint_weights(const MotionSequence& teacher) {
  if (teacher.frame_count() < 2) return std::vector<double>(teacher.joint_count(), 1.0 / teacher.joint_count());
  return joint_weights(angular_velocity(teacher));
}

double AlignmentResult::teacher_coverage(std::size_t teacher_len) const {
  if (teacher_len == 0) return 0.0;
  std::vector<bool> seen(teacher_len, false);
  for (const auto& [s, t] : path) {
    if (t < teacher_len) seen[t] = true;
  }
  return static_cast<double>(std::count(seen.begin(), seen.end(), true)) / static_cast<double>(teacher_len);
}

AlignmentResult ddtw(const GradientSequence& stu, const GradientSequence& tea, std::span<const double> weights,
                     const DtwOptions& opts) {
  const std::size_t ls = stu.size();
  const std::size_t lt = tea.size();
  if (ls == 0 || lt == 0) throw Error(ErrorKind::EmptyMotion, "alignment needs nonempty gradient sequences");
  const std::size_t n = stu.joint_count();
  if (tea.joint_count() != n || weights.size() != n) {
    throw Error(ErrorKind::TopologyMismatch, "student, teacher and weights disagree on joint count");
  }
  const std::size_t gap = ls > lt ? ls - lt : lt - ls;
  if (opts.band && *opts.band < gap) {
    throw Error(ErrorKind::BandInfeasible, "band " + std::to_string(*opts.band) + " is narrower than the length gap " +
                                               std::to_string(gap));
  }
  auto in_band = [&](std::size_t i, std::size_t j) {
    return !opts.band || (i > j ? i - j : j - i) <= *opts.band;
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(ls * lt, kInf);
  auto fill_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < lt; ++j) {
        if (!in_band(i, j)) continue;
        double c = 0.0;
        for (std::size_t k = 0; k < n; ++k) c += weights[k] * (stu.intervals[i][k] - tea.intervals[j][k]).norm();
        cost[i * lt + j] = c;
      }
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(opts.threads, 1, ls);
  if (workers == 1) {
    fill_rows(0, ls);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (ls + workers - 1) / workers;
    for (std::size_t begin = 0; begin < ls; begin += chunk) pool.emplace_back(fill_rows, begin, std::min(ls, begin + chunk));
  }

  std::vector<double> acc(ls * lt, kInf);
  for (std::size_t i = 0; i < ls; ++i) {
    for (std::size_t j = 0; j < lt; ++j) {
      const double c = cost[i * lt + j];
      if (c == kInf) continue;
      if (i == 0 && j == 0) {
        acc[0] = c;
        continue;
      }
      double best = kInf;
      if (i > 0 && j > 0) best = acc[(i - 1) * lt + j - 1];
      if (j > 0) best = std::min(best, acc[i * lt + j - 1]);
      if (i > 0) best = std::min(best, acc[(i - 1) * lt + j]);
      acc[i * lt + j] = c + best;
    }
  }

  AlignmentResult r;
  r.distance = acc[ls * lt - 1];
  std::size_t i = ls - 1, j = lt - 1;
  r.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    const double diag = (i > 0 && j > 0) ? acc[(i - 1) * lt + j - 1] : kInf;
    const double left = j > 0 ? acc[i * lt + j - 1] : kInf;
    const double up = i > 0 ? acc[(i - 1) * lt + j] : kInf;
    if (diag <= left && diag <= up) {
      --i;
      --j;
    } else if (left <= up) {
      --j;
    } else {
      --i;
    }
    r.path.emplace_back(i, j);
  }
  std::reverse(r.path.begin(), r.path.end());

  r.per_joint_error.assign(n, 0.0);
  for (const auto& [a, b] : r.path) {
    for (std::size_t k = 0; k < n; ++k) r.per_joint_error[k] += (stu.intervals[a][k] - tea.intervals[b][k]).norm();
  }
  const double len = static_cast<double>(r.path.size());
  for (double& e : r.per_joint_error) e /= len;
  r.normalized_score = std::exp(-r.distance / (len * opts.reference_scale));
  return r;
}

void CompositeWeights::validate() const {
  if (confusion < 0.0 || smoothness < 0.0 || alignment < 0.0) {
    throw Error(ErrorKind::InvalidArgument, "composite weights must be non-negative");
  }
  if (std::abs(confusion + smoothness + alignment - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "composite weights must sum to 1");
  }
}

double composite_score(const CompositeWeights& w, double confusion, double smoothness, double alignment) {
  return 100.0 * (w.confusion * (1.0 - confusion) + w.smoothness * smoothness + w.alignment * alignment);
}

AssessmentReport assess(const MotionSequence& student, const std::string& vocab, const ReferenceDatabase& db,
                        const AssessmentConfig& cfg) {
  cfg.composite.validate();
  const VocabEntry& entry = db.entry(vocab);
  const MotionSequence aligned = resample(reorder_joints(student, db.topology()), db.fps());

  AssessmentReport r;
  r.vocab = vocab;
  r.labels = db.cluster_model().labels;
  r.joint_names = db.topology().names();

  const std::vector<double> desc = segment_descriptor(aligned, db.config().weights, db.config().descriptor_frames);
  r.confusion = class_distribution(project(desc, db.basis()), db.cluster_model());
  r.smoothness = smoothness(aligned, db.config().smoothing);

  const GradientSequence grad = angular_velocity(aligned);
  DtwOptions dtw;
  dtw.band = cfg.band;
  dtw.threads = cfg.threads;
  bool first = true;
  for (const TeacherTake& take : entry.takes) {
    AlignmentResult a = ddtw(grad, take.gradient, take.joint_weights, dtw);
    if (first || a.distance < r.alignment.distance) {
      r.alignment = std::move(a);
      r.matched_take = take.take_id;
      first = false;
    }
  }

  r.composite = composite_score(cfg.composite, r.confusion.confusion, r.smoothness.score,
                                r.alignment.normalized_score);

  std::vector<std::size_t> order(r.joint_names.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r.alignment.per_joint_error[a] > r.alignment.per_joint_error[b];
  });
  for (std::size_t k = 0; k < std::min<std::size_t>(3, order.size()); ++k) r.worst_joints.push_back(r.joint_names[order[k]]);
  return r;
}

double round_significant(double v, int digits) {
  if (v == 0.0 || !std::isfinite(v)) return v + 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
  return std::strtod(buf, nullptr) + 0.0;
}

std::string report_to_json(const AssessmentReport& r) {
  using nlohmann::ordered_json;
  auto num = [](double v) { return round_significant(v, 9); };

  ordered_json dist = ordered_json::object();
  for (std::size_t i = 0; i < r.labels.size(); ++i) dist[r.labels[i]] = num(r.confusion.distribution[i]);
  ordered_json per_joint = ordered_json::object();
  for (std::size_t i = 0; i < r.joint_names.size(); ++i) per_joint[r.joint_names[i]] = num(r.alignment.per_joint_error[i]);

  ordered_json j;
  j["version"] = "siglang-report/1";
  j["vocab"] = r.vocab;
  j["confusion"] = {{"distribution", dist}, {"assigned", r.confusion.assigned_label}, {"C", num(r.confusion.confusion)}};
  j["smoothness"] = {{"d_s", num(r.smoothness.d_s)}, {"S", num(r.smoothness.score)}};
  j["alignment"] = {{"D", num(r.alignment.distance)},
                    {"score", num(r.alignment.normalized_score)},
                    {"path_len", r.alignment.path.size()},
                    {"matched_take", r.matched_take},
                    {"per_joint", per_joint}};
  j["composite"] = num(r.composite);
  j["worst_joints"] = r.worst_joints;
  return j.dump(2) + "\n";
}

}  // namespace siglang
