#include "siglang/embedding.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>

#include "siglang/error.hpp"

namespace siglang {

using nlohmann::json;

void EmbeddingWeights::validate(std::size_t joints) const {
  if (!(m1 > 0.0) || !std::isfinite(m1)) throw Error(ErrorKind::InvalidArgument, "m1 must be positive");
  if (!(m2 >= 0.0 && m2 < 1.0)) throw Error(ErrorKind::InvalidArgument, "m2 must lie in [0, 1)");
  if (!per_joint.empty() && per_joint.size() != joints) {
    throw Error(ErrorKind::DimensionMismatch, "weights cover " + std::to_string(per_joint.size()) +
                                                  " joints, skeleton has " + std::to_string(joints));
  }
  for (const Mat3& mat : per_joint) {
    for (double v : mat.m) {
      if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite weight matrix entry");
    }
  }
}

const Mat3& EmbeddingWeights::matrix(std::size_t joint) const {
  static const Mat3 kIdentity;
  return per_joint.empty() ? kIdentity : per_joint[joint];
}

json weights_to_json(const EmbeddingWeights& w) {
  json mats = json::array();
  for (const Mat3& mat : w.per_joint) {
    mats.push_back({{mat.m[0], mat.m[1], mat.m[2]}, {mat.m[3], mat.m[4], mat.m[5]}, {mat.m[6], mat.m[7], mat.m[8]}});
  }
  return {{"version", kWeightsJsonVersion}, {"m1", w.m1}, {"m2", w.m2}, {"per_joint", mats}};
}

EmbeddingWeights weights_from_json(const json& j) {
  try {
    const std::string version = j.at("version").get<std::string>();
    if (version != kWeightsJsonVersion) {
      throw Error(ErrorKind::VersionMismatch, "weights version '" + version + "' is not " + kWeightsJsonVersion);
    }
    EmbeddingWeights w;
    w.m1 = j.at("m1").get<double>();
    w.m2 = j.at("m2").get<double>();
    for (const json& mat : j.at("per_joint")) {
      Mat3 out;
      for (std::size_t r = 0; r < 3; ++r) {
        for (std::size_t c = 0; c < 3; ++c) out.m[3 * r + c] = mat.at(r).at(c).get<double>();
      }
      w.per_joint.push_back(out);
    }
    w.validate(w.per_joint.size());
    return w;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SyntaxError, std::string("weights json: ") + e.what());
  }
}

EmbeddingWeights load_weights(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  try {
    return weights_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SyntaxError, path + ": " + e.what());
  }
}

Vec3 joint_log_diff(const Quat& q_tea, const Quat& q_stu) {
  // q_tea * conj(q_stu), grouped so identical inputs cancel to an exact zero
  const Quat& a = q_tea;
  const Quat& b = q_stu;
  const Quat rel{a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z,
                 (b.w * a.x - a.w * b.x) - (a.y * b.z - a.z * b.y),
                 (b.w * a.y - a.w * b.y) - (a.z * b.x - a.x * b.z),
                 (b.w * a.z - a.w * b.z) - (a.x * b.y - a.y * b.x)};
  return quat_log(quat_canonicalize(rel));
}

FrameDifference frame_difference(const Pose& tea, const Pose& stu, const EmbeddingWeights& w,
                                 const SkeletonTopology& topo) {
  const std::size_t n = topo.size();
  if (tea.rotations.size() != n || stu.rotations.size() != n) {
    throw Error(ErrorKind::TopologyMismatch, "poses do not match the skeleton");
  }
  w.validate(n);

  FrameDifference out;
  out.per_joint.resize(n);
  double sq = 0.0;
  const double inv_m1 = 1.0 / w.m1;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 local = w.matrix(i) * joint_log_diff(tea.rotations[i], stu.rotations[i]);
    const std::size_t p = topo.parent(i);
    Vec3 d = local * inv_m1;
    if (p != kNoParent) d += out.per_joint[p] * w.m2;
    out.per_joint[i] = d;
    sq += d.dot(d);
  }
  out.scalar = std::sqrt(sq);
  return out;
}

std::vector<double> segment_descriptor(const MotionSequence& motion, const EmbeddingWeights& w,
                                       std::size_t frames) {
  validate(motion);
  if (frames == 0) throw Error(ErrorKind::InvalidArgument, "descriptor needs at least one frame");
  const std::size_t n = motion.joint_count();
  const MotionSequence sampled = resample_to_count(motion, frames);
  const Pose rest = Pose::rest(n);

  std::vector<double> sum(3 * n, 0.0), sum_sq(3 * n, 0.0);
  std::vector<std::vector<Vec3>> embedded;
  embedded.reserve(frames);
  for (const Pose& pose : sampled.frames) {
    embedded.push_back(frame_difference(pose, rest, w, motion.topology).per_joint);
  }
  // Two-pass mean / variance.
  for (const auto& frame : embedded) {
    for (std::size_t i = 0; i < n; ++i) {
      sum[3 * i] += frame[i].x;
      sum[3 * i + 1] += frame[i].y;
      sum[3 * i + 2] += frame[i].z;
    }
  }
  const double inv = 1.0 / static_cast<double>(frames);
  for (double& s : sum) s *= inv;
  for (const auto& frame : embedded) {
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = frame[i].x - sum[3 * i];
      const double dy = frame[i].y - sum[3 * i + 1];
      const double dz = frame[i].z - sum[3 * i + 2];
      sum_sq[3 * i] += dx * dx;
      sum_sq[3 * i + 1] += dy * dy;
      sum_sq[3 * i + 2] += dz * dz;
    }
  }

  std::vector<double> desc(6 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      desc[6 * i + c] = sum[3 * i + c];
      desc[6 * i + 3 + c] = std::sqrt(sum_sq[3 * i + c] * inv);
    }
  }
  return desc;
}

ProjectionBasis fit_projection_basis(std::span<const std::vector<double>> descriptors, std::size_t max_dim) {
  if (descriptors.empty()) throw Error(ErrorKind::EmptyInput, "no descriptors to fit a basis");
  const std::size_t d = descriptors.front().size();
  const std::size_t m = descriptors.size();
  if (d == 0) throw Error(ErrorKind::DimensionMismatch, "empty descriptors");
  if (max_dim == 0) throw Error(ErrorKind::InvalidArgument, "basis dimension must be positive");

  Eigen::MatrixXd x(m, d);
  for (std::size_t r = 0; r < m; ++r) {
    if (descriptors[r].size() != d) throw Error(ErrorKind::DimensionMismatch, "descriptor lengths differ");
    for (std::size_t c = 0; c < d; ++c) x(r, c) = descriptors[r][c];
  }
  const Eigen::RowVectorXd center = x.colwise().mean();
  x.rowwise() -= center;

  ProjectionBasis basis;
  basis.center.assign(center.data(), center.data() + d);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double tol = sv.size() > 0 ? sv(0) * static_cast<double>(std::max(m, d)) * 1e-12 : 0.0;
  std::size_t rank = 0;
  while (rank < static_cast<std::size_t>(sv.size()) && sv(rank) > tol && sv(rank) > 0.0) ++rank;

  const std::size_t keep = std::min(max_dim, rank);
  if (keep == 0) {
    std::vector<double> e0(d, 0.0);
    e0[0] = 1.0;
    basis.columns.push_back(std::move(e0));
    return basis;
  }
  const Eigen::MatrixXd& v = svd.matrixV();
  for (std::size_t k = 0; k < keep; ++k) {
    std::vector<double> col(d);
    std::size_t arg = 0;
    for (std::size_t r = 0; r < d; ++r) {
      col[r] = v(r, k);
      if (std::abs(col[r]) > std::abs(col[arg])) arg = r;
    }
    if (col[arg] < 0.0) {
      for (double& c : col) c = -c;
    }
    basis.columns.push_back(std::move(col));
  }
  return basis;
}

SegmentEmbedding project(std::span<const double> descriptor, const ProjectionBasis& basis) {
  if (descriptor.size() != basis.center.size()) {
    throw Error(ErrorKind::DimensionMismatch, "descriptor has " + std::to_string(descriptor.size()) +
                                                  " entries, basis expects " +
                                                  std::to_string(basis.center.size()));
  }
  SegmentEmbedding e;
  e.vector.resize(basis.dim());
  for (std::size_t k = 0; k < basis.dim(); ++k) {
    double s = 0.0;
    for (std::size_t r = 0; r < descriptor.size(); ++r) s += basis.columns[k][r] * (descriptor[r] - basis.center[r]);
    e.vector[k] = s;
  }
  return e;
}

}  // namespace siglang
