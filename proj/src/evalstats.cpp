#include "siglang/evalstats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "siglang/error.hpp"

namespace siglang {

std::vector<double> rank(std::span<const double> scores) {
  if (scores.empty()) throw Error(ErrorKind::EmptyInput, "cannot rank an empty list");
  for (double s : scores) {
    if (!std::isfinite(s)) throw Error(ErrorKind::InvalidArgument, "cannot rank non-finite scores");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<double> ranks(scores.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::InvalidArgument, "spearman inputs differ in length");
  if (a.size() < 2) throw Error(ErrorKind::EmptyInput, "spearman needs at least two items");
  const std::vector<double> ra = rank(a);
  const std::vector<double> rb = rank(b);
  const double l = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / l;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / l;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) throw Error(ErrorKind::DegenerateInput, "spearman input has no rank variance");
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

namespace {

constexpr std::size_t kWarpSegments = 4;
constexpr double kMaxWarp = 0.2;

MotionSequence time_warp(const MotionSequence& teacher, std::mt19937_64& rng) {
  if (teacher.frame_count() < 2) return teacher;
  std::uniform_real_distribution<double> factor(1.0 - kMaxWarp, 1.0 + kMaxWarp);
  const double span = static_cast<double>(teacher.frame_count() - 1);
  const double seg_src = span / kWarpSegments;

  std::vector<double> seg_out(kWarpSegments);
  for (double& s : seg_out) s = seg_src * factor(rng);
  const double total = std::accumulate(seg_out.begin(), seg_out.end(), 0.0);
  const auto count = static_cast<std::size_t>(std::llround(total)) + 1;

  MotionSequence out = teacher;
  out.frames.clear();
  out.frames.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    double u = count == 1 ? 0.0 : total * static_cast<double>(k) / static_cast<double>(count - 1);
    std::size_t s = 0;
    while (s + 1 < kWarpSegments && u > seg_out[s]) {
      u -= seg_out[s];
      ++s;
    }
    const double src = std::min(span, seg_src * (static_cast<double>(s) + std::min(1.0, u / seg_out[s])));
    out.frames.push_back(interpolate_pose(teacher, src));
  }
  return out;
}

}  // namespace

std::vector<GradedStudent> graded_corpus(const MotionSequence& teacher, std::span<const double> levels,
                                         std::size_t takes_per_level, std::uint64_t seed) {
  validate(teacher);
  if (levels.empty() || levels.front() != 0.0) {
    throw Error(ErrorKind::InvalidArgument, "noise levels must start at 0");
  }
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] > levels[i - 1])) throw Error(ErrorKind::InvalidArgument, "noise levels must increase strictly");
  }

  std::mt19937_64 rng(seed);
  std::vector<GradedStudent> out;
  const std::string base = teacher.label.value_or("student");
  for (std::size_t level = 0; level < levels.size(); ++level) {
    const double sigma = levels[level];
    for (std::size_t take = 0; take < takes_per_level; ++take) {
      GradedStudent s;
      s.id = base + "__L" + std::to_string(level) + "_T" + std::to_string(take);
      s.level = level;
      s.sigma = sigma;
      if (sigma == 0.0) {
        s.motion = teacher;
      } else {
        s.motion = time_warp(teacher, rng);
        std::normal_distribution<double> noise(0.0, sigma);
        for (Pose& p : s.motion.frames) {
          for (Quat& q : p.rotations) {
            const Vec3 rotvec{noise(rng), noise(rng), noise(rng)};
            q = quat_canonicalize(normalized(q * quat_exp(rotvec * 0.5)));
          }
        }
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<std::pair<std::string, double>> read_ratings_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  bool header = false;
  std::vector<std::pair<std::string, double>> rows;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw Error(ErrorKind::SyntaxError, path + ":" + std::to_string(lineno) + ": expected two columns");
    }
    const std::string id = trim(line.substr(0, comma));
    const std::string value = trim(line.substr(comma + 1));
    if (!header) {
      if (id != "id" || value != "score") {
        throw Error(ErrorKind::SyntaxError, path + ":" + std::to_string(lineno) + ": header must be 'id,score'");
      }
      header = true;
      continue;
    }
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (id.empty() || value.empty() || end != value.c_str() + value.size() || !std::isfinite(v)) {
      throw Error(ErrorKind::SyntaxError, path + ":" + std::to_string(lineno) + ": bad row '" + line + "'");
    }
    rows.emplace_back(id, v);
  }
  if (!header) throw Error(ErrorKind::SyntaxError, path + ": missing 'id,score' header");
  return rows;
}

}  // namespace siglang
