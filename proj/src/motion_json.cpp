#include "siglang/motion_json.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "siglang/bvh.hpp"
#include "siglang/error.hpp"

namespace siglang {

using nlohmann::json;

namespace {

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

json motion_to_json(const MotionSequence& motion) {
  const SkeletonTopology& topo = motion.topology;
  json names = json::array(), parents = json::array(), offsets = json::array();
  for (std::size_t i = 0; i < topo.size(); ++i) {
    names.push_back(topo.name(i));
    parents.push_back(topo.parent(i) == kNoParent ? -1 : static_cast<long long>(topo.parent(i)));
    const Vec3& o = topo.rest_offset(i);
    offsets.push_back({o.x, o.y, o.z});
  }
  json frames = json::array();
  for (const Pose& p : motion.frames) {
    json quats = json::array();
    for (const Quat& q : p.rotations) quats.push_back({q.w, q.x, q.y, q.z});
    const Vec3& t = p.root_translation;
    frames.push_back({{"root_t", {t.x, t.y, t.z}}, {"quats", std::move(quats)}});
  }
  json j;
  j["version"] = kMotionJsonVersion;
  j["topology"] = {{"names", names}, {"parents", parents}, {"offsets", offsets}};
  j["fps"] = motion.fps;
  j["frames"] = std::move(frames);
  j["label"] = motion.label ? json(*motion.label) : json(nullptr);
  return j;
}

MotionSequence motion_from_json(const json& j) {
  try {
    if (j.at("version").get<std::string>() != kMotionJsonVersion) {
      throw Error(ErrorKind::VersionMismatch,
                  "motion json version '" + j.at("version").get<std::string>() + "' is not " +
                      kMotionJsonVersion);
    }
    const json& t = j.at("topology");
    std::vector<std::string> names = t.at("names").get<std::vector<std::string>>();
    std::vector<std::size_t> parents;
    for (const json& p : t.at("parents")) {
      const long long v = p.get<long long>();
      parents.push_back(v < 0 ? kNoParent : static_cast<std::size_t>(v));
    }
    std::vector<Vec3> offsets;
    for (const json& o : t.at("offsets")) {
      offsets.push_back({o.at(0).get<double>(), o.at(1).get<double>(), o.at(2).get<double>()});
    }

    MotionSequence m;
    m.topology = SkeletonTopology(std::move(names), parents, std::move(offsets));
    const std::vector<std::size_t>& slot = m.topology.input_order();
    m.fps = j.at("fps").get<double>();
    for (const json& f : j.at("frames")) {
      Pose p = Pose::rest(m.topology.size());
      const json& rt = f.at("root_t");
      p.root_translation = {rt.at(0).get<double>(), rt.at(1).get<double>(), rt.at(2).get<double>()};
      const json& quats = f.at("quats");
      if (quats.size() != m.topology.size()) {
        throw Error(ErrorKind::TopologyMismatch, "motion json frame has wrong rotation count");
      }
      for (std::size_t i = 0; i < quats.size(); ++i) {
        const json& q = quats[i];
        const Quat raw{q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>(), q.at(3).get<double>()};
        p.rotations[slot[i]] = quat_canonicalize(std::abs(raw.norm() - 1.0) <= 1e-12 ? raw : normalized(raw));
      }
      m.frames.push_back(std::move(p));
    }
    if (j.contains("label") && j["label"].is_string()) m.label = j["label"].get<std::string>();
    validate(m);
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::SyntaxError, std::string("motion json: ") + e.what());
  }
}

MotionSequence load_motion(const std::string& path, double bvh_scale) {
  if (has_suffix(path, ".bvh")) return load_bvh(path, BvhOptions{bvh_scale});
  if (has_suffix(path, ".json")) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(ErrorKind::SyntaxError, path + ": " + e.what());
    }
    return motion_from_json(j);
  }
  throw Error(ErrorKind::InvalidArgument, "unsupported motion file extension: " + path);
}

void save_motion(const MotionSequence& motion, const std::string& path, double bvh_scale) {
  std::string text;
  if (has_suffix(path, ".bvh")) {
    text = write_bvh(motion, BvhOptions{bvh_scale});
  } else if (has_suffix(path, ".json")) {
    text = motion_to_json(motion).dump(1) + "\n";
  } else {
    throw Error(ErrorKind::InvalidArgument, "unsupported motion file extension: " + path);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path);
}

}  // namespace siglang
