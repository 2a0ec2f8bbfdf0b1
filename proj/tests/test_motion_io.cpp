#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"
#include "siglang/bvh.hpp"
#include "siglang/error.hpp"
#include "siglang/motion_json.hpp"

using namespace siglang;
using std::numbers::pi;

namespace {

const char* kOneJoint = R"(HIERARCHY
ROOT Hips
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  End Site
  {
    OFFSET 0 10 0
  }
}
MOTION
Frames: 1
Frame Time: 0.0333333
0 0 0 0 0 0
)";

const char* kTwoJoint = R"(HIERARCHY
ROOT Hips
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  JOINT Arm
  {
    OFFSET 50 0 0
    CHANNELS 3 Zrotation Xrotation Yrotation
    End Site
    {
      OFFSET 0 0 0
    }
  }
}
MOTION
Frames: 2
Frame Time: 0.04
0 0 0 90 0 0 0 0 0
100 0 0 0 0 0 0 0 0
)";

ErrorKind kind_of(const std::string& text) {
  try {
    parse_bvh(text);
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a parse error");
  return ErrorKind::InvalidArgument;
}

double max_geodesic(const MotionSequence& a, const MotionSequence& b) {
  double worst = 0.0;
  for (std::size_t f = 0; f < a.frame_count(); ++f) {
    for (std::size_t j = 0; j < a.joint_count(); ++j) {
      worst = std::max(worst, geodesic_angle(a.frames[f].rotations[j], b.frames[f].rotations[j]));
    }
  }
  return worst;
}

MotionSequence random_motion(std::mt19937_64& rng, std::size_t joints, std::size_t frames) {
  MotionSequence m;
  m.topology = fixtures::random_topology(rng, joints);
  m.fps = 24.0;
  for (std::size_t f = 0; f < frames; ++f) {
    Pose p = Pose::rest(joints);
    for (Quat& q : p.rotations) q = fixtures::random_unit_quat(rng);
    p.root_translation = fixtures::random_vec(rng, 1.0);
    m.frames.push_back(p);
  }
  return m;
}

}  // namespace

TEST_CASE("minimal one-joint bvh") {
  const MotionSequence m = parse_bvh(kOneJoint);
  REQUIRE(m.joint_count() == 1);
  REQUIRE(m.frame_count() == 1);
  CHECK(m.frames[0].rotations[0] == Quat::identity());
  CHECK(m.frames[0].root_translation == Vec3{});
  CHECK(m.fps == doctest::Approx(30.0).epsilon(1e-5));
}

TEST_CASE("two-joint bvh drives forward kinematics") {
  const MotionSequence m = parse_bvh(kTwoJoint);
  REQUIRE(m.joint_count() == 2);
  CHECK(m.topology.rest_offset(1).x == doctest::Approx(0.5));
  CHECK(m.fps == doctest::Approx(25.0));
  const auto pos = forward_kinematics(m.topology, m.frames[0]);
  CHECK((pos[1] - Vec3{0, 0.5, 0}).norm() <= 1e-12);
  // root position channels are in BVH units and scaled like offsets
  CHECK((m.frames[1].root_translation - Vec3{1.0, 0, 0}).norm() <= 1e-12);

  const MotionSequence meters = parse_bvh(kTwoJoint, BvhOptions{1.0});
  CHECK(meters.topology.rest_offset(1).x == doctest::Approx(50.0));
}

TEST_CASE("euler_to_quat") {
  for (const char* order : {"XYZ", "XZY", "YXZ", "YZX", "ZXY", "ZYX"}) {
    CHECK(euler_to_quat({0, 0, 0}, EulerOrder::parse(order)) == Quat::identity());
  }
  const Quat z90 = euler_to_quat({90, 0, 0}, EulerOrder::parse("ZXY"));
  CHECK(oracle::dot_angle(z90, Quat::from_axis_angle({0, 0, 1}, pi / 2)) <= 1e-7);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> deg(-180.0, 180.0);
  for (const char* name : {"XYZ", "XZY", "YXZ", "YZX", "ZXY", "ZYX"}) {
    const EulerOrder order = EulerOrder::parse(name);
    for (int k = 0; k < 200; ++k) {
      const Vec3 a{deg(rng), deg(rng), deg(rng)};
      const double angles[3] = {a.x, a.y, a.z};
      Eigen::Matrix3d expected = Eigen::Matrix3d::Identity();
      for (int c = 0; c < 3; ++c) {
        expected = expected * oracle::axis_matrix(static_cast<int>(order.axes[c]), angles[c] * pi / 180.0);
      }
      CHECK((oracle::to_matrix(euler_to_quat(a, order)) - expected).cwiseAbs().maxCoeff() <= 1e-9);
    }
  }
  CHECK_THROWS_AS(EulerOrder::parse("ZZY"), Error);
  CHECK_THROWS_AS(EulerOrder::parse("AB"), Error);
}

TEST_CASE("quat_to_euler_zxy inverts euler_to_quat") {
  std::mt19937_64 rng(12);
  const EulerOrder zxy = EulerOrder::parse("ZXY");
  for (int k = 0; k < 1000; ++k) {
    const Quat q = fixtures::random_unit_quat(rng);
    CHECK(geodesic_angle(euler_to_quat(quat_to_euler_zxy(q), zxy), q) <= 1e-9);
  }
  // gimbal lock: X at +-90
  for (double b : {90.0, -90.0}) {
    const Quat q = euler_to_quat({30, b, 40}, zxy);
    CHECK(geodesic_angle(euler_to_quat(quat_to_euler_zxy(q), zxy), q) <= 1e-7);
  }
}

TEST_CASE("write_bvh emits identity rows and frame counts") {
  const MotionSequence m = fixtures::constant_motion(fixtures::upper_body(), Pose::rest(13), 1);
  const std::string text = write_bvh(m);
  CHECK(text.find("Frames: 1\n") != std::string::npos);
  const std::string last_row = text.substr(text.rfind("Frame Time:"));
  const std::string row = last_row.substr(last_row.find('\n') + 1);
  std::istringstream ss(row);
  double v = 0.0;
  int count = 0;
  bool zero_angles = true;
  while (ss >> v) {
    if (count >= 3 && v != 0.0) zero_angles = false;
    ++count;
  }
  CHECK(count == 3 + 3 * 13);
  CHECK(zero_angles);
}

TEST_CASE("bvh round trip") {
  std::mt19937_64 rng(13);
  std::vector<MotionSequence> cases{fixtures::sign_motion(3, 1)};
  for (int k = 0; k < 20; ++k) cases.push_back(random_motion(rng, 1 + k % 15, 5));
  for (const MotionSequence& m : cases) {
    const MotionSequence back = parse_bvh(write_bvh(m));
    CHECK(back.topology.names() == m.topology.names());
    CHECK(back.topology.parents() == m.topology.parents());
    for (std::size_t i = 0; i < m.joint_count(); ++i) {
      CHECK((back.topology.rest_offset(i) - m.topology.rest_offset(i)).norm() <= 1e-12);
    }
    REQUIRE(back.frame_count() == m.frame_count());
    CHECK(back.fps == doctest::Approx(m.fps).epsilon(1e-12));
    CHECK(max_geodesic(m, back) <= 1e-6);
    for (std::size_t f = 0; f < m.frame_count(); ++f) {
      CHECK((back.frames[f].root_translation - m.frames[f].root_translation).norm() <= 1e-9);
    }
  }
}

TEST_CASE("bvh errors carry diagnostics") {
  CHECK(kind_of("") == ErrorKind::SyntaxError);
  CHECK(kind_of("HIERARCHY\nROOT Hips\n{\n OFFSET 0 0\n") == ErrorKind::SyntaxError);

  std::string wide = kTwoJoint;
  wide.replace(wide.find("100 0 0 0 0 0 0 0 0"), 19, "100 0 0 0 0 0 0 0 0 7");
  CHECK(kind_of(wide) == ErrorKind::ChannelMismatch);
  try {
    parse_bvh(wide);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 20") != std::string::npos);
  }

  std::string empty = kOneJoint;
  empty.replace(empty.find("Frames: 1"), 9, "Frames: 0");
  empty.replace(empty.find("0 0 0 0 0 0\n"), 12, "");
  CHECK(kind_of(empty) == ErrorKind::EmptyMotion);

  std::string bad_number = kOneJoint;
  bad_number.replace(bad_number.find("OFFSET 0 10 0"), 13, "OFFSET 0 1x 0");
  try {
    parse_bvh(bad_number);
    FAIL("accepted a bad number");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SyntaxError);
    CHECK(std::string(e.what()).find("line 8") != std::string::npos);
  }

  std::string missing_rows = kTwoJoint;
  missing_rows.replace(missing_rows.find("Frames: 2"), 9, "Frames: 3");
  CHECK(kind_of(missing_rows) == ErrorKind::SyntaxError);
}

TEST_CASE("parser survives truncated and mutated input") {
  const std::string base = write_bvh(fixtures::sign_motion(0, 0));
  std::mt19937_64 rng(14);
  int rejected = 0;
  auto attempt = [&](const std::string& text) {
    try {
      parse_bvh(text);
    } catch (const Error&) {
      ++rejected;
    }
  };
  for (std::size_t cut = 0; cut < base.size(); cut += 97) attempt(base.substr(0, cut));
  const std::string junk = "{}-+.eE0123456789 \nXJOINTEnd";
  for (int k = 0; k < 400; ++k) {
    std::string text = base;
    const int edits = 1 + static_cast<int>(rng() % 5);
    for (int e = 0; e < edits; ++e) {
      const std::size_t at = rng() % text.size();
      switch (rng() % 3) {
        case 0: text[at] = junk[rng() % junk.size()]; break;
        case 1: text.erase(at, 1 + rng() % 20); break;
        default: text.insert(at, 1, junk[rng() % junk.size()]); break;
      }
    }
    attempt(text);
  }
  CHECK(rejected > 0);
}

TEST_CASE("resample") {
  const MotionSequence m = fixtures::sign_motion(2, 0);
  const MotionSequence same = resample(m, m.fps);
  REQUIRE(same.frame_count() == m.frame_count());
  CHECK(max_geodesic(m, same) == 0.0);

  Pose p = Pose::rest(13);
  p.rotations[7] = Quat::from_axis_angle({0.3, 1, 0}, 0.8);
  const MotionSequence constant = fixtures::constant_motion(fixtures::upper_body(), p, 31, 30.0);
  const MotionSequence up = resample(constant, 60.0);
  CHECK(up.frame_count() == 61);
  CHECK(up.fps == 60.0);
  for (const Pose& q : up.frames) CHECK(q == p);

  const SkeletonTopology one({"root"}, {kNoParent}, {{}});
  MotionSequence two;
  two.topology = one;
  two.fps = 1.0;
  two.frames = {Pose{{Quat::identity()}, {}}, Pose{{Quat::from_axis_angle({0, 0, 1}, pi / 2)}, {2, 0, 0}}};
  const MotionSequence three = resample(two, 2.0);
  REQUIRE(three.frame_count() == 3);
  CHECK(oracle::dot_angle(three.frames[1].rotations[0], Quat::from_axis_angle({0, 0, 1}, pi / 4)) <= 1e-7);
  CHECK((three.frames[1].root_translation - Vec3{1, 0, 0}).norm() <= 1e-15);

  for (double target : {7.0, 24.0, 29.97, 50.0, 120.0}) {
    const MotionSequence r = resample(m, target);
    CHECK(r.frames.front() == m.frames.front());
    CHECK(r.frames.back() == m.frames.back());
    CHECK(std::abs(r.duration() - m.duration()) <= 1.0 / target);
  }
  CHECK_THROWS_AS(resample(MotionSequence{}, 30.0), Error);
}

TEST_CASE("reorder_joints matches skeletons by name") {
  const MotionSequence m = fixtures::sign_motion(1, 0);
  const SkeletonTopology& t = m.topology;
  std::vector<std::string> names = t.names();
  std::vector<std::size_t> parents = t.parents();
  std::vector<Vec3> offsets = t.rest_offsets();
  // list the arms in swapped order
  const SkeletonTopology swapped(names, parents, offsets);
  const MotionSequence same = reorder_joints(m, swapped);
  CHECK(same.frames == m.frames);

  std::vector<std::string> renamed = names;
  renamed[4] = "Skull";
  CHECK_THROWS_AS(reorder_joints(m, SkeletonTopology(renamed, parents, offsets)), Error);
  std::vector<std::size_t> moved = parents;
  moved[4] = 2;
  CHECK_THROWS_AS(reorder_joints(m, SkeletonTopology(names, moved, offsets)), Error);
}

TEST_CASE("json mirror round trip is exact") {
  std::mt19937_64 rng(15);
  MotionSequence m = random_motion(rng, 9, 4);
  m.label = "hello";
  const nlohmann::json j = motion_to_json(m);
  CHECK(j["version"] == kMotionJsonVersion);
  const MotionSequence back = motion_from_json(nlohmann::json::parse(j.dump()));
  CHECK(back == m);

  nlohmann::json old = j;
  old["version"] = "siglang-motion/0";
  CHECK_THROWS_AS(motion_from_json(old), Error);
  nlohmann::json broken = j;
  broken["frames"][0]["quats"].erase(0);
  CHECK_THROWS_AS(motion_from_json(broken), Error);
}

TEST_CASE("files by extension") {
  const std::string dir = fixtures::temp_dir("motion_io");
  const MotionSequence m = fixtures::sign_motion(4, 0);
  save_motion(m, dir + "/a.bvh");
  save_motion(m, dir + "/a.json");
  CHECK(max_geodesic(m, load_motion(dir + "/a.bvh")) <= 1e-6);
  CHECK(load_motion(dir + "/a.json") == m);
  CHECK_THROWS_AS(load_motion(dir + "/a.txt"), Error);
  CHECK_THROWS_AS(load_motion(dir + "/missing.bvh"), Error);
}
