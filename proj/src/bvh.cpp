#include "siglang/bvh.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "siglang/error.hpp"

namespace siglang {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr std::size_t kMaxDepth = 512;

enum class Channel { Xpos, Ypos, Zpos, Xrot, Yrot, Zrot };

struct Token {
  std::string text;
  std::size_t line = 0;
};

struct JointRecord {
  std::string name;
  std::size_t parent = kNoParent;
  Vec3 offset;
  std::vector<Channel> channels;
};

[[noreturn]] void syntax_error(std::size_t line, const std::string& msg) {
  throw Error(ErrorKind::SyntaxError, "bvh line " + std::to_string(line) + ": " + msg);
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE && std::isfinite(out);
}

class HierarchyParser {
 public:
  HierarchyParser(const std::vector<Token>& tokens, double scale) : tokens_(tokens), scale_(scale) {}

  std::vector<JointRecord> parse() {
    expect("HIERARCHY");
    expect("ROOT");
    parse_joint(kNoParent, 0);
    if (pos_ != tokens_.size()) syntax_error(tokens_[pos_].line, "unexpected '" + tokens_[pos_].text + "'");
    return std::move(joints_);
  }

 private:
  const Token& next(const char* what) {
    if (pos_ >= tokens_.size()) {
      const std::size_t line = tokens_.empty() ? 1 : tokens_.back().line;
      syntax_error(line, std::string("unexpected end of hierarchy, expected ") + what);
    }
    return tokens_[pos_++];
  }

  void expect(const std::string& word) {
    const Token& t = next(word.c_str());
    if (t.text != word) syntax_error(t.line, "expected '" + word + "', found '" + t.text + "'");
  }

  double number() {
    const Token& t = next("a number");
    double v = 0.0;
    if (!parse_double(t.text, v)) syntax_error(t.line, "invalid number '" + t.text + "'");
    return v;
  }

  Vec3 offset() {
    expect("OFFSET");
    const double x = number();
    const double y = number();
    const double z = number();
    return Vec3{x, y, z} * scale_;
  }

  void parse_joint(std::size_t parent, std::size_t depth) {
    if (depth > kMaxDepth) syntax_error(tokens_[pos_ - 1].line, "hierarchy nested too deeply");
    const Token& name = next("a joint name");
    if (name.text == "{") syntax_error(name.line, "missing joint name");
    JointRecord rec;
    rec.name = name.text;
    rec.parent = parent;
    expect("{");
    rec.offset = offset();

    const Token& ch = next("CHANNELS");
    if (ch.text != "CHANNELS") syntax_error(ch.line, "expected 'CHANNELS', found '" + ch.text + "'");
    const Token& count_tok = next("a channel count");
    char* end = nullptr;
    const long count = std::strtol(count_tok.text.c_str(), &end, 10);
    if (end != count_tok.text.c_str() + count_tok.text.size() || count < 0 || count > 6) {
      syntax_error(count_tok.line, "invalid channel count '" + count_tok.text + "'");
    }
    for (long k = 0; k < count; ++k) {
      const Token& c = next("a channel name");
      if (c.text == "Xposition") rec.channels.push_back(Channel::Xpos);
      else if (c.text == "Yposition") rec.channels.push_back(Channel::Ypos);
      else if (c.text == "Zposition") rec.channels.push_back(Channel::Zpos);
      else if (c.text == "Xrotation") rec.channels.push_back(Channel::Xrot);
      else if (c.text == "Yrotation") rec.channels.push_back(Channel::Yrot);
      else if (c.text == "Zrotation") rec.channels.push_back(Channel::Zrot);
      else syntax_error(c.line, "unknown channel '" + c.text + "'");
    }

    const std::size_t index = joints_.size();
    for (const JointRecord& j : joints_) {
      if (j.name == rec.name) syntax_error(name.line, "duplicate joint name '" + rec.name + "'");
    }
    joints_.push_back(std::move(rec));

    for (;;) {
      const Token& t = next("'}'");
      if (t.text == "}") return;
      if (t.text == "JOINT") {
        parse_joint(index, depth + 1);
      } else if (t.text == "End") {
        expect("Site");
        expect("{");
        offset();
        expect("}");
      } else {
        syntax_error(t.line, "unexpected '" + t.text + "' in joint block");
      }
    }
  }

  const std::vector<Token>& tokens_;
  double scale_;
  std::size_t pos_ = 0;
  std::vector<JointRecord> joints_;
};

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string w;
  while (ss >> w) out.push_back(w);
  return out;
}

Quat axis_quat(Channel c, double degrees) {
  const double h = degrees * kDeg / 2.0;
  switch (c) {
    case Channel::Xrot: return {std::cos(h), std::sin(h), 0.0, 0.0};
    case Channel::Yrot: return {std::cos(h), 0.0, std::sin(h), 0.0};
    case Channel::Zrot: return {std::cos(h), 0.0, 0.0, std::sin(h)};
    default: return Quat::identity();
  }
}

}  // namespace

MotionSequence parse_bvh(std::istream& in, const BvhOptions& opts) {
  if (!(opts.scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "bvh scale must be positive");

  std::vector<Token> hierarchy;
  std::string line;
  std::size_t lineno = 0;
  bool found_motion = false;
  while (std::getline(in, line)) {
    ++lineno;
    for (std::string& w : split_ws(line)) {
      if (w == "MOTION") {
        found_motion = true;
        break;
      }
      hierarchy.push_back({std::move(w), lineno});
    }
    if (found_motion) break;
  }
  if (!found_motion) syntax_error(lineno == 0 ? 1 : lineno, "missing MOTION section");

  const std::vector<JointRecord> joints = HierarchyParser(hierarchy, opts.scale).parse();

  std::size_t width = 0;
  for (const JointRecord& j : joints) width += j.channels.size();

  // Header lines: "Frames: n" and "Frame Time: dt".
  auto next_nonblank = [&](std::vector<std::string>& words) {
    while (std::getline(in, line)) {
      ++lineno;
      words = split_ws(line);
      if (!words.empty()) return true;
    }
    return false;
  };
  std::vector<std::string> words;
  if (!next_nonblank(words) || words.size() != 2 || words[0] != "Frames:") {
    syntax_error(lineno, "expected 'Frames: <count>'");
  }
  char* end = nullptr;
  const long long declared = std::strtoll(words[1].c_str(), &end, 10);
  if (end != words[1].c_str() + words[1].size() || declared < 0) {
    syntax_error(lineno, "invalid frame count '" + words[1] + "'");
  }
  if (!next_nonblank(words) || words.size() != 3 || words[0] != "Frame" || words[1] != "Time:") {
    syntax_error(lineno, "expected 'Frame Time: <seconds>'");
  }
  double frame_time = 0.0;
  if (!parse_double(words[2], frame_time) || !(frame_time > 0.0)) {
    syntax_error(lineno, "invalid frame time '" + words[2] + "'");
  }
  if (declared == 0) throw Error(ErrorKind::EmptyMotion, "bvh declares zero frames");

  std::vector<std::string> names;
  std::vector<std::size_t> parents;
  std::vector<Vec3> offsets;
  for (const JointRecord& j : joints) {
    names.push_back(j.name);
    parents.push_back(j.parent);
    offsets.push_back(j.offset);
  }

  MotionSequence motion;
  motion.topology = SkeletonTopology(names, parents, offsets);
  motion.fps = 1.0 / frame_time;
  const std::vector<std::size_t>& slot = motion.topology.input_order();

  std::vector<double> values(width);
  while (motion.frames.size() < static_cast<std::size_t>(declared)) {
    if (!next_nonblank(words)) {
      syntax_error(lineno, "expected " + std::to_string(declared) + " frames, found " +
                               std::to_string(motion.frames.size()));
    }
    if (words.size() != width) {
      throw Error(ErrorKind::ChannelMismatch, "bvh line " + std::to_string(lineno) + ": row has " +
                                                  std::to_string(words.size()) + " values, expected " +
                                                  std::to_string(width));
    }
    for (std::size_t k = 0; k < width; ++k) {
      if (!parse_double(words[k], values[k])) syntax_error(lineno, "invalid number '" + words[k] + "'");
    }

    Pose pose = Pose::rest(joints.size());
    std::size_t col = 0;
    for (std::size_t j = 0; j < joints.size(); ++j) {
      Quat q;
      Vec3 t;
      for (Channel c : joints[j].channels) {
        const double v = values[col++];
        switch (c) {
          case Channel::Xpos: t.x = v; break;
          case Channel::Ypos: t.y = v; break;
          case Channel::Zpos: t.z = v; break;
          default: q = q * axis_quat(c, v); break;
        }
      }
      pose.rotations[slot[j]] = quat_canonicalize(normalized(q));
      if (joints[j].parent == kNoParent) pose.root_translation = joints[j].offset + t * opts.scale;
    }
    motion.frames.push_back(std::move(pose));
  }
  while (next_nonblank(words)) {
    syntax_error(lineno, "trailing data after " + std::to_string(declared) + " frames");
  }
  return motion;
}

MotionSequence parse_bvh(const std::string& text, const BvhOptions& opts) {
  std::istringstream in(text);
  return parse_bvh(in, opts);
}

MotionSequence load_bvh(const std::string& path, const BvhOptions& opts) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  return parse_bvh(in, opts);
}

std::string write_bvh(const MotionSequence& motion, const BvhOptions& opts) {
  validate(motion);
  const SkeletonTopology& topo = motion.topology;
  const std::size_t n = topo.size();
  std::vector<std::vector<std::size_t>> children(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (topo.parent(i) != kNoParent) children[topo.parent(i)].push_back(i);
  }

  std::string out = "HIERARCHY\n";
  char buf[160];
  auto indent = [](std::size_t depth) { return std::string(depth, '\t'); };
  auto write_offset = [&](const Vec3& o, std::size_t depth) {
    std::snprintf(buf, sizeof buf, "OFFSET %.17g %.17g %.17g\n", o.x / opts.scale, o.y / opts.scale,
                  o.z / opts.scale);
    out += indent(depth) + buf;
  };

  // Joints are already in preorder, so a recursive walk reproduces the order.
  auto emit = [&](auto&& self, std::size_t j, std::size_t depth) -> void {
    out += indent(depth) + (j == 0 ? "ROOT " : "JOINT ") + topo.name(j) + "\n";
    out += indent(depth) + "{\n";
    write_offset(topo.rest_offset(j), depth + 1);
    out += indent(depth + 1) +
           (j == 0 ? "CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation\n"
                   : "CHANNELS 3 Zrotation Xrotation Yrotation\n");
    for (std::size_t c : children[j]) self(self, c, depth + 1);
    if (children[j].empty()) {
      out += indent(depth + 1) + "End Site\n" + indent(depth + 1) + "{\n";
      write_offset(Vec3{}, depth + 2);
      out += indent(depth + 1) + "}\n";
    }
    out += indent(depth) + "}\n";
  };
  emit(emit, 0, 0);

  out += "MOTION\n";
  out += "Frames: " + std::to_string(motion.frames.size()) + "\n";
  std::snprintf(buf, sizeof buf, "Frame Time: %.17g\n", 1.0 / motion.fps);
  out += buf;

  for (const Pose& pose : motion.frames) {
    const Vec3 t = (pose.root_translation - topo.rest_offset(0)) * (1.0 / opts.scale);
    std::snprintf(buf, sizeof buf, "%.9f %.9f %.9f", t.x, t.y, t.z);
    out += buf;
    for (std::size_t j = 0; j < n; ++j) {
      const Vec3 e = quat_to_euler_zxy(pose.rotations[j]);
      std::snprintf(buf, sizeof buf, " %.9f %.9f %.9f", e.x + 0.0, e.y + 0.0, e.z + 0.0);
      out += buf;
    }
    out += "\n";
  }
  return out;
}

}  // namespace siglang
