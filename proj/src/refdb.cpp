#include "siglang/refdb.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>

#include "json.hpp"
#include "siglang/bvh.hpp"
#include "siglang/error.hpp"

namespace siglang {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void validate_config(const BuildConfig& cfg) {
  if (!(cfg.fps > 0.0) || !std::isfinite(cfg.fps)) throw Error(ErrorKind::InvalidArgument, "fps must be positive");
  if (cfg.max_dim == 0) throw Error(ErrorKind::InvalidArgument, "embedding dimension must be positive");
  if (cfg.descriptor_frames == 0) throw Error(ErrorKind::InvalidArgument, "descriptor frame count must be positive");
  if (!(cfg.temperature > 0.0)) throw Error(ErrorKind::InvalidArgument, "temperature must be positive");
  if (!(cfg.bvh_scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "bvh scale must be positive");
  cfg.smoothing.validate();
}

std::string describe(const LabeledMotion& m) { return m.label + "__" + m.take_id; }

// Little-endian container primitives.
class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void bytes(const std::string& s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
  void section(const std::string& name, const std::vector<double>& values) {
    u32(static_cast<std::uint32_t>(name.size()));
    bytes(name);
    u64(values.size());
    for (double v : values) u64(std::bit_cast<std::uint64_t>(v));
    ++sections_;
  }
  std::vector<std::uint8_t>& buffer() { return buf_; }
  std::uint32_t sections() const { return sections_; }

 private:
  std::vector<std::uint8_t> buf_;
  std::uint32_t sections_ = 0;
};

class ByteReader {
 public:
  ByteReader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  std::uint64_t uint(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int k = 0; k < width; ++k) v |= static_cast<std::uint64_t>(data_[pos_ + k]) << (8 * k);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }
  std::string bytes(std::uint64_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
  }
  std::vector<double> doubles(std::uint64_t n) {
    if (n > (size_ - pos_) / 8) corrupt("section overruns the file");
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& d : v) d = std::bit_cast<double>(uint(8));
    return v;
  }
  bool done() const { return pos_ == size_; }

  [[noreturn]] static void corrupt(const std::string& msg) { throw Error(ErrorKind::CorruptFile, "database: " + msg); }

 private:
  void need(std::uint64_t n) const {
    if (n > size_ - pos_) corrupt("unexpected end of data");
  }
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t size) {
  uLong crc = crc32(0L, Z_NULL, 0);
  while (size > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    size -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<double> flatten_motion(const MotionSequence& m) {
  std::vector<double> out;
  out.reserve(m.frame_count() * (3 + 4 * m.joint_count()));
  for (const Pose& p : m.frames) {
    out.insert(out.end(), {p.root_translation.x, p.root_translation.y, p.root_translation.z});
    for (const Quat& q : p.rotations) out.insert(out.end(), {q.w, q.x, q.y, q.z});
  }
  return out;
}

std::vector<double> flatten_gradient(const GradientSequence& g) {
  std::vector<double> out;
  for (const auto& row : g.intervals) {
    for (const Vec3& v : row) out.insert(out.end(), {v.x, v.y, v.z});
  }
  return out;
}

}  // namespace

std::pair<std::string, std::string> label_from_filename(const std::string& filename) {
  std::string stem = fs::path(filename).stem().string();
  const auto sep = stem.find("__");
  if (sep == std::string::npos) return {stem, stem};
  return {stem.substr(0, sep), stem.substr(sep + 2)};
}

ReferenceDatabase ReferenceDatabase::build(const std::string& corpus_dir, const BuildConfig& cfg) {
  validate_config(cfg);
  std::error_code ec;
  if (!fs::is_directory(corpus_dir, ec)) throw Error(ErrorKind::IoError, "corpus directory not found: " + corpus_dir);

  std::map<std::string, std::string> manifest;
  const fs::path manifest_path = fs::path(corpus_dir) / "manifest.json";
  if (fs::exists(manifest_path)) {
    std::ifstream in(manifest_path);
    try {
      const json j = json::parse(in);
      for (const auto& [file, label] : j.at("files").items()) manifest[file] = label.get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::SyntaxError, manifest_path.string() + ": " + e.what());
    }
  }

  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(corpus_dir)) {
    if (de.is_regular_file() && de.path().extension() == ".bvh") files.push_back(de.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorKind::EmptyCorpus, "empty corpus: no .bvh files in " + corpus_dir);

  std::vector<LabeledMotion> takes;
  std::string first_file;
  SkeletonTopology reference;
  for (const fs::path& file : files) {
    auto [label, take] = label_from_filename(file.filename().string());
    if (auto it = manifest.find(file.filename().string()); it != manifest.end()) {
      label = it->second;
      take = file.stem().string();
    }
    try {
      MotionSequence m = load_bvh(file.string(), BvhOptions{cfg.bvh_scale});
      if (takes.empty()) {
        reference = m.topology;
        first_file = file.filename().string();
      } else {
        m = reorder_joints(m, reference);
      }
      m.label = label;
      takes.push_back({label, take, std::move(m)});
    } catch (const Error& e) {
      const std::string msg = e.kind() == ErrorKind::TopologyMismatch
                                  ? file.string() + ": skeleton differs from " + first_file + " (" + e.what() + ")"
                                  : file.string() + ": " + e.what();
      throw Error(e.kind(), msg);
    }
  }
  return build(std::move(takes), cfg);
}

ReferenceDatabase ReferenceDatabase::build(std::vector<LabeledMotion> takes, const BuildConfig& cfg) {
  validate_config(cfg);
  if (takes.empty()) throw Error(ErrorKind::EmptyCorpus, "empty corpus: no teacher takes");
  std::stable_sort(takes.begin(), takes.end(), [](const LabeledMotion& a, const LabeledMotion& b) {
    return std::tie(a.label, a.take_id) < std::tie(b.label, b.take_id);
  });
  for (std::size_t i = 1; i < takes.size(); ++i) {
    if (takes[i].label == takes[i - 1].label && takes[i].take_id == takes[i - 1].take_id) {
      throw Error(ErrorKind::InvalidArgument, "duplicate take " + describe(takes[i]));
    }
  }

  ReferenceDatabase db;
  db.config_ = cfg;
  db.topology_ = takes.front().motion.topology;
  cfg.weights.validate(db.topology_.size());

  for (LabeledMotion& lm : takes) {
    try {
      const MotionSequence matched = reorder_joints(lm.motion, db.topology_);
      TeacherTake take;
      take.take_id = lm.take_id;
      take.motion = smooth_sequence(resample(matched, cfg.fps), cfg.smoothing);
      take.motion.label = lm.label;
      if (take.motion.frame_count() < 2) throw Error(ErrorKind::EmptyMotion, "take is shorter than two frames");
      take.gradient = angular_velocity(take.motion);
      take.joint_weights = joint_weights(take.gradient);
      take.self_smoothness = smoothness(take.motion, cfg.smoothing).score;

      if (db.entries_.empty() || db.entries_.back().label != lm.label) db.entries_.push_back({lm.label, {}});
      db.entries_.back().takes.push_back(std::move(take));
    } catch (const Error& e) {
      throw Error(e.kind(), describe(lm) + ": " + e.what());
    }
  }
  db.fit_classifier();
  return db;
}

void ReferenceDatabase::fit_classifier() {
  std::vector<std::vector<double>> descriptors;
  for (VocabEntry& entry : entries_) {
    for (TeacherTake& take : entry.takes) {
      take.descriptor = segment_descriptor(take.motion, config_.weights, config_.descriptor_frames);
      descriptors.push_back(take.descriptor);
    }
  }
  basis_ = fit_projection_basis(descriptors, config_.max_dim);

  cluster_ = ClusterModel{};
  cluster_.temperature = config_.temperature;
  for (VocabEntry& entry : entries_) {
    std::vector<double> centroid(basis_.dim(), 0.0);
    for (TeacherTake& take : entry.takes) {
      take.embedding = project(take.descriptor, basis_);
      take.embedding.source_label = entry.label;
      for (std::size_t k = 0; k < centroid.size(); ++k) centroid[k] += take.embedding.vector[k];
    }
    for (double& c : centroid) c /= static_cast<double>(entry.takes.size());
    cluster_.centroids.push_back(std::move(centroid));
    cluster_.labels.push_back(entry.label);
  }
  for (VocabEntry& entry : entries_) {
    for (TeacherTake& take : entry.takes) take.self_confusion = class_distribution(take.embedding, cluster_).confusion;
  }
}

ReferenceDatabase ReferenceDatabase::with_weights(const EmbeddingWeights& weights) const {
  weights.validate(topology_.size());
  ReferenceDatabase copy = *this;
  copy.config_.weights = weights;
  copy.fit_classifier();
  return copy;
}

bool ReferenceDatabase::contains(const std::string& vocab) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const VocabEntry& e) { return e.label == vocab; });
}

const VocabEntry& ReferenceDatabase::entry(const std::string& vocab) const {
  for (const VocabEntry& e : entries_) {
    if (e.label == vocab) return e;
  }
  throw Error(ErrorKind::UnknownVocab, "unknown vocab '" + vocab + "'");
}

bool ReferenceDatabase::operator==(const ReferenceDatabase& o) const {
  return config_ == o.config_ && topology_ == o.topology_ && basis_ == o.basis_ && cluster_ == o.cluster_ &&
         entries_ == o.entries_;
}

std::vector<std::uint8_t> ReferenceDatabase::serialize() const {
  const std::size_t n = topology_.size();
  json header;
  header["version"] = kDatabaseVersion;
  header["fps"] = config_.fps;
  header["joints"] = topology_.names();
  json parents = json::array();
  for (std::size_t i = 0; i < n; ++i) {
    parents.push_back(topology_.parent(i) == kNoParent ? -1 : static_cast<long long>(topology_.parent(i)));
  }
  header["parents"] = parents;
  header["n"] = basis_.dim();
  header["labels"] = cluster_.labels;
  json takes = json::array();
  for (const VocabEntry& e : entries_) {
    for (const TeacherTake& t : e.takes) takes.push_back({e.label, t.take_id, t.motion.frame_count()});
  }
  header["takes"] = takes;
  header["config"] = {{"window", config_.smoothing.window},
                      {"order", config_.smoothing.poly_order},
                      {"descriptor_frames", config_.descriptor_frames},
                      {"max_dim", config_.max_dim}};

  ByteWriter w;
  const std::string head = header.dump();
  w.u64(head.size());
  w.bytes(head);

  ByteWriter body;
  body.section("scalars", {config_.fps, config_.smoothing.alpha, config_.temperature, config_.bvh_scale,
                           config_.weights.m1, config_.weights.m2});
  std::vector<double> offsets;
  for (const Vec3& o : topology_.rest_offsets()) offsets.insert(offsets.end(), {o.x, o.y, o.z});
  body.section("offsets", offsets);
  std::vector<double> weights;
  for (const Mat3& m : config_.weights.per_joint) weights.insert(weights.end(), m.m.begin(), m.m.end());
  body.section("weights", weights);
  body.section("basis.center", basis_.center);
  std::vector<double> cols;
  for (const auto& c : basis_.columns) cols.insert(cols.end(), c.begin(), c.end());
  body.section("basis.columns", cols);
  std::vector<double> centroids;
  for (const auto& c : cluster_.centroids) centroids.insert(centroids.end(), c.begin(), c.end());
  body.section("centroids", centroids);
  std::size_t index = 0;
  for (const VocabEntry& e : entries_) {
    for (const TeacherTake& t : e.takes) {
      const std::string p = "take." + std::to_string(index++) + ".";
      body.section(p + "motion", flatten_motion(t.motion));
      body.section(p + "gradient", flatten_gradient(t.gradient));
      body.section(p + "joint_weights", t.joint_weights);
      body.section(p + "descriptor", t.descriptor);
      body.section(p + "embedding", t.embedding.vector);
      body.section(p + "scores", {t.self_confusion, t.self_smoothness});
    }
  }
  w.u32(body.sections());
  auto& out = w.buffer();
  out.insert(out.end(), body.buffer().begin(), body.buffer().end());
  w.u32(crc32_of(out.data(), out.size()));
  return out;
}

ReferenceDatabase ReferenceDatabase::deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 16) ByteReader::corrupt("file too short");
  const std::size_t payload = bytes.size() - 4;
  ByteReader trailer(bytes.data() + payload, 4);
  if (static_cast<std::uint32_t>(trailer.uint(4)) != crc32_of(bytes.data(), payload)) {
    ByteReader::corrupt("checksum mismatch");
  }

  ByteReader r(bytes.data(), payload);
  json header;
  try {
    header = json::parse(r.bytes(r.uint(8)));
  } catch (const json::exception&) {
    ByteReader::corrupt("unreadable header");
  }

  try {
    const std::string version = header.at("version").get<std::string>();
    if (version != kDatabaseVersion) {
      throw Error(ErrorKind::VersionMismatch,
                  "database version '" + version + "' is not supported (expected " + kDatabaseVersion + ")");
    }

    std::map<std::string, std::vector<double>> sections;
    const auto count = r.uint(4);
    for (std::uint64_t s = 0; s < count; ++s) {
      std::string name = r.bytes(r.uint(4));
      sections[std::move(name)] = r.doubles(r.uint(8));
    }
    if (!r.done()) ByteReader::corrupt("trailing bytes before checksum");
    auto section = [&](const std::string& name, std::size_t expected) -> const std::vector<double>& {
      auto it = sections.find(name);
      if (it == sections.end()) ByteReader::corrupt("missing section " + name);
      if (expected != static_cast<std::size_t>(-1) && it->second.size() != expected) {
        ByteReader::corrupt("section " + name + " has the wrong length");
      }
      return it->second;
    };
    constexpr auto kAny = static_cast<std::size_t>(-1);

    ReferenceDatabase db;
    const std::vector<std::string> names = header.at("joints").get<std::vector<std::string>>();
    const std::size_t n = names.size();
    std::vector<std::size_t> parents;
    for (const json& p : header.at("parents")) {
      const long long v = p.get<long long>();
      parents.push_back(v < 0 ? kNoParent : static_cast<std::size_t>(v));
    }
    const auto& off = section("offsets", 3 * n);
    std::vector<Vec3> offsets;
    for (std::size_t i = 0; i < n; ++i) offsets.push_back({off[3 * i], off[3 * i + 1], off[3 * i + 2]});
    db.topology_ = SkeletonTopology(names, parents, offsets);

    const auto& sc = section("scalars", 6);
    BuildConfig& cfg = db.config_;
    cfg.fps = sc[0];
    cfg.smoothing.alpha = sc[1];
    cfg.temperature = sc[2];
    cfg.bvh_scale = sc[3];
    cfg.weights.m1 = sc[4];
    cfg.weights.m2 = sc[5];
    const json& c = header.at("config");
    cfg.smoothing.window = c.at("window").get<std::size_t>();
    cfg.smoothing.poly_order = c.at("order").get<std::size_t>();
    cfg.descriptor_frames = c.at("descriptor_frames").get<std::size_t>();
    cfg.max_dim = c.at("max_dim").get<std::size_t>();
    const auto& wts = section("weights", kAny);
    if (wts.size() != 0 && wts.size() != 9 * n) ByteReader::corrupt("section weights has the wrong length");
    for (std::size_t i = 0; i < wts.size() / 9; ++i) {
      Mat3 m;
      std::copy_n(wts.begin() + static_cast<std::ptrdiff_t>(9 * i), 9, m.m.begin());
      cfg.weights.per_joint.push_back(m);
    }

    const std::size_t dim = header.at("n").get<std::size_t>();
    const std::size_t d = 6 * n;
    db.basis_.center = section("basis.center", d);
    const auto& cols = section("basis.columns", dim * d);
    for (std::size_t k = 0; k < dim; ++k) {
      db.basis_.columns.emplace_back(cols.begin() + static_cast<std::ptrdiff_t>(k * d),
                                     cols.begin() + static_cast<std::ptrdiff_t>((k + 1) * d));
    }

    db.cluster_.labels = header.at("labels").get<std::vector<std::string>>();
    db.cluster_.temperature = cfg.temperature;
    const std::size_t k_count = db.cluster_.labels.size();
    const auto& cents = section("centroids", k_count * dim);
    for (std::size_t k = 0; k < k_count; ++k) {
      db.cluster_.centroids.emplace_back(cents.begin() + static_cast<std::ptrdiff_t>(k * dim),
                                         cents.begin() + static_cast<std::ptrdiff_t>((k + 1) * dim));
    }

    std::size_t index = 0;
    for (const json& t : header.at("takes")) {
      const std::string label = t.at(0).get<std::string>();
      const std::string p = "take." + std::to_string(index++) + ".";
      const std::size_t frames = t.at(2).get<std::size_t>();
      if (frames < 2) ByteReader::corrupt("take with fewer than two frames");

      TeacherTake take;
      take.take_id = t.at(1).get<std::string>();
      take.motion.topology = db.topology_;
      take.motion.fps = cfg.fps;
      take.motion.label = label;
      const auto& mo = section(p + "motion", frames * (3 + 4 * n));
      std::size_t at = 0;
      for (std::size_t f = 0; f < frames; ++f) {
        Pose pose;
        pose.root_translation = {mo[at], mo[at + 1], mo[at + 2]};
        at += 3;
        for (std::size_t j = 0; j < n; ++j, at += 4) pose.rotations.push_back({mo[at], mo[at + 1], mo[at + 2], mo[at + 3]});
        take.motion.frames.push_back(std::move(pose));
      }
      const auto& gr = section(p + "gradient", (frames - 1) * 3 * n);
      take.gradient.fps = cfg.fps;
      at = 0;
      for (std::size_t f = 0; f + 1 < frames; ++f) {
        std::vector<Vec3> row;
        for (std::size_t j = 0; j < n; ++j, at += 3) row.push_back({gr[at], gr[at + 1], gr[at + 2]});
        take.gradient.intervals.push_back(std::move(row));
      }
      take.joint_weights = section(p + "joint_weights", n);
      take.descriptor = section(p + "descriptor", d);
      take.embedding.vector = section(p + "embedding", dim);
      take.embedding.source_label = label;
      const auto& scores = section(p + "scores", 2);
      take.self_confusion = scores[0];
      take.self_smoothness = scores[1];

      if (db.entries_.empty() || db.entries_.back().label != label) db.entries_.push_back({label, {}});
      db.entries_.back().takes.push_back(std::move(take));
    }
    if (db.entries_.size() != k_count) ByteReader::corrupt("label list does not match stored takes");
    for (std::size_t k = 0; k < k_count; ++k) {
      if (db.entries_[k].label != db.cluster_.labels[k]) ByteReader::corrupt("label order does not match stored takes");
    }
    return db;
  } catch (const json::exception& e) {
    ByteReader::corrupt(std::string("malformed header: ") + e.what());
  }
}

void ReferenceDatabase::save(const std::string& path) const {
  const std::vector<std::uint8_t> bytes = serialize();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path);
}

ReferenceDatabase ReferenceDatabase::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return deserialize(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

}  // namespace siglang
