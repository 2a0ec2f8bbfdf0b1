#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "fixtures.hpp"
#include "siglang/bvh.hpp"
#include "siglang/error.hpp"
#include "siglang/refdb.hpp"
#include "json.hpp"

using namespace siglang;
namespace fs = std::filesystem;

namespace {

// Bitwise reflected CRC-32 (polynomial 0xEDB88320).
std::uint32_t crc32_oracle(const std::uint8_t* p, std::size_t n) {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) {
    c ^= p[i];
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
  }
  return ~c;
}

std::uint64_t read_le(const std::vector<std::uint8_t>& b, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[at + static_cast<std::size_t>(i)];
  return v;
}

void reseal(std::vector<std::uint8_t>& b) {
  const std::uint32_t c = crc32_oracle(b.data(), b.size() - 4);
  for (int i = 0; i < 4; ++i) b[b.size() - 4 + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(c >> (8 * i));
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("label_from_filename") {
  CHECK(label_from_filename("hello__t0.bvh") == std::pair<std::string, std::string>{"hello", "t0"});
  CHECK(label_from_filename("thank_you__take__2.bvh") == std::pair<std::string, std::string>{"thank_you", "take__2"});
  CHECK(label_from_filename("water.bvh") == std::pair<std::string, std::string>{"water", "water"});
}

TEST_CASE("single take gives a single centroid at its embedding") {
  const ReferenceDatabase db = ReferenceDatabase::build(fixtures::sign_corpus(1, 1));
  REQUIRE(db.cluster_model().size() == 1);
  const TeacherTake& t = db.entries().front().takes.front();
  CHECK(db.cluster_model().centroids.front() == t.embedding.vector);
  CHECK(t.self_confusion == 0.0);
}

TEST_CASE("database invariants and self-classification") {
  const ReferenceDatabase db = ReferenceDatabase::build(fixtures::sign_corpus(15, 2));
  CHECK(db.entries().size() == 15);
  CHECK(db.cluster_model().size() == 15);
  CHECK(db.basis().dim() == std::min<std::size_t>(64, 29));
  const auto& cols = db.basis().columns;
  for (std::size_t a = 0; a < cols.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      double d = 0.0;
      for (std::size_t r = 0; r < cols[a].size(); ++r) d += cols[a][r] * cols[b][r];
      CHECK(std::abs(d - (a == b ? 1.0 : 0.0)) <= 1e-8);
    }
  }
  for (const VocabEntry& e : db.entries()) {
    CHECK(db.contains(e.label));
    for (const TeacherTake& t : e.takes) {
      CHECK(t.motion.topology == db.topology());
      CHECK(t.motion.fps == 30.0);
      CHECK(t.gradient.size() + 1 == t.motion.frame_count());
      const ConfusionResult r = class_distribution(t.embedding, db.cluster_model());
      CHECK(r.assigned_label == e.label);
      CHECK(r.distribution[r.assigned_index] >= 0.5);
    }
  }
  CHECK_THROWS_AS(db.entry("nope"), Error);
}

TEST_CASE("assess assigns every teacher take of a small corpus") {
  const ReferenceDatabase db = ReferenceDatabase::build(fixtures::sign_corpus(3, 3));
  for (const VocabEntry& e : db.entries()) {
    for (const TeacherTake& t : e.takes) CHECK(assess(t.motion, e.label, db).confusion.assigned_label == e.label);
  }
}

TEST_CASE("build from a directory, rebuild, save and load") {
  const std::string dir = fixtures::temp_dir("refdb_corpus");
  fixtures::write_sign_corpus(dir, 4, 2);
  const ReferenceDatabase a = ReferenceDatabase::build(dir);
  const ReferenceDatabase b = ReferenceDatabase::build(dir);
  CHECK(a.serialize() == b.serialize());
  CHECK(a.entries().size() == 4);
  CHECK(a.entry(fixtures::vocab_name(2)).takes.size() == 2);

  const std::string out = fixtures::temp_dir("refdb_out");
  a.save(out + "/a.sgdb");
  b.save(out + "/b.sgdb");
  const auto bytes = read_file(out + "/a.sgdb");
  CHECK(bytes == read_file(out + "/b.sgdb"));

  const ReferenceDatabase loaded = ReferenceDatabase::load(out + "/a.sgdb");
  CHECK(loaded == a);
  CHECK(loaded.serialize() == bytes);

  // container layout: u64 header length, JSON header, ..., CRC-32 trailer
  const std::uint64_t head_len = read_le(bytes, 0, 8);
  const auto header = nlohmann::json::parse(std::string(bytes.begin() + 8, bytes.begin() + 8 + static_cast<long>(head_len)));
  CHECK(header["version"] == "siglang-db/1");
  CHECK(header["fps"] == 30.0);
  CHECK(header["joints"].size() == 13);
  CHECK(header["joints"][0] == "Hips");
  CHECK(header["n"] == a.basis().dim());
  CHECK(header["labels"].size() == 4);
  CHECK(read_le(bytes, bytes.size() - 4, 4) == crc32_oracle(bytes.data(), bytes.size() - 4));

  // a non-default configuration survives the round trip
  BuildConfig cfg;
  cfg.temperature = 0.6;
  cfg.smoothing = {9, 2, 5.0};
  cfg.max_dim = 3;
  cfg.weights.m2 = 0.2;
  cfg.weights.per_joint.assign(13, Mat3{});
  cfg.weights.per_joint[4].m[0] = 2.0;
  const ReferenceDatabase custom = ReferenceDatabase::build(dir, cfg);
  CHECK(custom.basis().dim() == 3);
  const ReferenceDatabase back = ReferenceDatabase::deserialize(custom.serialize());
  CHECK(back == custom);
  CHECK(back.config() == cfg);
}

TEST_CASE("corrupt and mismatched files") {
  const ReferenceDatabase db = ReferenceDatabase::build(fixtures::sign_corpus(2, 1));
  const auto bytes = db.serialize();

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<long>(cut));
    CHECK(kind_of([&] { ReferenceDatabase::deserialize(truncated); }) == ErrorKind::CorruptFile);
  }
  auto flipped = bytes;
  flipped[bytes.size() / 3] ^= 0x10;
  CHECK(kind_of([&] { ReferenceDatabase::deserialize(flipped); }) == ErrorKind::CorruptFile);

  auto old = bytes;
  const std::string tag = "siglang-db/1";
  auto pos = std::search(old.begin(), old.end(), tag.begin(), tag.end());
  REQUIRE(pos != old.end());
  *(pos + static_cast<long>(tag.size()) - 1) = '0';
  reseal(old);
  CHECK(kind_of([&] { ReferenceDatabase::deserialize(old); }) == ErrorKind::VersionMismatch);

  const std::string dir = fixtures::temp_dir("refdb_truncated");
  {
    std::ofstream out(dir + "/db.sgdb", std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size() - 9));
  }
  try {
    ReferenceDatabase::load(dir + "/db.sgdb");
    FAIL("expected CorruptFile");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::CorruptFile);
    CHECK(std::string(e.what()).find("db.sgdb") != std::string::npos);
  }
  CHECK(kind_of([&] { ReferenceDatabase::load(dir + "/missing.sgdb"); }) == ErrorKind::IoError);
}

TEST_CASE("corpus errors name the offending file") {
  const std::string empty = fixtures::temp_dir("refdb_empty");
  std::ofstream(empty + "/notes.txt") << "nothing here";
  CHECK(kind_of([&] { ReferenceDatabase::build(empty); }) == ErrorKind::EmptyCorpus);
  CHECK(kind_of([&] { ReferenceDatabase::build(std::vector<LabeledMotion>{}); }) == ErrorKind::EmptyCorpus);
  CHECK(kind_of([&] { ReferenceDatabase::build(empty + "/absent"); }) == ErrorKind::IoError);

  const std::string dir = fixtures::temp_dir("refdb_mixed");
  fixtures::write_sign_corpus(dir, 2, 1);
  std::ofstream(dir + "/odd__t0.bvh") << R"(HIERARCHY
ROOT Pelvis
{
  OFFSET 0 0 0
  CHANNELS 6 Xposition Yposition Zposition Zrotation Xrotation Yrotation
  End Site
  {
    OFFSET 0 1 0
  }
}
MOTION
Frames: 2
Frame Time: 0.0333333
0 0 0 0 0 0
0 0 0 0 0 0
)";
  try {
    ReferenceDatabase::build(dir);
    FAIL("expected TopologyMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::TopologyMismatch);
    CHECK(std::string(e.what()).find("odd__t0.bvh") != std::string::npos);
  }

  std::ofstream(dir + "/odd__t0.bvh") << "HIERARCHY\nROOT x\n{\n";
  try {
    ReferenceDatabase::build(dir);
    FAIL("expected SyntaxError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SyntaxError);
    CHECK(std::string(e.what()).find("odd__t0.bvh") != std::string::npos);
  }
}

TEST_CASE("manifest overrides filename labels") {
  const std::string dir = fixtures::temp_dir("refdb_manifest");
  fixtures::write_sign_corpus(dir, 2, 1);
  const std::string a = fixtures::vocab_name(0) + "__t0.bvh";
  std::ofstream(dir + "/manifest.json") << nlohmann::json{{"files", {{a, "greeting"}}}}.dump();
  const ReferenceDatabase db = ReferenceDatabase::build(dir);
  CHECK(db.contains("greeting"));
  CHECK_FALSE(db.contains(fixtures::vocab_name(0)));
  CHECK(db.contains(fixtures::vocab_name(1)));
}

TEST_CASE("takes at other frame rates and joint orders are normalized") {
  auto takes = fixtures::sign_corpus(3, 2);
  takes[1].motion = resample(takes[1].motion, 60.0);
  const ReferenceDatabase mixed = ReferenceDatabase::build(takes);
  for (const VocabEntry& e : mixed.entries()) {
    for (const TeacherTake& t : e.takes) CHECK(t.motion.fps == 30.0);
  }
  CHECK(kind_of([&] {
          auto bad = fixtures::sign_corpus(2, 1);
          bad.push_back(bad.front());
          ReferenceDatabase::build(bad);
        }) == ErrorKind::InvalidArgument);
}

TEST_CASE("with_weights") {
  const ReferenceDatabase db = ReferenceDatabase::build(fixtures::sign_corpus(4, 2));
  CHECK(db.with_weights(db.config().weights) == db);
  EmbeddingWeights w;
  w.m2 = 0.1;
  const ReferenceDatabase other = db.with_weights(w);
  CHECK(other.config().weights == w);
  CHECK_FALSE(other.cluster_model() == db.cluster_model());
  CHECK(other.entries().front().takes.front().motion == db.entries().front().takes.front().motion);
}
