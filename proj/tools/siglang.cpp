// siglang: build reference databases, assess takes, run rank evaluations
// and convert between BVH and the JSON mirror.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "json.hpp"
#include "siglang/assessment.hpp"
#include "siglang/error.hpp"
#include "siglang/evaluation.hpp"
#include "siglang/motion_json.hpp"
#include "siglang/refdb.hpp"

namespace fs = std::filesystem;
using namespace siglang;

namespace {

enum Exit { kOk = 0, kInternal = 1, kInput = 2, kUnknownVocab = 3, kTopology = 4 };

struct BuildArgs {
  std::string corpus, out, weights;
  BuildConfig cfg;
};

struct AssessArgs {
  std::string db, student, vocab, report, weights;
  std::size_t threads = 1;
  std::size_t band = 0;
};

struct EvalArgs {
  std::string db, corpus, ratings, csv, weights;
  std::uint64_t seed = 0;
  std::size_t takes = 1;
  std::size_t threads = 1;
  std::size_t band = 0;
};

struct ConvertArgs {
  std::string in, out;
  double scale = 0.01;
};

int exit_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::UnknownVocab:
      return kUnknownVocab;
    case ErrorKind::TopologyMismatch:
      return kTopology;
    default:
      return kInput;
  }
}

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw Error(ErrorKind::InvalidArgument, "config values must be scalars, got " + v.dump());
}

// Keys mirror the long flag names. Top-level keys apply to whichever
// subcommand declares them; an object keyed by a subcommand name applies
// only there. Applied as defaults before parsing, so flags given on the
// command line win and the overlay may supply required flags.
void apply_overlay(const std::string& path, CLI::App& app) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::SyntaxError, path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::SyntaxError, path + ": config must be a JSON object");

  auto set = [&](CLI::App& sub, const std::string& key, const nlohmann::json& value) {
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) return false;
    opt->required(false);
    opt->default_val(json_scalar(value));
    return true;
  };

  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      CLI::App* sub = nullptr;
      for (CLI::App* s : app.get_subcommands({})) {
        if (s->get_name() == key) sub = s;
      }
      if (sub == nullptr) throw Error(ErrorKind::InvalidArgument, path + ": unknown section '" + key + "'");
      for (const auto& [k, v] : value.items()) {
        if (!set(*sub, k, v)) throw Error(ErrorKind::InvalidArgument, path + ": unknown key '" + key + "." + k + "'");
      }
      continue;
    }
    if (key == "config") throw Error(ErrorKind::InvalidArgument, path + ": config files cannot nest");
    bool known = false;
    for (CLI::App* s : app.get_subcommands({})) known = set(*s, key, value) || known;
    if (!known) throw Error(ErrorKind::InvalidArgument, path + ": unknown key '" + key + "'");
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::IoError, "write failed: " + path);
}

std::string lower_ext(const std::string& path) {
  std::string e = fs::path(path).extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

int run_build(const BuildArgs& a) {
  BuildConfig cfg = a.cfg;
  if (!a.weights.empty()) cfg.weights = load_weights(a.weights);
  const ReferenceDatabase db = ReferenceDatabase::build(a.corpus, cfg);
  db.save(a.out);
  std::size_t takes = 0;
  for (const VocabEntry& e : db.entries()) takes += e.takes.size();
  std::printf("wrote %s\n", a.out.c_str());
  std::printf("vocab: %zu (%zu takes)\n", db.entries().size(), takes);
  std::printf("n: %zu\n", db.basis().dim());
  std::printf("joints: %zu\n", db.topology().size());
  for (std::size_t j = 0; j < db.topology().size(); ++j) std::printf("  %s\n", db.topology().name(j).c_str());
  return kOk;
}

int run_assess(const AssessArgs& a) {
  ReferenceDatabase db = ReferenceDatabase::load(a.db);
  if (!a.weights.empty()) db = db.with_weights(load_weights(a.weights));
  const MotionSequence student = load_motion(a.student, db.config().bvh_scale);
  AssessmentConfig cfg;
  cfg.threads = a.threads;
  if (a.band > 0) cfg.band = a.band;
  const AssessmentReport r = assess(student, a.vocab, db, cfg);
  if (!a.report.empty()) write_text(a.report, report_to_json(r));

  std::printf("vocab: %s\n", r.vocab.c_str());
  std::printf("assigned: %s\n", r.confusion.assigned_label.c_str());
  std::printf("composite: %.2f\n", r.composite);
  std::printf("C: %.6f\n", r.confusion.confusion);
  std::printf("S: %.6f\n", r.smoothness.score);
  std::printf("D: %.6f (score %.6f, take %s)\n", r.alignment.distance, r.alignment.normalized_score,
              r.matched_take.c_str());
  std::printf("worst joints:");
  for (const std::string& j : r.worst_joints) std::printf(" %s", j.c_str());
  std::printf("\n");
  return kOk;
}

int run_eval(const EvalArgs& a, bool synthetic) {
  ReferenceDatabase db = ReferenceDatabase::load(a.db);
  if (!a.weights.empty()) db = db.with_weights(load_weights(a.weights));
  AssessmentConfig cfg;
  if (a.band > 0) cfg.band = a.band;
  const EvalSummary s = synthetic ? evaluate_synthetic(db, a.seed, kDefaultNoiseLevels, a.takes, a.threads, cfg)
                                  : evaluate_corpus(db, a.corpus, a.ratings, a.threads, cfg);
  for (const EvalSet& set : s.sets) {
    if (set.rho) {
      std::printf("%-16s n=%-3zu rho=%.4f\n", set.vocab.c_str(), set.size, *set.rho);
    } else {
      std::printf("%-16s n=%-3zu skipped (%s)\n", set.vocab.c_str(), set.size, set.note.c_str());
    }
  }
  std::printf("average rho: %.4f\n", s.average_rho);
  if (!a.csv.empty()) write_text(a.csv, summary_csv(s));
  return kOk;
}

int run_convert(const ConvertArgs& a) {
  const std::string from = lower_ext(a.in);
  const std::string to = lower_ext(a.out);
  const bool ok = (from == ".bvh" && to == ".json") || (from == ".json" && to == ".bvh");
  if (!ok) {
    throw Error(ErrorKind::InvalidArgument,
                "convert needs a .bvh/.json pair, got '" + from + "' -> '" + to + "'");
  }
  save_motion(load_motion(a.in, a.scale), a.out, a.scale);
  std::printf("wrote %s\n", a.out.c_str());
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sign-language motion assessment"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with flag defaults (also SIGLANG_CONFIG)");

  BuildArgs b;
  CLI::App* build = app.add_subcommand("build", "Build a reference database from a BVH corpus");
  build->add_option("--corpus", b.corpus, "Directory of <vocab>__<take>.bvh files")->required();
  build->add_option("--out", b.out, "Database file to write")->required();
  build->add_option("--fps", b.cfg.fps, "Canonical frame rate")->capture_default_str();
  build->add_option("--n", b.cfg.max_dim, "Maximum embedding dimension")->capture_default_str();
  build->add_option("--window", b.cfg.smoothing.window, "Smoothing window (odd)")->capture_default_str();
  build->add_option("--order", b.cfg.smoothing.poly_order, "Smoothing polynomial order")->capture_default_str();
  build->add_option("--alpha", b.cfg.smoothing.alpha, "Smoothness score sharpness")->capture_default_str();
  build->add_option("--temperature", b.cfg.temperature, "Classifier softmax temperature")->capture_default_str();
  build->add_option("--scale", b.cfg.bvh_scale, "BVH length units to metres")->capture_default_str();
  build->add_option("--descriptor-frames", b.cfg.descriptor_frames, "Frames per descriptor")->capture_default_str();
  build->add_option("--weights", b.weights, "Embedding weights JSON");

  AssessArgs as;
  CLI::App* assess_cmd = app.add_subcommand("assess", "Score a student take");
  assess_cmd->add_option("--db", as.db, "Reference database")->required();
  assess_cmd->add_option("--student", as.student, "Student motion (.bvh or .json)")->required();
  assess_cmd->add_option("--vocab", as.vocab, "Vocabulary item the student attempted")->required();
  assess_cmd->add_option("--report", as.report, "Write the JSON report here");
  assess_cmd->add_option("--weights", as.weights, "Embedding weights JSON");
  assess_cmd->add_option("--threads", as.threads, "Workers for the alignment cost matrix")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  assess_cmd->add_option("--band", as.band, "Alignment band half-width, 0 = unbounded")->capture_default_str();

  EvalArgs ev;
  CLI::App* eval = app.add_subcommand("eval", "Rank correlation of composite scores against ground truth");
  eval->add_option("--db", ev.db, "Reference database")->required();
  CLI::Option* corpus_opt = eval->add_option("--corpus", ev.corpus, "Directory of student .bvh files");
  CLI::Option* synth_opt = eval->add_option("--synthetic", ev.seed, "Seed for a synthetic graded corpus");
  eval->add_option("--ratings", ev.ratings, "id,score CSV for --corpus");
  eval->add_option("--takes", ev.takes, "Synthetic takes per noise level")->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--csv", ev.csv, "Write id,composite,rank here");
  eval->add_option("--weights", ev.weights, "Embedding weights JSON");
  eval->add_option("--threads", ev.threads, "Assessment workers")->capture_default_str()->check(CLI::PositiveNumber);
  eval->add_option("--band", ev.band, "Alignment band half-width, 0 = unbounded")->capture_default_str();

  ConvertArgs cv;
  CLI::App* convert = app.add_subcommand("convert", "Convert between BVH and the JSON mirror");
  convert->add_option("--in", cv.in, "Input motion")->required();
  convert->add_option("--out", cv.out, "Output motion")->required();
  convert->add_option("--scale", cv.scale, "BVH length units to metres")->capture_default_str();

  // The overlay has to land before parsing, so find --config by hand.
  std::string overlay;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) overlay = argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) overlay = arg.substr(9);
  }
  if (overlay.empty()) {
    if (const char* env = std::getenv("SIGLANG_CONFIG"); env != nullptr && *env != '\0') overlay = env;
  }

  try {
    if (!overlay.empty()) apply_overlay(overlay, app);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "siglang: %s\n", e.what());
    return kInput;
  }

  CLI::App* active = app.get_subcommands().front();
  try {
    if (active == build) return run_build(b);
    if (active == assess_cmd) return run_assess(as);
    if (active == eval) {
      // set on the command line or by the overlay
      auto given = [](const CLI::Option* o) { return o->count() > 0 || !o->get_default_str().empty(); };
      const bool corpus = given(corpus_opt);
      const bool synthetic = given(synth_opt);
      if (corpus == synthetic) throw Error(ErrorKind::InvalidArgument, "eval needs exactly one of --corpus DIR or --synthetic SEED");
      if (corpus && ev.ratings.empty()) throw Error(ErrorKind::InvalidArgument, "eval --corpus needs --ratings CSV");
      if (synthetic && !ev.ratings.empty()) throw Error(ErrorKind::InvalidArgument, "--ratings only applies to --corpus");
      return run_eval(ev, synthetic);
    }
    return run_convert(cv);
  } catch (const Error& e) {
    std::fprintf(stderr, "siglang %s: %s\n", active->get_name().c_str(), e.what());
    return active == build ? kInput : exit_for(e.kind());
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "siglang %s: %s\n", active->get_name().c_str(), e.what());
    return kInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "siglang %s: internal error: %s\n", active->get_name().c_str(), e.what());
    return kInternal;
  }
}
