#include "siglang/error.hpp"

namespace siglang {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::TopologyMismatch: return "TopologyMismatch";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::ChannelMismatch: return "ChannelMismatch";
    case ErrorKind::EmptyMotion: return "EmptyMotion";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptyModel: return "EmptyModel";
    case ErrorKind::BandInfeasible: return "BandInfeasible";
    case ErrorKind::UnknownVocab: return "UnknownVocab";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::CorruptFile: return "CorruptFile";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace siglang
