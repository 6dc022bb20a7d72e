#include "temporef/error.hpp"

namespace temporef {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::FileNotFound: return "file not found";
    case ErrorKind::UnsupportedFormat: return "unsupported encoding / malformed file";
    case ErrorKind::EmptyAudio: return "zero-length audio";
    case ErrorKind::TooShort: return "input too short";
    case ErrorKind::BadMagic: return "bad magic";
    case ErrorKind::VersionMismatch: return "version mismatch";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::Truncated: return "truncated payload";
    case ErrorKind::Checksum: return "checksum mismatch";
    case ErrorKind::IncompleteBank: return "incomplete bank";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "i/o error";
  }
  return "unknown";
}

}  // namespace temporef
