#include "rppg/error.hpp"

namespace rppg {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return "validation";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::Io: return "io";
    case ErrorCode::InsufficientContext: return "insufficient-context";
    case ErrorCode::NoSourceHr: return "no-source-hr";
    case ErrorCode::Degenerate: return "degenerate";
  }
  return "unknown";
}

}  // namespace rppg
