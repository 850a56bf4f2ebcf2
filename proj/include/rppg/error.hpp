#pragma once

#include <stdexcept>
#include <string>

namespace rppg {

enum class ErrorCode {
  Validation,           // bad parameter or malformed input value
  Schema,               // malformed manifest / JSON / CSV
  Io,                   // missing or unreadable file
  InsufficientContext,  // augmentation interval does not fit the session
  NoSourceHr,           // every STFT window covering a clip is masked
  Degenerate,           // zero variance, empty landmark set, DC-only signal
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace rppg
