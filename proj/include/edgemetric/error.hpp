#pragma once

#include <stdexcept>
#include <string>

namespace edgemetric {

enum class ErrorCode {
  kIo,                  // file missing, unreadable or unwritable
  kUnsupportedFormat,   // decodable file with a layout we do not handle
  kInvalidArgument,
  kDimensionMismatch,
  kColorSpace,
  kOutOfRange,
  kIncompatibleModel,   // model file written for another feature config
  kCorruptModel,        // model file fails its own consistency checks
  kDataset,
  kDegenerateData,
  kDivergence,
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

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace edgemetric
