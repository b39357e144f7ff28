#pragma once

#include <stdexcept>
#include <string>

namespace borrowlab {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  IndexOutOfRange,
  DuplicateIndex,
  RankDeficient,
  Numerical,
  DegenerateFit,
  Parse,
  Io,
  Selection,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code and a
// locus (row/column, index, or the operation name) so the CLI can emit a
// structured record.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string locus = {})
      : std::runtime_error(message), code_(code), locus_(std::move(locus)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& locus() const noexcept { return locus_; }

 private:
  ErrorCode code_;
  std::string locus_;
};

}  // namespace borrowlab
