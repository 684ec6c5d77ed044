#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gaitmtl {

/// Failure categories raised by the library. The CLI maps each category onto
/// an exit code (see `exit_code_for`).
enum class Errc {
  kEmptyStream,
  kInsufficientData,
  kInvalidConfig,
  kInvalidData,
  kLabelingError,
  kInvalidLabel,
  kUndefinedPhase,
  kShapeError,
  kInvalidBatch,
  kNumericalError,
  kIncompatibleWeights,
  kCorruptFile,
  kInvalidSplit,
  kIo,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] void fail(Errc code, const std::string& what);

}  // namespace gaitmtl
