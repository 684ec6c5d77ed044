#include "gaitmtl/errors.hpp"

namespace gaitmtl {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::kEmptyStream: return "EmptyStream";
    case Errc::kInsufficientData: return "InsufficientData";
    case Errc::kInvalidConfig: return "InvalidConfig";
    case Errc::kInvalidData: return "InvalidData";
    case Errc::kLabelingError: return "LabelingError";
    case Errc::kInvalidLabel: return "InvalidLabel";
    case Errc::kUndefinedPhase: return "UndefinedPhase";
    case Errc::kShapeError: return "ShapeError";
    case Errc::kInvalidBatch: return "InvalidBatch";
    case Errc::kNumericalError: return "NumericalError";
    case Errc::kIncompatibleWeights: return "IncompatibleWeights";
    case Errc::kCorruptFile: return "CorruptFile";
    case Errc::kInvalidSplit: return "InvalidSplit";
    case Errc::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace gaitmtl
