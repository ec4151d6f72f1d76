#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace comformer {

enum class ErrorCode {
  kSingularLattice,
  kInvalidCrystal,
  kZeroVector,
  kLengthMismatch,
  kMalformedHeader,
  kUnknownSpecies,
  kCountMismatch,
  kSchemaViolation,
  kKindMismatch,
  kDegenerateLattice,
  kInvalidK,
  kDisconnected,
  kMissingSelfEdges,
  kLeftHandedSolution,
  kSingularBasis,
  kInconsistentPlacement,
  kSpeciesMismatch,
  kImproperRotation,
  kNonUnimodular,
  kInvalidSpec,
  kNonpositiveDistance,
  kShapeMismatch,
  kNotUnit,
  kOrderMismatch,
  kWrongGraphKind,
  kNonfiniteInput,
  kInvalidArgument,
  kIoError,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace comformer
