#include "comformer/error.hpp"

namespace comformer {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSingularLattice: return "SingularLattice";
    case ErrorCode::kInvalidCrystal: return "InvalidCrystal";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kMalformedHeader: return "MalformedHeader";
    case ErrorCode::kUnknownSpecies: return "UnknownSpecies";
    case ErrorCode::kCountMismatch: return "CountMismatch";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kKindMismatch: return "KindMismatch";
    case ErrorCode::kDegenerateLattice: return "DegenerateLattice";
    case ErrorCode::kInvalidK: return "InvalidK";
    case ErrorCode::kDisconnected: return "Disconnected";
    case ErrorCode::kMissingSelfEdges: return "MissingSelfEdges";
    case ErrorCode::kLeftHandedSolution: return "LeftHandedSolution";
    case ErrorCode::kSingularBasis: return "SingularBasis";
    case ErrorCode::kInconsistentPlacement: return "InconsistentPlacement";
    case ErrorCode::kSpeciesMismatch: return "SpeciesMismatch";
    case ErrorCode::kImproperRotation: return "ImproperRotation";
    case ErrorCode::kNonUnimodular: return "NonUnimodular";
    case ErrorCode::kInvalidSpec: return "InvalidSpec";
    case ErrorCode::kNonpositiveDistance: return "NonpositiveDistance";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNotUnit: return "NotUnit";
    case ErrorCode::kOrderMismatch: return "OrderMismatch";
    case ErrorCode::kWrongGraphKind: return "WrongGraphKind";
    case ErrorCode::kNonfiniteInput: return "NonfiniteInput";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

}  // namespace comformer
