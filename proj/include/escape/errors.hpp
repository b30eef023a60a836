#pragma once

#include <stdexcept>
#include <string>

namespace escape {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// model construction
struct NonPositiveRate : Error { using Error::Error; };
struct MassNotOne : Error { using Error::Error; };
struct UnstableRationalTransform : Error { using Error::Error; };

// polynomial / transform algebra
struct DegenerateLeadingCoefficient : Error { using Error::Error; };
struct ConfluentRootsUnsupported : Error { using Error::Error; };
struct MultipleRootsDetected : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };

// solvers
struct NotContractive : Error { using Error::Error; };
struct QuadratureUnderResolved : Error { using Error::Error; };
struct TailUnderflow : Error { using Error::Error; };
struct RoutingMismatch : Error { using Error::Error; };
struct ConditionViolated : Error { using Error::Error; };
struct UnsupportedSeverity : Error { using Error::Error; };
struct SingularThetaAtB : Error { using Error::Error; };

// monte carlo
struct NonTermination : Error { using Error::Error; };

// cli / config
struct SchemaError : Error { using Error::Error; };
struct RangeError : Error { using Error::Error; };

}  // namespace escape
