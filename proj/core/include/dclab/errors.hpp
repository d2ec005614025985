#pragma once

#include <stdexcept>
#include <string>

namespace dclab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A script referenced a handle before the step that creates it, or used an
// action its role is not allowed to perform.
struct ScriptError : Error { using Error::Error; };

// An honest-role party produced a message violating the protocol grammar.
struct ProtocolViolation : Error { using Error::Error; };

// Activation count exceeded the configured cap.
struct BudgetExceeded : Error { using Error::Error; };

struct UnknownProtocol : Error { using Error::Error; };
struct IncompleteTranscript : Error { using Error::Error; };

struct EnumerationTooLarge : Error {
  explicit EnumerationTooLarge(uint64_t space)
      : Error("enumeration space exceeds limit: " + std::to_string(space) +
              " outcomes"),
        space_size(space) {}
  uint64_t space_size;
};

struct SizeExceeded : Error { using Error::Error; };
struct ValueOutOfRange : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
struct KeyAbsent : Error { using Error::Error; };
struct OutcallUnavailable : Error { using Error::Error; };
struct ProtocolIdClash : Error { using Error::Error; };
struct NotNormalized : Error { using Error::Error; };

}  // namespace dclab
