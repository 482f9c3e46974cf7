#pragma once

#include <stdexcept>
#include <string>

namespace digknow {

// Root of all domain errors. The CLI maps these to exit code 1.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedBox : Error { using Error::Error; };
struct DuplicateInstanceId : Error { using Error::Error; };
struct UnknownNodeId : Error { using Error::Error; };

struct EmptyRecording : Error { using Error::Error; };
struct NonPositiveScale : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };

struct GatewayError : Error { using Error::Error; };
struct UnparseableResponse : Error { using Error::Error; };
struct MissingPlaceholder : Error { using Error::Error; };

struct DimensionMismatch : Error { using Error::Error; };
struct DuplicateId : Error { using Error::Error; };

struct UnresolvableObject : Error { using Error::Error; };
struct MaxRoundsExceeded : Error { using Error::Error; };

struct UnknownEntity : Error { using Error::Error; };
struct InvalidScenario : Error { using Error::Error; };

struct ConfigError : Error { using Error::Error; };

struct IoError : Error { using Error::Error; };

} // namespace digknow
