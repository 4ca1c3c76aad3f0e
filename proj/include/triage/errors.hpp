#pragma once

#include <stdexcept>
#include <string>

namespace triage {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A problem referenced during budgeting, execution, or scoring has no
// ground-truth record. The message names the offending id.
struct MissingTruth : Error {
    explicit MissingTruth(const std::string& id)
        : Error("missing ground truth for problem: " + id) {}
};

struct InsufficientInjectionPool : Error {
    using Error::Error;
};

struct NonUniformValues : Error {
    using Error::Error;
};

struct PoolTooLarge : Error {
    using Error::Error;
};

// v_random > v_oracle signals an upstream bug, never a data condition.
struct DominanceViolation : Error {
    using Error::Error;
};

struct LengthMismatch : Error {
    using Error::Error;
};

struct AllExcluded : Error {
    using Error::Error;
};

struct EmptyInput : Error {
    using Error::Error;
};

struct TransportError : Error {
    using Error::Error;
};

struct GraderError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

}  // namespace triage
