// Error taxonomy. Three families map to CLI exit codes:
// ConfigError -> 2, PhysicsError -> 3, IoError -> 4.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace kinktrap {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct PhysicsError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// --- trap / model validation ---
struct StabilityViolation : PhysicsError { using PhysicsError::PhysicsError; };
struct OrderingViolation : PhysicsError { using PhysicsError::PhysicsError; };

// --- dynamics ---
struct CoincidentIons : PhysicsError { using PhysicsError::PhysicsError; };
struct TimestepTooLarge : PhysicsError { using PhysicsError::PhysicsError; };
struct NonFinite : PhysicsError { using PhysicsError::PhysicsError; };

// --- statics ---
struct NoConvergence : PhysicsError { using PhysicsError::PhysicsError; };

// Multiple alternation flips in one structure. Carries the flip count so
// annihilation studies can keep going.
struct AmbiguousStructure : PhysicsError {
    AmbiguousStructure(const std::string& msg, int multiplicity_)
        : PhysicsError(msg), multiplicity(multiplicity_) {}
    int multiplicity;
};

// --- modes ---
struct NegativeCurvature : PhysicsError { using PhysicsError::PhysicsError; };
struct ZeroFrequencyMode : PhysicsError { using PhysicsError::PhysicsError; };
struct OrbitUnstable : PhysicsError { using PhysicsError::PhysicsError; };
struct KinkLost : PhysicsError { using PhysicsError::PhysicsError; };

// --- pnscan ---
struct KinkNotFormed : PhysicsError { using PhysicsError::PhysicsError; };
struct KinkEscaped : PhysicsError {
    KinkEscaped(const std::string& msg, int side_) : PhysicsError(msg), side(side_) {}
    int side;  // -1 left end, +1 right end
};
struct NotOverdamped : PhysicsError { using PhysicsError::PhysicsError; };
struct InsufficientOverlap : PhysicsError { using PhysicsError::PhysicsError; };

// --- quench ---
struct NotCrystallized : PhysicsError { using PhysicsError::PhysicsError; };

// --- imaging ---
struct ExposureUnderrun : PhysicsError { using PhysicsError::PhysicsError; };
struct CountMismatch : PhysicsError { using PhysicsError::PhysicsError; };
struct OverlappingSpots : PhysicsError {
    OverlappingSpots(const std::string& msg, std::vector<int> indices_)
        : PhysicsError(msg), indices(std::move(indices_)) {}
    std::vector<int> indices;
};

}  // namespace kinktrap
