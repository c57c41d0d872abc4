// Error types thrown across the library.
#pragma once

#include <stdexcept>
#include <string>

namespace hetsim {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// states
struct TruncationTooSmall : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct IndexBeyondTruncation : Error { using Error::Error; };

// detector
struct EnvelopeFailure : Error { using Error::Error; };

// estimators
struct DegreeOutOfRange : Error { using Error::Error; };
struct EmptySample : Error { using Error::Error; };
struct PhaseOutOfDomain : Error { using Error::Error; };
struct TooFewSamples : Error { using Error::Error; };

// reconstruction
struct IndexOutOfRange : Error { using Error::Error; };
struct CutoffTooLarge : Error { using Error::Error; };

// cli
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

} // namespace hetsim
