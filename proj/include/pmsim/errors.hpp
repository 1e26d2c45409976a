#pragma once

// Error types thrown across the library. Each names the condition it signals;
// all derive from Error so callers can catch the whole family at the CLI edge.

#include <stdexcept>
#include <string>

namespace pmsim {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// device_model
struct DivergentInductance : Error { using Error::Error; };
struct FluxSingularity : Error { using Error::Error; };
struct GammaOutOfRange : Error { using Error::Error; };
struct RootBracketFailure : Error { using Error::Error; };

// rwa_model
struct UnsupportedOrder : Error { using Error::Error; };
struct MissingHigherMode : Error { using Error::Error; };

// dynamics / stochastic
struct StepSizeUnderflow : Error { using Error::Error; };
struct StepTooLarge : Error { using Error::Error; };
struct IncompatibleHistograms : Error { using Error::Error; };

// analysis
struct NoClusters : Error { using Error::Error; };
struct WrongMultiplicity : Error { using Error::Error; };

// cli
struct ConfigInvalid : Error { using Error::Error; };
struct CommandUnknown : Error { using Error::Error; };
struct IoFailure : Error { using Error::Error; };

struct InvalidParameter : Error { using Error::Error; };

} // namespace pmsim
