#pragma once

#include <stdexcept>
#include <string>

namespace adiabaton {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scheme construction / validation
struct NonPositiveParameter : Error { using Error::Error; };
struct DuplicateCoupling : Error { using Error::Error; };
struct IncompleteScheme : Error { using Error::Error; };

// Dynamics / integration
struct SchemeMismatch : Error { using Error::Error; };
struct NonFiniteDetected : Error { using Error::Error; };

// Adiabatic-frame guards
struct ZeroTotalField : Error { using Error::Error; };
struct ControlVanishes : Error { using Error::Error; };
struct DegenerateDarkState : Error { using Error::Error; };
struct DegenerateModes : Error { using Error::Error; };
struct NoRealRoot : Error { using Error::Error; };

// Diagnostics
struct WindowClipped : Error { using Error::Error; };

// Configuration and I/O
struct ConfigInvalid : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };

}  // namespace adiabaton
