#pragma once

#include <stdexcept>
#include <string>

namespace hazekit {

// Base of every exception thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A value violates the mathematical domain of an operation (NaN, nonpositive depth, ...).
struct DomainError : Error {
  using Error::Error;
};

// A parameter is out of its declared range (radius too large, eps <= 0, ...).
struct ConfigError : Error {
  using Error::Error;
};

// Operand rasters disagree in size, or list lengths disagree.
struct DimensionError : Error {
  using Error::Error;
};

// A statistical fit had nothing usable to work with.
struct EstimationError : Error {
  using Error::Error;
};

// A file parsed but its content has the wrong layout (bit depth, channels, columns).
struct FormatError : Error {
  using Error::Error;
};

// Filesystem failure; the message carries the path.
struct IoError : Error {
  using Error::Error;
};

}  // namespace hazekit
