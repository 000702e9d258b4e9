#pragma once

#include <stdexcept>
#include <string>

namespace psflo {

// All recoverable failures surface as typed exceptions so callers (and the
// CLI) can report them without crashing on malformed input.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : Error {
  using Error::Error;
};
struct MalformedFile : Error {
  using Error::Error;
};
struct LengthMismatch : Error {
  using Error::Error;
};
struct TooFewPoints : Error {
  using Error::Error;
};
struct NoModel : Error {
  using Error::Error;
};
struct DegeneratePlane : Error {
  using Error::Error;
};
struct DegenerateLine : Error {
  using Error::Error;
};
struct EmptySet : Error {
  using Error::Error;
};
struct EmptyAfterSampling : Error {
  using Error::Error;
};
struct Diverged : Error {
  using Error::Error;
};
struct TooShort : Error {
  using Error::Error;
};

}  // namespace psflo
