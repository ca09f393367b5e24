#pragma once

#include <stdexcept>
#include <string>

namespace slamp {

/// Tensor or argument shapes disagree with what an operation expects.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A documented precondition was violated by the caller.
struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Invalid or inconsistent configuration values.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed on-disk data (bad magic, bad header, unknown version).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// On-disk payload shorter than its header declares.
struct LengthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An output path could not be created or written.
struct WriteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A checkpoint does not match the expected format version or model layout.
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

[[noreturn]] inline void shape_fail(const std::string& what) { throw ShapeError(what); }

inline void require(bool ok, const std::string& what) {
  if (!ok) throw PreconditionError(what);
}

}  // namespace detail
}  // namespace slamp
