#pragma once

#include <stdexcept>
#include <string>

namespace segadv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input values outside the operation's domain (non-finite pixels, bad parameters).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Tensor geometries that do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// The adapter cannot do what the caller needs (e.g. no gradient).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

/// A segmenter adapter failed; the message carries the adapter name and context.
class AdapterError : public Error {
 public:
  using Error::Error;
};

}  // namespace segadv
