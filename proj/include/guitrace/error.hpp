#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace guitrace {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed document text. `offset` is the byte position where parsing
/// stopped, when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  explicit ParseError(const std::string& what) : Error(what), offset_(0) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Well-formed document that violates a model invariant (dangling reference,
/// cycle, duplicate, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

class StaleCacheError : public Error {
 public:
  using Error::Error;
};

class CacheFormatError : public Error {
 public:
  using Error::Error;
};

class UnknownWidgetError : public Error {
 public:
  using Error::Error;
};

class NoHandlersError : public Error {
 public:
  using Error::Error;
};

class UnknownSeqError : public Error {
 public:
  using Error::Error;
};

class UnknownClassError : public Error {
 public:
  using Error::Error;
};

class OutOfOrderError : public Error {
 public:
  using Error::Error;
};

class QueueFullError : public Error {
 public:
  using Error::Error;
};

}  // namespace guitrace
