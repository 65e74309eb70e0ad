#pragma once

#include <stdexcept>
#include <string>

namespace mws {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The distance set admits no 3-space realization. `simplex()` names the
/// first violated simplex, e.g. "triangle(1,2,3)".
class NotEmbeddable : public Error {
public:
  NotEmbeddable(const std::string& simplex, const std::string& detail)
      : Error("not embeddable in 3-space: " + simplex + " (" + detail + ")"),
        simplex_(simplex) {}
  const std::string& simplex() const noexcept { return simplex_; }

private:
  std::string simplex_;
};

class DegenerateFrame : public Error {
public:
  using Error::Error;
};

class IllConditioned : public Error {
public:
  using Error::Error;
};

class NonUnitAxis : public Error {
public:
  using Error::Error;
};

class DegenerateAxis2 : public Error {
public:
  using Error::Error;
};

class DegenerateCloud : public Error {
public:
  using Error::Error;
};

class NotAxisymmetric : public Error {
public:
  using Error::Error;
};

class MissingMarker : public Error {
public:
  using Error::Error;
};

/// Malformed or unreadable input file.
class ParseError : public Error {
public:
  using Error::Error;
};

}  // namespace mws
