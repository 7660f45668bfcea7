#pragma once

#include <stdexcept>
#include <string>

namespace scog {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input or record failed a type invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A chat or embedding provider failed (transport, retries exhausted, strict cache miss).
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage ran before the stages it depends on.
class DependencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace scog
