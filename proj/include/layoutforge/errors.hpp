#pragma once

#include <stdexcept>
#include <string>

namespace layoutforge {

// Base for every error the engine raises deliberately. Anything else escaping
// the library is a bug.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Input violates a documented precondition or type invariant.
class InvariantError : public Error {
  public:
    using Error::Error;
};

// Relation library is missing an entry or an instance does not fit its entry.
// Kept distinct from a failed validation so callers can tell a broken
// library from a bad layout.
class LibraryError : public Error {
  public:
    using Error::Error;
};

class AdjustmentLimitError : public Error {
  public:
    using Error::Error;
};

class SynthesisError : public Error {
  public:
    using Error::Error;
};

// Malformed file or document (library JSON, corpus, layout, cassette).
class SchemaError : public Error {
  public:
    using Error::Error;
};

// Malformed or incomplete LLM output.
class ParseError : public Error {
  public:
    using Error::Error;
};

class GatewayError : public Error {
  public:
    using Error::Error;
};

class CassetteMissError : public GatewayError {
  public:
    explicit CassetteMissError(std::string fingerprint)
        : GatewayError("cassette miss: " + fingerprint), fingerprint_(std::move(fingerprint)) {}

    const std::string& fingerprint() const noexcept { return fingerprint_; }

  private:
    std::string fingerprint_;
};

class ProviderError : public GatewayError {
  public:
    ProviderError(int status, const std::string& what)
        : GatewayError(what), status_(status) {}

    int status() const noexcept { return status_; }

  private:
    int status_;
};

class TimeoutError : public GatewayError {
  public:
    using GatewayError::GatewayError;
};

class GroundingError : public Error {
  public:
    using Error::Error;
};

}  // namespace layoutforge
