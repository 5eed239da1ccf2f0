#pragma once

#include <stdexcept>
#include <string>

namespace cw {

// Every failure in the library carries one of these kinds. The C API maps
// them onto its numeric status codes (and the CLI onto exit codes), so the
// kind, not the message, is the machine-readable part of an error.
enum class ErrorKind {
  Parse,         // malformed input file content
  Validation,    // well-formed input violating a contract
  Config,        // bad or inconsistent configuration
  Capability,    // operation not supported by the chosen backend
  Extraction,    // extractor backend failure
  Numeric,       // non-finite value in a computation
  Dimension,     // tensor/vector shape mismatch
  Integrity,     // checksum or container corruption
  ModelFormat,   // unreadable or incompatible model file
  MissingInput,  // a referenced input file does not exist
  MissingModel,  // a required model file does not exist
  UnknownId,     // sentence id not present in the loaded data
  Io,            // OS-level read/write failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace cw
