// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace revolver {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Data does not fit in the available slots.
class CapacityError : public Error {
  public:
    using Error::Error;
};

/// An argument violates an operation's documented precondition.
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// Ciphertexts or masks that cannot be combined (slot count mismatch, etc).
class EngineError : public Error {
  public:
    using Error::Error;
};

/// Malformed input file (IDX, CSV, serialized ciphertext). Messages name the file.
class IngestError : public Error {
  public:
    using Error::Error;
};

/// Encrypted result disagrees with its plaintext oracle.
class VerificationError : public Error {
  public:
    using Error::Error;
};

}  // namespace revolver
