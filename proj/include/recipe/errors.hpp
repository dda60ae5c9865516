#pragma once

#include <stdexcept>
#include <string>

namespace recipe {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Argument outside its documented domain (degree out of range, K = 0, ...).
class RangeError : public Error {
public:
  using Error::Error;
};

// A distribution or file failed its structural invariants.
class ValidationError : public Error {
public:
  using Error::Error;
};

class InvariantExpansionError : public ValidationError {
public:
  using ValidationError::ValidationError;
};

// An APA induced a non-uniform XOR-set distribution.
class UniformityError : public Error {
public:
  using Error::Error;
};

// An encoder consulted an unreachable APA entry or a hop beyond K.
class ProtocolError : public Error {
public:
  using Error::Error;
};

// Decoder artifacts missing or not matching what the switches used.
class ConfigurationError : public Error {
public:
  using Error::Error;
};

// Peeling found two different values for the same hop.
class CorruptionError : public Error {
public:
  using Error::Error;
};

// Should never fire in a correct pipeline.
class InternalError : public Error {
public:
  using Error::Error;
};

} // namespace recipe
