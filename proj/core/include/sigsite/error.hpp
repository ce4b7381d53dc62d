#pragma once

#include <stdexcept>
#include <string>

namespace sigsite {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: ragged alignments, unknown residues, bad table rows.
class FormatError : public Error {
 public:
  using Error::Error;
};

// A value outside the mathematical domain of an operation (non-positive
// concentration, zero probability, empty group).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Inconsistent run parameters (burn-in >= iterations, grid too coarse, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// A computation would exceed its resource budget.
class ResourceError : public Error {
 public:
  using Error::Error;
};

// Structural violation of an input invariant (e.g. asymmetric score table).
class StructureError : public Error {
 public:
  using Error::Error;
};

}  // namespace sigsite
