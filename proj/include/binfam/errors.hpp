#pragma once

#include <stdexcept>
#include <string>

namespace binfam {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input: wrong shape, asymmetry, empty index set, bad name.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// An operation needs exhaustive enumeration beyond the dimension cap.
class CapError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition does not hold (e.g. mismatched means).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Parameters or moments that do not describe a probability distribution.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Figure of merit requested for a target without any dependence.
class UndefinedMeritError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a runtime contract, e.g. zero proposal mass at the current state.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace binfam
