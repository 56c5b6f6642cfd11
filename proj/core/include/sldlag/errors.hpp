#pragma once

#include <stdexcept>
#include <string>

namespace sldlag {

/* Every failure raised by the library derives from Error, so callers that
 * only care about "something went wrong" can catch a single type. The
 * subclasses below are the distinct failure modes the CLI maps onto exit
 * codes. */
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ModulusMismatch : public Error {
  public:
    using Error::Error;
};

class NotInvertible : public Error {
  public:
    using Error::Error;
};

class DimensionMismatch : public Error {
  public:
    using Error::Error;
};

/* Debug-build check of the RNS capacity contract. */
class ContractViolation : public Error {
  public:
    using Error::Error;
};

class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/* I/O and on-disk format problems. */
class FormatError : public Error {
  public:
    enum class Kind { BadMagic, BadVersion, Truncated, InvariantViolation, Io };
    FormatError(Kind kind, std::string const & what)
        : Error(what), kind_(kind)
    {
    }
    Kind kind() const { return kind_; }

  private:
    Kind kind_;
};

class ProtocolError : public Error {
  public:
    using Error::Error;
};

class TimeoutError : public Error {
  public:
    using Error::Error;
};

/* The solver produced the zero vector or an unverifiable candidate; the
 * caller is expected to retry with fresh random blocks. */
class SolverFailure : public Error {
  public:
    explicit SolverFailure(std::string const & what, bool retry = true)
        : Error(what), retry_(retry)
    {
    }
    bool retry() const { return retry_; }

  private:
    bool retry_;
};

class GeneratorFailure : public SolverFailure {
  public:
    using SolverFailure::SolverFailure;
};

/* Raised by the testing hook that stops a Krylov run after a checkpoint. */
class Interrupted : public Error {
  public:
    using Error::Error;
};

} // namespace sldlag
