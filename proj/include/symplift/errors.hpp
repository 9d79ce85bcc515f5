#pragma once

#include <stdexcept>
#include <string>

namespace symplift {

// Every failure mode the library can report.  Codes are stable identifiers:
// the CLI maps them to exit codes and prints them verbatim.
enum class Err {
  NotPrime,
  EvenPrime,
  PrecisionTooLow,
  Unsupported,
  RingMismatch,
  NotUnit,
  NonResidue,
  ZeroInput,
  DivisionByZero,
  ShapeMismatch,
  NotInvertible,
  PrecisionExhausted,
  DegenerateAfterScaling,
  NotPerfect,
  OddDimension,
  NotSquarefreeModEll,
  NotAssociative,
  NoIdentity,
  NoInverse,
  NotInertiaForm,
  AuxPrimeSearchFailed,
  BadAction,
  RelationViolated,
  NotStable,
  InconclusiveAfterRetries,
  SplitInconclusive,
  NotCommutative,
  InvolutionEscapesE,
  NotIsomorphic,
  NotIsomorphicTwist,
  MultiplierEscapesE0,
  NonScalarPower,
  NotIntegral,
  KernelConditionFails,
  FormNotPerfect,
  NoUnimodularSolution,
  DecompositionFailure,
  ForceRequired,
  NotFaithful,
  BudgetViolation,
  BadTarget,
  UnknownFamily,
  ParseError,
  Internal,
};

const char* err_name(Err c);

class Error : public std::runtime_error {
 public:
  Error(Err c, const std::string& msg)
      : std::runtime_error(std::string(err_name(c)) + ": " + msg), code_(c) {}
  Err code() const noexcept { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void fail(Err c, const std::string& msg) { throw Error(c, msg); }

// Internal consistency check. Not a user-input error: firing means a bug.
inline void require(bool ok, const char* what) {
  if (!ok) fail(Err::Internal, what);
}

}  // namespace symplift
