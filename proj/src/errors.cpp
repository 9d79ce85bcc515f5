#include "symplift/errors.hpp"

namespace symplift {

const char* err_name(Err c) {
  switch (c) {
    case Err::NotPrime: return "NotPrime";
    case Err::EvenPrime: return "EvenPrime";
    case Err::PrecisionTooLow: return "PrecisionTooLow";
    case Err::Unsupported: return "Unsupported";
    case Err::RingMismatch: return "RingMismatch";
    case Err::NotUnit: return "NotUnit";
    case Err::NonResidue: return "NonResidue";
    case Err::ZeroInput: return "ZeroInput";
    case Err::DivisionByZero: return "DivisionByZero";
    case Err::ShapeMismatch: return "ShapeMismatch";
    case Err::NotInvertible: return "NotInvertible";
    case Err::PrecisionExhausted: return "PrecisionExhausted";
    case Err::DegenerateAfterScaling: return "DegenerateAfterScaling";
    case Err::NotPerfect: return "NotPerfect";
    case Err::OddDimension: return "OddDimension";
    case Err::NotSquarefreeModEll: return "NotSquarefreeModEll";
    case Err::NotAssociative: return "NotAssociative";
    case Err::NoIdentity: return "NoIdentity";
    case Err::NoInverse: return "NoInverse";
    case Err::NotInertiaForm: return "NotInertiaForm";
    case Err::AuxPrimeSearchFailed: return "AuxPrimeSearchFailed";
    case Err::BadAction: return "BadAction";
    case Err::RelationViolated: return "RelationViolated";
    case Err::NotStable: return "NotStable";
    case Err::InconclusiveAfterRetries: return "InconclusiveAfterRetries";
    case Err::SplitInconclusive: return "SplitInconclusive";
    case Err::NotCommutative: return "NotCommutative";
    case Err::InvolutionEscapesE: return "InvolutionEscapesE";
    case Err::NotIsomorphic: return "NotIsomorphic";
    case Err::NotIsomorphicTwist: return "NotIsomorphicTwist";
    case Err::MultiplierEscapesE0: return "MultiplierEscapesE0";
    case Err::NonScalarPower: return "NonScalarPower";
    case Err::NotIntegral: return "NotIntegral";
    case Err::KernelConditionFails: return "KernelConditionFails";
    case Err::FormNotPerfect: return "FormNotPerfect";
    case Err::NoUnimodularSolution: return "NoUnimodularSolution";
    case Err::DecompositionFailure: return "DecompositionFailure";
    case Err::ForceRequired: return "ForceRequired";
    case Err::NotFaithful: return "NotFaithful";
    case Err::BudgetViolation: return "BudgetViolation";
    case Err::BadTarget: return "BadTarget";
    case Err::UnknownFamily: return "UnknownFamily";
    case Err::ParseError: return "ParseError";
    case Err::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace symplift
