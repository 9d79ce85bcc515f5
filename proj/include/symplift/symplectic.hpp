#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symplift/groups.hpp"
#include "symplift/linalg.hpp"
#include "symplift/modrep.hpp"
#include "symplift/padic.hpp"

namespace symplift {

// Witness data produced while extending an H-action to all of G = H x| <c>.
// All members are integral matrices on the same lattice; a and a1 are
// elements of the subfield E0 of the commuting algebra, stored in matrix
// form.  The identities below hold at certified precision:
//   A^T F A = F a,   a sigma^{-1}(a) = a1^2,   A1^T F A1 = F,
//   B = A1^mu,   B^{#L} = I,   2 mu s = 1 mod #L.
// A1 is A^2 a1^{-1} times a norm-one member of the commuting algebra (the
// identity whenever A1^{#L} already lands on a torsion scalar), so b is
// torsion in E0, usually the identity outright.
struct ExtensionTrace {
  OKMatrix A;
  OKMatrix a;
  OKMatrix a1;
  OKMatrix A1;
  OKMatrix b;
  OKMatrix B;
  uint64_t mu = 0;
  uint64_t s = 0;
};

struct ExtensionResult {
  Representation tau_G;   // on structure.group, integral, preserves form
  BilinearForm form;      // normalized perfect form (parity of the input)
  ExtensionTrace trace;
  CentralizerData cd;     // commuting algebra of the H-action
};

// Extend tau : H -> Aut(T, f) to G.  tau must be integral on the standard
// lattice and simple mod ell as an H-module; f is rescaled so it is perfect.
// NotIsomorphicTwist when tau is not isomorphic to its c-twist;
// MultiplierEscapesE0 / NonScalarPower when a witness leaves E0.
ExtensionResult extend_to_G(const SubgroupRep& tau, const BilinearForm& f,
                            const InertiaStructure& st, uint64_t seed);

// g |-> diag(M_g, (M_g^T)^{-1}) on T + T^dual with the pairing
// e((x,0),(0,g)) = g(x), i.e. gram [[0, I], [-I, 0]].  NotIntegral when some
// image is not integral.
struct DoubledRep {
  Representation rep;
  BilinearForm form;
};
DoubledRep hyperbolic_double(const Representation& rho0);

// Symplectic induction from a normal subgroup G1 (given by ambient element
// indices) to G0.  The cosets are labelled by their smallest element; the
// result is independent of the section, which is cross-checked against a
// seeded second section.  KernelConditionFails when some nontrivial kernel
// element of f1 has all its G0-conjugates inside the kernel.
struct InducedResult {
  Representation psi;      // of G0, integral
  BilinearForm form;       // orthogonal sum of the e1 blocks
  std::vector<int> cosets; // canonical section, one element per coset
};
InducedResult induce_symplectic(const FiniteGroup& G0, const std::vector<int>& g1_elems,
                                const SubgroupRep& f1, const BilinearForm& e1,
                                uint64_t seed);

// Order-ell integral matrix of size ell-1 (companion of 1 + x + ... +
// x^{ell-1}) together with a perfect alternating invariant form, found by
// solving the invariance system and picking a unit-determinant member.
struct CyclicBase {
  OKMatrix C;
  BilinearForm form;
};
CyclicBase cyclic_base_embedding(uint64_t ell, const Ring& R, uint64_t seed);

// One branch record of the embedding run.  Quantities that a branch does not
// compute stay at their defaults; the four booleans report the checked
// inequalities (divisibility of #iota(L) into [E0:K], the bound
// #iota(L) <= [E0:K] <= w/2, r >= phi(ell^t), and the dimension budget
// 2w + phi(#L) <= rw).
struct LedgerEntry {
  std::string branch;
  int w = 0;
  int r = 0;
  int t = 0;
  int e0_deg = 0;
  int iota = 0;
  long long Lsize = 0;
  bool eq_divides = true;
  bool eq_bound = true;
  bool eq_phi = true;
  bool eq_budget = true;
};
struct AssertionLedger {
  std::vector<LedgerEntry> entries;
};

struct VerifyCheck {
  std::string name;
  bool pass = false;
};
struct VerifyReport {
  std::vector<VerifyCheck> checks;
  int precision = 0;  // smallest certified precision among the inputs
  int failed = 0;
  bool all_pass = false;
};

struct SymplecticCertificate {
  Ring ring;
  InertiaStructure structure;  // carries the group
  int dim = 0;
  std::vector<OKMatrix> images;  // by group element index
  OKMatrix gram;                 // perfect alternating
  AssertionLedger ledger;
  VerifyReport verified;
};

// Certificate for C_{ell^m} x {+-1} in dimension phi(ell^m); m = 0 collapses
// to {+-1} -> Sp_2.  The group is group_product(cyclic(ell^m), cyclic(2)).
SymplecticCertificate cyclic_embedding(uint64_t ell, int m, const Ring& R, uint64_t seed);

// One summand of a symplectic module: either the form restricts without
// degeneracy (doubled = false, form set) or the piece is totally isotropic
// and scheduled for hyperbolic doubling (doubled = true).
struct DecPiece {
  KMatrix basis;  // ambient columns, saturated
  bool doubled = false;
  BilinearForm form;
};
// Split (V, e) into simple summands, pairing each isotropic simple with a
// dual partner that is removed together with it.  DecompositionFailure when
// a split stays inconclusive.
std::vector<DecPiece> decompose_symplectic_G(const Representation& rho, const BilinearForm& e,
                                             uint64_t seed);

struct EmbedOptions {
  bool force = false;  // allow ell = 3 (may end in BudgetViolation)
  uint64_t seed = 1;
};

// The full pipeline: decompose, handle each piece (doubling, integral
// H-simple piece, induction from a component stabilizer, or the extension
// plus cyclic direct sum), direct-sum, pad to exactly dim(rho), rotate the
// form to the standard one and verify.  ForceRequired for ell = 3 without
// options.force; NotFaithful; BudgetViolation when a ledger inequality
// fails.
SymplecticCertificate embed_inertia_group(const InertiaStructure& st, const Representation& rho,
                                          const BilinearForm& e, const EmbedOptions& opt);

// Independent recheck of a certificate: full multiplication table, gram
// shape (skew, zero diagonal, unit determinant), invariance, mod-ell
// faithfulness and the declared dimension.  Failures are report entries,
// never exceptions.
VerifyReport verify_certificate(const SymplecticCertificate& cert);

// Block sum with identity action and standard-form planes.  BadTarget unless
// target_dim >= dim and the difference is even.
SymplecticCertificate pad_embedding(const SymplecticCertificate& cert, int target_dim);

}  // namespace symplift
