#pragma once

#include <cstdint>
#include <vector>

#include "symplift/groups.hpp"
#include "symplift/linalg.hpp"

namespace symplift {

// Group representation over K with every element image memoized.  Built by
// breadth-first multiplication from generator images; the homomorphism
// property rho(gh) = rho(g) rho(h) is verified at certified precision
// (exhaustively up to order 512, seeded pair sampling above).
struct Representation {
  FiniteGroup group;
  Ring ring;
  int dim = 0;
  std::vector<KMatrix> images;  // by element index

  const KMatrix& img(int g) const { return images[(size_t)g]; }
};

// RelationViolated when the table and the images disagree; NotInvertible for
// a singular generator image; ParseError when gens do not generate.
Representation rep_from_input(const FiniteGroup& G, const std::vector<int>& gens,
                              const std::vector<KMatrix>& images, const Ring& R);

// g -> B^-1 rho(g) B on every element.
Representation rep_conjugate(const Representation& rho, const KMatrix& B);

// Restriction to a closed element subset, re-indexed as its own group.
struct SubgroupRep {
  Representation rep;
  std::vector<int> elements;  // sub index -> ambient element index
};
SubgroupRep rep_restrict(const Representation& rho, const std::vector<int>& elems);

// Smallest-first H-stable lattice: the span of rho(h) * standard lattice
// over all h, verified stable under every h.  Needs gcd(#H, ell) = 1.
Lattice stabilize_lattice(const Representation& rho_H);

// Residue matrices in the T-basis, one per element; NotStable when some
// image does not preserve T.
std::vector<FqMatrix> reduce_mod_ell(const Representation& rho_H, const Lattice& T);

struct MeataxeResult {
  bool simple = false;
  FqMatrix submodule;  // n x k invariant basis columns when simple is false
};
// Holt-Rees MeatAxe with Norton's irreducibility criterion.  Either verdict
// is re-verified deterministically (closure of the submodule, or both
// spin-ups filling the space on a multiplicity-one factor).
// InconclusiveAfterRetries when the seeded budget runs out.
MeataxeResult meataxe_is_simple(const std::vector<FqMatrix>& gens, uint64_t seed);

// One K-rational central idempotent per Galois orbit of characters.  Orbits
// are generated by t -> q t on the prime-to-ell part of e and everything on
// the ell-part.  Zero projectors (orbits not meeting the representation) are
// dropped; before dropping, the family is verified to be idempotent,
// central, and to sum to the identity.  Costs v_ell(#G) certified digits.
struct IsotypicPiece {
  KMatrix projector;
  std::vector<int> orbit;  // character indices
  int degree = 0;          // common degree over the orbit
};
std::vector<IsotypicPiece> isotypic_projectors(const Representation& rho,
                                               const CharacterTable& table);

// Splits the subspace spanned by the basis columns (assumed isotypic) into
// simple pieces: seeded elements of the commutant are factored through their
// residue characteristic polynomial and the primary idempotents are Newton
// lifted.  A piece that survives the retry budget with no further splitting
// is returned as simple.  SplitInconclusive on internal certificate failure.
std::vector<KMatrix> simple_split(const Representation& rho, const KMatrix& basis,
                                  uint64_t seed);

// E = the commuting algebra of the module, as a matrix algebra with a
// saturated integral basis.  For a simple module this is an unramified field
// extension of K; the residue degree is checked to match dim_K E.  When a
// perfect form is attached, also computes the adjoint involution
// u -> gram^-1 u^T gram, its fixed subalgebra E0, and [E:E0] in {1,2}.
struct CentralizerData {
  std::vector<OKMatrix> basis;  // saturated integral basis of E
  int deg = 0;                  // [E:K]
  std::vector<OKMatrix> reg;    // left multiplication by basis[i], coordinates
  bool has_invol = false;
  OKMatrix invol;                    // coordinate matrix of u -> u'
  std::vector<OKMatrix> e0_basis;    // fixed points of the involution
  int e0_deg = 0;
  int e_over_e0 = 1;
};
CentralizerData centralizer_field(const Representation& tau, const BilinearForm* f);

// Coordinates of u in the basis of cd; Internal when u is outside E.
std::vector<OKElem> centralizer_coords(const CentralizerData& cd, const OKMatrix& u);

// A in Aut(T) with tau2(h) A = A tau(h) for every h, found by averaging a
// lifted unit of the mod-ell Hom space (identity tried first).
// NotIsomorphic reports the mod-ell Hom dimension when no unit exists.
OKMatrix intertwiner(const Representation& tau, const Representation& tau2, uint64_t seed);

}  // namespace symplift
