#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "symplift/errors.hpp"

namespace symplift {

// Finite group as a validated multiplication table.  Element = index.
struct FiniteGroup {
  int n = 0;
  int id = 0;            // identity index
  std::vector<int> mul;  // n*n, entry (a,b) = a*b
  std::vector<int> inv;  // n

  int at(int a, int b) const { return mul[(size_t)a * n + b]; }
};

// Validates identity, inverses and associativity (exhaustive up to order 512,
// seeded triple sampling above).  NotAssociative / NoIdentity / NoInverse.
FiniteGroup group_from_table(const std::vector<std::vector<int>>& table);

int gpow(const FiniteGroup& G, int g, long long e);
int gconj(const FiniteGroup& G, int x, int g);  // x g x^-1
int element_order(const FiniteGroup& G, int g);
uint64_t group_exponent(const FiniteGroup& G);
bool group_abelian(const FiniteGroup& G);
// Sorted element list of the subgroup generated by gens.
std::vector<int> subgroup_closure(const FiniteGroup& G, const std::vector<int>& gens);
// Greedy generating set, empty for the trivial group.
std::vector<int> small_generating_set(const FiniteGroup& G);
bool subgroup_normal(const FiniteGroup& G, const std::vector<int>& H);

// Direct product; element (a, b) has index a * B.n + b.
FiniteGroup group_product(const FiniteGroup& A, const FiniteGroup& B);

// Quotient by a normal subgroup: the group plus the projection map.
struct QuotientGroup {
  FiniteGroup q;
  std::vector<int> proj;  // element of G -> element of q
};
QuotientGroup quotient_group(const FiniteGroup& G, const std::vector<int>& N);

// G = H x| <c> with H the elements of order coprime to ell and c of order
// ell^k generating a complement.
struct InertiaStructure {
  FiniteGroup group;
  uint64_t ell = 0;
  std::vector<int> H;  // sorted
  int c = 0;           // smallest suitable index
  int k = 0;           // [G : H] = ell^k
};

// NotInertiaForm when H is not a normal subgroup of ell-power index or no
// cyclic complement generator exists.
InertiaStructure inertia_split(const FiniteGroup& G, uint64_t ell);

struct ConjClasses {
  std::vector<std::vector<int>> cls;  // sorted members, classes by (size, min)
  std::vector<int> of;                // element -> class index
  std::vector<int> rep;               // class -> smallest member
};
ConjClasses conjugacy_classes(const FiniteGroup& G);

// Exact character table.  Values are sums of e-th roots of unity stored as
// length-e multiplicity vectors: value = sum_k v[k] zeta_e^k.  Characters are
// sorted by (degree, value vectors), so tables are canonical.
struct CharacterTable {
  ConjClasses classes;
  uint64_t e = 1;
  std::vector<int> degrees;
  std::vector<std::vector<std::vector<long long>>> values;  // [chi][class][k]
};

// Burnside-Dixon: eigen-split the class algebra modulo an auxiliary prime
// p = 1 mod e, p > 2 sqrt(#G), then lift values by discrete logarithm.
// Both orthogonality relations are verified exactly over Z[zeta_e] before
// returning.  AuxPrimeSearchFailed when no usable p exists in range.
CharacterTable character_table_dixon(const FiniteGroup& G);

// Families for the corpus: cyclic(n), dihedral(n) of order 2n, quaternion8,
// semidirect(n, ell, k, s) = C_n x| C_{ell^k} with c h c^-1 = h^s.
FiniteGroup family_cyclic(int n);
FiniteGroup family_dihedral(int n);
FiniteGroup family_quaternion8();
FiniteGroup family_semidirect(uint64_t n, uint64_t ell, uint64_t k, uint64_t s);  // BadAction
// Dispatcher for the CLI: kind in {cyclic, dihedral, quaternion8, semidirect}.
FiniteGroup build_family(const std::string& kind, const std::vector<uint64_t>& args);

// Integer coefficients of the e-th cyclotomic polynomial.
std::vector<long long> cyclotomic_poly(uint64_t e);

}  // namespace symplift
