#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "symplift/padic.hpp"

namespace symplift {

// Dense matrix over O_K.  Entries sit in one flat array, m words per entry,
// row-major.  prec counts the ell-adic digits guaranteed correct: stored
// words are representatives mod ell^N, but only the low prec digits are
// certified, so comparisons always happen mod ell^min(prec).
struct OKMatrix {
  Ring ring;
  int rows = 0, cols = 0;
  int prec = 0;
  std::vector<uint64_t> a;

  uint64_t* at(int i, int j) { return a.data() + ((size_t)i * cols + j) * ring.m(); }
  const uint64_t* at(int i, int j) const {
    return a.data() + ((size_t)i * cols + j) * ring.m();
  }
};

// ell^shift times an integral matrix.  Normalized so the integral part has a
// unit entry (zero matrix keeps shift 0).
struct KMatrix {
  OKMatrix M;
  int shift = 0;
};

// Columns of an invertible KMatrix spanning a full lattice in K^n.
struct Lattice {
  KMatrix basis;
};

enum class Parity { Alternating, Symmetric };

struct BilinearForm {
  KMatrix gram;
  Parity parity = Parity::Alternating;
  bool perfect = false;
};

// --- OKMatrix basics ---
OKMatrix mat_zero(const Ring& R, int rows, int cols);
OKMatrix mat_id(const Ring& R, int n);
OKElem mat_get(const OKMatrix& A, int i, int j);
void mat_set(OKMatrix& A, int i, int j, const OKElem& x);
OKMatrix mat_add(const OKMatrix& A, const OKMatrix& B);
OKMatrix mat_sub(const OKMatrix& A, const OKMatrix& B);
OKMatrix mat_neg(const OKMatrix& A);
OKMatrix mat_mul(const OKMatrix& A, const OKMatrix& B);
OKMatrix mat_scal(const OKMatrix& A, const OKElem& x);
OKMatrix mat_transpose(const OKMatrix& A);
bool mat_eq(const OKMatrix& A, const OKMatrix& B);  // mod ell^min(prec)
bool mat_is_zero(const OKMatrix& A);                // all valuations >= prec
bool mat_is_identity(const OKMatrix& A);
int mat_min_val(const OKMatrix& A);  // kValInf when zero
// Exact division by ell^s; every entry must have valuation >= s.  Costs s
// certified digits.
OKMatrix mat_div_pow_ell(const OKMatrix& A, int s);
OKMatrix mat_mul_pow_ell(const OKMatrix& A, int s);
// Determinant via valuation-aware elimination.  The optional output is the
// precision to which the result is certified (pivot divisions cost digits).
OKElem mat_det(const OKMatrix& A, int* det_prec = nullptr);
// Unit pivots all the way; NotInvertible when the residue matrix is
// singular.  No precision loss.
OKMatrix mat_inv(const OKMatrix& A);
bool mat_unit_det(const OKMatrix& A);  // rank over F_q equals n: exact test
OKMatrix mat_hconcat(const OKMatrix& A, const OKMatrix& B);
OKMatrix mat_cols(const OKMatrix& A, const std::vector<int>& idx);
OKMatrix mat_block_diag(const OKMatrix& A, const OKMatrix& B);

// --- KMatrix ---
KMatrix kmat(const OKMatrix& A);  // shift 0, then normalized
KMatrix kmat_id(const Ring& R, int n);
KMatrix kmat_normalize(KMatrix A);
KMatrix kmat_add(const KMatrix& A, const KMatrix& B);
KMatrix kmat_sub(const KMatrix& A, const KMatrix& B);
KMatrix kmat_neg(const KMatrix& A);
KMatrix kmat_mul(const KMatrix& A, const KMatrix& B);
KMatrix kmat_scal(const KMatrix& A, const OKElem& x);
KMatrix kmat_transpose(const KMatrix& A);
KMatrix kmat_mul_pow_ell(const KMatrix& A, int s);
bool kmat_eq(const KMatrix& A, const KMatrix& B);
bool kmat_is_zero(const KMatrix& A);
bool kmat_is_integral(const KMatrix& A);
// As OKMatrix; NotIntegral when shift < 0.
OKMatrix kmat_to_integral(const KMatrix& A);
// Inverse over K via diagonalization; NotInvertible when singular at
// certified precision.  Verified by substitution.
KMatrix kmat_inv(const KMatrix& A);

// --- elimination engine products ---
// Saturated kernel over O_K: columns form part of an O_K-basis, verified by
// substitution.  Result is n x (dim kernel).
OKMatrix kernel_saturated(const OKMatrix& A);
// Canonical column Hermite form of the column span (full or partial rank).
// Pivot of row i is exactly ell^{e_i}; entries of earlier columns in pivot
// rows are reduced mod the pivot, later ones are zero.  Input order never
// changes the output, which makes lattice equality tests canonical too.
OKMatrix hermite_columns(const OKMatrix& A);
// Two-sided reduction U * A * V = D with D diagonal and U, V unimodular.
// pvals lists the valuations of the nonzero diagonal entries (the elementary
// divisors), which is the honest saturation test: hermite pivots alone can
// lead with ell even when the span is a direct summand.
struct DiagResult {
  OKMatrix D, U, V;
  int rank = 0;
  int prec = 0;
  std::vector<int> pvals;
};
DiagResult diag_reduce(const OKMatrix& A);
// O_K-span of the columns of all inputs; PrecisionExhausted if denominators
// eat the certified digits.
Lattice lattice_sum(const std::vector<KMatrix>& mats);
bool lattice_eq(const Lattice& A, const Lattice& B);

// Basis of { F : M^T F M = F for all generators, F^T = +-F }, each basis
// matrix integral with unit content, verified by substitution against every
// generator.
std::vector<OKMatrix> invariant_forms(const std::vector<KMatrix>& gens, Parity parity);

// Rescale F so it takes T x T onto exactly O_K: returns i with ell^i F
// perfect on T and the rescaled Gram in the T-basis.  A non-unit determinant
// after rescaling is DegenerateAfterScaling.
std::pair<int, OKMatrix> form_normalize(const BilinearForm& F, const Lattice& T);

// The standard form: diagonal blocks [[0,1],[-1,0]].
OKMatrix jstd(const Ring& R, int n);
// S with S^T J S = J_std, unit determinant, no precision loss.
OKMatrix symplectic_basis(const OKMatrix& J);

// --- residue field matrices ---
struct FqMatrix {
  Ring ring;
  int rows = 0, cols = 0;
  std::vector<uint64_t> a;

  uint64_t* at(int i, int j) { return a.data() + ((size_t)i * cols + j) * ring.m(); }
  const uint64_t* at(int i, int j) const {
    return a.data() + ((size_t)i * cols + j) * ring.m();
  }
};

FqMatrix fqm_zero(const Ring& R, int rows, int cols);
FqMatrix fqm_id(const Ring& R, int n);
FqElem fqm_get(const FqMatrix& A, int i, int j);
void fqm_set(FqMatrix& A, int i, int j, const FqElem& x);
FqMatrix fqm_from_okmat(const OKMatrix& A);
FqMatrix fqm_add(const FqMatrix& A, const FqMatrix& B);
FqMatrix fqm_sub(const FqMatrix& A, const FqMatrix& B);
FqMatrix fqm_mul(const FqMatrix& A, const FqMatrix& B);
FqMatrix fqm_scal(const FqMatrix& A, const FqElem& x);
FqMatrix fqm_transpose(const FqMatrix& A);
bool fqm_eq(const FqMatrix& A, const FqMatrix& B);
bool fqm_is_zero(const FqMatrix& A);
int fqm_rank(const FqMatrix& A);
FqMatrix fqm_inv(const FqMatrix& A);  // NotInvertible
// Kernel basis as columns (echelonized, canonical).
FqMatrix fqm_kernel(const FqMatrix& A);
FqMatrix fqm_pow(const FqMatrix& A, uint64_t e);
// X with A X = B; A must have full column rank and the system must be
// consistent.
FqMatrix fqm_solve(const FqMatrix& A, const FqMatrix& B);

// Incrementally echelonized row space over F_q; backbone of spinning and
// span comparisons.
struct FqSpan {
  Ring ring;
  int n = 0;
  std::vector<std::vector<uint64_t>> rows;  // echelon rows, n*m words each
  std::vector<int> pivots;

  FqSpan(const Ring& R, int n_) : ring(R), n(n_) {}
  int dim() const { return (int)rows.size(); }
  bool insert(const uint64_t* vec);        // true if the dimension grew
  bool contains(const uint64_t* vec) const;
};

// --- polynomials over F_q (coefficients low to high, trimmed) ---
using FqPoly = std::vector<FqElem>;

int fqp_deg(const FqPoly& p);  // -1 for zero
void fqp_trim(FqPoly& p);
FqPoly fqp_one(const Ring& R);
FqPoly fqp_x(const Ring& R);
FqPoly fqp_add(const FqPoly& a, const FqPoly& b);
FqPoly fqp_sub(const FqPoly& a, const FqPoly& b);
FqPoly fqp_mul(const FqPoly& a, const FqPoly& b);
FqPoly fqp_scal(const FqPoly& a, const FqElem& c);
FqPoly fqp_monic(const FqPoly& a);
std::pair<FqPoly, FqPoly> fqp_divrem(const FqPoly& a, const FqPoly& b);
FqPoly fqp_gcd(FqPoly a, FqPoly b);
FqPoly fqp_powmod(const FqPoly& a, uint64_t e, const FqPoly& f);
FqPoly fqp_derivative(const FqPoly& a);
bool fqp_eq(const FqPoly& a, const FqPoly& b);
// Inverse of a mod f (gcd must be 1); DivisionByZero otherwise.
FqPoly fqp_invmod(const FqPoly& a, const FqPoly& f);
FqMatrix fqm_eval_poly(const FqPoly& p, const FqMatrix& A);
FqPoly fqm_charpoly(const FqMatrix& A);  // Hessenberg reduction
// Monic squarefree p -> irreducible monic factors in a canonical order
// (degree, then coefficient sequence).  Distinct-degree plus seeded
// equal-degree splitting.
std::vector<FqPoly> fqp_factor(const FqPoly& p, uint64_t seed);

// --- polynomials over O_K ---
using OKPoly = std::vector<OKElem>;

int okp_deg(const OKPoly& p);
void okp_trim(OKPoly& p, int prec);  // drop leading terms that vanish mod ell^prec
OKPoly okp_add(const OKPoly& a, const OKPoly& b);
OKPoly okp_sub(const OKPoly& a, const OKPoly& b);
OKPoly okp_mul(const OKPoly& a, const OKPoly& b);
std::pair<OKPoly, OKPoly> okp_divrem(const OKPoly& a, const OKPoly& b);  // b monic
OKPoly okp_mulmod(const OKPoly& a, const OKPoly& b, const OKPoly& f);    // f monic
// Inverse of u mod monic f, by residue-field inversion plus Newton;
// NotInvertible when u reduces to 0 mod (ell, f).
OKPoly okp_invmod(const OKPoly& u, const OKPoly& f);
OKPoly okp_derivative(const OKPoly& a);
bool okp_eq(const OKPoly& a, const OKPoly& b, int prec);
FqPoly okp_residue(const OKPoly& a);
OKPoly okp_lift(const Ring& R, const FqPoly& a);
OKMatrix okp_eval_mat(const OKPoly& p, const OKMatrix& A);
// Monic p with squarefree reduction -> Hensel lift of the mod-ell
// factorization to full precision; the product of the outputs is verified
// against p.  NotSquarefreeModEll otherwise.
std::vector<OKPoly> poly_factor_squarefree_local(const OKPoly& p, uint64_t seed);

}  // namespace symplift
