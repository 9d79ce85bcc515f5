#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include "symplift/errors.hpp"

namespace symplift {

inline constexpr int kValInf = std::numeric_limits<int>::max();

// O_K for K the unramified degree-m extension of Q_ell, truncated at ell^N.
// Elements are polynomials in the ring generator reduced mod a monic degree-m
// polynomial irreducible mod ell; every coefficient lives in [0, ell^N).
// The uniformizer is ell itself.
//
// Cheap value handle: copies share the immutable spec.
class Ring {
 public:
  Ring() = default;
  static Ring create(uint64_t ell, int m, int N);

  uint64_t ell() const;
  int m() const;
  int N() const;
  uint64_t mod() const;  // ell^N
  uint64_t q() const;    // ell^m, size of the residue field
  // Low coefficients c_0..c_{m-1} of the defining polynomial x^m + sum c_i x^i.
  const std::vector<uint64_t>& defining_poly() const;
  // Same coefficients negated mod ell^N (reduction replaces x^m by this).
  const std::vector<uint64_t>& neg_poly() const;

  bool same(const Ring& o) const;
  explicit operator bool() const { return impl_ != nullptr; }

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

struct OKElem {
  Ring ring;
  std::vector<uint64_t> c;  // length m, entries < ell^N
};

struct FqElem {
  Ring ring;
  std::vector<uint64_t> c;  // length m, entries < ell
};

// --- O_K scalars ---
OKElem ok_zero(const Ring& R);
OKElem ok_one(const Ring& R);
OKElem ok_from_int(const Ring& R, long long v);
OKElem ok_gen(const Ring& R);  // the class of x (= 0 when m = 1)

OKElem ok_add(const OKElem& x, const OKElem& y);
OKElem ok_sub(const OKElem& x, const OKElem& y);
OKElem ok_mul(const OKElem& x, const OKElem& y);
OKElem ok_neg(const OKElem& x);
OKElem ok_pow(const OKElem& x, uint64_t e);
bool ok_eq(const OKElem& x, const OKElem& y);
bool ok_is_zero(const OKElem& x);

// Inverse of a unit at full precision (residue field inverse, then Newton).
OKElem ok_inv(const OKElem& x);
// Largest v with ell^v | x, or kValInf when x = 0 mod ell^N.
int ok_valuation(const OKElem& x);
// Square root of a unit square.  Of the two roots returns the one whose
// coefficient vector is lexicographically smaller.
OKElem ok_sqrt(const OKElem& x);
// The (q-1)-st root of unity congruent to r mod ell, by iterating y -> y^q.
OKElem teichmuller(const FqElem& r);

// --- residue field ---
FqElem ok_residue(const OKElem& x);
OKElem fq_lift(const FqElem& a);
FqElem fq_zero(const Ring& R);
FqElem fq_one(const Ring& R);
FqElem fq_from_int(const Ring& R, long long v);
FqElem fq_gen(const Ring& R);

FqElem fq_add(const FqElem& a, const FqElem& b);
FqElem fq_sub(const FqElem& a, const FqElem& b);
FqElem fq_mul(const FqElem& a, const FqElem& b);
FqElem fq_neg(const FqElem& a);
FqElem fq_inv(const FqElem& a);  // DivisionByZero on 0
FqElem fq_pow(const FqElem& a, uint64_t e);
bool fq_eq(const FqElem& a, const FqElem& b);
bool fq_is_zero(const FqElem& a);
bool fq_is_square(const FqElem& a);  // nonzero a, Euler criterion
FqElem fq_sqrt(const FqElem& a);     // Tonelli-Shanks; NonResidue if none

// --- raw kernels ---
// Matrices store elements as m consecutive uint64 (each < ell^N) and call
// these to avoid per-entry allocation.  Dot products accumulate polynomial
// convolutions (width 2m-1) in unsigned __int128 and reduce once:
//
//   acc = {0}; for k: raw_conv_mac(R, a_k, b_k, acc), folding every
//   raw_fold_interval(R) steps; raw_conv_finish(R, acc, out).
void raw_add(const Ring& R, const uint64_t* a, const uint64_t* b, uint64_t* out);
void raw_sub(const Ring& R, const uint64_t* a, const uint64_t* b, uint64_t* out);
void raw_neg(const Ring& R, const uint64_t* a, uint64_t* out);
void raw_mul(const Ring& R, const uint64_t* a, const uint64_t* b, uint64_t* out);
bool raw_is_zero(const Ring& R, const uint64_t* a);
int raw_val(const Ring& R, const uint64_t* a);
void raw_conv_mac(const Ring& R, const uint64_t* a, const uint64_t* b,
                  unsigned __int128* acc);
void raw_conv_fold(const Ring& R, unsigned __int128* acc);
void raw_conv_finish(const Ring& R, unsigned __int128* acc, uint64_t* out);
uint64_t raw_fold_interval(const Ring& R);

}  // namespace symplift
