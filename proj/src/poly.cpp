#include <algorithm>

#include "symplift/linalg.hpp"
#include "symplift/rng.hpp"

namespace symplift {

namespace {

using u64 = uint64_t;
using u128 = unsigned __int128;

void fchkm(const FqMatrix& A) {
  if (!A.ring || (size_t)A.rows * A.cols * A.ring.m() != A.a.size())
    fail(Err::ShapeMismatch, "malformed residue matrix");
}

bool fq_raw_is_zero(const Ring& R, const u64* a) {
  for (int i = 0; i < R.m(); i++)
    if (a[i]) return false;
  return true;
}

void fq_raw_add(const Ring& R, const u64* a, const u64* b, u64* out) {
  u64 ell = R.ell();
  for (int i = 0; i < R.m(); i++) {
    u64 s = a[i] + b[i];
    out[i] = s >= ell ? s - ell : s;
  }
}

void fq_raw_sub(const Ring& R, const u64* a, const u64* b, u64* out) {
  u64 ell = R.ell();
  for (int i = 0; i < R.m(); i++) out[i] = a[i] >= b[i] ? a[i] - b[i] : a[i] + (ell - b[i]);
}

// out = a * b in F_q; coefficients < ell <= 2^15 so plain u64 accumulation
// never wraps at our sizes
void fq_raw_mul(const Ring& R, const u64* a, const u64* b, u64* out) {
  int m = R.m();
  u64 ell = R.ell();
  if (m == 1) {
    out[0] = a[0] * b[0] % ell;
    return;
  }
  u64 conv[127];
  std::fill(conv, conv + 2 * m - 1, 0);
  for (int i = 0; i < m; i++) {
    if (!a[i]) continue;
    for (int j = 0; j < m; j++) conv[i + j] += a[i] * b[j];
  }
  const auto& f = R.defining_poly();
  for (int i = 2 * m - 2; i >= m; i--) {
    u64 t = conv[i] % ell;
    if (t)
      for (int j = 0; j < m; j++)
        if (f[j]) conv[i - m + j] += t * (ell - f[j] % ell);
  }
  for (int i = 0; i < m; i++) out[i] = conv[i] % ell;
}

void fq_raw_axpy(const Ring& R, u64* dst, const u64* f, const u64* src) {
  u64 buf[64];
  fq_raw_mul(R, f, src, buf);
  fq_raw_sub(R, dst, buf, dst);  // dst -= f * src
}

// row-reduce in place; returns pivot columns
std::vector<int> fqm_rref(FqMatrix& A) {
  const Ring& R = A.ring;
  int m = R.m();
  std::vector<int> pivots;
  int r = 0;
  for (int j = 0; j < A.cols && r < A.rows; j++) {
    int pi = -1;
    for (int i = r; i < A.rows; i++)
      if (!fq_raw_is_zero(R, A.at(i, j))) {
        pi = i;
        break;
      }
    if (pi < 0) continue;
    if (pi != r)
      std::swap_ranges(A.at(pi, 0), A.at(pi, 0) + (size_t)A.cols * m, A.at(r, 0));
    FqElem inv = fq_inv(fqm_get(A, r, j));
    for (int c = 0; c < A.cols; c++) {
      u64 buf[64];
      fq_raw_mul(R, A.at(r, c), inv.c.data(), buf);
      std::copy(buf, buf + m, A.at(r, c));
    }
    for (int i = 0; i < A.rows; i++) {
      if (i == r || fq_raw_is_zero(R, A.at(i, j))) continue;
      u64 f[64];
      std::copy(A.at(i, j), A.at(i, j) + m, f);
      for (int c = 0; c < A.cols; c++) fq_raw_axpy(R, A.at(i, c), f, A.at(r, c));
    }
    pivots.push_back(j);
    r++;
  }
  return pivots;
}

}  // namespace

// --- FqMatrix ---

FqMatrix fqm_zero(const Ring& R, int rows, int cols) {
  FqMatrix A;
  A.ring = R;
  A.rows = rows;
  A.cols = cols;
  A.a.assign((size_t)rows * cols * R.m(), 0);
  return A;
}

FqMatrix fqm_id(const Ring& R, int n) {
  FqMatrix A = fqm_zero(R, n, n);
  for (int i = 0; i < n; i++) A.at(i, i)[0] = 1;
  return A;
}

FqElem fqm_get(const FqMatrix& A, int i, int j) {
  FqElem x = fq_zero(A.ring);
  std::copy(A.at(i, j), A.at(i, j) + A.ring.m(), x.c.begin());
  return x;
}

void fqm_set(FqMatrix& A, int i, int j, const FqElem& x) {
  std::copy(x.c.begin(), x.c.end(), A.at(i, j));
}

FqMatrix fqm_from_okmat(const OKMatrix& A) {
  FqMatrix B = fqm_zero(A.ring, A.rows, A.cols);
  u64 ell = A.ring.ell();
  for (size_t i = 0; i < A.a.size(); i++) B.a[i] = A.a[i] % ell;
  return B;
}

FqMatrix fqm_add(const FqMatrix& A, const FqMatrix& B) {
  fchkm(A);
  fchkm(B);
  if (A.rows != B.rows || A.cols != B.cols) fail(Err::ShapeMismatch, "add shapes differ");
  FqMatrix C = fqm_zero(A.ring, A.rows, A.cols);
  u64 ell = A.ring.ell();
  for (size_t i = 0; i < A.a.size(); i++) {
    u64 s = A.a[i] + B.a[i];
    C.a[i] = s >= ell ? s - ell : s;
  }
  return C;
}

FqMatrix fqm_sub(const FqMatrix& A, const FqMatrix& B) {
  fchkm(A);
  fchkm(B);
  if (A.rows != B.rows || A.cols != B.cols) fail(Err::ShapeMismatch, "sub shapes differ");
  FqMatrix C = fqm_zero(A.ring, A.rows, A.cols);
  u64 ell = A.ring.ell();
  for (size_t i = 0; i < A.a.size(); i++)
    C.a[i] = A.a[i] >= B.a[i] ? A.a[i] - B.a[i] : A.a[i] + (ell - B.a[i]);
  return C;
}

FqMatrix fqm_mul(const FqMatrix& A, const FqMatrix& B) {
  fchkm(A);
  fchkm(B);
  if (A.cols != B.rows) fail(Err::ShapeMismatch, "mul shapes incompatible");
  const Ring& R = A.ring;
  int m = R.m();
  FqMatrix C = fqm_zero(R, A.rows, B.cols);
  u64 buf[64], acc[64];
  u64 ell = R.ell();
  for (int i = 0; i < A.rows; i++)
    for (int j = 0; j < B.cols; j++) {
      std::fill(acc, acc + m, 0);
      for (int k = 0; k < A.cols; k++) {
        fq_raw_mul(R, A.at(i, k), B.at(k, j), buf);
        for (int c = 0; c < m; c++) acc[c] += buf[c];  // < cols * ell, fits easily
      }
      for (int c = 0; c < m; c++) C.at(i, j)[c] = acc[c] % ell;
    }
  return C;
}

FqMatrix fqm_scal(const FqMatrix& A, const FqElem& x) {
  FqMatrix C = A;
  u64 buf[64];
  for (int i = 0; i < A.rows; i++)
    for (int j = 0; j < A.cols; j++) {
      fq_raw_mul(A.ring, A.at(i, j), x.c.data(), buf);
      std::copy(buf, buf + A.ring.m(), C.at(i, j));
    }
  return C;
}

FqMatrix fqm_transpose(const FqMatrix& A) {
  FqMatrix C = fqm_zero(A.ring, A.cols, A.rows);
  int m = A.ring.m();
  for (int i = 0; i < A.rows; i++)
    for (int j = 0; j < A.cols; j++) std::copy(A.at(i, j), A.at(i, j) + m, C.at(j, i));
  return C;
}

bool fqm_eq(const FqMatrix& A, const FqMatrix& B) {
  return A.rows == B.rows && A.cols == B.cols && A.a == B.a;
}

bool fqm_is_zero(const FqMatrix& A) {
  for (u64 x : A.a)
    if (x) return false;
  return true;
}

int fqm_rank(const FqMatrix& A) {
  FqMatrix W = A;
  return (int)fqm_rref(W).size();
}

FqMatrix fqm_inv(const FqMatrix& A) {
  fchkm(A);
  if (A.rows != A.cols) fail(Err::ShapeMismatch, "inverse of non-square matrix");
  int n = A.rows, m = A.ring.m();
  FqMatrix W = fqm_zero(A.ring, n, 2 * n);
  for (int i = 0; i < n; i++) {
    std::copy(A.at(i, 0), A.at(i, 0) + (size_t)n * m, W.at(i, 0));
    W.at(i, n + i)[0] = 1;
  }
  auto piv = fqm_rref(W);
  if ((int)piv.size() != n || piv[n - 1] != n - 1)
    fail(Err::NotInvertible, "singular over the residue field");
  FqMatrix C = fqm_zero(A.ring, n, n);
  for (int i = 0; i < n; i++) std::copy(W.at(i, n), W.at(i, n) + (size_t)n * m, C.at(i, 0));
  return C;
}

FqMatrix fqm_kernel(const FqMatrix& A0) {
  fchkm(A0);
  FqMatrix A = A0;
  auto piv = fqm_rref(A);
  std::vector<bool> isp(A.cols, false);
  for (int p : piv) isp[p] = true;
  std::vector<int> freec;
  for (int j = 0; j < A.cols; j++)
    if (!isp[j]) freec.push_back(j);
  FqMatrix K = fqm_zero(A.ring, A.cols, (int)freec.size());
  for (size_t t = 0; t < freec.size(); t++) {
    int j = freec[t];
    K.at(j, (int)t)[0] = 1;
    for (size_t r = 0; r < piv.size(); r++) {
      u64 buf[64];
      std::copy(A.at((int)r, j), A.at((int)r, j) + A.ring.m(), buf);
      u64 neg[64];
      u64 ell = A.ring.ell();
      for (int c = 0; c < A.ring.m(); c++) neg[c] = buf[c] ? ell - buf[c] : 0;
      std::copy(neg, neg + A.ring.m(), K.at(piv[r], (int)t));
    }
  }
  return K;
}

FqMatrix fqm_pow(const FqMatrix& A, uint64_t e) {
  FqMatrix r = fqm_id(A.ring, A.rows), base = A;
  while (e) {
    if (e & 1) r = fqm_mul(r, base);
    base = fqm_mul(base, base);
    e >>= 1;
  }
  return r;
}

FqMatrix fqm_solve(const FqMatrix& A, const FqMatrix& B) {
  fchkm(A);
  fchkm(B);
  if (A.rows != B.rows) fail(Err::ShapeMismatch, "solve shapes incompatible");
  const Ring& R = A.ring;
  int m = R.m(), d = A.cols;
  FqMatrix W = fqm_zero(R, A.rows, d + B.cols);
  for (int i = 0; i < A.rows; i++) {
    std::copy(A.at(i, 0), A.at(i, 0) + (size_t)d * m, W.at(i, 0));
    std::copy(B.at(i, 0), B.at(i, 0) + (size_t)B.cols * m, W.at(i, d));
  }
  auto piv = fqm_rref(W);
  require((int)piv.size() >= d, "coefficient matrix lacks full column rank");
  for (int t = 0; t < d; t++) require(piv[t] == t, "coefficient matrix lacks full column rank");
  require((int)piv.size() == d, "inconsistent linear system");
  FqMatrix X = fqm_zero(R, d, B.cols);
  for (int t = 0; t < d; t++) std::copy(W.at(t, d), W.at(t, d) + (size_t)B.cols * m, X.at(t, 0));
  return X;
}

// --- FqSpan ---

bool FqSpan::insert(const uint64_t* vec) {
  int m = ring.m();
  std::vector<u64> w(vec, vec + (size_t)n * m);
  for (size_t r = 0; r < rows.size(); r++) {
    const u64* lead = w.data() + (size_t)pivots[r] * m;
    if (fq_raw_is_zero(ring, lead)) continue;
    u64 f[64];
    std::copy(lead, lead + m, f);
    for (int j = 0; j < n; j++)
      fq_raw_axpy(ring, w.data() + (size_t)j * m, f, rows[r].data() + (size_t)j * m);
  }
  int p = -1;
  for (int j = 0; j < n; j++)
    if (!fq_raw_is_zero(ring, w.data() + (size_t)j * m)) {
      p = j;
      break;
    }
  if (p < 0) return false;
  FqElem lead = fq_zero(ring);
  std::copy(w.begin() + (size_t)p * m, w.begin() + (size_t)p * m + m, lead.c.begin());
  FqElem inv = fq_inv(lead);
  for (int j = 0; j < n; j++) {
    u64 buf[64];
    fq_raw_mul(ring, w.data() + (size_t)j * m, inv.c.data(), buf);
    std::copy(buf, buf + m, w.begin() + (size_t)j * m);
  }
  rows.push_back(std::move(w));
  pivots.push_back(p);
  return true;
}

bool FqSpan::contains(const uint64_t* vec) const {
  int m = ring.m();
  std::vector<u64> w(vec, vec + (size_t)n * m);
  for (size_t r = 0; r < rows.size(); r++) {
    const u64* lead = w.data() + (size_t)pivots[r] * m;
    if (fq_raw_is_zero(ring, lead)) continue;
    u64 f[64];
    std::copy(lead, lead + m, f);
    for (int j = 0; j < n; j++)
      fq_raw_axpy(ring, w.data() + (size_t)j * m, f, rows[r].data() + (size_t)j * m);
  }
  for (size_t i = 0; i < w.size(); i++)
    if (w[i]) return false;
  return true;
}

// --- FqPoly ---

int fqp_deg(const FqPoly& p) { return (int)p.size() - 1; }

void fqp_trim(FqPoly& p) {
  while (!p.empty() && fq_is_zero(p.back())) p.pop_back();
}

FqPoly fqp_one(const Ring& R) { return {fq_one(R)}; }

FqPoly fqp_x(const Ring& R) { return {fq_zero(R), fq_one(R)}; }

FqPoly fqp_add(const FqPoly& a, const FqPoly& b) {
  require(!a.empty() || !b.empty(), "fqp_add needs a ring carrier");
  const Ring& R = a.empty() ? b[0].ring : a[0].ring;
  FqPoly r(std::max(a.size(), b.size()), fq_zero(R));
  for (size_t i = 0; i < r.size(); i++) {
    if (i < a.size()) r[i] = fq_add(r[i], a[i]);
    if (i < b.size()) r[i] = fq_add(r[i], b[i]);
  }
  fqp_trim(r);
  return r;
}

FqPoly fqp_sub(const FqPoly& a, const FqPoly& b) {
  require(!a.empty() || !b.empty(), "fqp_sub needs a ring carrier");
  const Ring& R = a.empty() ? b[0].ring : a[0].ring;
  FqPoly r(std::max(a.size(), b.size()), fq_zero(R));
  for (size_t i = 0; i < r.size(); i++) {
    if (i < a.size()) r[i] = fq_add(r[i], a[i]);
    if (i < b.size()) r[i] = fq_sub(r[i], b[i]);
  }
  fqp_trim(r);
  return r;
}

FqPoly fqp_mul(const FqPoly& a, const FqPoly& b) {
  if (a.empty() || b.empty()) return {};
  const Ring& R = a[0].ring;
  FqPoly r(a.size() + b.size() - 1, fq_zero(R));
  for (size_t i = 0; i < a.size(); i++) {
    if (fq_is_zero(a[i])) continue;
    for (size_t j = 0; j < b.size(); j++) r[i + j] = fq_add(r[i + j], fq_mul(a[i], b[j]));
  }
  fqp_trim(r);
  return r;
}

FqPoly fqp_scal(const FqPoly& a, const FqElem& c) {
  FqPoly r = a;
  for (auto& x : r) x = fq_mul(x, c);
  fqp_trim(r);
  return r;
}

FqPoly fqp_monic(const FqPoly& a) {
  require(!a.empty(), "cannot normalize the zero polynomial");
  return fqp_scal(a, fq_inv(a.back()));
}

std::pair<FqPoly, FqPoly> fqp_divrem(const FqPoly& a, const FqPoly& b) {
  require(!b.empty(), "division by zero polynomial");
  const Ring& R = b[0].ring;
  FqPoly r = a, q;
  if (a.size() < b.size()) return {q, r};
  q.assign(a.size() - b.size() + 1, fq_zero(R));
  FqElem binv = fq_inv(b.back());
  while (r.size() >= b.size() && !r.empty()) {
    FqElem f = fq_mul(r.back(), binv);
    size_t sh = r.size() - b.size();
    if (!fq_is_zero(f)) {
      q[sh] = f;
      for (size_t j = 0; j < b.size(); j++) r[sh + j] = fq_sub(r[sh + j], fq_mul(f, b[j]));
    }
    r.pop_back();
    fqp_trim(r);
  }
  fqp_trim(q);
  return {q, r};
}

FqPoly fqp_gcd(FqPoly a, FqPoly b) {
  fqp_trim(a);
  fqp_trim(b);
  while (!b.empty()) {
    FqPoly r = fqp_divrem(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty()) a = fqp_monic(a);
  return a;
}

FqPoly fqp_powmod(const FqPoly& a, uint64_t e, const FqPoly& f) {
  require(fqp_deg(f) >= 1, "modulus must have positive degree");
  const Ring& R = f[0].ring;
  FqPoly r = fqp_one(R);
  FqPoly base = fqp_divrem(a, f).second;
  while (e) {
    if (e & 1) r = fqp_divrem(fqp_mul(r, base), f).second;
    base = fqp_divrem(fqp_mul(base, base), f).second;
    e >>= 1;
  }
  return r;
}

FqPoly fqp_derivative(const FqPoly& a) {
  if (a.size() <= 1) return {};
  const Ring& R = a[0].ring;
  FqPoly r(a.size() - 1, fq_zero(R));
  for (size_t i = 1; i < a.size(); i++) r[i - 1] = fq_mul(a[i], fq_from_int(R, (long long)i));
  fqp_trim(r);
  return r;
}

bool fqp_eq(const FqPoly& a, const FqPoly& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); i++)
    if (!fq_eq(a[i], b[i])) return false;
  return true;
}

FqPoly fqp_invmod(const FqPoly& a, const FqPoly& f) {
  // iterative extended Euclid: s*a = g mod f
  FqPoly r0 = fqp_divrem(a, f).second, r1 = f;
  require(!f.empty(), "zero modulus");
  const Ring& R = f[0].ring;
  if (r0.empty()) fail(Err::DivisionByZero, "not invertible modulo f");
  FqPoly s0 = fqp_one(R), s1 = {};
  while (!r1.empty()) {
    auto [q, r] = fqp_divrem(r0, r1);
    FqPoly s2 = fqp_sub(s0, fqp_mul(q, s1));
    r0 = std::move(r1);
    r1 = std::move(r);
    s0 = std::move(s1);
    s1 = std::move(s2);
  }
  if (fqp_deg(r0) != 0) fail(Err::DivisionByZero, "not invertible modulo f");
  FqPoly inv = fqp_scal(s0, fq_inv(r0[0]));
  return fqp_divrem(inv, f).second;
}

FqMatrix fqm_eval_poly(const FqPoly& p, const FqMatrix& A) {
  const Ring& R = A.ring;
  int n = A.rows;
  FqMatrix res = fqm_zero(R, n, n);
  for (size_t t = p.size(); t-- > 0;) {
    res = fqm_mul(res, A);
    for (int i = 0; i < n; i++) {
      FqElem d = fq_add(fqm_get(res, i, i), p[t]);
      fqm_set(res, i, i, d);
    }
  }
  return res;
}

FqPoly fqm_charpoly(const FqMatrix& A0) {
  fchkm(A0);
  if (A0.rows != A0.cols) fail(Err::ShapeMismatch, "characteristic polynomial of non-square");
  const Ring& R = A0.ring;
  int n = A0.rows, m = R.m();
  FqMatrix H = A0;
  // similarity reduction to upper Hessenberg
  for (int j = 0; j + 2 < n; j++) {
    int pi = -1;
    for (int i = j + 1; i < n; i++)
      if (!fq_raw_is_zero(R, H.at(i, j))) {
        pi = i;
        break;
      }
    if (pi < 0) continue;
    if (pi != j + 1) {
      std::swap_ranges(H.at(pi, 0), H.at(pi, 0) + (size_t)n * m, H.at(j + 1, 0));
      for (int i = 0; i < n; i++) std::swap_ranges(H.at(i, pi), H.at(i, pi) + m, H.at(i, j + 1));
    }
    FqElem inv = fq_inv(fqm_get(H, j + 1, j));
    for (int i = j + 2; i < n; i++) {
      if (fq_raw_is_zero(R, H.at(i, j))) continue;
      FqElem f = fq_mul(fqm_get(H, i, j), inv);
      u64 buf[64];
      for (int c = 0; c < n; c++) {
        fq_raw_mul(R, f.c.data(), H.at(j + 1, c), buf);
        fq_raw_sub(R, H.at(i, c), buf, H.at(i, c));
      }
      for (int r = 0; r < n; r++) {
        fq_raw_mul(R, f.c.data(), H.at(r, i), buf);
        fq_raw_add(R, H.at(r, j + 1), buf, H.at(r, j + 1));
      }
    }
  }
  // p_k = (x - H[k-1][k-1]) p_{k-1} - sum_i H[i][k-1] (prod subdiag) p_i
  std::vector<FqPoly> p(n + 1);
  p[0] = fqp_one(R);
  for (int k = 1; k <= n; k++) {
    FqPoly t = fqp_mul(p[k - 1], fqp_x(R));
    t = fqp_sub(t, fqp_scal(p[k - 1], fqm_get(H, k - 1, k - 1)));
    FqElem run = fq_one(R);
    for (int i = k - 2; i >= 0; i--) {
      run = fq_mul(run, fqm_get(H, i + 1, i));
      FqElem coef = fq_mul(fqm_get(H, i, k - 1), run);
      t = fqp_sub(t, fqp_scal(p[i], coef));
    }
    p[k] = std::move(t);
  }
  return p[n];
}

namespace {

FqPoly fq_random_poly(const Ring& R, int deg_below, Rng& rng) {
  FqPoly r;
  u64 q = R.q();
  for (int i = 0; i < deg_below; i++) {
    u64 k = rng.below(q);
    FqElem c = fq_zero(R);
    for (int t = 0; t < R.m(); t++) {
      c.c[t] = k % R.ell();
      k /= R.ell();
    }
    r.push_back(c);
  }
  fqp_trim(r);
  return r;
}

void equal_degree_split(const FqPoly& g, int d, Rng& rng, std::vector<FqPoly>& out) {
  if (fqp_deg(g) == d) {
    out.push_back(fqp_monic(g));
    return;
  }
  const Ring& R = g[0].ring;
  u128 qd = 1;
  for (int i = 0; i < d; i++) {
    qd *= R.q();
    if (qd >= ((u128)1 << 63)) fail(Err::Unsupported, "splitting exponent exceeds 2^63");
  }
  u64 E = ((u64)qd - 1) / 2;
  for (int attempt = 0; attempt < 256; attempt++) {
    FqPoly a = fq_random_poly(R, fqp_deg(g), rng);
    if (fqp_deg(a) < 1) continue;
    FqPoly b = fqp_powmod(a, E, g);
    if (b.empty()) continue;
    b = fqp_sub(b, fqp_one(R));
    FqPoly c = fqp_gcd(b, g);
    int dc = fqp_deg(c);
    if (dc <= 0 || dc >= fqp_deg(g)) continue;
    auto [quot, rem] = fqp_divrem(g, c);
    require(rem.empty(), "equal-degree split is not a divisor");
    equal_degree_split(c, d, rng, out);
    equal_degree_split(quot, d, rng, out);
    return;
  }
  fail(Err::Internal, "equal-degree splitting stalled");
}

bool fqp_less(const FqPoly& a, const FqPoly& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  for (size_t i = 0; i < a.size(); i++) {
    if (a[i].c != b[i].c)
      return std::lexicographical_compare(a[i].c.begin(), a[i].c.end(), b[i].c.begin(),
                                          b[i].c.end());
  }
  return false;
}

}  // namespace

std::vector<FqPoly> fqp_factor(const FqPoly& p0, uint64_t seed) {
  require(fqp_deg(p0) >= 1, "factoring a constant");
  const Ring& R = p0[0].ring;
  FqPoly p = fqp_monic(p0);
  require(fqp_deg(fqp_gcd(p, fqp_derivative(p))) == 0, "fqp_factor needs squarefree input");
  Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<FqPoly> out;
  FqPoly f = p;
  FqPoly w = fqp_divrem(fqp_x(R), f).second;
  for (int d = 1; 2 * d <= fqp_deg(f); d++) {
    w = fqp_powmod(w, R.q(), f);
    FqPoly g = fqp_gcd(fqp_sub(w, fqp_x(R)), f);
    if (fqp_deg(g) > 0) {
      equal_degree_split(g, d, rng, out);
      f = fqp_divrem(f, g).first;
      if (fqp_deg(f) == 0) break;
      w = fqp_divrem(w, f).second;
    }
  }
  if (fqp_deg(f) > 0) out.push_back(fqp_monic(f));
  std::sort(out.begin(), out.end(), fqp_less);
  FqPoly prod = fqp_one(R);
  for (const auto& g : out) prod = fqp_mul(prod, g);
  require(fqp_eq(prod, p), "factor product check failed");
  return out;
}

// --- OKPoly ---

int okp_deg(const OKPoly& p) {
  for (size_t i = p.size(); i-- > 0;)
    if (!ok_is_zero(p[i])) return (int)i;
  return -1;
}

void okp_trim(OKPoly& p, int prec) {
  while (!p.empty() && ok_valuation(p.back()) >= prec) p.pop_back();
}

OKPoly okp_add(const OKPoly& a, const OKPoly& b) {
  require(!a.empty() || !b.empty(), "okp_add needs a ring carrier");
  const Ring& R = a.empty() ? b[0].ring : a[0].ring;
  OKPoly r(std::max(a.size(), b.size()), ok_zero(R));
  for (size_t i = 0; i < r.size(); i++) {
    if (i < a.size()) r[i] = ok_add(r[i], a[i]);
    if (i < b.size()) r[i] = ok_add(r[i], b[i]);
  }
  return r;
}

OKPoly okp_sub(const OKPoly& a, const OKPoly& b) {
  require(!a.empty() || !b.empty(), "okp_sub needs a ring carrier");
  const Ring& R = a.empty() ? b[0].ring : a[0].ring;
  OKPoly r(std::max(a.size(), b.size()), ok_zero(R));
  for (size_t i = 0; i < r.size(); i++) {
    if (i < a.size()) r[i] = ok_add(r[i], a[i]);
    if (i < b.size()) r[i] = ok_sub(r[i], b[i]);
  }
  return r;
}

OKPoly okp_mul(const OKPoly& a, const OKPoly& b) {
  if (a.empty() || b.empty()) return {};
  const Ring& R = a[0].ring;
  OKPoly r(a.size() + b.size() - 1, ok_zero(R));
  for (size_t i = 0; i < a.size(); i++) {
    if (ok_is_zero(a[i])) continue;
    for (size_t j = 0; j < b.size(); j++) r[i + j] = ok_add(r[i + j], ok_mul(a[i], b[j]));
  }
  return r;
}

std::pair<OKPoly, OKPoly> okp_divrem(const OKPoly& a, const OKPoly& b) {
  int db = okp_deg(b);
  require(db >= 0, "division by zero polynomial");
  const Ring& R = b[0].ring;
  require(ok_eq(b[db], ok_one(R)), "divisor must be monic");
  OKPoly r = a, q;
  int da = okp_deg(r);
  if (da < db) {
    if ((int)r.size() > db) r.resize((size_t)db, ok_zero(R));  // drop zero tops
    return {q, r};
  }
  q.assign(da - db + 1, ok_zero(R));
  for (int i = da; i >= db; i--) {
    OKElem f = (size_t)i < r.size() ? r[i] : ok_zero(R);
    if (ok_is_zero(f)) continue;
    q[i - db] = f;
    for (int j = 0; j <= db; j++) r[i - db + j] = ok_sub(r[i - db + j], ok_mul(f, b[j]));
  }
  r.resize(db > 0 ? db : 0, ok_zero(R));
  return {q, r};
}

OKPoly okp_mulmod(const OKPoly& a, const OKPoly& b, const OKPoly& f) {
  return okp_divrem(okp_mul(a, b), f).second;
}

OKPoly okp_invmod(const OKPoly& u, const OKPoly& f) {
  require(okp_deg(f) >= 1, "modulus must have positive degree");
  const Ring& R = f[0].ring;
  FqPoly fbar = okp_residue(f);
  FqPoly ubar = okp_residue(okp_divrem(u, f).second);
  if (ubar.empty()) fail(Err::NotInvertible, "zero in the residue algebra");
  FqPoly vbar;
  try {
    vbar = fqp_invmod(ubar, fbar);
  } catch (const Error& e) {
    if (e.code() == Err::DivisionByZero) fail(Err::NotInvertible, "not a unit modulo f");
    throw;
  }
  OKPoly v = okp_lift(R, vbar);
  OKPoly one = {ok_one(R)};
  OKPoly two = {ok_from_int(R, 2)};
  for (int it = 0; it < 64; it++) {
    OKPoly e = okp_sub(okp_mulmod(u, v, f), one);
    bool zero = true;
    for (const auto& c : e)
      if (!ok_is_zero(c)) {
        zero = false;
        break;
      }
    if (zero) return v;
    v = okp_mulmod(v, okp_sub(two, okp_mulmod(u, v, f)), f);
  }
  fail(Err::Internal, "polynomial inverse iteration did not converge");
}

OKPoly okp_derivative(const OKPoly& a) {
  if (a.size() <= 1) return {};
  const Ring& R = a[0].ring;
  OKPoly r(a.size() - 1, ok_zero(R));
  for (size_t i = 1; i < a.size(); i++) r[i - 1] = ok_mul(a[i], ok_from_int(R, (long long)i));
  return r;
}

bool okp_eq(const OKPoly& a, const OKPoly& b, int prec) {
  size_t n = std::max(a.size(), b.size());
  if (n == 0) return true;
  const Ring& R = a.empty() ? b[0].ring : a[0].ring;
  for (size_t i = 0; i < n; i++) {
    OKElem x = i < a.size() ? a[i] : ok_zero(R);
    OKElem y = i < b.size() ? b[i] : ok_zero(R);
    OKElem d = ok_sub(x, y);
    if (ok_valuation(d) < prec) return false;
  }
  return true;
}

FqPoly okp_residue(const OKPoly& a) {
  FqPoly r;
  for (const auto& c : a) r.push_back(ok_residue(c));
  fqp_trim(r);
  return r;
}

OKPoly okp_lift(const Ring& R, const FqPoly& a) {
  OKPoly r;
  for (const auto& c : a) r.push_back(fq_lift(c));
  if (r.empty()) r.push_back(ok_zero(R));
  return r;
}

OKMatrix okp_eval_mat(const OKPoly& p, const OKMatrix& A) {
  const Ring& R = A.ring;
  int n = A.rows;
  OKMatrix res = mat_zero(R, n, n);
  res.prec = A.prec;
  for (size_t t = p.size(); t-- > 0;) {
    res = mat_mul(res, A);
    for (int i = 0; i < n; i++) mat_set(res, i, i, ok_add(mat_get(res, i, i), p[t]));
  }
  return res;
}

namespace {

// coefficientwise reduction mod ell^k; kills stored junk that is known to
// vanish at the current lifting level, keeping degrees tight
void okp_truncate(OKPoly& p, const Ring& R, int k) {
  u64 pk = 1;
  for (int i = 0; i < k && i < R.N(); i++) pk *= R.ell();
  if (k >= R.N()) return;
  for (auto& c : p)
    for (auto& w : c.c) w %= pk;
  while (!p.empty()) {
    bool z = true;
    for (u64 w : p.back().c)
      if (w) {
        z = false;
        break;
      }
    if (!z) break;
    p.pop_back();
  }
}

// one quadratic Hensel step: given f = g*h and s*g + t*h = 1 mod ell^e,
// improve all four to hold mod ell^{2e}; h stays monic of fixed degree
void hensel_step(const OKPoly& f, OKPoly& g, OKPoly& h, OKPoly& s, OKPoly& t) {
  OKPoly e = okp_sub(f, okp_mul(g, h));
  auto [q, r] = okp_divrem(okp_mul(s, e), h);
  OKPoly g1 = okp_add(g, okp_add(okp_mul(t, e), okp_mul(q, g)));
  OKPoly h1 = okp_add(h, r);
  OKPoly one = {ok_one(h[0].ring)};
  OKPoly b = okp_sub(okp_add(okp_mul(s, g1), okp_mul(t, h1)), one);
  auto [c, d] = okp_divrem(okp_mul(s, b), h1);
  OKPoly s1 = okp_sub(s, d);
  OKPoly t1 = okp_sub(t, okp_add(okp_mul(t, b), okp_mul(c, g1)));
  g = std::move(g1);
  h = std::move(h1);
  s = std::move(s1);
  t = std::move(t1);
}

bool okp_is_zero(const OKPoly& p) {
  for (const auto& c : p)
    if (!ok_is_zero(c)) return false;
  return true;
}

void hensel_tree(const OKPoly& p, const std::vector<FqPoly>& fbars, size_t lo, size_t hi,
                 std::vector<OKPoly>& out) {
  const Ring& R = p[0].ring;
  if (hi - lo == 1) {
    out.push_back(p);
    return;
  }
  size_t mid = lo + (hi - lo) / 2;
  FqPoly gbar = fqp_one(R), hbar = fqp_one(R);
  for (size_t i = lo; i < mid; i++) gbar = fqp_mul(gbar, fbars[i]);
  for (size_t i = mid; i < hi; i++) hbar = fqp_mul(hbar, fbars[i]);
  FqPoly sbar = fqp_invmod(gbar, hbar);  // s*g = 1 mod h, deg s < deg h
  FqPoly tbar = fqp_invmod(hbar, gbar);  // t*h = 1 mod g, deg t < deg g
  OKPoly g = okp_lift(R, gbar), h = okp_lift(R, hbar);
  OKPoly s = okp_lift(R, sbar), t = okp_lift(R, tbar);
  int lev = 1;
  for (int it = 0; it < 64; it++) {
    if (okp_is_zero(okp_sub(p, okp_mul(g, h)))) break;
    hensel_step(p, g, h, s, t);
    lev = std::min(2 * lev, R.N());
    okp_truncate(g, R, lev);
    okp_truncate(h, R, lev);
    okp_truncate(s, R, lev);
    okp_truncate(t, R, lev);
  }
  require(okp_is_zero(okp_sub(p, okp_mul(g, h))), "factor lift did not converge");
  hensel_tree(g, fbars, lo, mid, out);
  hensel_tree(h, fbars, mid, hi, out);
}

}  // namespace

std::vector<OKPoly> poly_factor_squarefree_local(const OKPoly& p, uint64_t seed) {
  int d = okp_deg(p);
  require(d >= 1, "factoring a constant");
  const Ring& R = p[0].ring;
  require(ok_eq(p[d], ok_one(R)), "input must be monic");
  FqPoly pbar = okp_residue(p);
  require(fqp_deg(pbar) == d, "monic reduction lost degree");
  if (fqp_deg(fqp_gcd(pbar, fqp_derivative(pbar))) != 0)
    fail(Err::NotSquarefreeModEll, "reduction mod ell is not squarefree");
  std::vector<FqPoly> fbars = fqp_factor(pbar, seed);
  std::vector<OKPoly> out;
  hensel_tree(p, fbars, 0, fbars.size(), out);
  OKPoly prod = {ok_one(R)};
  for (const auto& g : out) prod = okp_mul(prod, g);
  require(okp_eq(prod, p, R.N()), "lifted factor product mismatch");
  for (size_t i = 0; i < out.size(); i++)
    require(fqp_eq(okp_residue(out[i]), fbars[i]), "lifted factor residue mismatch");
  return out;
}

}  // namespace symplift
