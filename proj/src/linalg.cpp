#include "symplift/linalg.hpp"

#include <algorithm>
#include <climits>

namespace symplift {

namespace {

using u64 = uint64_t;
using u128 = unsigned __int128;

void chkm(const OKMatrix& A) {
  if (!A.ring || A.prec < 1 || (size_t)A.rows * A.cols * A.ring.m() != A.a.size())
    fail(Err::ShapeMismatch, "malformed matrix");
}
void chk_ring(const OKMatrix& A, const OKMatrix& B) {
  if (!A.ring.same(B.ring)) fail(Err::RingMismatch, "matrices over different rings");
}

u64 ell_pow(const Ring& R, int e) {
  u64 r = 1;
  for (int i = 0; i < e; i++) r *= R.ell();  // e <= N so this fits
  return r;
}

// valuation clipped to certified precision: >= prec counts as zero
int eff_val(const Ring& R, const u64* x, int prec) {
  int v = raw_val(R, x);
  return v >= prec ? kValInf : v;
}

void raw_zero(const Ring& R, u64* x) { std::fill(x, x + R.m(), 0); }

// out = x / ell^e coefficientwise; caller guarantees divisibility
void raw_div_pow(const Ring& R, const u64* x, int e, u64* out) {
  u64 pe = ell_pow(R, e);
  for (int i = 0; i < R.m(); i++) {
    require(x[i] % pe == 0, "exact division is not exact");
    out[i] = x[i] / pe;
  }
}

void raw_mul_pow(const Ring& R, const u64* x, int e, u64* out) {
  u64 pe = ell_pow(R, e) % R.mod();
  u64 buf[64];
  std::fill(buf, buf + R.m(), 0);
  buf[0] = pe;
  u64 tmp[64];
  raw_mul(R, x, buf, tmp);
  std::copy(tmp, tmp + R.m(), out);
}

bool raw_eq_mod(const Ring& R, const u64* x, const u64* y, u64 pk) {
  for (int i = 0; i < R.m(); i++)
    if (x[i] % pk != y[i] % pk) return false;
  return true;
}

void swap_rows(OKMatrix& A, int r1, int r2) {
  if (r1 == r2) return;
  std::swap_ranges(A.at(r1, 0), A.at(r1, 0) + (size_t)A.cols * A.ring.m(), A.at(r2, 0));
}

void swap_cols(OKMatrix& A, int c1, int c2) {
  if (c1 == c2) return;
  int m = A.ring.m();
  for (int i = 0; i < A.rows; i++) std::swap_ranges(A.at(i, c1), A.at(i, c1) + m, A.at(i, c2));
}

// row_i -= f * row_t, columns [c0, cols)
void row_axpy(OKMatrix& A, int i, int t, const u64* f, int c0) {
  u64 buf[64];
  for (int j = c0; j < A.cols; j++) {
    raw_mul(A.ring, f, A.at(t, j), buf);
    raw_sub(A.ring, A.at(i, j), buf, A.at(i, j));
  }
}

// col_j -= f * col_t
void col_axpy(OKMatrix& A, int j, int t, const u64* f) {
  u64 buf[64];
  for (int i = 0; i < A.rows; i++) {
    raw_mul(A.ring, f, A.at(i, t), buf);
    raw_sub(A.ring, A.at(i, j), buf, A.at(i, j));
  }
}

void col_scale(OKMatrix& A, int j, const u64* c) {
  u64 buf[64];
  for (int i = 0; i < A.rows; i++) {
    raw_mul(A.ring, A.at(i, j), c, buf);
    std::copy(buf, buf + A.ring.m(), A.at(i, j));
  }
}

// inverse of the unit part of p (valuation v); scratch-free convenience
OKElem unit_part_inv(const Ring& R, const u64* p, int v) {
  OKElem u = ok_zero(R);
  raw_div_pow(R, p, v, u.c.data());
  return ok_inv(u);
}

}  // namespace

// Two-sided diagonalization over O_K with global min-valuation pivoting.
// Every division is by a pivot, exact, and charged against the certified
// precision once per pivot.
DiagResult diag_reduce(const OKMatrix& A0) {
  chkm(A0);
  const Ring R = A0.ring;
  int n = A0.rows, k = A0.cols;
  DiagResult res;
  res.D = A0;
  res.U = mat_id(R, n);
  res.V = mat_id(R, k);
  res.U.prec = res.V.prec = A0.prec;
  int prec = A0.prec;
  OKMatrix& D = res.D;
  u64 fbuf[64];
  int t = 0;
  for (; t < std::min(n, k); t++) {
    int bi = -1, bj = -1, bv = INT_MAX;
    for (int i = t; i < n && bv > 0; i++)
      for (int j = t; j < k; j++) {
        int v = eff_val(R, D.at(i, j), prec);
        if (v < bv) {
          bv = v;
          bi = i;
          bj = j;
          if (bv == 0) break;
        }
      }
    if (bv == INT_MAX) break;  // remaining block is zero at certified precision
    swap_rows(D, bi, t);
    swap_rows(res.U, bi, t);
    swap_cols(D, bj, t);
    swap_cols(res.V, bj, t);
    OKElem ui = unit_part_inv(R, D.at(t, t), bv);
    // clear the rest of row t with column ops, then column t with row ops
    for (int j = t + 1; j < k; j++) {
      if (eff_val(R, D.at(t, j), prec) == kValInf) {
        raw_zero(R, D.at(t, j));
        continue;
      }
      raw_div_pow(R, D.at(t, j), bv, fbuf);
      u64 f[64];
      raw_mul(R, fbuf, ui.c.data(), f);
      col_axpy(D, j, t, f);
      col_axpy(res.V, j, t, f);
    }
    for (int i = t + 1; i < n; i++) {
      if (eff_val(R, D.at(i, t), prec) == kValInf) {
        raw_zero(R, D.at(i, t));
        continue;
      }
      raw_div_pow(R, D.at(i, t), bv, fbuf);
      u64 f[64];
      raw_mul(R, fbuf, ui.c.data(), f);
      row_axpy(D, i, t, f, t);
      row_axpy(res.U, i, t, f, 0);
    }
    res.pvals.push_back(bv);
    if (bv > 0) {
      prec -= bv;
      if (prec < 1) fail(Err::PrecisionExhausted, "pivot valuations exhausted certified digits");
    }
  }
  res.rank = t;
  res.prec = prec;
  res.D.prec = res.U.prec = res.V.prec = prec;
  return res;
}

// --- OKMatrix basics ---

OKMatrix mat_zero(const Ring& R, int rows, int cols) {
  OKMatrix A;
  A.ring = R;
  A.rows = rows;
  A.cols = cols;
  A.prec = R.N();
  A.a.assign((size_t)rows * cols * R.m(), 0);
  return A;
}

OKMatrix mat_id(const Ring& R, int n) {
  OKMatrix A = mat_zero(R, n, n);
  for (int i = 0; i < n; i++) A.at(i, i)[0] = 1;
  return A;
}

OKElem mat_get(const OKMatrix& A, int i, int j) {
  OKElem x = ok_zero(A.ring);
  std::copy(A.at(i, j), A.at(i, j) + A.ring.m(), x.c.begin());
  return x;
}

void mat_set(OKMatrix& A, int i, int j, const OKElem& x) {
  require(x.ring.same(A.ring), "mat_set ring mismatch");
  std::copy(x.c.begin(), x.c.end(), A.at(i, j));
}

OKMatrix mat_add(const OKMatrix& A, const OKMatrix& B) {
  chkm(A);
  chkm(B);
  chk_ring(A, B);
  if (A.rows != B.rows || A.cols != B.cols) fail(Err::ShapeMismatch, "add shapes differ");
  OKMatrix C = mat_zero(A.ring, A.rows, A.cols);
  C.prec = std::min(A.prec, B.prec);
  u64 mod = A.ring.mod();
  for (size_t i = 0; i < A.a.size(); i++) {
    u64 s = A.a[i] + B.a[i];
    C.a[i] = s >= mod ? s - mod : s;
  }
  return C;
}

OKMatrix mat_sub(const OKMatrix& A, const OKMatrix& B) {
  chkm(A);
  chkm(B);
  chk_ring(A, B);
  if (A.rows != B.rows || A.cols != B.cols) fail(Err::ShapeMismatch, "sub shapes differ");
  OKMatrix C = mat_zero(A.ring, A.rows, A.cols);
  C.prec = std::min(A.prec, B.prec);
  u64 mod = A.ring.mod();
  for (size_t i = 0; i < A.a.size(); i++)
    C.a[i] = A.a[i] >= B.a[i] ? A.a[i] - B.a[i] : A.a[i] + (mod - B.a[i]);
  return C;
}

OKMatrix mat_neg(const OKMatrix& A) {
  chkm(A);
  OKMatrix C = A;
  u64 mod = A.ring.mod();
  for (auto& x : C.a) x = x ? mod - x : 0;
  return C;
}

OKMatrix mat_mul(const OKMatrix& A, const OKMatrix& B) {
  chkm(A);
  chkm(B);
  chk_ring(A, B);
  if (A.cols != B.rows) fail(Err::ShapeMismatch, "mul shapes incompatible");
  const Ring& R = A.ring;
  OKMatrix C = mat_zero(R, A.rows, B.cols);
  C.prec = std::min(A.prec, B.prec);
  int width = 2 * R.m() - 1;
  std::vector<u128> acc(width);
  u64 interval = raw_fold_interval(R);
  for (int i = 0; i < A.rows; i++)
    for (int j = 0; j < B.cols; j++) {
      std::fill(acc.begin(), acc.end(), (u128)0);
      u64 cnt = 0;
      for (int k = 0; k < A.cols; k++) {
        raw_conv_mac(R, A.at(i, k), B.at(k, j), acc.data());
        if (++cnt == interval) {
          raw_conv_fold(R, acc.data());
          cnt = 0;
        }
      }
      raw_conv_finish(R, acc.data(), C.at(i, j));
    }
  return C;
}

OKMatrix mat_scal(const OKMatrix& A, const OKElem& x) {
  chkm(A);
  require(x.ring.same(A.ring), "scalar from another ring");
  OKMatrix C = A;
  u64 buf[64];
  for (int i = 0; i < A.rows; i++)
    for (int j = 0; j < A.cols; j++) {
      raw_mul(A.ring, A.at(i, j), x.c.data(), buf);
      std::copy(buf, buf + A.ring.m(), C.at(i, j));
    }
  return C;
}

OKMatrix mat_transpose(const OKMatrix& A) {
  chkm(A);
  OKMatrix C = mat_zero(A.ring, A.cols, A.rows);
  C.prec = A.prec;
  int m = A.ring.m();
  for (int i = 0; i < A.rows; i++)
    for (int j = 0; j < A.cols; j++) std::copy(A.at(i, j), A.at(i, j) + m, C.at(j, i));
  return C;
}

bool mat_eq(const OKMatrix& A, const OKMatrix& B) {
  chkm(A);
  chkm(B);
  chk_ring(A, B);
  if (A.rows != B.rows || A.cols != B.cols) return false;
  u64 pk = ell_pow(A.ring, std::min(A.prec, B.prec));
  for (int i = 0; i < A.rows; i++)
    for (int j = 0; j < A.cols; j++)
      if (!raw_eq_mod(A.ring, A.at(i, j), B.at(i, j), pk)) return false;
  return true;
}

bool mat_is_zero(const OKMatrix& A) {
  chkm(A);
  u64 pk = ell_pow(A.ring, A.prec);
  for (u64 x : A.a)
    if (x % pk) return false;
  return true;
}

bool mat_is_identity(const OKMatrix& A) {
  chkm(A);
  if (A.rows != A.cols) return false;
  return mat_eq(A, mat_id(A.ring, A.rows));
}

int mat_min_val(const OKMatrix& A) {
  chkm(A);
  int best = kValInf;
  for (int i = 0; i < A.rows; i++)
    for (int j = 0; j < A.cols; j++) {
      best = std::min(best, eff_val(A.ring, A.at(i, j), A.prec));
      if (best == 0) return 0;
    }
  return best;
}

OKMatrix mat_div_pow_ell(const OKMatrix& A, int s) {
  chkm(A);
  if (s == 0) return A;
  require(s > 0, "division exponent must be nonnegative");
  if (A.prec - s < 1) fail(Err::PrecisionExhausted, "dividing by ell^s leaves no certified digits");
  OKMatrix C = A;
  C.prec = A.prec - s;
  for (int i = 0; i < A.rows; i++)
    for (int j = 0; j < A.cols; j++) {
      if (eff_val(A.ring, A.at(i, j), A.prec) == kValInf) {
        raw_zero(A.ring, C.at(i, j));
        continue;
      }
      require(raw_val(A.ring, A.at(i, j)) >= s, "entry not divisible in mat_div_pow_ell");
      raw_div_pow(A.ring, A.at(i, j), s, C.at(i, j));
    }
  return C;
}

OKMatrix mat_mul_pow_ell(const OKMatrix& A, int s) {
  chkm(A);
  if (s == 0) return A;
  require(s > 0, "multiplication exponent must be nonnegative");
  OKMatrix C = A;
  C.prec = std::min(A.ring.N(), A.prec + s);
  for (int i = 0; i < A.rows; i++)
    for (int j = 0; j < A.cols; j++) raw_mul_pow(A.ring, A.at(i, j), s, C.at(i, j));
  return C;
}

OKElem mat_det(const OKMatrix& A, int* det_prec) {
  chkm(A);
  if (A.rows != A.cols) fail(Err::ShapeMismatch, "determinant of non-square matrix");
  const Ring R = A.ring;
  int n = A.rows;
  OKMatrix W = A;
  int prec = A.prec;
  bool neg = false;
  u64 fbuf[64];
  for (int t = 0; t < n; t++) {
    int bi = -1, bv = INT_MAX;
    for (int i = t; i < n; i++) {
      int v = eff_val(R, W.at(i, t), prec);
      if (v < bv) {
        bv = v;
        bi = i;
        if (bv == 0) break;
      }
    }
    if (bv == INT_MAX) {
      if (det_prec) *det_prec = prec;
      return ok_zero(R);  // a full column vanishes at certified precision
    }
    if (bi != t) {
      swap_rows(W, bi, t);
      neg = !neg;
    }
    OKElem ui = unit_part_inv(R, W.at(t, t), bv);
    for (int i = t + 1; i < n; i++) {
      if (eff_val(R, W.at(i, t), prec) == kValInf) {
        raw_zero(R, W.at(i, t));
        continue;
      }
      raw_div_pow(R, W.at(i, t), bv, fbuf);
      u64 f[64];
      raw_mul(R, fbuf, ui.c.data(), f);
      row_axpy(W, i, t, f, t);
    }
    if (bv > 0) {
      prec -= bv;
      if (prec < 1) fail(Err::PrecisionExhausted, "determinant pivots exhausted precision");
    }
  }
  OKElem d = ok_one(R);
  for (int t = 0; t < n; t++) d = ok_mul(d, mat_get(W, t, t));
  if (neg) d = ok_neg(d);
  if (det_prec) *det_prec = prec;
  return d;
}

OKMatrix mat_inv(const OKMatrix& A) {
  chkm(A);
  if (A.rows != A.cols) fail(Err::ShapeMismatch, "inverse of non-square matrix");
  const Ring R = A.ring;
  int n = A.rows;
  OKMatrix W = A, E = mat_id(R, n);
  E.prec = A.prec;
  for (int t = 0; t < n; t++) {
    int bi = -1;
    for (int i = t; i < n; i++)
      if (eff_val(R, W.at(i, t), W.prec) == 0) {
        bi = i;
        break;
      }
    if (bi < 0) fail(Err::NotInvertible, "determinant is not a unit");
    swap_rows(W, bi, t);
    swap_rows(E, bi, t);
    OKElem ui = unit_part_inv(R, W.at(t, t), 0);
    u64 buf[64];
    for (int j = 0; j < n; j++) {
      raw_mul(R, W.at(t, j), ui.c.data(), buf);
      std::copy(buf, buf + R.m(), W.at(t, j));
      raw_mul(R, E.at(t, j), ui.c.data(), buf);
      std::copy(buf, buf + R.m(), E.at(t, j));
    }
    for (int i = 0; i < n; i++) {
      if (i == t || raw_is_zero(R, W.at(i, t))) continue;
      u64 f[64];
      std::copy(W.at(i, t), W.at(i, t) + R.m(), f);
      row_axpy(W, i, t, f, t);
      row_axpy(E, i, t, f, 0);
    }
  }
  require(mat_eq(mat_mul(A, E), mat_id(R, n)), "inverse verification failed");
  return E;
}

bool mat_unit_det(const OKMatrix& A) {
  chkm(A);
  if (A.rows != A.cols) fail(Err::ShapeMismatch, "unit-determinant test on non-square matrix");
  return fqm_rank(fqm_from_okmat(A)) == A.rows;
}

OKMatrix mat_hconcat(const OKMatrix& A, const OKMatrix& B) {
  chkm(A);
  chkm(B);
  chk_ring(A, B);
  if (A.rows != B.rows) fail(Err::ShapeMismatch, "hconcat row counts differ");
  OKMatrix C = mat_zero(A.ring, A.rows, A.cols + B.cols);
  C.prec = std::min(A.prec, B.prec);
  int m = A.ring.m();
  for (int i = 0; i < A.rows; i++) {
    std::copy(A.at(i, 0), A.at(i, 0) + (size_t)A.cols * m, C.at(i, 0));
    std::copy(B.at(i, 0), B.at(i, 0) + (size_t)B.cols * m, C.at(i, A.cols));
  }
  return C;
}

OKMatrix mat_cols(const OKMatrix& A, const std::vector<int>& idx) {
  chkm(A);
  OKMatrix C = mat_zero(A.ring, A.rows, (int)idx.size());
  C.prec = A.prec;
  int m = A.ring.m();
  for (int i = 0; i < A.rows; i++)
    for (size_t j = 0; j < idx.size(); j++)
      std::copy(A.at(i, idx[j]), A.at(i, idx[j]) + m, C.at(i, (int)j));
  return C;
}

OKMatrix mat_block_diag(const OKMatrix& A, const OKMatrix& B) {
  chkm(A);
  chkm(B);
  chk_ring(A, B);
  OKMatrix C = mat_zero(A.ring, A.rows + B.rows, A.cols + B.cols);
  C.prec = std::min(A.prec, B.prec);
  int m = A.ring.m();
  for (int i = 0; i < A.rows; i++) std::copy(A.at(i, 0), A.at(i, 0) + (size_t)A.cols * m, C.at(i, 0));
  for (int i = 0; i < B.rows; i++)
    std::copy(B.at(i, 0), B.at(i, 0) + (size_t)B.cols * m, C.at(A.rows + i, A.cols));
  return C;
}

// --- KMatrix ---

KMatrix kmat(const OKMatrix& A) { return kmat_normalize(KMatrix{A, 0}); }

KMatrix kmat_id(const Ring& R, int n) { return KMatrix{mat_id(R, n), 0}; }

KMatrix kmat_normalize(KMatrix A) {
  chkm(A.M);
  int v = mat_min_val(A.M);
  if (v == kValInf) {
    // canonical zero
    OKMatrix Z = mat_zero(A.M.ring, A.M.rows, A.M.cols);
    Z.prec = A.M.prec;
    return KMatrix{Z, 0};
  }
  if (v == 0) return A;
  A.M = mat_div_pow_ell(A.M, v);
  A.shift += v;
  return A;
}

KMatrix kmat_add(const KMatrix& A, const KMatrix& B) {
  int s = std::min(A.shift, B.shift);
  OKMatrix MA = mat_mul_pow_ell(A.M, A.shift - s);
  OKMatrix MB = mat_mul_pow_ell(B.M, B.shift - s);
  return kmat_normalize(KMatrix{mat_add(MA, MB), s});
}

KMatrix kmat_sub(const KMatrix& A, const KMatrix& B) { return kmat_add(A, kmat_neg(B)); }

KMatrix kmat_neg(const KMatrix& A) { return KMatrix{mat_neg(A.M), A.shift}; }

KMatrix kmat_mul(const KMatrix& A, const KMatrix& B) {
  return kmat_normalize(KMatrix{mat_mul(A.M, B.M), A.shift + B.shift});
}

KMatrix kmat_scal(const KMatrix& A, const OKElem& x) {
  return kmat_normalize(KMatrix{mat_scal(A.M, x), A.shift});
}

KMatrix kmat_transpose(const KMatrix& A) { return KMatrix{mat_transpose(A.M), A.shift}; }

KMatrix kmat_mul_pow_ell(const KMatrix& A, int s) { return KMatrix{A.M, A.shift + s}; }

bool kmat_eq(const KMatrix& A, const KMatrix& B) { return kmat_is_zero(kmat_sub(A, B)); }

bool kmat_is_zero(const KMatrix& A) { return mat_is_zero(A.M); }

bool kmat_is_integral(const KMatrix& A) { return kmat_is_zero(A) || A.shift >= 0; }

OKMatrix kmat_to_integral(const KMatrix& A) {
  if (!kmat_is_integral(A)) fail(Err::NotIntegral, "matrix has a denominator");
  if (kmat_is_zero(A)) {
    OKMatrix Z = mat_zero(A.M.ring, A.M.rows, A.M.cols);
    Z.prec = A.M.prec;
    return Z;
  }
  return mat_mul_pow_ell(A.M, A.shift);
}

KMatrix kmat_inv(const KMatrix& A) {
  chkm(A.M);
  if (A.M.rows != A.M.cols) fail(Err::ShapeMismatch, "inverse of non-square matrix");
  const Ring R = A.M.ring;
  int n = A.M.rows;
  DiagResult d = diag_reduce(A.M);
  if (d.rank < n) fail(Err::NotInvertible, "singular at certified precision");
  int vmax = *std::max_element(d.pvals.begin(), d.pvals.end());
  // verifying inv * A = I needs the product certified past the ell^0 digit
  if (d.prec - vmax < 1)
    fail(Err::PrecisionExhausted, "inverse needs more certified digits than the input carries");
  // inv = V * D^{-1} * U with D^{-1} = ell^{-vmax} * diag(ell^{vmax-v} / unit)
  OKMatrix mid = mat_zero(R, n, n);
  mid.prec = d.prec;
  for (int t = 0; t < n; t++) {
    OKElem ui = unit_part_inv(R, d.D.at(t, t), d.pvals[t]);
    OKElem x = ok_mul(ui, ok_from_int(R, 1));
    for (int e = 0; e < vmax - d.pvals[t]; e++) x = ok_mul(x, ok_from_int(R, (long long)R.ell()));
    mat_set(mid, t, t, x);
  }
  KMatrix inv = kmat_normalize(
      KMatrix{mat_mul(mat_mul(d.V, mid), d.U), -vmax - A.shift});
  require(kmat_eq(kmat_mul(inv, A), kmat_id(R, n)), "K-inverse verification failed");
  return inv;
}

// --- kernels, hermite, lattices ---

OKMatrix kernel_saturated(const OKMatrix& A) {
  chkm(A);
  DiagResult d = diag_reduce(A);
  std::vector<int> idx;
  for (int j = d.rank; j < A.cols; j++) idx.push_back(j);
  OKMatrix K = mat_cols(d.V, idx);
  K.prec = d.prec;
  if (K.cols > 0) {
    OKMatrix chk = mat_mul(A, K);
    chk.prec = d.prec;
    require(mat_is_zero(chk), "kernel verification failed");
  }
  return K;
}

OKMatrix hermite_columns(const OKMatrix& A0) {
  chkm(A0);
  const Ring R = A0.ring;
  OKMatrix A = A0;
  int n = A.rows, k = A.cols;
  int prec = A.prec;
  int done = 0;
  std::vector<int> prow, pval;  // pivot row / exponent per fixed column
  u64 fbuf[64];
  for (int i = 0; i < n && done < k; i++) {
    int bj = -1, bv = INT_MAX;
    for (int j = done; j < k; j++) {
      int v = eff_val(R, A.at(i, j), prec);
      if (v < bv) {
        bv = v;
        bj = j;
        if (bv == 0) break;
      }
    }
    if (bv == INT_MAX) {
      for (int j = done; j < k; j++) raw_zero(R, A.at(i, j));  // certified zero row
      continue;
    }
    swap_cols(A, bj, done);
    OKElem ui = unit_part_inv(R, A.at(i, done), bv);
    col_scale(A, done, ui.c.data());  // pivot becomes exactly ell^bv
    for (int j = done + 1; j < k; j++) {
      if (eff_val(R, A.at(i, j), prec) == kValInf) {
        raw_zero(R, A.at(i, j));
        continue;
      }
      raw_div_pow(R, A.at(i, j), bv, fbuf);
      col_axpy(A, j, done, fbuf);
    }
    prow.push_back(i);
    pval.push_back(bv);
    if (bv > 0) {
      prec -= bv;
      if (prec < 1) fail(Err::PrecisionExhausted, "hermite pivots exhausted certified digits");
    }
    done++;
  }
  // canonical reduction: entries of earlier columns at pivot rows, ascending
  for (int t = 0; t < done; t++) {
    u64 pe = ell_pow(R, pval[t]);
    if (pe == 1) {
      for (int s = 0; s < t; s++) {
        if (raw_is_zero(R, A.at(prow[t], s))) continue;
        u64 f[64];
        std::copy(A.at(prow[t], s), A.at(prow[t], s) + R.m(), f);
        col_axpy(A, s, t, f);
      }
      continue;
    }
    for (int s = 0; s < t; s++) {
      const u64* x = A.at(prow[t], s);
      u64 f[64];
      bool any = false;
      for (int c = 0; c < R.m(); c++) {
        f[c] = x[c] / pe;  // quotient of the canonical remainder split
        if (f[c]) any = true;
      }
      if (!any) continue;
      col_axpy(A, s, t, f);
    }
  }
  OKMatrix B = mat_zero(R, n, done);
  B.prec = prec;
  for (int i = 0; i < n; i++)
    for (int j = 0; j < done; j++) std::copy(A.at(i, j), A.at(i, j) + R.m(), B.at(i, j));
  return B;
}

Lattice lattice_sum(const std::vector<KMatrix>& mats) {
  require(!mats.empty(), "lattice_sum needs at least one matrix");
  int s = mats[0].shift;
  for (const auto& M : mats) s = std::min(s, M.shift);
  OKMatrix cat = mat_mul_pow_ell(mats[0].M, mats[0].shift - s);
  for (size_t i = 1; i < mats.size(); i++)
    cat = mat_hconcat(cat, mat_mul_pow_ell(mats[i].M, mats[i].shift - s));
  OKMatrix H = hermite_columns(cat);
  if (H.cols != H.rows) {
    if (H.prec < cat.prec)
      fail(Err::PrecisionExhausted, "stable lattice needs more certified digits than the input carries");
    fail(Err::NotInvertible, "lattice basis is not full rank");
  }
  // a lattice is an exact object: adopt the computed residues as its basis.
  // Deep perturbations of a stable lattice are equally stable; integrality of
  // everything rebased onto it stays explicitly checked downstream.
  H.prec = H.ring.N();
  return Lattice{kmat_normalize(KMatrix{H, s})};
}

bool lattice_eq(const Lattice& A, const Lattice& B) {
  KMatrix ia = kmat_inv(A.basis), ib = kmat_inv(B.basis);
  return kmat_is_integral(kmat_mul(ia, B.basis)) && kmat_is_integral(kmat_mul(ib, A.basis));
}

// --- invariant forms ---

std::vector<OKMatrix> invariant_forms(const std::vector<KMatrix>& gens, Parity parity) {
  require(!gens.empty(), "invariant_forms needs at least one generator");
  const Ring R = gens[0].M.ring;
  int n = gens[0].M.rows;
  for (const auto& g : gens)
    if (g.M.rows != n || g.M.cols != n) fail(Err::ShapeMismatch, "generators must be square");
  int nn = n * n;
  int prec = R.N();
  for (const auto& g : gens) prec = std::min(prec, g.M.prec);
  int parity_rows = n * (n - 1) / 2 + (parity == Parity::Alternating ? n : 0);
  OKMatrix sys = mat_zero(R, (int)gens.size() * nn + parity_rows, nn);
  sys.prec = prec;
  u64 buf[64];
  for (size_t g = 0; g < gens.size(); g++) {
    const OKMatrix& M = gens[g].M;
    int s = gens[g].shift;
    // ell^{2s} M^T F M - F = 0; scale the whole equation integral
    int qscale = s >= 0 ? 2 * s : 0;   // on the quadratic part
    int iscale = s >= 0 ? 0 : -2 * s;  // on the identity part
    for (int a = 0; a < n; a++)
      for (int b = 0; b < n; b++) {
        int row = (int)g * nn + a * n + b;
        for (int i = 0; i < n; i++)
          for (int j = 0; j < n; j++) {
            raw_mul(R, M.at(i, a), M.at(j, b), buf);
            if (qscale) raw_mul_pow(R, buf, qscale, buf);
            if (i == a && j == b) {
              u64 one[64];
              std::fill(one, one + R.m(), 0);
              one[0] = 1;
              if (iscale) raw_mul_pow(R, one, iscale, one);
              raw_sub(R, buf, one, buf);
            }
            std::copy(buf, buf + R.m(), sys.at(row, i * n + j));
          }
      }
  }
  int row = (int)gens.size() * nn;
  for (int a = 0; a < n; a++)
    for (int b = a + 1; b < n; b++) {
      sys.at(row, a * n + b)[0] = 1;
      sys.at(row, b * n + a)[0] = parity == Parity::Alternating ? 1 : R.mod() - 1;
      row++;
    }
  if (parity == Parity::Alternating)
    for (int a = 0; a < n; a++) {
      sys.at(row, a * n + a)[0] = 1;
      row++;
    }
  OKMatrix K = kernel_saturated(sys);
  std::vector<OKMatrix> out;
  for (int c = 0; c < K.cols; c++) {
    OKMatrix F = mat_zero(R, n, n);
    F.prec = K.prec;
    for (int i = 0; i < n; i++)
      for (int j = 0; j < n; j++)
        std::copy(K.at(i * n + j, c), K.at(i * n + j, c) + R.m(), F.at(i, j));
    require(mat_min_val(F) == 0, "kernel vector lost unit content");
    KMatrix KF{F, 0};
    for (const auto& g : gens) {
      KMatrix lhs = kmat_mul(kmat_mul(kmat_transpose(g), KF), g);
      require(kmat_eq(lhs, KF), "invariant form verification failed");
    }
    out.push_back(F);
  }
  return out;
}

std::pair<int, OKMatrix> form_normalize(const BilinearForm& F, const Lattice& T) {
  KMatrix G = kmat_mul(kmat_mul(kmat_transpose(T.basis), F.gram), T.basis);
  G = kmat_normalize(G);
  if (kmat_is_zero(G)) fail(Err::Internal, "form vanishes on the lattice");
  int i = -G.shift;
  OKMatrix M = G.M;
  if (!mat_unit_det(M)) fail(Err::DegenerateAfterScaling, "rescaled Gram has non-unit determinant");
  return {i, M};
}

OKMatrix jstd(const Ring& R, int n) {
  if (n % 2) fail(Err::OddDimension, "standard alternating form needs even dimension");
  OKMatrix J = mat_zero(R, n, n);
  for (int b = 0; b < n / 2; b++) {
    J.at(2 * b, 2 * b + 1)[0] = 1;
    J.at(2 * b + 1, 2 * b)[0] = R.mod() - 1;
  }
  return J;
}

OKMatrix symplectic_basis(const OKMatrix& J) {
  chkm(J);
  const Ring R = J.ring;
  int n = J.rows;
  if (J.cols != n) fail(Err::ShapeMismatch, "Gram matrix must be square");
  if (n % 2) fail(Err::OddDimension, "alternating perfect form needs even dimension");
  if (!mat_eq(J, mat_neg(mat_transpose(J)))) fail(Err::NotPerfect, "form is not alternating");
  for (int i = 0; i < n; i++)
    if (eff_val(R, J.at(i, i), J.prec) != kValInf)
      fail(Err::NotPerfect, "alternating form with nonzero diagonal");
  if (!mat_unit_det(J)) fail(Err::NotPerfect, "Gram determinant is not a unit");

  OKMatrix B = mat_id(R, n);
  B.prec = J.prec;
  OKMatrix P = J;  // pairing matrix of current basis columns
  for (int i = 0; i < n; i++) raw_zero(R, P.at(i, i));  // certified zero, keep it exact
  std::vector<int> active(n);
  for (int i = 0; i < n; i++) active[i] = i;
  std::vector<int> order;
  u64 buf[64];
  while (!active.empty()) {
    int x = active[0];
    int ypos = -1;
    for (size_t t = 1; t < active.size(); t++)
      if (eff_val(R, P.at(x, active[t]), P.prec) == 0) {
        ypos = (int)t;
        break;
      }
    if (ypos < 0) fail(Err::NotPerfect, "no unit pairing available");
    int y = active[ypos];
    OKElem c = ok_inv(mat_get(P, x, y));
    col_scale(B, y, c.c.data());
    // P[*,y] *= c and P[y,*] *= c
    for (int v = 0; v < n; v++) {
      raw_mul(R, P.at(v, y), c.c.data(), buf);
      std::copy(buf, buf + R.m(), P.at(v, y));
      raw_mul(R, P.at(y, v), c.c.data(), buf);
      std::copy(buf, buf + R.m(), P.at(y, v));
    }
    for (int t = 1; t < (int)active.size(); t++) {
      int u = active[t];
      if (u == y) continue;
      OKElem al = mat_get(P, x, u), be = mat_get(P, y, u);
      // u' = u - al*y + be*x
      for (int v = 0; v < n; v++) {
        raw_mul(R, B.at(v, y), al.c.data(), buf);
        raw_sub(R, B.at(v, u), buf, B.at(v, u));
        raw_mul(R, B.at(v, x), be.c.data(), buf);
        raw_add(R, B.at(v, u), buf, B.at(v, u));
      }
      for (int v = 0; v < n; v++) {
        raw_mul(R, P.at(v, y), al.c.data(), buf);
        raw_sub(R, P.at(v, u), buf, P.at(v, u));
        raw_mul(R, P.at(v, x), be.c.data(), buf);
        raw_add(R, P.at(v, u), buf, P.at(v, u));
      }
      for (int v = 0; v < n; v++) {
        raw_neg(R, P.at(v, u), buf);
        std::copy(buf, buf + R.m(), P.at(u, v));
      }
      raw_zero(R, P.at(u, u));  // e(u', u') = 0 exactly
    }
    order.push_back(x);
    order.push_back(y);
    std::vector<int> next;
    for (int t = 1; t < (int)active.size(); t++)
      if (active[t] != y) next.push_back(active[t]);
    active = next;
  }
  OKMatrix S = mat_cols(B, order);
  OKMatrix check = mat_mul(mat_mul(mat_transpose(S), J), S);
  OKMatrix target = jstd(R, n);
  target.prec = check.prec;
  require(mat_eq(check, target), "symplectic basis verification failed");
  require(mat_unit_det(S), "symplectic basis is not unimodular");
  return S;
}

}  // namespace symplift
