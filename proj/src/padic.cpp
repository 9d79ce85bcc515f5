#include "symplift/padic.hpp"

#include <algorithm>

namespace symplift {

namespace {

using u64 = uint64_t;
using u128 = unsigned __int128;

u64 addm(u64 a, u64 b, u64 mod) {
  u64 s = a + b;  // both < mod < 2^59, no wrap
  return s >= mod ? s - mod : s;
}
u64 subm(u64 a, u64 b, u64 mod) { return a >= b ? a - b : a + (mod - b); }
u64 mulm(u64 a, u64 b, u64 mod) { return (u64)((u128)a * b % mod); }
u64 powm(u64 a, u64 e, u64 mod) {
  u64 r = 1 % mod;
  a %= mod;
  while (e) {
    if (e & 1) r = mulm(r, a, mod);
    a = mulm(a, a, mod);
    e >>= 1;
  }
  return r;
}

// Dense polynomials over F_ell, c[i] the coefficient of x^i, no leading zeros.
// Only used for the defining-polynomial search; everything else runs through
// the raw kernels.
using Pol = std::vector<u64>;

void ptrim(Pol& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}
Pol psub(const Pol& a, const Pol& b, u64 ell) {
  Pol r(std::max(a.size(), b.size()), 0);
  for (size_t i = 0; i < r.size(); i++) {
    u64 x = i < a.size() ? a[i] : 0, y = i < b.size() ? b[i] : 0;
    r[i] = subm(x, y, ell);
  }
  ptrim(r);
  return r;
}
Pol pmul(const Pol& a, const Pol& b, u64 ell) {
  if (a.empty() || b.empty()) return {};
  Pol r(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); i++) {
    if (!a[i]) continue;
    for (size_t j = 0; j < b.size(); j++)
      r[i + j] = addm(r[i + j], mulm(a[i], b[j], ell), ell);
  }
  ptrim(r);
  return r;
}
// remainder of a modulo monic b
Pol pmod(Pol a, const Pol& b, u64 ell) {
  size_t db = b.size() - 1;
  while (a.size() > db) {
    u64 t = a.back();
    size_t sh = a.size() - 1 - db;
    if (t)
      for (size_t j = 0; j < db; j++) a[sh + j] = subm(a[sh + j], mulm(t, b[j], ell), ell);
    a.pop_back();
  }
  ptrim(a);
  return a;
}
void pmonic(Pol& p, u64 ell) {
  if (p.empty() || p.back() == 1) return;
  u64 il = powm(p.back(), ell - 2, ell);
  for (auto& c : p) c = mulm(c, il, ell);
}
Pol pgcd(Pol a, Pol b, u64 ell) {
  ptrim(a);
  ptrim(b);
  while (!b.empty()) {
    pmonic(b, ell);
    Pol r = pmod(std::move(a), b, ell);
    a = std::move(b);
    b = std::move(r);
  }
  pmonic(a, ell);
  return a;
}
Pol ppow_ell(const Pol& z, const Pol& f, u64 ell) {
  Pol r = {1}, base = z;
  u64 e = ell;
  while (e) {
    if (e & 1) r = pmod(pmul(r, base, ell), f, ell);
    base = pmod(pmul(base, base, ell), f, ell);
    e >>= 1;
  }
  return r;
}

// f = x^m + sum low[i] x^i.  Irreducible over F_ell iff x^{ell^m} = x mod f
// and x^{ell^{m/d}} - x is coprime to f for every prime d | m.
bool poly_irreducible(const std::vector<u64>& low, u64 ell, int m) {
  if (m == 1) return true;
  Pol f(low.begin(), low.end());
  f.push_back(1);
  const Pol x = {0, 1};
  Pol z = x;
  for (int i = 0; i < m; i++) z = ppow_ell(z, f, ell);
  if (!psub(z, x, ell).empty()) return false;
  int mm = m;
  for (int d = 2; d <= mm; d++) {
    if (mm % d) continue;
    while (mm % d == 0) mm /= d;
    Pol w = x;
    for (int i = 0; i < m / d; i++) w = ppow_ell(w, f, ell);
    Pol g = pgcd(psub(w, x, ell), f, ell);
    if (g.size() != 1) return false;
  }
  return true;
}

}  // namespace

struct Ring::Impl {
  u64 ell;
  int m;
  int N;
  u64 mod;
  u64 q;
  std::vector<u64> f;     // low coefficients, entries < ell
  std::vector<u64> negf;  // (-f) mod ell^N
};

Ring Ring::create(uint64_t ell, int m, int N) {
  if (ell < 2) fail(Err::NotPrime, "ell must be an odd prime");
  if (ell % 2 == 0) fail(Err::EvenPrime, "ell must be odd");
  if (N < 4) fail(Err::PrecisionTooLow, "precision must be at least 4 digits");
  if (m < 1) fail(Err::Unsupported, "extension degree must be at least 1");
  u128 mod = 1;
  for (int i = 0; i < N; i++) {
    mod *= ell;
    if (mod >= ((u128)1 << 59)) fail(Err::Unsupported, "ell^N exceeds the 2^59 arithmetic bound");
  }
  for (u64 d = 3; d * d <= ell; d += 2)
    if (ell % d == 0) fail(Err::NotPrime, "ell is composite");
  u128 q = 1;
  for (int i = 0; i < m; i++) {
    q *= ell;
    if (q >= ((u128)1 << 62)) fail(Err::Unsupported, "residue field exceeds the 2^62 bound");
  }

  auto impl = std::make_shared<Impl>();
  impl->ell = ell;
  impl->m = m;
  impl->N = N;
  impl->mod = (u64)mod;
  impl->q = (u64)q;
  std::vector<u64> low(m, 0);
  if (m >= 2) {
    // Smallest-coefficient search: counter digits little-endian base ell.
    for (u64 k = 0;; k++) {
      require(k < impl->q, "no irreducible polynomial found");
      u64 t = k;
      for (int i = 0; i < m; i++) {
        low[i] = t % ell;
        t /= ell;
      }
      if (poly_irreducible(low, ell, m)) break;
    }
  }
  impl->f = low;
  impl->negf.resize(m);
  for (int i = 0; i < m; i++) impl->negf[i] = low[i] ? impl->mod - low[i] : 0;
  Ring R;
  R.impl_ = std::move(impl);
  return R;
}

uint64_t Ring::ell() const { return impl_->ell; }
int Ring::m() const { return impl_->m; }
int Ring::N() const { return impl_->N; }
uint64_t Ring::mod() const { return impl_->mod; }
uint64_t Ring::q() const { return impl_->q; }
const std::vector<uint64_t>& Ring::defining_poly() const { return impl_->f; }
const std::vector<uint64_t>& Ring::neg_poly() const { return impl_->negf; }

bool Ring::same(const Ring& o) const {
  if (impl_ == o.impl_) return true;
  if (!impl_ || !o.impl_) return false;
  return impl_->ell == o.impl_->ell && impl_->m == o.impl_->m && impl_->N == o.impl_->N;
}

// --- raw kernels ---

void raw_add(const Ring& R, const u64* a, const u64* b, u64* out) {
  int m = R.m();
  u64 mod = R.mod();
  for (int i = 0; i < m; i++) out[i] = addm(a[i], b[i], mod);
}

void raw_sub(const Ring& R, const u64* a, const u64* b, u64* out) {
  int m = R.m();
  u64 mod = R.mod();
  for (int i = 0; i < m; i++) out[i] = subm(a[i], b[i], mod);
}

void raw_neg(const Ring& R, const u64* a, u64* out) {
  int m = R.m();
  u64 mod = R.mod();
  for (int i = 0; i < m; i++) out[i] = a[i] ? mod - a[i] : 0;
}

bool raw_is_zero(const Ring& R, const u64* a) {
  int m = R.m();
  for (int i = 0; i < m; i++)
    if (a[i]) return false;
  return true;
}

int raw_val(const Ring& R, const u64* a) {
  int m = R.m(), N = R.N();
  u64 ell = R.ell();
  int best = N;
  for (int i = 0; i < m && best > 0; i++) {
    if (a[i] == 0) continue;
    u64 c = a[i];
    int v = 0;
    while (c % ell == 0) {
      c /= ell;
      v++;
    }
    best = std::min(best, v);
  }
  return best == N ? kValInf : best;
}

void raw_conv_mac(const Ring& R, const u64* a, const u64* b, u128* acc) {
  int m = R.m();
  if (m == 1) {
    acc[0] += (u128)a[0] * b[0];
    return;
  }
  for (int i = 0; i < m; i++) {
    if (!a[i]) continue;
    u128 ai = a[i];
    for (int j = 0; j < m; j++) acc[i + j] += ai * b[j];
  }
}

void raw_conv_fold(const Ring& R, u128* acc) {
  int m = R.m();
  u64 mod = R.mod();
  for (int i = 0; i < 2 * m - 1; i++) acc[i] %= mod;
}

void raw_conv_finish(const Ring& R, u128* acc, u64* out) {
  int m = R.m();
  u64 mod = R.mod();
  raw_conv_fold(R, acc);
  if (m == 1) {
    out[0] = (u64)acc[0];
    return;
  }
  const auto& negf = R.neg_poly();
  for (int i = 2 * m - 2; i >= m; i--) {
    u64 t = (u64)(acc[i] % mod);
    if (t) {
      u128 tt = t;
      for (int j = 0; j < m; j++) acc[i - m + j] += tt * negf[j];
    }
  }
  for (int i = 0; i < m; i++) out[i] = (u64)(acc[i] % mod);
}

uint64_t raw_fold_interval(const Ring& R) {
  u128 den = (u128)R.mod() * R.mod() * (u64)R.m();
  u128 lim = (((u128)1 << 126)) / den;
  if (lim < 1) return 1;
  if (lim > 1000000000) return 1000000000;
  return (u64)lim;
}

void raw_mul(const Ring& R, const u64* a, const u64* b, u64* out) {
  int m = R.m();
  if (m == 1) {
    out[0] = mulm(a[0], b[0], R.mod());
    return;
  }
  u128 acc[127];  // q < 2^62 caps m at 39, so 2m-1 fits
  std::fill(acc, acc + 2 * m - 1, (u128)0);
  raw_conv_mac(R, a, b, acc);
  raw_conv_finish(R, acc, out);
}

// --- O_K scalars ---

namespace {

void chk(const OKElem& x) {
  if (!x.ring || (int)x.c.size() != x.ring.m())
    fail(Err::RingMismatch, "malformed ring element");
}
void chk2(const OKElem& x, const OKElem& y) {
  chk(x);
  chk(y);
  if (!x.ring.same(y.ring)) fail(Err::RingMismatch, "operands from different rings");
}
void fchk(const FqElem& x) {
  if (!x.ring || (int)x.c.size() != x.ring.m())
    fail(Err::RingMismatch, "malformed residue element");
}
void fchk2(const FqElem& x, const FqElem& y) {
  fchk(x);
  fchk(y);
  if (!x.ring.same(y.ring)) fail(Err::RingMismatch, "operands from different rings");
}

FqElem fq_from_counter(const Ring& R, u64 k) {
  FqElem r{R, std::vector<u64>(R.m(), 0)};
  u64 ell = R.ell();
  for (int i = 0; i < R.m(); i++) {
    r.c[i] = k % ell;
    k /= ell;
  }
  return r;
}

}  // namespace

OKElem ok_zero(const Ring& R) { return OKElem{R, std::vector<u64>(R.m(), 0)}; }

OKElem ok_one(const Ring& R) {
  OKElem r = ok_zero(R);
  r.c[0] = 1;
  return r;
}

OKElem ok_from_int(const Ring& R, long long v) {
  OKElem r = ok_zero(R);
  long long mod = (long long)R.mod();
  long long t = v % mod;
  if (t < 0) t += mod;
  r.c[0] = (u64)t;
  return r;
}

OKElem ok_gen(const Ring& R) {
  OKElem r = ok_zero(R);
  if (R.m() >= 2) r.c[1] = 1;
  return r;
}

OKElem ok_add(const OKElem& x, const OKElem& y) {
  chk2(x, y);
  OKElem r = ok_zero(x.ring);
  raw_add(x.ring, x.c.data(), y.c.data(), r.c.data());
  return r;
}

OKElem ok_sub(const OKElem& x, const OKElem& y) {
  chk2(x, y);
  OKElem r = ok_zero(x.ring);
  raw_sub(x.ring, x.c.data(), y.c.data(), r.c.data());
  return r;
}

OKElem ok_mul(const OKElem& x, const OKElem& y) {
  chk2(x, y);
  OKElem r = ok_zero(x.ring);
  raw_mul(x.ring, x.c.data(), y.c.data(), r.c.data());
  return r;
}

OKElem ok_neg(const OKElem& x) {
  chk(x);
  OKElem r = ok_zero(x.ring);
  raw_neg(x.ring, x.c.data(), r.c.data());
  return r;
}

OKElem ok_pow(const OKElem& x, uint64_t e) {
  chk(x);
  OKElem r = ok_one(x.ring), base = x;
  while (e) {
    if (e & 1) r = ok_mul(r, base);
    base = ok_mul(base, base);
    e >>= 1;
  }
  return r;
}

bool ok_eq(const OKElem& x, const OKElem& y) {
  chk2(x, y);
  return x.c == y.c;
}

bool ok_is_zero(const OKElem& x) {
  chk(x);
  return raw_is_zero(x.ring, x.c.data());
}

int ok_valuation(const OKElem& x) {
  chk(x);
  return raw_val(x.ring, x.c.data());
}

OKElem ok_inv(const OKElem& x) {
  chk(x);
  if (ok_valuation(x) != 0) fail(Err::NotUnit, "inverse requires a unit");
  OKElem y = fq_lift(fq_inv(ok_residue(x)));
  const OKElem one = ok_one(x.ring), two = ok_from_int(x.ring, 2);
  for (int it = 0; it < 64; it++) {
    OKElem e = ok_mul(x, y);
    if (ok_eq(e, one)) return y;
    y = ok_mul(y, ok_sub(two, e));  // Newton doubles correct digits
  }
  fail(Err::Internal, "inverse iteration did not converge");
}

OKElem ok_sqrt(const OKElem& x) {
  chk(x);
  if (ok_valuation(x) != 0) fail(Err::NotUnit, "sqrt requires a unit");
  FqElem r = ok_residue(x);
  if (!fq_is_square(r)) fail(Err::NonResidue, "residue is not a square");
  OKElem y = fq_lift(fq_sqrt(r));
  for (int it = 0; it < 64; it++) {
    OKElem d = ok_sub(ok_mul(y, y), x);
    if (ok_is_zero(d)) break;
    y = ok_sub(y, ok_mul(d, ok_inv(ok_add(y, y))));  // 2y a unit, ell odd
  }
  require(ok_eq(ok_mul(y, y), x), "sqrt iteration did not converge");
  OKElem z = ok_neg(y);
  return std::lexicographical_compare(y.c.begin(), y.c.end(), z.c.begin(), z.c.end()) ? y : z;
}

OKElem teichmuller(const FqElem& r) {
  fchk(r);
  if (fq_is_zero(r)) fail(Err::ZeroInput, "no multiplicative lift of zero");
  const Ring R = r.ring;
  OKElem z = fq_lift(r);
  for (int it = 0; it < R.N() + 4; it++) {
    OKElem w = z;
    for (int i = 0; i < R.m(); i++) w = ok_pow(w, R.ell());  // w := z^q
    if (ok_eq(w, z)) return z;
    z = w;
  }
  fail(Err::Internal, "multiplicative lift did not converge");
}

// --- residue field ---

FqElem ok_residue(const OKElem& x) {
  chk(x);
  FqElem r{x.ring, std::vector<u64>(x.ring.m(), 0)};
  u64 ell = x.ring.ell();
  for (int i = 0; i < x.ring.m(); i++) r.c[i] = x.c[i] % ell;
  return r;
}

OKElem fq_lift(const FqElem& a) {
  fchk(a);
  return OKElem{a.ring, a.c};
}

FqElem fq_zero(const Ring& R) { return FqElem{R, std::vector<u64>(R.m(), 0)}; }

FqElem fq_one(const Ring& R) {
  FqElem r = fq_zero(R);
  r.c[0] = 1;
  return r;
}

FqElem fq_from_int(const Ring& R, long long v) {
  FqElem r = fq_zero(R);
  long long ell = (long long)R.ell();
  long long t = v % ell;
  if (t < 0) t += ell;
  r.c[0] = (u64)t;
  return r;
}

FqElem fq_gen(const Ring& R) {
  FqElem r = fq_zero(R);
  if (R.m() >= 2) r.c[1] = 1;
  return r;
}

FqElem fq_add(const FqElem& a, const FqElem& b) {
  fchk2(a, b);
  FqElem r = fq_zero(a.ring);
  u64 ell = a.ring.ell();
  for (int i = 0; i < a.ring.m(); i++) r.c[i] = addm(a.c[i], b.c[i], ell);
  return r;
}

FqElem fq_sub(const FqElem& a, const FqElem& b) {
  fchk2(a, b);
  FqElem r = fq_zero(a.ring);
  u64 ell = a.ring.ell();
  for (int i = 0; i < a.ring.m(); i++) r.c[i] = subm(a.c[i], b.c[i], ell);
  return r;
}

FqElem fq_neg(const FqElem& a) {
  fchk(a);
  FqElem r = fq_zero(a.ring);
  u64 ell = a.ring.ell();
  for (int i = 0; i < a.ring.m(); i++) r.c[i] = a.c[i] ? ell - a.c[i] : 0;
  return r;
}

FqElem fq_mul(const FqElem& a, const FqElem& b) {
  fchk2(a, b);
  const Ring& R = a.ring;
  u64 ell = R.ell();
  if (R.m() == 1) return FqElem{R, {mulm(a.c[0], b.c[0], ell)}};
  Pol pa(a.c.begin(), a.c.end()), pb(b.c.begin(), b.c.end());
  Pol f(R.defining_poly().begin(), R.defining_poly().end());
  f.push_back(1);
  Pol pr = pmod(pmul(pa, pb, ell), f, ell);
  FqElem r = fq_zero(R);
  for (size_t i = 0; i < pr.size(); i++) r.c[i] = pr[i];
  return r;
}

FqElem fq_pow(const FqElem& a, uint64_t e) {
  fchk(a);
  FqElem r = fq_one(a.ring), base = a;
  while (e) {
    if (e & 1) r = fq_mul(r, base);
    base = fq_mul(base, base);
    e >>= 1;
  }
  return r;
}

bool fq_eq(const FqElem& a, const FqElem& b) {
  fchk2(a, b);
  return a.c == b.c;
}

bool fq_is_zero(const FqElem& a) {
  fchk(a);
  for (u64 c : a.c)
    if (c) return false;
  return true;
}

FqElem fq_inv(const FqElem& a) {
  fchk(a);
  if (fq_is_zero(a)) fail(Err::DivisionByZero, "inverse of zero in F_q");
  return fq_pow(a, a.ring.q() - 2);
}

bool fq_is_square(const FqElem& a) {
  fchk(a);
  if (fq_is_zero(a)) return true;
  FqElem e = fq_pow(a, (a.ring.q() - 1) / 2);
  return fq_eq(e, fq_one(a.ring));
}

FqElem fq_sqrt(const FqElem& a) {
  fchk(a);
  const Ring& R = a.ring;
  if (fq_is_zero(a)) return a;
  if (!fq_is_square(a)) fail(Err::NonResidue, "element is not a square in F_q");
  u64 q = R.q();
  u64 Q = q - 1;
  int S = 0;
  while (Q % 2 == 0) {
    Q /= 2;
    S++;
  }
  // deterministic non-residue: first counter element that fails Euler
  FqElem z = fq_one(R);
  for (u64 k = 1;; k++) {
    require(k < q, "no quadratic non-residue found");
    z = fq_from_counter(R, k);
    if (!fq_is_zero(z) && !fq_is_square(z)) break;
  }
  int M = S;
  FqElem c = fq_pow(z, Q);
  FqElem t = fq_pow(a, Q);
  FqElem rt = fq_pow(a, (Q + 1) / 2);
  const FqElem one = fq_one(R);
  while (!fq_eq(t, one)) {
    int i = 0;
    FqElem tt = t;
    while (!fq_eq(tt, one)) {
      tt = fq_mul(tt, tt);
      i++;
      require(i < M, "square root ladder failed");
    }
    FqElem b = c;
    for (int j = 0; j < M - i - 1; j++) b = fq_mul(b, b);
    M = i;
    c = fq_mul(b, b);
    t = fq_mul(t, c);
    rt = fq_mul(rt, b);
  }
  return rt;
}

}  // namespace symplift
