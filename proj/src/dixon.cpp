#include <algorithm>
#include <numeric>

#include "symplift/groups.hpp"
#include "symplift/linalg.hpp"

namespace symplift {

namespace {

using u64 = uint64_t;
using ll = long long;

u64 powmod_u64(u64 b, u64 e, u64 m) {
  unsigned __int128 r = 1, x = b % m;
  while (e) {
    if (e & 1) r = r * x % m;
    x = x * x % m;
    e >>= 1;
  }
  return (u64)r;
}

bool is_prime_u64(u64 v) {
  if (v < 2) return false;
  for (u64 d = 2; d * d <= v; d++)
    if (v % d == 0) return false;
  return true;
}

u64 primitive_root(u64 p) {
  std::vector<u64> qs;
  u64 v = p - 1;
  for (u64 d = 2; d * d <= v; d++)
    if (v % d == 0) {
      qs.push_back(d);
      while (v % d == 0) v /= d;
    }
  if (v > 1) qs.push_back(v);
  for (u64 g = 2; g < p; g++) {
    bool ok = true;
    for (u64 q : qs)
      if (powmod_u64(g, (p - 1) / q, p) == 1) {
        ok = false;
        break;
      }
    if (ok) return g;
  }
  fail(Err::Internal, "no primitive root found");
}

void checked_sub(ll& dst, ll a, ll b) {
  __int128 v = (__int128)dst - (__int128)a * b;
  require(v < ((__int128)1 << 62) && v > -((__int128)1 << 62), "coefficient overflow");
  dst = (ll)v;
}

}  // namespace

CharacterTable character_table_dixon(const FiniteGroup& G) {
  ConjClasses cc = conjugacy_classes(G);
  int r = (int)cc.cls.size();
  u64 e = group_exponent(G);
  u64 n = (u64)G.n;
  int i0 = cc.of[G.id];

  // auxiliary prime: p = 1 mod e, p^2 > 4#G, p coprime to #G, and small
  // enough that mod-p matrices fit the shared residue machinery
  u64 p = 0;
  for (u64 cand = e + 1; cand <= 27500; cand += e) {
    if (cand * cand <= 4 * n) continue;
    if (n % cand == 0) continue;
    if (!is_prime_u64(cand)) continue;
    p = cand;
    break;
  }
  if (!p) fail(Err::AuxPrimeSearchFailed, "no auxiliary prime below the cap");
  Ring P = Ring::create(p, 1, 4);

  // class-sum action: (M_i)_{jk} = #{ x in C_i : x^{-1} g_k in C_j }
  auto class_matrix = [&](int i) {
    FqMatrix M = fqm_zero(P, r, r);
    for (int k = 0; k < r; k++) {
      int gk = cc.rep[k];
      for (int x : cc.cls[i]) M.at(cc.of[G.at(G.inv[x], gk)], k)[0] += 1;
    }
    for (auto& w : M.a) w %= p;
    return M;
  };

  // split the class-function space into common eigenlines
  std::vector<FqMatrix> spaces = {fqm_id(P, r)};
  for (int i = 0; i < r; i++) {
    if (i == i0) continue;
    bool done = true;
    for (const auto& B : spaces)
      if (B.cols > 1) done = false;
    if (done) break;
    FqMatrix M = class_matrix(i);
    std::vector<FqMatrix> next;
    for (const auto& B : spaces) {
      int d = B.cols;
      if (d == 1) {
        next.push_back(B);
        continue;
      }
      FqMatrix X = fqm_solve(B, fqm_mul(M, B));
      FqPoly cp = fqm_charpoly(X);
      FqPoly g = fqp_gcd(cp, fqp_derivative(cp));
      FqPoly sqf = fqp_deg(g) > 0 ? fqp_divrem(cp, g).first : cp;
      auto fac = fqp_factor(sqf, 0xD1C50 + (u64)i);
      if (fac.size() == 1 && fqp_deg(fac[0]) == 1) {
        next.push_back(B);  // M acts as a scalar here, no progress
        continue;
      }
      int covered = 0;
      for (const auto& f : fac) {
        require(fqp_deg(f) == 1, "class algebra eigenvalue outside the prime field");
        FqMatrix Xl = X;
        for (int t = 0; t < d; t++) fqm_set(Xl, t, t, fq_add(fqm_get(X, t, t), f[0]));
        FqMatrix K = fqm_kernel(Xl);
        require(K.cols >= 1, "missing eigenspace");
        covered += K.cols;
        next.push_back(fqm_mul(B, K));
      }
      require(covered == d, "class-sum matrix failed to diagonalize");
    }
    spaces = std::move(next);
  }
  require((int)spaces.size() == r, "eigenline count does not match class count");

  // each eigenline, normalized at the identity class, lists the class-algebra
  // character values omega_i = h_i chi(g_i) / chi(1)
  std::vector<std::vector<u64>> omega;
  for (const auto& B : spaces) {
    require(B.cols == 1, "splitting terminated early");
    u64 v0 = B.at(i0, 0)[0];
    require(v0 != 0, "eigenline vanishes at the identity class");
    u64 s = powmod_u64(v0, p - 2, p);
    std::vector<u64> w(r);
    for (int j = 0; j < r; j++) w[j] = B.at(j, 0)[0] * s % p;
    omega.push_back(std::move(w));
  }

  std::vector<int> ibar(r);
  for (int i = 0; i < r; i++) ibar[i] = cc.of[G.inv[cc.rep[i]]];
  std::vector<u64> hinv(r);
  for (int i = 0; i < r; i++) hinv[i] = powmod_u64(cc.cls[i].size() % p, p - 2, p);

  // degrees from the norm of omega, then character values mod p
  std::vector<int> degrees(r);
  std::vector<std::vector<u64>> chip(r, std::vector<u64>(r));
  for (int ch = 0; ch < r; ch++) {
    u64 t = 0;
    for (int i = 0; i < r; i++) t = (t + omega[ch][i] * omega[ch][ibar[i]] % p * hinv[i]) % p;
    require(t != 0, "degenerate norm for a class-algebra character");
    u64 dd = n % p * powmod_u64(t, p - 2, p) % p;
    int deg = 0;
    for (u64 d = 1; d * d <= n; d++)
      if (d * d % p == dd) {
        deg = (int)d;
        break;
      }
    require(deg > 0, "no degree lift below sqrt(#G)");
    require(n % (u64)deg == 0, "degree does not divide the group order");
    degrees[ch] = deg;
    for (int i = 0; i < r; i++) chip[ch][i] = (u64)deg * omega[ch][i] % p * hinv[i] % p;
  }

  // lift each value to a multiplicity vector over the e-th roots of unity
  u64 z = powmod_u64(primitive_root(p), (p - 1) / e, p);
  std::vector<u64> zpow(e);
  zpow[0] = 1;
  for (u64 t = 1; t < e; t++) zpow[t] = zpow[t - 1] * z % p;

  std::vector<std::vector<std::vector<ll>>> values(r);
  for (int ch = 0; ch < r; ch++) {
    values[ch].resize(r);
    for (int i = 0; i < r; i++) {
      int g = cc.rep[i];
      int di = element_order(G, g);
      require(e % (u64)di == 0, "element order outside the exponent");
      u64 step = e / (u64)di;
      std::vector<int> pcls(di);
      int gj = G.id;
      for (int j = 0; j < di; j++) {
        pcls[j] = cc.of[gj];
        gj = G.at(gj, g);
      }
      u64 dinv = powmod_u64((u64)di % p, p - 2, p);
      std::vector<ll> val(e, 0);
      int total = 0;
      for (int k = 0; k < di; k++) {
        u64 acc = 0;
        for (int j = 0; j < di; j++) {
          u64 t = (u64)j * (u64)k % (u64)di * step % e;
          acc = (acc + chip[ch][pcls[j]] * zpow[(e - t) % e]) % p;
        }
        u64 mk = acc * dinv % p;
        require(mk <= (u64)degrees[ch], "multiplicity exceeds the degree");
        total += (int)mk;
        if (mk) val[(size_t)k * step] += (ll)mk;
      }
      require(total == degrees[ch], "multiplicities do not sum to the degree");
      values[ch][i] = std::move(val);
    }
  }

  // canonical character order
  std::vector<int> order(r);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (degrees[a] != degrees[b]) return degrees[a] < degrees[b];
    return values[a] < values[b];
  });
  CharacterTable T;
  T.classes = cc;
  T.e = e;
  T.degrees.resize(r);
  T.values.resize(r);
  for (int t = 0; t < r; t++) {
    T.degrees[t] = degrees[order[t]];
    T.values[t] = values[order[t]];
  }

  // exact orthogonality over Z[zeta_e]: accumulate cyclic convolutions, then
  // reduce mod the cyclotomic polynomial and compare with the constant
  std::vector<ll> phi = cyclotomic_poly(e);
  int dphi = (int)phi.size() - 1;
  auto conv_acc = [&](std::vector<ll>& acc, const std::vector<ll>& a, const std::vector<ll>& b,
                      ll scale) {
    for (u64 i = 0; i < e; i++) {
      if (!a[i]) continue;
      for (u64 j = 0; j < e; j++) {
        if (!b[j]) continue;
        __int128 v = (__int128)acc[(i + j) % e] + (__int128)a[i] * b[j] * scale;
        require(v < ((__int128)1 << 62) && v > -((__int128)1 << 62), "coefficient overflow");
        acc[(i + j) % e] = (ll)v;
      }
    }
  };
  auto is_constant = [&](std::vector<ll> S, ll want) {
    for (int i = (int)S.size() - 1; i >= dphi; i--) {
      ll c = S[i];
      if (!c) continue;
      for (int j = 0; j <= dphi; j++) checked_sub(S[i - dphi + j], c, phi[j]);
    }
    if (S[0] != want) return false;
    for (int i = 1; i < dphi && i < (int)S.size(); i++)
      if (S[i]) return false;
    return true;
  };
  for (int a = 0; a < r; a++)
    for (int b = a; b < r; b++) {
      std::vector<ll> S(e, 0);
      for (int i = 0; i < r; i++)
        conv_acc(S, T.values[a][i], T.values[b][ibar[i]], (ll)cc.cls[i].size());
      require(is_constant(std::move(S), a == b ? (ll)n : 0), "row orthogonality fails");
    }
  for (int i = 0; i < r; i++)
    for (int j = i; j < r; j++) {
      std::vector<ll> S(e, 0);
      for (int ch = 0; ch < r; ch++) conv_acc(S, T.values[ch][i], T.values[ch][ibar[j]], 1);
      ll want = i == j ? (ll)(n / cc.cls[i].size()) : 0;
      require(is_constant(std::move(S), want), "column orthogonality fails");
    }
  return T;
}

}  // namespace symplift
