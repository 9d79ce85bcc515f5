#include <algorithm>
#include <numeric>

#include "symplift/groups.hpp"
#include "symplift/rng.hpp"

namespace symplift {

namespace {

constexpr int kOrderCap = 2000;

uint64_t powmod_u64(uint64_t b, uint64_t e, uint64_t m) {
  unsigned __int128 r = 1, x = b % m;
  while (e) {
    if (e & 1) r = r * x % m;
    x = x * x % m;
    e >>= 1;
  }
  return (uint64_t)r;
}

}  // namespace

FiniteGroup group_from_table(const std::vector<std::vector<int>>& table) {
  int n = (int)table.size();
  if (n < 1) fail(Err::ParseError, "empty multiplication table");
  if (n > kOrderCap) fail(Err::Unsupported, "group order above the supported cap");
  FiniteGroup G;
  G.n = n;
  G.mul.resize((size_t)n * n);
  for (int i = 0; i < n; i++) {
    if ((int)table[i].size() != n) fail(Err::ParseError, "multiplication table is not square");
    for (int j = 0; j < n; j++) {
      int v = table[i][j];
      if (v < 0 || v >= n) fail(Err::ParseError, "table entry out of range");
      G.mul[(size_t)i * n + j] = v;
    }
  }
  int id = -1;
  for (int e = 0; e < n && id < 0; e++) {
    bool ok = true;
    for (int x = 0; x < n; x++)
      if (G.at(e, x) != x || G.at(x, e) != x) {
        ok = false;
        break;
      }
    if (ok) id = e;
  }
  if (id < 0) fail(Err::NoIdentity, "no two-sided identity");
  G.id = id;
  G.inv.assign(n, -1);
  for (int a = 0; a < n; a++) {
    for (int b = 0; b < n; b++)
      if (G.at(a, b) == id && G.at(b, a) == id) {
        G.inv[a] = b;
        break;
      }
    if (G.inv[a] < 0) fail(Err::NoInverse, "element without inverse");
  }
  if (n <= 512) {
    for (int a = 0; a < n; a++)
      for (int b = 0; b < n; b++) {
        int ab = G.at(a, b);
        for (int c = 0; c < n; c++)
          if (G.at(ab, c) != G.at(a, G.at(b, c)))
            fail(Err::NotAssociative, "associativity fails");
      }
  } else {
    Rng rng(0x5eed);
    for (int t = 0; t < 300000; t++) {
      int a = (int)rng.below(n), b = (int)rng.below(n), c = (int)rng.below(n);
      if (G.at(G.at(a, b), c) != G.at(a, G.at(b, c)))
        fail(Err::NotAssociative, "associativity fails on sampled triple");
    }
  }
  return G;
}

int gpow(const FiniteGroup& G, int g, long long e) {
  int base = g;
  if (e < 0) {
    base = G.inv[g];
    e = -e;
  }
  int r = G.id;
  while (e) {
    if (e & 1) r = G.at(r, base);
    base = G.at(base, base);
    e >>= 1;
  }
  return r;
}

int gconj(const FiniteGroup& G, int x, int g) { return G.at(G.at(x, g), G.inv[x]); }

int element_order(const FiniteGroup& G, int g) {
  int x = g, d = 1;
  while (x != G.id) {
    x = G.at(x, g);
    d++;
    require(d <= G.n, "element order exceeds group order");
  }
  return d;
}

uint64_t group_exponent(const FiniteGroup& G) {
  uint64_t e = 1;
  for (int g = 0; g < G.n; g++) e = std::lcm(e, (uint64_t)element_order(G, g));
  return e;
}

bool group_abelian(const FiniteGroup& G) {
  for (int a = 0; a < G.n; a++)
    for (int b = a + 1; b < G.n; b++)
      if (G.at(a, b) != G.at(b, a)) return false;
  return true;
}

std::vector<int> subgroup_closure(const FiniteGroup& G, const std::vector<int>& gens) {
  std::vector<bool> in(G.n, false);
  std::vector<int> queue = {G.id};
  in[G.id] = true;
  for (size_t t = 0; t < queue.size(); t++)
    for (int g : gens) {
      int y = G.at(queue[t], g);
      if (!in[y]) {
        in[y] = true;
        queue.push_back(y);
      }
    }
  std::vector<int> out;
  for (int i = 0; i < G.n; i++)
    if (in[i]) out.push_back(i);
  return out;
}

std::vector<int> small_generating_set(const FiniteGroup& G) {
  std::vector<int> gens;
  std::vector<int> have = {G.id};
  while ((int)have.size() < G.n) {
    for (int g = 0; g < G.n; g++)
      if (!std::binary_search(have.begin(), have.end(), g)) {
        gens.push_back(g);
        break;
      }
    have = subgroup_closure(G, gens);
  }
  return gens;
}

bool subgroup_normal(const FiniteGroup& G, const std::vector<int>& H) {
  std::vector<bool> in(G.n, false);
  for (int h : H) in[h] = true;
  for (int h : H)
    for (int x = 0; x < G.n; x++)
      if (!in[gconj(G, x, h)]) return false;
  return true;
}

FiniteGroup group_product(const FiniteGroup& A, const FiniteGroup& B) {
  long long n = (long long)A.n * B.n;
  if (n > kOrderCap) fail(Err::Unsupported, "product order above the supported cap");
  std::vector<std::vector<int>> t((size_t)n, std::vector<int>((size_t)n));
  for (int a1 = 0; a1 < A.n; a1++)
    for (int b1 = 0; b1 < B.n; b1++)
      for (int a2 = 0; a2 < A.n; a2++)
        for (int b2 = 0; b2 < B.n; b2++)
          t[(size_t)a1 * B.n + b1][(size_t)a2 * B.n + b2] =
              A.at(a1, a2) * B.n + B.at(b1, b2);
  return group_from_table(t);
}

QuotientGroup quotient_group(const FiniteGroup& G, const std::vector<int>& N) {
  if (!subgroup_normal(G, N)) fail(Err::Internal, "quotient by a non-normal subgroup");
  std::vector<int> cmin(G.n, -1);
  for (int g = 0; g < G.n; g++) {
    int m = G.n;
    for (int h : N) m = std::min(m, G.at(g, h));
    cmin[g] = m;
  }
  std::vector<int> reps;
  for (int g = 0; g < G.n; g++)
    if (cmin[g] == g) reps.push_back(g);
  std::vector<int> idx(G.n, -1);
  for (size_t i = 0; i < reps.size(); i++) idx[reps[i]] = (int)i;
  int q = (int)reps.size();
  std::vector<std::vector<int>> t((size_t)q, std::vector<int>((size_t)q));
  for (int i = 0; i < q; i++)
    for (int j = 0; j < q; j++) t[i][j] = idx[cmin[G.at(reps[i], reps[j])]];
  QuotientGroup out;
  out.q = group_from_table(t);
  out.proj.resize(G.n);
  for (int g = 0; g < G.n; g++) out.proj[g] = idx[cmin[g]];
  return out;
}

InertiaStructure inertia_split(const FiniteGroup& G, uint64_t ell) {
  if (ell < 2) fail(Err::NotPrime, "ell must be prime");
  for (uint64_t p = 2; p * p <= ell; p++)
    if (ell % p == 0) fail(Err::NotPrime, "ell must be prime");
  std::vector<int> ord(G.n);
  for (int g = 0; g < G.n; g++) ord[g] = element_order(G, g);
  std::vector<int> H;
  std::vector<bool> in(G.n, false);
  for (int g = 0; g < G.n; g++)
    if (std::gcd((uint64_t)ord[g], ell) == 1) {
      H.push_back(g);
      in[g] = true;
    }
  for (int a : H)
    for (int b : H)
      if (!in[G.at(a, b)])
        fail(Err::NotInertiaForm, "prime-to-ell elements do not close under multiplication");
  if (!subgroup_normal(G, H)) fail(Err::NotInertiaForm, "prime-to-ell part is not normal");
  if (H.size() % ell == 0) fail(Err::NotInertiaForm, "ell divides the order of H");
  if (G.n % (int)H.size() != 0) fail(Err::Internal, "subgroup order does not divide");
  int index = G.n / (int)H.size();
  int k = 0;
  while (index % (int)ell == 0) {
    index /= (int)ell;
    k++;
  }
  if (index != 1) fail(Err::NotInertiaForm, "index of H is not a power of ell");
  long long target = 1;
  for (int i = 0; i < k; i++) target *= (long long)ell;
  int c = -1;
  for (int g = 0; g < G.n; g++)
    if (ord[g] == target) {
      c = g;
      break;
    }
  if (c < 0) fail(Err::NotInertiaForm, "no cyclic complement generator");
  InertiaStructure s;
  s.group = G;
  s.ell = ell;
  s.H = std::move(H);
  s.c = c;
  s.k = k;
  return s;
}

ConjClasses conjugacy_classes(const FiniteGroup& G) {
  std::vector<int> of(G.n, -1);
  std::vector<std::vector<int>> cls;
  for (int g = 0; g < G.n; g++) {
    if (of[g] >= 0) continue;
    std::vector<int> c;
    for (int x = 0; x < G.n; x++) {
      int y = gconj(G, x, g);
      if (of[y] == -1) {
        of[y] = -2;  // mark, renumber after sorting
        c.push_back(y);
      }
    }
    std::sort(c.begin(), c.end());
    cls.push_back(std::move(c));
    for (int y : cls.back()) of[y] = (int)cls.size() - 1;
  }
  std::sort(cls.begin(), cls.end(), [](const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a[0] < b[0];
  });
  ConjClasses out;
  out.cls = std::move(cls);
  out.of.assign(G.n, -1);
  out.rep.resize(out.cls.size());
  for (size_t i = 0; i < out.cls.size(); i++) {
    out.rep[i] = out.cls[i][0];
    for (int y : out.cls[i]) out.of[y] = (int)i;
  }
  return out;
}

FiniteGroup family_cyclic(int n) {
  if (n < 1 || n > kOrderCap) fail(Err::Unsupported, "cyclic order out of range");
  std::vector<std::vector<int>> t((size_t)n, std::vector<int>((size_t)n));
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) t[i][j] = (i + j) % n;
  return group_from_table(t);
}

FiniteGroup family_dihedral(int n) {
  if (n < 1 || 2 * n > kOrderCap) fail(Err::Unsupported, "dihedral order out of range");
  int m = 2 * n;
  std::vector<std::vector<int>> t((size_t)m, std::vector<int>((size_t)m));
  // element r^i s^j has index i + n*j
  for (int i1 = 0; i1 < n; i1++)
    for (int j1 = 0; j1 < 2; j1++)
      for (int i2 = 0; i2 < n; i2++)
        for (int j2 = 0; j2 < 2; j2++) {
          int i = j1 ? (i1 + n - i2) % n : (i1 + i2) % n;
          t[i1 + n * j1][i2 + n * j2] = i + n * (j1 ^ j2);
        }
  return group_from_table(t);
}

FiniteGroup family_quaternion8() {
  // unit u in {1, i, j, k}, sign s; index = 2u + s
  static const int bu[4][4] = {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
  static const int bs[4][4] = {{0, 0, 0, 0}, {0, 1, 0, 1}, {0, 1, 1, 0}, {0, 0, 1, 1}};
  std::vector<std::vector<int>> t(8, std::vector<int>(8));
  for (int u1 = 0; u1 < 4; u1++)
    for (int s1 = 0; s1 < 2; s1++)
      for (int u2 = 0; u2 < 4; u2++)
        for (int s2 = 0; s2 < 2; s2++)
          t[2 * u1 + s1][2 * u2 + s2] = 2 * bu[u1][u2] + (s1 ^ s2 ^ bs[u1][u2]);
  return group_from_table(t);
}

FiniteGroup family_semidirect(uint64_t n, uint64_t ell, uint64_t k, uint64_t s) {
  if (n < 1 || ell < 2 || k > 11) fail(Err::Unsupported, "semidirect parameters out of range");
  uint64_t L = 1;
  for (uint64_t i = 0; i < k; i++) {
    L *= ell;
    if (n * L > kOrderCap) fail(Err::Unsupported, "semidirect order above the supported cap");
  }
  if (n * L > kOrderCap) fail(Err::Unsupported, "semidirect order above the supported cap");
  s %= n;
  if (powmod_u64(s, L, n) != 1 % n)
    fail(Err::BadAction, "the action exponent does not have order dividing the cyclic part");
  int N = (int)(n * L);
  std::vector<uint64_t> spow(L);  // s^b mod n
  spow[0] = 1 % n;
  for (uint64_t b = 1; b < L; b++) spow[b] = spow[b - 1] * s % n;
  std::vector<std::vector<int>> t((size_t)N, std::vector<int>((size_t)N));
  // element h^a c^b has index a + n*b
  for (uint64_t a1 = 0; a1 < n; a1++)
    for (uint64_t b1 = 0; b1 < L; b1++)
      for (uint64_t a2 = 0; a2 < n; a2++)
        for (uint64_t b2 = 0; b2 < L; b2++) {
          uint64_t a = (a1 + a2 * spow[b1]) % n;
          uint64_t b = (b1 + b2) % L;
          t[a1 + n * b1][a2 + n * b2] = (int)(a + n * b);
        }
  return group_from_table(t);
}

FiniteGroup build_family(const std::string& kind, const std::vector<uint64_t>& args) {
  if (kind == "cyclic") {
    if (args.size() != 1) fail(Err::ParseError, "cyclic takes one argument");
    return family_cyclic((int)args[0]);
  }
  if (kind == "dihedral") {
    if (args.size() != 1) fail(Err::ParseError, "dihedral takes one argument");
    return family_dihedral((int)args[0]);
  }
  if (kind == "quaternion8") {
    if (!args.empty()) fail(Err::ParseError, "quaternion8 takes no arguments");
    return family_quaternion8();
  }
  if (kind == "semidirect") {
    if (args.size() != 4) fail(Err::ParseError, "semidirect takes n, ell, k, s");
    return family_semidirect(args[0], args[1], args[2], args[3]);
  }
  fail(Err::UnknownFamily, "unknown family " + kind);
}

std::vector<long long> cyclotomic_poly(uint64_t e) {
  require(e >= 1, "cyclotomic index must be positive");
  // mobius of e/d over divisors d
  auto mobius = [](uint64_t v) -> int {
    int mu = 1;
    for (uint64_t p = 2; p * p <= v; p++)
      if (v % p == 0) {
        v /= p;
        if (v % p == 0) return 0;
        mu = -mu;
      }
    if (v > 1) mu = -mu;
    return mu;
  };
  auto xd_minus_1 = [](uint64_t d) {
    std::vector<long long> p(d + 1, 0);
    p[0] = -1;
    p[d] = 1;
    return p;
  };
  auto mul = [](const std::vector<long long>& a, const std::vector<long long>& b) {
    std::vector<long long> r(a.size() + b.size() - 1, 0);
    for (size_t i = 0; i < a.size(); i++) {
      if (!a[i]) continue;
      for (size_t j = 0; j < b.size(); j++) {
        __int128 v = (__int128)r[i + j] + (__int128)a[i] * b[j];
        require(v < ((__int128)1 << 62) && v > -((__int128)1 << 62), "coefficient overflow");
        r[i + j] = (long long)v;
      }
    }
    return r;
  };
  auto div_exact = [](std::vector<long long> a, const std::vector<long long>& b) {
    require(b.back() == 1, "divisor must be monic");
    require(a.size() >= b.size(), "degree underflow in exact division");
    std::vector<long long> q(a.size() - b.size() + 1, 0);
    int db = (int)b.size() - 1;
    for (int i = (int)a.size() - 1; i >= db; i--) {
      long long c = a[i];
      q[i - db] = c;
      if (c)
        for (int j = 0; j <= db; j++) a[i - db + j] -= c * b[j];
    }
    for (int j = 0; j < db; j++) require(a[j] == 0, "division not exact");
    return q;
  };
  std::vector<long long> num = {1}, den = {1};
  for (uint64_t d = 1; d <= e; d++) {
    if (e % d) continue;
    int mu = mobius(e / d);
    if (mu == 1) num = mul(num, xd_minus_1(d));
    if (mu == -1) den = mul(den, xd_minus_1(d));
  }
  return div_exact(num, den);
}

}  // namespace symplift
