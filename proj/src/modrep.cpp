#include <algorithm>
#include <map>
#include <numeric>
#include <string>

#include "symplift/modrep.hpp"
#include "symplift/rng.hpp"

namespace symplift {

namespace {

KMatrix kblock(const KMatrix& A, int r0, int rows, int c0, int cols) {
  OKMatrix B = mat_zero(A.M.ring, rows, cols);
  B.prec = A.M.prec;
  for (int i = 0; i < rows; i++)
    for (int j = 0; j < cols; j++) mat_set(B, i, j, mat_get(A.M, r0 + i, c0 + j));
  return kmat_normalize({B, A.shift});
}

OKMatrix vstack(const std::vector<OKMatrix>& blocks) {
  int cols = blocks[0].cols, rows = 0;
  int prec = blocks[0].prec;
  for (const auto& b : blocks) {
    rows += b.rows;
    prec = std::min(prec, b.prec);
  }
  OKMatrix S = mat_zero(blocks[0].ring, rows, cols);
  S.prec = prec;
  int at = 0;
  for (const auto& b : blocks) {
    std::copy(b.a.begin(), b.a.end(), S.a.begin() + (size_t)at * cols * S.ring.m());
    at += b.rows;
  }
  return S;
}

// matrix of X -> A X - X B on vec(X), row-major
OKMatrix hom_system(const OKMatrix& A, const OKMatrix& B) {
  int n = A.rows;
  OKMatrix S = mat_zero(A.ring, n * n, n * n);
  S.prec = std::min(A.prec, B.prec);
  for (int i = 0; i < n; i++)
    for (int k = 0; k < n; k++) {
      OKElem aik = mat_get(A, i, k);
      for (int j = 0; j < n; j++)
        mat_set(S, i * n + j, k * n + j, ok_add(mat_get(S, i * n + j, k * n + j), aik));
    }
  for (int l = 0; l < n; l++)
    for (int j = 0; j < n; j++) {
      OKElem blj = mat_get(B, l, j);
      for (int i = 0; i < n; i++)
        mat_set(S, i * n + j, i * n + l, ok_sub(mat_get(S, i * n + j, i * n + l), blj));
    }
  return S;
}

FqMatrix fq_hom_system(const FqMatrix& A, const FqMatrix& B) {
  int n = A.rows;
  FqMatrix S = fqm_zero(A.ring, n * n, n * n);
  for (int i = 0; i < n; i++)
    for (int k = 0; k < n; k++) {
      FqElem aik = fqm_get(A, i, k);
      for (int j = 0; j < n; j++)
        fqm_set(S, i * n + j, k * n + j, fq_add(fqm_get(S, i * n + j, k * n + j), aik));
    }
  for (int l = 0; l < n; l++)
    for (int j = 0; j < n; j++) {
      FqElem blj = fqm_get(B, l, j);
      for (int i = 0; i < n; i++)
        fqm_set(S, i * n + j, i * n + l, fq_sub(fqm_get(S, i * n + j, i * n + l), blj));
    }
  return S;
}

OKMatrix mat_from_column(const OKMatrix& Y, int col, int n) {
  OKMatrix M = mat_zero(Y.ring, n, n);
  M.prec = Y.prec;
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) mat_set(M, i, j, mat_get(Y, i * n + j, col));
  return M;
}

FqMatrix fqm_from_column(const FqMatrix& Y, int col, int n) {
  FqMatrix M = fqm_zero(Y.ring, n, n);
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) fqm_set(M, i, j, fqm_get(Y, i * n + j, col));
  return M;
}

std::vector<int> col_pivot_rows(const OKMatrix& H) {
  std::vector<int> out;
  int m = H.ring.m();
  for (int j = 0; j < H.cols; j++) {
    int r = -1;
    for (int i = 0; i < H.rows && r < 0; i++) {
      const uint64_t* w = H.at(i, j);
      for (int t = 0; t < m; t++)
        if (w[t]) {
          r = i;
          break;
        }
    }
    require(r >= 0, "zero column in a basis");
    out.push_back(r);
  }
  return out;
}

FqElem rand_fq(Rng& rng, const Ring& R) {
  FqElem x;
  x.ring = R;
  x.c.resize((size_t)R.m());
  for (int t = 0; t < R.m(); t++) x.c[t] = rng.below(R.ell());
  return x;
}

OKElem rand_ok(Rng& rng, const Ring& R) {
  OKElem x;
  x.ring = R;
  x.c.resize((size_t)R.m());
  for (int t = 0; t < R.m(); t++) x.c[t] = rng.below(R.mod());
  return x;
}

std::vector<uint64_t> fq_matvec(const FqMatrix& A, const uint64_t* v) {
  FqMatrix V;
  V.ring = A.ring;
  V.rows = A.cols;
  V.cols = 1;
  V.a.assign(v, v + (size_t)A.cols * A.ring.m());
  return fqm_mul(A, V).a;
}

FqSpan fq_spin(const std::vector<uint64_t>& v0, const std::vector<FqMatrix>& gens) {
  const Ring& R = gens[0].ring;
  int n = gens[0].rows;
  FqSpan sp(R, n);
  std::vector<std::vector<uint64_t>> queue;
  if (sp.insert(v0.data())) queue.push_back(v0);
  for (size_t t = 0; t < queue.size(); t++)
    for (const auto& g : gens) {
      std::vector<uint64_t> w = fq_matvec(g, queue[t].data());
      if (sp.insert(w.data())) queue.push_back(w);
    }
  return sp;
}

// span rows -> invariant basis columns, re-verified under every generator
MeataxeResult submodule_from_span(const FqSpan& sp, const std::vector<FqMatrix>& gens) {
  const Ring& R = gens[0].ring;
  int n = gens[0].rows, k = sp.dim(), m = R.m();
  for (const auto& g : gens)
    for (int r = 0; r < k; r++) {
      std::vector<uint64_t> w = fq_matvec(g, sp.rows[r].data());
      require(sp.contains(w.data()), "claimed submodule is not closed");
    }
  MeataxeResult res;
  res.simple = false;
  res.submodule = fqm_zero(R, n, k);
  for (int r = 0; r < k; r++)
    for (int i = 0; i < n; i++)
      for (int t = 0; t < m; t++) res.submodule.at(i, r)[t] = sp.rows[r][(size_t)i * m + t];
  return res;
}

bool fqp_is_one(const FqPoly& p) { return fqp_deg(p) == 0 && fq_eq(p[0], fq_one(p[0].ring)); }

// distinct monic irreducible factors of p (through its squarefree part)
std::vector<FqPoly> distinct_factors(const FqPoly& p, uint64_t seed) {
  FqPoly d = fqp_derivative(p);
  if (fqp_deg(d) < 0) return {};
  FqPoly g = fqp_gcd(p, d);
  FqPoly sf = fqp_is_one(g) ? p : fqp_divrem(p, g).first;
  if (fqp_deg(sf) < 1) return {};
  return fqp_factor(fqp_monic(sf), seed);
}

uint64_t modinv_u64(uint64_t a, uint64_t n) {
  if (n == 1) return 0;
  long long t = 0, nt = 1, r = (long long)n, nr = (long long)(a % n);
  while (nr) {
    long long q = r / nr;
    std::swap(t -= q * nt, nt);
    std::swap(r -= q * nr, nr);
  }
  require(r == 1, "not invertible in modular inverse");
  return (uint64_t)((t % (long long)n + (long long)n) % (long long)n);
}

// O_K[y]/(gt) with y a primitive root of unity of order eprime
struct CycAlg {
  Ring R;
  uint64_t eprime = 1;
  int D = 1;
  OKPoly gt;
  std::vector<OKPoly> ypow;  // y^t mod gt
};

CycAlg make_cyc_alg(const Ring& R, uint64_t eprime) {
  CycAlg C;
  C.R = R;
  C.eprime = eprime;
  auto phi = cyclotomic_poly(eprime);
  OKPoly P;
  for (long long c : phi) P.push_back(ok_from_int(R, c));
  auto fac = poly_factor_squarefree_local(P, 0xC1C0);
  C.gt = fac[0];
  C.D = okp_deg(C.gt);
  OKPoly y = {ok_zero(R), ok_one(R)};
  C.ypow.resize(eprime);
  C.ypow[0] = {ok_one(R)};
  for (uint64_t t = 1; t < eprime; t++) C.ypow[t] = okp_mulmod(C.ypow[t - 1], y, C.gt);
  return C;
}

// value of a Galois-stable sum of e-th roots of unity as an O_K scalar;
// the ell-part collapses through sums over primitive ell-power roots.
OKElem eval_stable_vector(const CycAlg& C, const std::vector<long long>& v, uint64_t e,
                          uint64_t la, int a) {
  const Ring& R = C.R;
  uint64_t ep = C.eprime;
  uint64_t ell = R.ell();
  uint64_t Ainv = modinv_u64(la % ep == 0 && ep == 1 ? 1 : la % ep, ep);
  uint64_t Binv = modinv_u64(ep % (la == 0 ? 1 : la), la);
  auto crt = [&](uint64_t k1, uint64_t k2) -> uint64_t {
    return (k1 * (la % e) % e * Ainv + k2 * (ep % e) % e * Binv) % e;
  };
  auto lval = [&](uint64_t k2) -> int {
    if (k2 == 0) return a;
    int j = 0;
    while (k2 % ell == 0) {
      k2 /= ell;
      j++;
    }
    return j;
  };
  // bucket invariance: within one (k mod ep, v_ell(k mod la)) bucket all
  // multiplicities agree, otherwise the vector was not orbit-stable
  std::vector<uint64_t> lrep((size_t)a + 1, 0);
  uint64_t pw = 1;
  for (int j = 0; j < a; j++) {
    lrep[(size_t)j] = pw;
    pw *= ell;
  }
  lrep[(size_t)a] = 0;
  for (uint64_t k = 0; k < e; k++) {
    uint64_t k1 = k % ep, k2 = k % la;
    int j = lval(k2);
    require(v[(size_t)k] == v[(size_t)crt(k1, lrep[(size_t)j])],
            "value vector is not Galois stable");
  }
  // Sum_k v[k] zeta_e^k with the ell-part summed out: only the two top
  // valuation levels survive, with signs +1 and -1.
  std::vector<OKElem> acc(C.gt.size(), ok_zero(R));
  for (uint64_t k1 = 0; k1 < ep; k1++) {
    long long w = v[(size_t)crt(k1, lrep[(size_t)a])];
    if (a > 0) w -= v[(size_t)crt(k1, lrep[(size_t)(a - 1)])];
    if (!w) continue;
    OKElem wo = ok_from_int(R, w);
    const OKPoly& yp = C.ypow[(k1 * Ainv) % ep];
    for (size_t t = 0; t < yp.size(); t++) acc[t] = ok_add(acc[t], ok_mul(wo, yp[t]));
  }
  for (size_t t = 1; t < acc.size(); t++)
    require(ok_is_zero(acc[t]), "stable value has a non-constant component");
  return acc[0];
}

// generators of the exponent action: q on the prime-to-ell part, everything
// on the ell-part
std::vector<uint64_t> galois_exponent_gens(uint64_t q, uint64_t e, uint64_t ep, uint64_t la,
                                           uint64_t ell, int a) {
  std::vector<uint64_t> gens;
  uint64_t Ainv = modinv_u64(la % ep == 0 && ep == 1 ? 1 : la % ep, ep);
  uint64_t Binv = modinv_u64(ep % (la == 0 ? 1 : la), la);
  auto crt = [&](uint64_t k1, uint64_t k2) -> uint64_t {
    return (k1 * (la % e) % e * Ainv + k2 * (ep % e) % e * Binv) % e;
  };
  if (ep > 1) gens.push_back(crt(q % ep, 1 % la));
  if (a > 0) {
    std::vector<uint64_t> lg;
    if (ell == 2) {
      if (a == 2) lg = {3};
      if (a >= 3) lg = {la - 1, 5};
    } else {
      // a primitive root mod ell^a, by direct order computation (la is tiny)
      uint64_t phi = la / ell * (ell - 1);
      for (uint64_t g = 2; g < la && lg.empty(); g++) {
        if (g % ell == 0) continue;
        uint64_t ordv = 1, x = g % la;
        while (x != 1) {
          x = x * g % la;
          ordv++;
        }
        if (ordv == phi) lg = {g};
      }
      require(!lg.empty(), "no primitive root found");
    }
    for (uint64_t t : lg) gens.push_back(crt(1 % ep, t % la));
  }
  std::vector<uint64_t> out;
  for (uint64_t u : gens)
    if (u != 1 && std::find(out.begin(), out.end(), u) == out.end()) out.push_back(u);
  return out;
}

}  // namespace

Representation rep_from_input(const FiniteGroup& G, const std::vector<int>& gens,
                              const std::vector<KMatrix>& images, const Ring& R) {
  require(!images.empty() && gens.size() == images.size(), "one image per generator");
  int d = images[0].M.rows;
  for (const auto& im : images) {
    require(im.M.ring.same(R), "ring mismatch in generator images");
    require(im.M.rows == d && im.M.cols == d, "generator images must be square of equal size");
    kmat_inv(im);  // NotInvertible propagates
  }
  if ((int)subgroup_closure(G, gens).size() != G.n)
    fail(Err::ParseError, "the given elements do not generate the group");

  Representation rho;
  rho.group = G;
  rho.ring = R;
  rho.dim = d;
  rho.images.resize((size_t)G.n);
  std::vector<char> have((size_t)G.n, 0);
  rho.images[(size_t)G.id] = kmat_id(R, d);
  have[(size_t)G.id] = 1;
  std::vector<int> queue = {G.id};
  for (size_t t = 0; t < queue.size(); t++) {
    int g = queue[t];
    for (size_t s = 0; s < gens.size(); s++) {
      int y = G.at(g, gens[s]);
      KMatrix cand = kmat_mul(rho.images[(size_t)g], images[s]);
      if (!have[(size_t)y]) {
        rho.images[(size_t)y] = cand;
        have[(size_t)y] = 1;
        queue.push_back(y);
      } else if (!kmat_eq(rho.images[(size_t)y], cand)) {
        fail(Err::RelationViolated, "generator relations disagree with the table");
      }
    }
  }
  for (char h : have) require(h, "missed an element during image propagation");

  auto check_pair = [&](int x, int y) {
    if (!kmat_eq(rho.images[(size_t)G.at(x, y)],
                 kmat_mul(rho.images[(size_t)x], rho.images[(size_t)y])))
      fail(Err::RelationViolated, "homomorphism property fails");
  };
  if (G.n <= 512) {
    for (int x = 0; x < G.n; x++)
      for (int y = 0; y < G.n; y++) check_pair(x, y);
  } else {
    Rng rng(0x9a17);
    for (int t = 0; t < 4096; t++) check_pair((int)rng.below(G.n), (int)rng.below(G.n));
  }
  return rho;
}

Representation rep_conjugate(const Representation& rho, const KMatrix& B) {
  KMatrix Bi = kmat_inv(B);
  Representation out;
  out.group = rho.group;
  out.ring = rho.ring;
  out.dim = rho.dim;
  out.images.reserve(rho.images.size());
  for (const auto& M : rho.images) out.images.push_back(kmat_mul(kmat_mul(Bi, M), B));
  return out;
}

SubgroupRep rep_restrict(const Representation& rho, const std::vector<int>& elems) {
  const FiniteGroup& G = rho.group;
  std::vector<int> pos((size_t)G.n, -1);
  for (size_t i = 0; i < elems.size(); i++) pos[(size_t)elems[i]] = (int)i;
  int n = (int)elems.size();
  std::vector<std::vector<int>> t((size_t)n, std::vector<int>((size_t)n));
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) {
      int y = pos[(size_t)G.at(elems[(size_t)i], elems[(size_t)j])];
      require(y >= 0, "element subset is not closed");
      t[(size_t)i][(size_t)j] = y;
    }
  SubgroupRep out;
  out.rep.group = group_from_table(t);
  out.rep.ring = rho.ring;
  out.rep.dim = rho.dim;
  for (int e : elems) out.rep.images.push_back(rho.images[(size_t)e]);
  out.elements = elems;
  return out;
}

Lattice stabilize_lattice(const Representation& rho_H) {
  require(rho_H.group.n % (int)rho_H.ring.ell() != 0,
          "stabilization needs a group of order prime to ell");
  Lattice T = lattice_sum(rho_H.images);
  for (const auto& M : rho_H.images) {
    Lattice MT{kmat_mul(M, T.basis)};
    require(lattice_eq(MT, T), "summed lattice is not stable");
  }
  return T;
}

std::vector<FqMatrix> reduce_mod_ell(const Representation& rho_H, const Lattice& T) {
  KMatrix Ti = kmat_inv(T.basis);
  std::vector<FqMatrix> out;
  out.reserve(rho_H.images.size());
  for (const auto& M : rho_H.images) {
    KMatrix C = kmat_mul(kmat_mul(Ti, M), T.basis);
    if (!kmat_is_integral(C)) fail(Err::NotStable, "image does not preserve the lattice");
    out.push_back(fqm_from_okmat(kmat_to_integral(C)));
  }
  return out;
}

MeataxeResult meataxe_is_simple(const std::vector<FqMatrix>& gens, uint64_t seed) {
  require(!gens.empty(), "need at least one acting matrix");
  const Ring& R = gens[0].ring;
  int n = gens[0].rows;
  for (const auto& g : gens)
    require(g.ring.same(R) && g.rows == n && g.cols == n, "acting matrices must match");
  if (n == 1) return {true, {}};
  std::vector<FqMatrix> tg;
  tg.reserve(gens.size());
  for (const auto& g : gens) tg.push_back(fqm_transpose(g));

  Rng rng(seed);
  for (int attempt = 0; attempt < 32; attempt++) {
    // random algebra element: a few products plus a singleton
    FqMatrix th = fqm_zero(R, n, n);
    for (int t = 0; t < 3; t++) {
      const FqMatrix& A = gens[rng.below(gens.size())];
      const FqMatrix& B = gens[rng.below(gens.size())];
      th = fqm_add(th, fqm_scal(fqm_mul(A, B), rand_fq(rng, R)));
    }
    th = fqm_add(th, fqm_scal(gens[rng.below(gens.size())], rand_fq(rng, R)));

    FqPoly p = fqm_charpoly(th);
    for (const FqPoly& f : distinct_factors(p, seed ^ (0x51ed + (uint64_t)attempt))) {
      FqMatrix W = fqm_kernel(fqm_eval_poly(f, th));
      if (W.cols == 0) continue;
      std::vector<uint64_t> v0((size_t)n * R.m());
      for (int i = 0; i < n; i++)
        for (int t = 0; t < R.m(); t++) v0[(size_t)i * R.m() + t] = W.at(i, 0)[t];
      FqSpan sp = fq_spin(v0, gens);
      if (sp.dim() < n) return submodule_from_span(sp, gens);
      if (W.cols != fqp_deg(f)) continue;  // Norton needs multiplicity one
      FqMatrix Wt = fqm_kernel(fqm_eval_poly(f, fqm_transpose(th)));
      require(Wt.cols > 0, "dual kernel vanished");
      std::vector<uint64_t> u0((size_t)n * R.m());
      for (int i = 0; i < n; i++)
        for (int t = 0; t < R.m(); t++) u0[(size_t)i * R.m() + t] = Wt.at(i, 0)[t];
      FqSpan spt = fq_spin(u0, tg);
      if (spt.dim() == n) return {true, {}};
      // a proper dual submodule annihilates a proper submodule
      FqMatrix U = fqm_zero(R, spt.dim(), n);
      for (int r = 0; r < spt.dim(); r++)
        std::copy(spt.rows[(size_t)r].begin(), spt.rows[(size_t)r].end(),
                  U.a.begin() + (size_t)r * n * R.m());
      FqMatrix ann = fqm_kernel(U);
      require(ann.cols > 0 && ann.cols < n, "annihilator degenerated");
      FqSpan asp(R, n);
      for (int c = 0; c < ann.cols; c++) {
        std::vector<uint64_t> w((size_t)n * R.m());
        for (int i = 0; i < n; i++)
          for (int t = 0; t < R.m(); t++) w[(size_t)i * R.m() + t] = ann.at(i, c)[t];
        asp.insert(w.data());
      }
      return submodule_from_span(asp, gens);
    }
  }
  fail(Err::InconclusiveAfterRetries, "no verdict within the seeded budget");
}

std::vector<IsotypicPiece> isotypic_projectors(const Representation& rho,
                                               const CharacterTable& table) {
  const Ring& R = rho.ring;
  const FiniteGroup& G = rho.group;
  uint64_t ell = R.ell();
  int vl = 0;
  {
    long long n = G.n;
    while (n % (long long)ell == 0) {
      n /= (long long)ell;
      vl++;
    }
  }
  if (R.N() < vl + 4) fail(Err::PrecisionTooLow, "need v_ell(#G) + 4 certified digits");

  uint64_t e = table.e, ep = e, la = 1;
  int a = 0;
  while (ep % ell == 0) {
    ep /= ell;
    la *= ell;
    a++;
  }
  CycAlg C = make_cyc_alg(R, ep);

  int r = (int)table.degrees.size();
  std::vector<uint64_t> ugens = galois_exponent_gens(R.q(), e, ep, la, ell, a);

  // conjugation chi -> chi^sigma on table rows
  std::map<std::vector<std::vector<long long>>, int> row_index;
  for (int x = 0; x < r; x++) row_index[table.values[(size_t)x]] = x;
  auto conj_index = [&](int x, uint64_t u) -> int {
    std::vector<std::vector<long long>> row((size_t)r);
    for (int c = 0; c < r; c++) {
      std::vector<long long> w((size_t)e, 0);
      const auto& src = table.values[(size_t)x][(size_t)c];
      for (uint64_t k = 0; k < e; k++) w[(size_t)(k * u % e)] += src[(size_t)k];
      row[(size_t)c] = std::move(w);
    }
    auto it = row_index.find(row);
    require(it != row_index.end(), "Galois conjugate is not in the table");
    return it->second;
  };

  std::vector<int> orbit_of((size_t)r, -1);
  std::vector<std::vector<int>> orbits;
  for (int x = 0; x < r; x++) {
    if (orbit_of[(size_t)x] >= 0) continue;
    std::vector<int> orb = {x};
    orbit_of[(size_t)x] = (int)orbits.size();
    for (size_t t = 0; t < orb.size(); t++)
      for (uint64_t u : ugens) {
        int y = conj_index(orb[t], u);
        if (orbit_of[(size_t)y] < 0) {
          orbit_of[(size_t)y] = (int)orbits.size();
          orb.push_back(y);
        }
      }
    std::sort(orb.begin(), orb.end());
    orbits.push_back(orb);
  }

  long long unit_part = G.n;
  while (unit_part % (long long)ell == 0) unit_part /= (long long)ell;

  std::vector<IsotypicPiece> out;
  KMatrix total = kmat(mat_zero(R, rho.dim, rho.dim));
  std::vector<KMatrix> projs;
  for (const auto& orb : orbits) {
    // class coefficients: summed value vectors collapsed into O_K
    std::vector<OKElem> alpha;
    alpha.reserve((size_t)r);
    for (int c = 0; c < r; c++) {
      std::vector<long long> v((size_t)e, 0);
      for (int x : orb)
        for (uint64_t k = 0; k < e; k++) v[(size_t)k] += table.values[(size_t)x][(size_t)c][(size_t)k];
      alpha.push_back(eval_stable_vector(C, v, e, la, a));
    }
    KMatrix S = kmat(mat_zero(R, rho.dim, rho.dim));
    for (int g = 0; g < G.n; g++) {
      const OKElem& ag = alpha[(size_t)table.classes.of[(size_t)G.inv[(size_t)g]]];
      if (ok_is_zero(ag)) continue;
      S = kmat_add(S, kmat_scal(rho.img(g), ag));
    }
    S = kmat_scal(S, ok_from_int(R, table.degrees[(size_t)orb[0]]));
    S = kmat_scal(S, ok_inv(ok_from_int(R, unit_part)));
    S = kmat_mul_pow_ell(S, -vl);
    projs.push_back(S);
    total = kmat_add(total, S);

    IsotypicPiece piece;
    piece.projector = S;
    piece.orbit = orb;
    piece.degree = table.degrees[(size_t)orb[0]];
    out.push_back(piece);
  }

  // verify the family before dropping the zero members
  if (!kmat_eq(total, kmat_id(R, rho.dim)))
    fail(Err::PrecisionExhausted, "projector family does not sum to the identity");
  for (size_t i = 0; i < projs.size(); i++) {
    if (!kmat_eq(kmat_mul(projs[i], projs[i]), projs[i]))
      fail(Err::PrecisionExhausted, "projector is not idempotent at certified precision");
    for (int g = 0; g < G.n; g++)
      if (!kmat_eq(kmat_mul(projs[i], rho.img(g)), kmat_mul(rho.img(g), projs[i])))
        fail(Err::PrecisionExhausted, "projector is not central at certified precision");
  }
  std::vector<IsotypicPiece> kept;
  for (auto& p : out)
    if (!kmat_is_zero(p.projector)) kept.push_back(std::move(p));
  return kept;
}

std::vector<KMatrix> simple_split(const Representation& rho, const KMatrix& basis,
                                  uint64_t seed) {
  const Ring& R = rho.ring;
  int n = rho.dim;
  KMatrix B = kmat_normalize(basis);
  require(B.M.rows == n && B.M.cols >= 1, "basis shape mismatch");
  int k = B.M.cols;
  OKMatrix H = hermite_columns(B.M);
  require(H.cols == k, "basis columns are dependent");
  std::vector<int> prows = col_pivot_rows(H);

  // completion by identity columns at the non-pivot rows
  OKMatrix M = mat_zero(R, n, n);
  M.prec = H.prec;
  for (int i = 0; i < n; i++)
    for (int j = 0; j < k; j++) mat_set(M, i, j, mat_get(H, i, j));
  {
    std::vector<char> piv((size_t)n, 0);
    for (int p : prows) piv[(size_t)p] = 1;
    int at = k;
    for (int i = 0; i < n; i++)
      if (!piv[(size_t)i]) mat_set(M, i, at++, ok_one(R));
  }
  KMatrix Mk = kmat(M);
  KMatrix Mi = kmat_inv(Mk);

  std::vector<int> gens = small_generating_set(rho.group);
  if (gens.empty()) gens = {rho.group.id};
  std::vector<OKMatrix> rest;
  for (int g : gens) {
    KMatrix Cg = kmat_mul(kmat_mul(Mi, rho.img(g)), Mk);
    if (k < n) {
      KMatrix low = kblock(Cg, k, n - k, 0, k);
      require(kmat_is_zero(low), "subspace is not invariant under the action");
    }
    rest.push_back(kmat_normalize(kblock(Cg, 0, k, 0, k)).M);
  }

  std::vector<OKMatrix> sys;
  for (const auto& Xg : rest) sys.push_back(hom_system(Xg, Xg));
  OKMatrix Y = kernel_saturated(vstack(sys));
  int c = Y.cols;
  require(c >= 1, "commutant lost the identity");
  if (c == 1) return {kmat(H)};

  std::vector<OKMatrix> comm;
  for (int t = 0; t < c; t++) comm.push_back(mat_from_column(Y, t, k));

  Rng rng(seed);
  for (int attempt = 0; attempt < 32; attempt++) {
    OKMatrix x = mat_zero(R, k, k);
    for (int t = 0; t < c; t++) x = mat_add(x, mat_scal(comm[(size_t)t], rand_ok(rng, R)));
    FqPoly p = fqm_charpoly(fqm_from_okmat(x));
    auto fs = distinct_factors(p, seed ^ (0xFACE + (uint64_t)attempt));
    if (fs.size() < 2) continue;

    // primary components f^m and their residue idempotents
    std::vector<FqPoly> prim;
    for (const auto& f : fs) {
      FqPoly pw = fqp_one(R);
      FqPoly h = p;
      while (true) {
        auto [q2, r2] = fqp_divrem(h, f);
        if (fqp_deg(r2) >= 0) break;
        h = q2;
        pw = fqp_mul(pw, f);
      }
      prim.push_back(pw);
    }
    std::vector<OKMatrix> Es;
    OKMatrix esum = mat_zero(R, k, k);
    bool lifted = true;
    for (const auto& pf : prim) {
      FqPoly hi = fqp_divrem(p, pf).first;
      FqPoly wi = fqp_divrem(fqp_mul(hi, fqp_invmod(hi, pf)), p).second;
      OKMatrix E = okp_eval_mat(okp_lift(R, wi), x);
      int it = 0;
      while (true) {
        OKMatrix E2 = mat_mul(E, E);
        if (mat_eq(E2, E)) break;
        OKMatrix E3 = mat_mul(E2, E);
        E = mat_sub(mat_scal(E2, ok_from_int(R, 3)), mat_scal(E3, ok_from_int(R, 2)));
        require(++it <= 64, "idempotent refinement did not settle");
      }
      for (const auto& Xg : rest)
        if (!mat_eq(mat_mul(E, Xg), mat_mul(Xg, E))) {
          lifted = false;
          break;
        }
      if (!lifted) break;
      Es.push_back(E);
      esum = mat_add(esum, E);
    }
    if (!lifted || !mat_eq(esum, mat_id(R, k)))
      fail(Err::SplitInconclusive, "idempotent family failed verification");

    std::vector<KMatrix> pieces;
    int dims = 0;
    for (const auto& E : Es) {
      OKMatrix V = kernel_saturated(mat_sub(mat_id(R, k), E));
      if (V.cols == 0 || V.cols == k) fail(Err::SplitInconclusive, "degenerate idempotent image");
      dims += V.cols;
      KMatrix amb = kmat_mul(kmat(H), kmat(V));
      auto sub = simple_split(rho, amb, rng.u64());
      for (auto& s : sub) pieces.push_back(std::move(s));
    }
    if (dims != k) fail(Err::SplitInconclusive, "split dimensions do not add up");
    return pieces;
  }
  return {kmat(H)};  // no further splitting found within the budget
}

CentralizerData centralizer_field(const Representation& tau, const BilinearForm* f) {
  const Ring& R = tau.ring;
  int n = tau.dim;
  std::vector<int> gens = small_generating_set(tau.group);
  if (gens.empty()) gens = {tau.group.id};

  std::vector<OKMatrix> sys;
  std::vector<FqMatrix> fsys;
  for (int g : gens) {
    OKMatrix Mg = kmat_normalize(tau.img(g)).M;
    sys.push_back(hom_system(Mg, Mg));
    FqMatrix rg = fqm_from_okmat(Mg);
    fsys.push_back(fq_hom_system(rg, rg));
  }
  OKMatrix Y = kernel_saturated(vstack(sys));
  int c = Y.cols;
  require(c >= 1, "commutant lost the identity");

  CentralizerData cd;
  cd.deg = c;
  for (int t = 0; t < c; t++) cd.basis.push_back(mat_from_column(Y, t, n));

  for (const auto& Bm : cd.basis) {
    KMatrix Bk = kmat(Bm);
    for (const auto& img : tau.images)
      require(kmat_eq(kmat_mul(Bk, img), kmat_mul(img, Bk)),
              "centralizer element does not commute with the whole action");
  }
  for (int i = 0; i < c; i++)
    for (int j = i + 1; j < c; j++)
      if (!mat_eq(mat_mul(cd.basis[(size_t)i], cd.basis[(size_t)j]),
                  mat_mul(cd.basis[(size_t)j], cd.basis[(size_t)i])))
        fail(Err::NotCommutative, "commuting algebra is not commutative; module is not simple");

  // mod-ell commutant dimension must match (order prime to ell)
  {
    FqMatrix S = fqm_zero(R, 0, 0);
    int rows = 0;
    for (const auto& b : fsys) rows += b.rows;
    S = fqm_zero(R, rows, n * n);
    int at = 0;
    for (const auto& b : fsys) {
      std::copy(b.a.begin(), b.a.end(), S.a.begin() + (size_t)at * n * n * R.m());
      at += b.rows;
    }
    require(fqm_kernel(S).cols == c, "residue commutant dimension mismatch");
  }

  // unramifiedness: the residue algebra is a field of degree c
  {
    bool field_ok = false;
    Rng frng(0xF1E1D);
    for (int t = 0; t < 16 + c && !field_ok; t++) {
      FqMatrix xb = fqm_zero(R, n, n);
      if (t < c)
        xb = fqm_from_okmat(cd.basis[(size_t)t]);
      else
        for (int i = 0; i < c; i++)
          xb = fqm_add(xb, fqm_scal(fqm_from_okmat(cd.basis[(size_t)i]), rand_fq(frng, R)));
      FqSpan sp(R, n * n);
      std::vector<FqMatrix> pows = {fqm_id(R, n)};
      sp.insert(pows[0].a.data());
      FqMatrix nxt = pows[0];
      int d = 0;
      while (d == 0) {
        nxt = fqm_mul(pows.back(), xb);
        if (!sp.insert(nxt.a.data()))
          d = (int)pows.size();
        else
          pows.push_back(nxt);
        require((int)pows.size() <= c + 1, "minimal polynomial degree exceeded the algebra");
      }
      if (d != c) continue;
      FqMatrix P = fqm_zero(R, n * n, d);
      for (int j = 0; j < d; j++)
        for (int i = 0; i < n * n; i++)
          fqm_set(P, i, j, fqm_get(pows[(size_t)j], i / n, i % n));
      FqMatrix tgt = fqm_zero(R, n * n, 1);
      for (int i = 0; i < n * n; i++) fqm_set(tgt, i, 0, fqm_get(nxt, i / n, i % n));
      FqMatrix co = fqm_solve(P, tgt);
      FqPoly mp;
      for (int j = 0; j < d; j++) mp.push_back(fq_neg(fqm_get(co, j, 0)));
      mp.push_back(fq_one(R));
      FqPoly dp = fqp_derivative(mp);
      if (fqp_deg(dp) < 0 || !fqp_is_one(fqp_gcd(mp, dp))) continue;
      if (fqp_factor(mp, 0xAB1E).size() == 1) field_ok = true;
    }
    require(field_ok, "residue algebra is not an unramified field of full degree");
  }

  // coordinate solver: c independent rows of the stacked basis
  OKMatrix BV = mat_zero(R, n * n, c);
  for (int t = 0; t < c; t++)
    for (int i = 0; i < n * n; i++) mat_set(BV, i, t, mat_get(cd.basis[(size_t)t], i / n, i % n));
  std::vector<int> prow;
  {
    FqMatrix BVr = fqm_from_okmat(BV);
    FqSpan sp(R, c);
    for (int i = 0; i < n * n && (int)prow.size() < c; i++) {
      std::vector<uint64_t> row((size_t)c * R.m());
      for (int j = 0; j < c; j++)
        for (int w = 0; w < R.m(); w++) row[(size_t)j * R.m() + w] = BVr.at(i, j)[w];
      if (sp.insert(row.data())) prow.push_back(i);
    }
    require((int)prow.size() == c, "basis rows do not reach full rank");
  }
  OKMatrix Ssub = mat_zero(R, c, c);
  Ssub.prec = BV.prec;
  for (int i = 0; i < c; i++)
    for (int j = 0; j < c; j++) mat_set(Ssub, i, j, mat_get(BV, prow[(size_t)i], j));
  OKMatrix Sinv = mat_inv(Ssub);
  auto coords_try = [&](const OKMatrix& u, OKMatrix& out) -> bool {
    OKMatrix v = mat_zero(R, c, 1);
    v.prec = u.prec;
    for (int i = 0; i < c; i++)
      mat_set(v, i, 0, mat_get(u, prow[(size_t)i] / n, prow[(size_t)i] % n));
    out = mat_mul(Sinv, v);
    OKMatrix back = mat_zero(R, n, n);
    back.prec = std::min(out.prec, BV.prec);
    for (int t = 0; t < c; t++) {
      OKElem ct = mat_get(out, t, 0);
      back = mat_add(back, mat_scal(cd.basis[(size_t)t], ct));
    }
    return mat_eq(back, u);
  };

  for (int i = 0; i < c; i++) {
    OKMatrix reg = mat_zero(R, c, c);
    for (int j = 0; j < c; j++) {
      OKMatrix co;
      require(coords_try(mat_mul(cd.basis[(size_t)i], cd.basis[(size_t)j]), co),
              "product escapes the algebra");
      for (int t = 0; t < c; t++) mat_set(reg, t, j, mat_get(co, t, 0));
    }
    cd.reg.push_back(reg);
  }

  if (f) {
    KMatrix gram = f->gram;
    KMatrix gi = kmat_inv(gram);
    std::vector<OKMatrix> primed;
    cd.invol = mat_zero(R, c, c);
    for (int i = 0; i < c; i++) {
      KMatrix up = kmat_mul(kmat_mul(gi, kmat_transpose(kmat(cd.basis[(size_t)i]))), gram);
      if (!kmat_is_integral(up))
        fail(Err::InvolutionEscapesE, "adjoint has a denominator; form is not perfect here");
      OKMatrix upi = kmat_to_integral(up);
      OKMatrix co;
      if (!coords_try(upi, co))
        fail(Err::InvolutionEscapesE, "adjoint leaves the commuting algebra");
      primed.push_back(upi);
      for (int t = 0; t < c; t++) mat_set(cd.invol, t, i, mat_get(co, t, 0));
    }
    cd.has_invol = true;
    require(mat_is_identity(mat_mul(cd.invol, cd.invol)), "involution does not square to one");
    for (int i = 0; i < c; i++)
      for (int j = i; j < c; j++) {
        OKMatrix lhs;
        KMatrix lk = kmat_mul(
            kmat_mul(gi, kmat_transpose(kmat(mat_mul(cd.basis[(size_t)i], cd.basis[(size_t)j])))),
            gram);
        require(kmat_is_integral(lk), "adjoint of a product has a denominator");
        lhs = kmat_to_integral(lk);
        require(mat_eq(lhs, mat_mul(primed[(size_t)i], primed[(size_t)j])),
                "involution is not an algebra automorphism");
      }
    OKMatrix fixed = kernel_saturated(mat_sub(cd.invol, mat_id(R, c)));
    cd.e0_deg = fixed.cols;
    require(cd.e0_deg >= 1, "involution has no fixed points");
    require(c % cd.e0_deg == 0 && (c / cd.e0_deg == 1 || c / cd.e0_deg == 2),
            "fixed subalgebra index is not 1 or 2");
    cd.e_over_e0 = c / cd.e0_deg;
    for (int t = 0; t < cd.e0_deg; t++) {
      OKMatrix b0 = mat_zero(R, n, n);
      b0.prec = fixed.prec;
      for (int i = 0; i < c; i++)
        b0 = mat_add(b0, mat_scal(cd.basis[(size_t)i], mat_get(fixed, i, t)));
      cd.e0_basis.push_back(b0);
    }
  }
  return cd;
}

std::vector<OKElem> centralizer_coords(const CentralizerData& cd, const OKMatrix& u) {
  require(!cd.basis.empty(), "empty centralizer basis");
  const Ring& R = cd.basis[0].ring;
  int n = cd.basis[0].rows, c = cd.deg;
  OKMatrix BV = mat_zero(R, n * n, c);
  for (int t = 0; t < c; t++)
    for (int i = 0; i < n * n; i++) mat_set(BV, i, t, mat_get(cd.basis[(size_t)t], i / n, i % n));
  std::vector<int> prow;
  FqMatrix BVr = fqm_from_okmat(BV);
  FqSpan sp(R, c);
  for (int i = 0; i < n * n && (int)prow.size() < c; i++) {
    std::vector<uint64_t> row((size_t)c * R.m());
    for (int j = 0; j < c; j++)
      for (int w = 0; w < R.m(); w++) row[(size_t)j * R.m() + w] = BVr.at(i, j)[w];
    if (sp.insert(row.data())) prow.push_back(i);
  }
  require((int)prow.size() == c, "basis rows do not reach full rank");
  OKMatrix Ssub = mat_zero(R, c, c);
  Ssub.prec = BV.prec;
  for (int i = 0; i < c; i++)
    for (int j = 0; j < c; j++) mat_set(Ssub, i, j, mat_get(BV, prow[(size_t)i], j));
  OKMatrix v = mat_zero(R, c, 1);
  v.prec = u.prec;
  for (int i = 0; i < c; i++)
    mat_set(v, i, 0, mat_get(u, prow[(size_t)i] / n, prow[(size_t)i] % n));
  OKMatrix co = mat_mul(mat_inv(Ssub), v);
  OKMatrix back = mat_zero(R, n, n);
  back.prec = std::min(co.prec, u.prec);
  for (int t = 0; t < c; t++)
    back = mat_add(back, mat_scal(cd.basis[(size_t)t], mat_get(co, t, 0)));
  require(mat_eq(back, u), "matrix is outside the commuting algebra");
  std::vector<OKElem> out;
  for (int t = 0; t < c; t++) out.push_back(mat_get(co, t, 0));
  return out;
}

OKMatrix intertwiner(const Representation& tau, const Representation& tau2, uint64_t seed) {
  const Ring& R = tau.ring;
  int n = tau.dim;
  require(tau2.dim == n && tau2.ring.same(R) && tau2.group.n == tau.group.n,
          "intertwiner endpoints do not match");
  require(tau.group.n % (int)R.ell() != 0, "averaging needs a group of order prime to ell");
  const FiniteGroup& G = tau.group;

  std::vector<OKMatrix> I1, I2;
  for (int g = 0; g < G.n; g++) {
    if (!kmat_is_integral(tau.img(g)) || !kmat_is_integral(tau2.img(g)))
      fail(Err::NotStable, "images must preserve the standard lattice");
    I1.push_back(kmat_to_integral(tau.img(g)));
    I2.push_back(kmat_to_integral(tau2.img(g)));
  }
  OKElem inv_n = ok_inv(ok_from_int(R, G.n));
  auto average = [&](const OKMatrix& X) -> OKMatrix {
    OKMatrix s = mat_zero(R, n, n);
    s.prec = X.prec;
    for (int h = 0; h < G.n; h++)
      s = mat_add(s, mat_mul(mat_mul(I2[(size_t)h], X), I1[(size_t)G.inv[(size_t)h]]));
    return mat_scal(s, inv_n);
  };
  auto verify = [&](const OKMatrix& A) {
    for (int h = 0; h < G.n; h++)
      require(mat_eq(mat_mul(I2[(size_t)h], A), mat_mul(A, I1[(size_t)h])),
              "averaged map does not intertwine");
  };

  OKMatrix A = average(mat_id(R, n));
  if (mat_unit_det(A)) {
    verify(A);
    return A;
  }

  std::vector<int> gens = small_generating_set(G);
  if (gens.empty()) gens = {G.id};
  std::vector<FqMatrix> blocks;
  int rows = 0;
  for (int g : gens) {
    blocks.push_back(fq_hom_system(fqm_from_okmat(I2[(size_t)g]), fqm_from_okmat(I1[(size_t)g])));
    rows += blocks.back().rows;
  }
  FqMatrix S = fqm_zero(R, rows, n * n);
  int at = 0;
  for (const auto& b : blocks) {
    std::copy(b.a.begin(), b.a.end(), S.a.begin() + (size_t)at * n * n * R.m());
    at += b.rows;
  }
  FqMatrix Hb = fqm_kernel(S);
  int hdim = Hb.cols;
  if (hdim == 0) fail(Err::NotIsomorphic, "mod-ell Hom dimension 0");

  Rng rng(seed);
  for (int attempt = 0; attempt < 32; attempt++) {
    FqMatrix Xr = fqm_zero(R, n, n);
    if (attempt < hdim)
      Xr = fqm_from_column(Hb, attempt, n);
    else
      for (int t = 0; t < hdim; t++)
        Xr = fqm_add(Xr, fqm_scal(fqm_from_column(Hb, t, n), rand_fq(rng, R)));
    if (fqm_rank(Xr) != n) continue;
    OKMatrix X = mat_zero(R, n, n);
    for (int i = 0; i < n; i++)
      for (int j = 0; j < n; j++) mat_set(X, i, j, fq_lift(fqm_get(Xr, i, j)));
    OKMatrix A2 = average(X);
    require(mat_unit_det(A2), "average of a unit hom lost invertibility");
    verify(A2);
    return A2;
  }
  fail(Err::NotIsomorphic,
       "no unit in the mod-ell Hom space (dimension " + std::to_string(hdim) + ")");
}

}  // namespace symplift
