#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "symplift/rng.hpp"
#include "symplift/symplectic.hpp"

using namespace symplift;

namespace {

KMatrix km(const Ring& R, int n, const std::vector<long long>& v, int shift = 0) {
  OKMatrix M = mat_zero(R, n, n);
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) mat_set(M, i, j, ok_from_int(R, v[(size_t)(i * n + j)]));
  return kmat_normalize({M, shift});
}

OKMatrix tpow(const OKMatrix& A, uint64_t e) {
  OKMatrix acc = mat_id(A.ring, A.rows);
  OKMatrix base = A;
  while (e) {
    if (e & 1) acc = mat_mul(acc, base);
    e >>= 1;
    if (e) base = mat_mul(base, base);
  }
  return acc;
}

OKMatrix kron(const OKMatrix& A, const OKMatrix& B) {
  OKMatrix K = mat_zero(A.ring, A.rows * B.rows, A.cols * B.cols);
  K.prec = std::min(A.prec, B.prec);
  for (int ia = 0; ia < A.rows; ia++)
    for (int ja = 0; ja < A.cols; ja++)
      for (int ib = 0; ib < B.rows; ib++)
        for (int jb = 0; jb < B.cols; jb++)
          mat_set(K, ia * B.rows + ib, ja * B.cols + jb,
                  ok_mul(mat_get(A, ia, ja), mat_get(B, ib, jb)));
  return K;
}

FiniteGroup sub_table(const FiniteGroup& G, const std::vector<int>& elems) {
  std::vector<int> pos((size_t)G.n, -1);
  for (size_t i = 0; i < elems.size(); i++) pos[(size_t)elems[i]] = (int)i;
  std::vector<std::vector<int>> t(elems.size(), std::vector<int>(elems.size()));
  for (size_t i = 0; i < elems.size(); i++)
    for (size_t j = 0; j < elems.size(); j++)
      t[i][j] = pos[(size_t)G.at(elems[i], elems[j])];
  return group_from_table(t);
}

// minimal polynomial over Z_ell of a Teichmuller point of exact order p,
// computed inside the degree-d unramified scratch extension; monic, d+1
// coefficients, constant term first
std::vector<OKElem> orbit_minpoly(uint64_t ell, int d, uint64_t p, const Ring& R1) {
  Ring Rd = Ring::create(ell, d, R1.N());
  uint64_t q = 1;
  for (int i = 0; i < d; i++) q *= ell;
  FqElem o = fq_one(Rd);
  for (long long t = 0; fq_eq(o, fq_one(Rd)); t++) {
    REQUIRE(t < 64);
    o = fq_pow(fq_add(fq_gen(Rd), fq_from_int(Rd, t)), (q - 1) / p);
  }
  OKElem zeta = teichmuller(o);
  std::vector<OKElem> poly = {ok_one(Rd)};
  uint64_t e = 1;
  for (int j = 0; j < d; j++) {
    OKElem root = ok_pow(zeta, e);
    std::vector<OKElem> nxt(poly.size() + 1, ok_zero(Rd));
    for (size_t i = 0; i < poly.size(); i++) {
      nxt[i + 1] = ok_add(nxt[i + 1], poly[i]);
      nxt[i] = ok_sub(nxt[i], ok_mul(root, poly[i]));
    }
    poly = nxt;
    e = e * ell % p;
  }
  std::vector<OKElem> out;
  for (const OKElem& cf : poly) {
    for (int i = 1; i < Rd.m(); i++) REQUIRE(cf.c[(size_t)i] == 0);
    out.push_back(ok_from_int(R1, (long long)cf.c[0]));
  }
  return out;
}

OKMatrix companion_of(const Ring& R, const std::vector<OKElem>& mp) {
  int d = (int)mp.size() - 1;
  OKMatrix C = mat_zero(R, d, d);
  for (int i = 0; i + 1 < d; i++) mat_set(C, i + 1, i, ok_one(R));
  for (int i = 0; i < d; i++) mat_set(C, i, d - 1, ok_neg(mp[(size_t)i]));
  return C;
}

std::vector<OKElem> polymulmod(const Ring& R, const std::vector<OKElem>& a,
                               const std::vector<OKElem>& b, const std::vector<OKElem>& mp) {
  int d = (int)mp.size() - 1;
  std::vector<OKElem> prod(a.size() + b.size() - 1, ok_zero(R));
  for (size_t i = 0; i < a.size(); i++)
    for (size_t j = 0; j < b.size(); j++)
      prod[i + j] = ok_add(prod[i + j], ok_mul(a[i], b[j]));
  for (int i = (int)prod.size() - 1; i >= d; i--) {
    OKElem lead = prod[(size_t)i];
    if (ok_is_zero(lead)) continue;
    for (int j = 0; j < d; j++)
      prod[(size_t)(i - d + j)] = ok_sub(prod[(size_t)(i - d + j)], ok_mul(lead, mp[(size_t)j]));
    prod[(size_t)i] = ok_zero(R);
  }
  if ((int)prod.size() > d) prod.resize((size_t)d);
  while ((int)prod.size() < d) prod.push_back(ok_zero(R));
  return prod;
}

// matrix of the ring endomorphism x -> x^e of Z[x]/(mp) on the power basis
OKMatrix subst_matrix(const Ring& R, const std::vector<OKElem>& mp, uint64_t e) {
  int d = (int)mp.size() - 1;
  std::vector<OKElem> x(2, ok_zero(R));
  x[1] = ok_one(R);
  std::vector<OKElem> xe(1, ok_one(R));
  for (uint64_t i = 0; i < e; i++) xe = polymulmod(R, xe, x, mp);
  OKMatrix A = mat_zero(R, d, d);
  std::vector<OKElem> col(1, ok_one(R));
  for (int j = 0; j < d; j++) {
    for (size_t r = 0; r < col.size(); r++) mat_set(A, (int)r, j, col[r]);
    col = polymulmod(R, col, xe, mp);
  }
  return A;
}

// H-only representation sending a fixed order-p generator to C
SubgroupRep teich_subrep(const FiniteGroup& G, const InertiaStructure& st, const OKMatrix& C,
                         uint64_t p) {
  int h0 = -1;
  for (int g : st.H)
    if ((uint64_t)element_order(G, g) == p) {
      h0 = g;
      break;
    }
  REQUIRE(h0 > 0);
  std::vector<int> dlog((size_t)G.n, -1);
  int cur = G.id;
  for (uint64_t e = 0; e < p; e++) {
    dlog[(size_t)cur] = (int)e;
    cur = G.at(cur, h0);
  }
  std::vector<OKMatrix> cpow((size_t)p);
  cpow[0] = mat_id(C.ring, C.rows);
  for (uint64_t e = 1; e < p; e++) cpow[e] = mat_mul(cpow[e - 1], C);
  FiniteGroup Hg = sub_table(G, st.H);
  std::vector<KMatrix> timg;
  for (int h : st.H) timg.push_back(kmat(cpow[(size_t)dlog[(size_t)h]]));
  return SubgroupRep{Representation{Hg, C.ring, C.rows, timg}, st.H};
}

OKMatrix unit_member(const std::vector<OKMatrix>& basis, uint64_t seed) {
  REQUIRE(!basis.empty());
  for (const OKMatrix& F : basis)
    if (mat_unit_det(F)) return F;
  const Ring& R = basis[0].ring;
  Rng rng(seed);
  for (int t = 0; t < 200; t++) {
    OKMatrix F = mat_zero(R, basis[0].rows, basis[0].cols);
    for (const OKMatrix& b : basis)
      F = mat_add(F, mat_scal(b, ok_from_int(R, (long long)rng.below(R.ell() * R.ell()))));
    if (mat_unit_det(F)) return F;
  }
  REQUIRE(false);
  return basis[0];
}

struct DemoInput {
  FiniteGroup G;
  Representation rho;
  BilinearForm form;
  InertiaStructure st;
};

// six dimensional product input: an order-3 plane plus the cyclic block
DemoInput c3xc5_input(const Ring& R) {
  FiniteGroup G = group_product(family_cyclic(3), family_cyclic(5));
  OKMatrix C3 = kmat_to_integral(km(R, 2, {0, -1, 1, -1}));
  CyclicBase base = cyclic_base_embedding(5, R, 2);
  Representation rho = rep_from_input(
      G, {5, 1},
      {kmat(mat_block_diag(C3, mat_id(R, 4))), kmat(mat_block_diag(mat_id(R, 2), base.C))}, R);
  OKMatrix E = mat_block_diag(kmat_to_integral(km(R, 2, {0, 1, -1, 0})),
                              kmat_to_integral(base.form.gram));
  return DemoInput{G, rho, BilinearForm{kmat(E), Parity::Alternating, true},
                   inertia_split(G, 5)};
}

}  // namespace

TEST_CASE("extension with a trivial twist collapses to the identity supplement") {
  Ring R = Ring::create(5, 1, 12);
  FiniteGroup G = group_product(family_cyclic(3), family_cyclic(5));
  InertiaStructure st = inertia_split(G, 5);
  REQUIRE(st.H == std::vector<int>({0, 5, 10}));
  REQUIRE(st.k == 1);
  Representation full = rep_from_input(G, {5, 1}, {km(R, 2, {0, -1, 1, -1}), kmat_id(R, 2)}, R);
  SubgroupRep tau = rep_restrict(full, st.H);
  BilinearForm f{km(R, 2, {0, 1, -1, 0}), Parity::Alternating, true};

  ExtensionResult ext = extend_to_G(tau, f, st, 1);
  CHECK(mat_is_identity(ext.trace.A));
  CHECK(mat_is_identity(ext.trace.a));
  CHECK(mat_is_identity(ext.trace.a1));
  CHECK(mat_is_identity(ext.trace.A1));
  CHECK(mat_is_identity(ext.trace.b));
  CHECK(mat_is_identity(ext.trace.B));
  CHECK(ext.trace.mu == 4);
  CHECK(ext.trace.s == 2);
  CHECK(ext.cd.e0_deg == 1);
  CHECK(ext.cd.e_over_e0 == 2);
  CHECK(kmat_eq(ext.tau_G.img(st.c), kmat_id(R, 2)));
  CHECK(kmat_eq(ext.tau_G.img(5), km(R, 2, {0, -1, 1, -1})));
  CHECK(mat_eq(kmat_to_integral(ext.form.gram), kmat_to_integral(f.gram)));
}

TEST_CASE("extension along a nontrivial twist on the 20-dimensional module") {
  Ring R = Ring::create(5, 1, 16);
  FiniteGroup G = family_semidirect(41, 5, 1, 10);
  InertiaStructure st = inertia_split(G, 5);
  REQUIRE((int)st.H.size() == 41);
  REQUIRE(st.k == 1);

  std::vector<OKElem> mp = orbit_minpoly(5, 20, 41, R);
  OKMatrix C = companion_of(R, mp);
  CHECK(mat_is_identity(tpow(C, 41)));
  CHECK(!mat_is_identity(C));
  SubgroupRep tau = teich_subrep(G, st, C, 41);
  OKMatrix F0 = unit_member(invariant_forms({kmat(C)}, Parity::Alternating), 6);
  BilinearForm f{kmat(F0), Parity::Alternating, true};

  ExtensionResult ext = extend_to_G(tau, f, st, 2026);
  const ExtensionTrace& tr = ext.trace;
  CHECK(ext.cd.deg == 20);
  CHECK(ext.cd.e0_deg == 10);
  CHECK(ext.cd.e_over_e0 == 2);

  OKMatrix F = kmat_to_integral(ext.form.gram);
  // A carries the form onto its multiple by the multiplier a
  CHECK(mat_eq(mat_mul(mat_transpose(tr.A), mat_mul(F, tr.A)), mat_mul(F, tr.a)));
  // a1 squares to a times its conjugate under A
  OKMatrix sig = mat_mul(mat_inv(tr.A), mat_mul(tr.a, tr.A));
  CHECK(mat_eq(mat_mul(tr.a1, tr.a1), mat_mul(tr.a, sig)));
  // A1 differs from A^2 a1^{-1} by a norm-one member of the commuting
  // algebra, which crushes A1^{#L} to the identity without touching the
  // conjugation action or the form
  OKMatrix D = mat_mul(tr.A1, mat_inv(mat_mul(mat_mul(tr.A, tr.A), mat_inv(tr.a1))));
  CHECK(mat_eq(mat_mul(D, C), mat_mul(C, D)));
  CHECK(mat_is_identity(mat_mul(mat_mul(mat_inv(F), mat_mul(mat_transpose(D), F)), D)));
  CHECK(mat_eq(mat_mul(mat_transpose(tr.A1), mat_mul(F, tr.A1)), F));
  CHECK(tr.mu == 9765624);
  CHECK(tr.s == 2);
  CHECK(mat_eq(tr.b, tpow(tr.A1, 5)));
  CHECK(mat_is_identity(tr.b));
  CHECK(mat_eq(tr.B, tpow(tr.A1, tr.mu)));
  CHECK(mat_is_identity(tpow(tr.B, 5)));

  // B^s conjugates the subgroup action the way c does
  std::vector<int> posH((size_t)G.n, -1);
  for (size_t i = 0; i < st.H.size(); i++) posH[(size_t)st.H[i]] = (int)i;
  OKMatrix Bs = tpow(tr.B, tr.s);
  for (size_t i = 0; i < st.H.size(); i++) {
    int hc = gconj(G, st.c, st.H[i]);
    CHECK(mat_eq(mat_mul(Bs, kmat_to_integral(tau.rep.images[i])),
                 mat_mul(kmat_to_integral(tau.rep.images[(size_t)posH[(size_t)hc]]), Bs)));
  }
  CHECK(mat_is_identity(tpow(kmat_to_integral(ext.tau_G.img(st.c)), 5)));

  // spot checks on the full homomorphism; the construction verifies every pair
  Rng rng(7);
  for (int t = 0; t < 200; t++) {
    int x = (int)rng.below((uint64_t)G.n), y = (int)rng.below((uint64_t)G.n);
    CHECK(kmat_eq(ext.tau_G.img(G.at(x, y)), kmat_mul(ext.tau_G.img(x), ext.tau_G.img(y))));
  }
  for (int g = 0; g < G.n; g += 17) {
    OKMatrix M = kmat_to_integral(ext.tau_G.img(g));
    CHECK(mat_eq(mat_mul(mat_transpose(M), mat_mul(F, M)), F));
  }
  CHECK(tr.A1.prec >= 12);
  CHECK(tr.B.prec >= 12);
}

TEST_CASE("a twist that changes the isomorphism class is refused") {
  Ring R = Ring::create(5, 1, 16);
  FiniteGroup G = family_semidirect(31, 5, 1, 2);
  InertiaStructure st = inertia_split(G, 5);
  std::vector<OKElem> mp = orbit_minpoly(5, 3, 31, R);
  OKMatrix C = companion_of(R, mp);
  SubgroupRep tau = teich_subrep(G, st, C, 31);
  BilinearForm f{kmat_id(R, 3), Parity::Symmetric, true};
  CHECK_THROWS_WITH_AS(extend_to_G(tau, f, st, 3), doctest::Contains("NotIsomorphicTwist"),
                       Error);
}

TEST_CASE("hyperbolic doubling pairs the module with its inverse transpose") {
  Ring R = Ring::create(5, 1, 10);
  Representation rho = rep_from_input(family_cyclic(3), {1}, {km(R, 2, {0, -1, 1, -1})}, R);
  DoubledRep D = hyperbolic_double(rho);
  CHECK(D.rep.dim == 4);
  OKMatrix M1 = kmat_to_integral(D.rep.img(1));
  CHECK(ok_eq(mat_get(M1, 0, 1), ok_from_int(R, -1)));
  CHECK(ok_eq(mat_get(M1, 1, 0), ok_from_int(R, 1)));
  // inverse transpose block is [[-1,-1],[1,0]]
  CHECK(ok_eq(mat_get(M1, 2, 2), ok_from_int(R, -1)));
  CHECK(ok_eq(mat_get(M1, 2, 3), ok_from_int(R, -1)));
  CHECK(ok_eq(mat_get(M1, 3, 2), ok_from_int(R, 1)));
  CHECK(ok_is_zero(mat_get(M1, 3, 3)));
  CHECK(ok_is_zero(mat_get(M1, 0, 2)));
  CHECK(ok_is_zero(mat_get(M1, 3, 1)));
  // standard pairing: plus identity in the upper right corner
  OKMatrix J = kmat_to_integral(D.form.gram);
  CHECK(ok_eq(mat_get(J, 0, 2), ok_one(R)));
  CHECK(ok_eq(mat_get(J, 1, 3), ok_one(R)));
  CHECK(ok_eq(mat_get(J, 2, 0), ok_from_int(R, -1)));
  CHECK(ok_is_zero(mat_get(J, 0, 1)));
  CHECK(D.form.parity == Parity::Alternating);
  CHECK(D.form.perfect);

  Representation frac = rep_conjugate(rho, km(R, 2, {1, 0, 0, 5}, -1));
  CHECK_THROWS_WITH_AS(hyperbolic_double(frac), doctest::Contains("NotIntegral"), Error);
}

TEST_CASE("induction from the whole group is the identity") {
  Ring R = Ring::create(5, 1, 10);
  FiniteGroup G = family_cyclic(3);
  Representation rho = rep_from_input(G, {1}, {km(R, 2, {0, -1, 1, -1})}, R);
  SubgroupRep f1 = rep_restrict(rho, {0, 1, 2});
  BilinearForm e1{km(R, 2, {0, 1, -1, 0}), Parity::Alternating, true};
  InducedResult ind = induce_symplectic(G, {0, 1, 2}, f1, e1, 4);
  CHECK(ind.cosets == std::vector<int>{0});
  CHECK(ind.psi.dim == 2);
  for (int g = 0; g < 3; g++) CHECK(kmat_eq(ind.psi.img(g), rho.img(g)));
  CHECK(kmat_eq(ind.form.gram, e1.gram));
}

TEST_CASE("induction builds the big cyclic block from the base block") {
  Ring R = Ring::create(5, 1, 12);
  FiniteGroup G = group_product(family_cyclic(25), family_cyclic(2));
  CyclicBase base = cyclic_base_embedding(5, R, 9);
  std::vector<int> g1 = subgroup_closure(G, {10, 1});
  REQUIRE((int)g1.size() == 10);
  FiniteGroup Gs = sub_table(G, g1);
  OKMatrix negI = mat_neg(mat_id(R, 4));
  std::vector<KMatrix> f1img;
  for (int x : g1) {
    int a = x / 2, b = x % 2;
    REQUIRE(a % 5 == 0);
    OKMatrix M = tpow(base.C, (uint64_t)(a / 5));
    if (b) M = mat_mul(M, negI);
    f1img.push_back(kmat(M));
  }
  SubgroupRep f1{Representation{Gs, R, 4, f1img}, g1};
  InducedResult ind = induce_symplectic(G, g1, f1, base.form, 11);
  CHECK(ind.psi.dim == 20);
  CHECK((int)ind.cosets.size() == 5);
  OKMatrix E = kmat_to_integral(ind.form.gram);
  for (int g = 0; g < G.n; g++) {
    OKMatrix M = kmat_to_integral(ind.psi.img(g));
    if (g != G.id) CHECK(!mat_is_identity(M));
    CHECK(mat_eq(mat_mul(mat_transpose(M), mat_mul(E, M)), E));
  }

  // a block action that kills a whole normal subgroup cannot be induced
  FiniteGroup C9 = family_cyclic(9);
  std::vector<int> n3 = subgroup_closure(C9, {3});
  FiniteGroup N3 = sub_table(C9, n3);
  std::vector<KMatrix> ti(3, kmat_id(R, 2));
  SubgroupRep triv{Representation{N3, R, 2, ti}, n3};
  BilinearForm e1{km(R, 2, {0, 1, -1, 0}), Parity::Alternating, true};
  CHECK_THROWS_WITH_AS(induce_symplectic(C9, n3, triv, e1, 5),
                       doctest::Contains("KernelConditionFails"), Error);
}

TEST_CASE("base cyclic block at small primes") {
  Ring R3 = Ring::create(3, 1, 8);
  CyclicBase b3 = cyclic_base_embedding(3, R3, 1);
  CHECK(mat_eq(b3.C, kmat_to_integral(km(R3, 2, {0, -1, 1, -1}))));
  OKMatrix J = kmat_to_integral(b3.form.gram);
  CHECK(mat_unit_det(J));
  CHECK(mat_eq(mat_transpose(J), mat_neg(J)));
  CHECK(mat_eq(mat_mul(mat_transpose(b3.C), mat_mul(J, b3.C)), J));

  Ring R5 = Ring::create(5, 1, 10);
  CyclicBase b5 = cyclic_base_embedding(5, R5, 1);
  CHECK(b5.C.rows == 4);
  CHECK(mat_is_identity(tpow(b5.C, 5)));
  CHECK(!mat_is_identity(b5.C));
  OKMatrix J5 = kmat_to_integral(b5.form.gram);
  CHECK(mat_unit_det(J5));
  CHECK(mat_eq(mat_mul(mat_transpose(b5.C), mat_mul(J5, b5.C)), J5));

  CHECK_THROWS_WITH_AS(cyclic_base_embedding(2, R5, 1), doctest::Contains("Unsupported"), Error);
  CHECK_THROWS_WITH_AS(cyclic_base_embedding(3, R5, 1), doctest::Contains("RingMismatch"), Error);
}

TEST_CASE("cyclic certificates at small exponents") {
  Ring R = Ring::create(5, 1, 12);
  SymplecticCertificate c0 = cyclic_embedding(5, 0, R, 3);
  CHECK(c0.dim == 2);
  CHECK(c0.verified.all_pass);
  CHECK(mat_is_identity(c0.images[(size_t)c0.structure.group.id]));

  SymplecticCertificate c1 = cyclic_embedding(5, 1, R, 3);
  CHECK(c1.dim == 4);
  CHECK(c1.verified.all_pass);
  CHECK(mat_eq(c1.gram, jstd(R, 4)));
  CHECK(mat_is_identity(tpow(c1.images[2], 5)));
  CHECK(!mat_is_identity(c1.images[2]));

  SymplecticCertificate c2 = cyclic_embedding(5, 2, R, 3);
  CHECK(c2.dim == 20);
  CHECK(c2.verified.all_pass);
  CHECK(c2.structure.group.n == 50);
  CHECK(mat_eq(c2.gram, jstd(R, 20)));
  CHECK(!mat_is_identity(tpow(c2.images[2], 5)));
  CHECK(mat_is_identity(tpow(c2.images[2], 25)));

  SymplecticCertificate c2b = cyclic_embedding(5, 2, R, 3);
  REQUIRE(c2b.images.size() == c2.images.size());
  for (size_t i = 0; i < c2.images.size(); i++) CHECK(c2.images[i].a == c2b.images[i].a);

  CHECK_THROWS_WITH_AS(cyclic_embedding(2, 1, R, 3), doctest::Contains("Unsupported"), Error);
}

TEST_CASE("decomposition of symplectic modules") {
  Ring R = Ring::create(5, 1, 12);
  Representation c3 = rep_from_input(family_cyclic(3), {1}, {km(R, 2, {0, -1, 1, -1})}, R);
  BilinearForm e2{km(R, 2, {0, 1, -1, 0}), Parity::Alternating, true};
  auto one = decompose_symplectic_G(c3, e2, 5);
  REQUIRE(one.size() == 1);
  CHECK(!one[0].doubled);
  CHECK(one[0].basis.M.cols == 2);

  // two commuting copies of the plane fill the space either way
  OKMatrix C = kmat_to_integral(km(R, 2, {0, -1, 1, -1}));
  Representation two = rep_from_input(family_cyclic(3), {1}, {kmat(mat_block_diag(C, C))}, R);
  OKMatrix J2 = kmat_to_integral(e2.gram);
  BilinearForm e4{kmat(mat_block_diag(J2, J2)), Parity::Alternating, true};
  auto sq = decompose_symplectic_G(two, e4, 5);
  int tot = 0;
  for (const auto& p : sq) tot += p.basis.M.cols * (p.doubled ? 2 : 1);
  CHECK(tot == 4);

  // a module paired against its dual twin is flagged for doubling
  std::vector<OKElem> mp11 = orbit_minpoly(5, 5, 11, R);
  OKMatrix C11 = companion_of(R, mp11);
  OKMatrix M = mat_block_diag(C11, mat_inv(mat_transpose(C11)));
  Representation hyp = rep_from_input(family_cyclic(11), {1}, {kmat(M)}, R);
  OKMatrix E = mat_zero(R, 10, 10);
  for (int i = 0; i < 5; i++) {
    mat_set(E, i, 5 + i, ok_one(R));
    mat_set(E, 5 + i, i, ok_neg(ok_one(R)));
  }
  auto dbl = decompose_symplectic_G(hyp, BilinearForm{kmat(E), Parity::Alternating, true}, 5);
  REQUIRE(dbl.size() == 1);
  CHECK(dbl[0].doubled);
  CHECK(dbl[0].basis.M.cols == 5);

  BilinearForm bad{kmat(mat_zero(R, 2, 2)), Parity::Alternating, false};
  CHECK_THROWS_WITH_AS(decompose_symplectic_G(c3, bad, 1), doctest::Contains("Internal"), Error);
}

TEST_CASE("embedding a product of a prime-to-ell group with a cyclic ell-part") {
  Ring R = Ring::create(5, 1, 16);
  DemoInput in = c3xc5_input(R);
  EmbedOptions opt;
  opt.seed = 12;
  SymplecticCertificate cert = embed_inertia_group(in.st, in.rho, in.form, opt);
  CHECK(cert.dim == 6);
  CHECK(cert.verified.all_pass);
  CHECK(cert.verified.failed == 0);
  CHECK(mat_eq(cert.gram, jstd(R, 6)));
  bool sawSimple = false, sawCyclic = false;
  for (const auto& le : cert.ledger.entries) {
    if (le.branch == "h-simple") sawSimple = true;
    if (le.branch == "scalar-cyclic") sawCyclic = true;
  }
  CHECK(sawSimple);
  CHECK(sawCyclic);

  // conjugating the input by a unimodular matrix with denominators changes
  // nothing observable; the rebase spends certified digits, so give it room
  Ring Rw = Ring::create(5, 1, 25);
  DemoInput inw = c3xc5_input(Rw);
  std::vector<long long> uv(36, 0);
  for (int i = 0; i < 6; i++) uv[(size_t)(i * 6 + i)] = 5;
  uv[1] = 1;
  KMatrix U = km(Rw, 6, uv, -1);  // identity plus one off-diagonal fifth
  Representation rho2 = rep_conjugate(inw.rho, U);
  CHECK(!kmat_is_integral(rho2.img(5)));
  KMatrix E2 = kmat_mul(kmat_mul(kmat_transpose(U), inw.form.gram), U);
  SymplecticCertificate cert2 =
      embed_inertia_group(inw.st, rho2, BilinearForm{E2, Parity::Alternating, false}, opt);
  CHECK(cert2.dim == 6);
  CHECK(cert2.verified.all_pass);

  // killing part of the group is refused up front
  Representation unf = rep_from_input(in.G, {5, 1}, {kmat_id(R, 6), in.rho.img(1)}, R);
  CHECK_THROWS_WITH_AS(embed_inertia_group(in.st, unf, in.form, opt),
                       doctest::Contains("NotFaithful"), Error);

  // the ring must match the residue characteristic of the structure
  InertiaStructure st3 = inertia_split(in.G, 3);
  CHECK_THROWS_WITH_AS(embed_inertia_group(st3, in.rho, in.form, opt),
                       doctest::Contains("RingMismatch"), Error);
}

TEST_CASE("embedding the quaternion group from a non-integral model") {
  Ring R = Ring::create(5, 1, 16);
  FiniteGroup G = family_quaternion8();
  OKElem s = ok_sqrt(ok_from_int(R, -1));
  OKMatrix Jm = mat_zero(R, 2, 2);
  mat_set(Jm, 0, 0, s);
  mat_set(Jm, 1, 1, ok_neg(s));
  Representation q8 = rep_from_input(G, {2, 4}, {km(R, 2, {0, -1, 1, 0}), kmat(Jm)}, R);
  KMatrix U = km(R, 2, {1, 0, 0, 5}, -1);
  Representation rho = rep_conjugate(q8, U);
  CHECK(!kmat_is_integral(rho.img(2)));
  KMatrix E = kmat_mul(kmat_mul(kmat_transpose(U), km(R, 2, {0, 1, -1, 0})), U);
  InertiaStructure st = inertia_split(G, 5);
  CHECK(st.k == 0);
  EmbedOptions opt;
  opt.seed = 5;
  SymplecticCertificate cert =
      embed_inertia_group(st, rho, BilinearForm{E, Parity::Alternating, false}, opt);
  CHECK(cert.dim == 2);
  CHECK(cert.verified.all_pass);
  CHECK(mat_eq(cert.gram, jstd(R, 2)));
  REQUIRE(cert.ledger.entries.size() == 1);
  CHECK(cert.ledger.entries[0].branch == "h-simple");
  CHECK(cert.ledger.entries[0].w == 2);
}

TEST_CASE("embedding a hyperbolically paired module") {
  Ring R = Ring::create(5, 1, 16);
  FiniteGroup G = family_semidirect(11, 5, 1, 3);
  std::vector<OKElem> mp = orbit_minpoly(5, 5, 11, R);
  OKMatrix C = companion_of(R, mp);
  OKMatrix A = subst_matrix(R, mp, 3);
  // the substitution witnesses the twist: A C = C^3 A and A^5 = 1
  CHECK(mat_eq(mat_mul(A, C), mat_mul(tpow(C, 3), A)));
  CHECK(mat_is_identity(tpow(A, 5)));
  OKMatrix Mh = mat_block_diag(C, mat_inv(mat_transpose(C)));
  OKMatrix Mc = mat_block_diag(A, mat_inv(mat_transpose(A)));
  Representation rho = rep_from_input(G, {1, 11}, {kmat(Mh), kmat(Mc)}, R);
  OKMatrix E = mat_zero(R, 10, 10);
  for (int i = 0; i < 5; i++) {
    mat_set(E, i, 5 + i, ok_one(R));
    mat_set(E, 5 + i, i, ok_neg(ok_one(R)));
  }
  InertiaStructure st = inertia_split(G, 5);
  EmbedOptions opt;
  opt.seed = 17;
  SymplecticCertificate cert =
      embed_inertia_group(st, rho, BilinearForm{kmat(E), Parity::Alternating, true}, opt);
  CHECK(cert.dim == 10);
  CHECK(cert.verified.all_pass);
  bool saw = false;
  for (const auto& le : cert.ledger.entries)
    if (le.branch == "isotropic-double") saw = true;
  CHECK(saw);
}

TEST_CASE("embedding a large cyclic ell-part with a sign") {
  Ring R = Ring::create(5, 1, 16);
  SymplecticCertificate seedCert = cyclic_embedding(5, 2, R, 21);
  FiniteGroup G = seedCert.structure.group;
  std::vector<KMatrix> kimgs;
  for (const OKMatrix& M : seedCert.images) kimgs.push_back(kmat(M));
  Representation rho{G, R, 20, kimgs};
  InertiaStructure st = inertia_split(G, 5);
  EmbedOptions opt;
  opt.seed = 33;
  SymplecticCertificate cert = embed_inertia_group(
      st, rho, BilinearForm{kmat(seedCert.gram), Parity::Alternating, true}, opt);
  CHECK(cert.dim == 20);
  CHECK(cert.verified.all_pass);
  bool saw = false;
  for (const auto& le : cert.ledger.entries)
    if (le.branch == "scalar-cyclic") {
      saw = true;
      CHECK(le.Lsize == 25);
    }
  CHECK(saw);
}

TEST_CASE("ledger inequalities for a compound module with a short extension") {
  // the 28-dimensional module splits through several recursion levels, each
  // spending certified digits; 25 digits is the ell = 5 arithmetic ceiling
  Ring R = Ring::create(5, 1, 25);
  FiniteGroup G = group_product(family_cyclic(3), family_cyclic(25));
  OKMatrix C3 = kmat_to_integral(km(R, 2, {0, -1, 1, -1}));
  CyclicBase base = cyclic_base_embedding(5, R, 2);
  SymplecticCertificate cyc2 = cyclic_embedding(5, 2, R, 2);
  std::vector<KMatrix> imgs;
  imgs.reserve(75);
  for (int a = 0; a < 3; a++)
    for (int b = 0; b < 25; b++) {
      OKMatrix v8 = kron(tpow(C3, (uint64_t)a), tpow(base.C, (uint64_t)(b % 5)));
      imgs.push_back(kmat(mat_block_diag(v8, cyc2.images[(size_t)(2 * b)])));
    }
  Representation rho{G, R, 28, imgs};
  // the quadratic factor carries a perfect symmetric form, the degree-4
  // factor only a perfect alternating one; the product is alternating
  OKMatrix S2 = unit_member(invariant_forms({kmat(C3)}, Parity::Symmetric), 14);
  OKMatrix E8 = kron(S2, kmat_to_integral(base.form.gram));
  OKMatrix E = mat_block_diag(E8, cyc2.gram);
  InertiaStructure st = inertia_split(G, 5);
  EmbedOptions opt;
  opt.seed = 77;
  SymplecticCertificate cert =
      embed_inertia_group(st, rho, BilinearForm{kmat(E), Parity::Alternating, true}, opt);
  CHECK(cert.dim == 28);
  CHECK(cert.verified.all_pass);
  bool sawExt = false, sawCyc = false;
  for (const auto& le : cert.ledger.entries) {
    if (le.branch == "extension-plus-cyclic") {
      sawExt = true;
      CHECK(le.w == 2);
      CHECK(le.r == 4);
      CHECK(le.t == 1);
      CHECK(le.e0_deg == 1);
      CHECK(le.iota == 1);
      CHECK(le.Lsize == 5);
      CHECK(le.eq_divides);
      CHECK(le.eq_bound);
      CHECK(le.eq_phi);
      CHECK(le.eq_budget);
    }
    if (le.branch == "scalar-cyclic") sawCyc = true;
  }
  CHECK(sawExt);
  CHECK(sawCyc);
}

TEST_CASE("the boundary prime needs force and then reports its budget honestly") {
  Ring R = Ring::create(3, 1, 12);
  FiniteGroup G = group_product(family_dihedral(4), family_cyclic(3));
  OKMatrix rot = kmat_to_integral(km(R, 2, {0, -1, 1, 0}));
  OKMatrix flip = kmat_to_integral(km(R, 2, {1, 0, 0, -1}));
  OKMatrix C3 = kmat_to_integral(km(R, 2, {0, -1, 1, -1}));
  Representation rho = rep_from_input(
      G, {3, 12, 1},
      {kmat(kron(rot, mat_id(R, 2))), kmat(kron(flip, mat_id(R, 2))),
       kmat(kron(mat_id(R, 2), C3))},
      R);
  OKMatrix E = kron(mat_id(R, 2), kmat_to_integral(km(R, 2, {0, 1, -1, 0})));
  InertiaStructure st = inertia_split(G, 3);
  BilinearForm f{kmat(E), Parity::Alternating, true};
  EmbedOptions opt;
  opt.seed = 4;
  CHECK_THROWS_WITH_AS(embed_inertia_group(st, rho, f, opt), doctest::Contains("ForceRequired"),
                       Error);
  opt.force = true;
  CHECK_THROWS_WITH_AS(embed_inertia_group(st, rho, f, opt),
                       doctest::Contains("BudgetViolation"), Error);
}

TEST_CASE("verification notices tampering") {
  Ring R = Ring::create(5, 1, 12);
  SymplecticCertificate cert = cyclic_embedding(5, 1, R, 8);
  REQUIRE(cert.verified.all_pass);

  SymplecticCertificate bad = cert;
  OKElem bump = ok_pow(ok_from_int(R, 5), 11);
  mat_set(bad.images[2], 0, 0, ok_add(mat_get(bad.images[2], 0, 0), bump));
  VerifyReport rep = verify_certificate(bad);
  CHECK(!rep.all_pass);
  CHECK(rep.failed >= 1);
  for (const auto& c : rep.checks)
    if (c.name == "homomorphism") CHECK(!c.pass);

  // losing faithfulness is caught even though the algebra still closes
  SymplecticCertificate flat = cyclic_embedding(5, 0, R, 8);
  for (auto& Mi : flat.images) Mi = mat_id(R, 2);
  VerifyReport rep2 = verify_certificate(flat);
  CHECK(!rep2.all_pass);
  for (const auto& c : rep2.checks) {
    if (c.name == "mod-ell faithfulness") CHECK(!c.pass);
    if (c.name == "homomorphism") CHECK(c.pass);
    if (c.name == "gram") CHECK(c.pass);
  }

  // shape violations poison every check
  SymplecticCertificate odd = cyclic_embedding(5, 0, R, 8);
  odd.gram = mat_id(R, 3);
  VerifyReport rep3 = verify_certificate(odd);
  CHECK(!rep3.all_pass);
  CHECK(rep3.failed == (int)rep3.checks.size());
}

TEST_CASE("padding with hyperbolic planes") {
  Ring R = Ring::create(5, 1, 12);
  SymplecticCertificate cert = cyclic_embedding(5, 1, R, 4);
  SymplecticCertificate same = pad_embedding(cert, 4);
  CHECK(same.dim == 4);
  CHECK(same.images[2].a == cert.images[2].a);
  SymplecticCertificate big = pad_embedding(cert, 10);
  CHECK(big.dim == 10);
  CHECK(big.verified.all_pass);
  CHECK(mat_eq(big.gram, jstd(R, 10)));
  OKMatrix M = big.images[2];
  for (int i = 4; i < 10; i++) CHECK(ok_eq(mat_get(M, i, i), ok_one(R)));
  CHECK_THROWS_WITH_AS(pad_embedding(cert, 2), doctest::Contains("BadTarget"), Error);
  CHECK_THROWS_WITH_AS(pad_embedding(cert, 7), doctest::Contains("BadTarget"), Error);
}

TEST_CASE("embedding is deterministic for a fixed seed") {
  Ring R = Ring::create(5, 1, 16);
  DemoInput in = c3xc5_input(R);
  EmbedOptions opt;
  opt.seed = 99;
  SymplecticCertificate a = embed_inertia_group(in.st, in.rho, in.form, opt);
  SymplecticCertificate b = embed_inertia_group(in.st, in.rho, in.form, opt);
  REQUIRE(a.images.size() == b.images.size());
  for (size_t i = 0; i < a.images.size(); i++) CHECK(a.images[i].a == b.images[i].a);
  CHECK(a.gram.a == b.gram.a);

  EmbedOptions opt2;
  opt2.seed = 100;
  SymplecticCertificate c = embed_inertia_group(in.st, in.rho, in.form, opt2);
  CHECK(c.verified.all_pass);
  CHECK(c.dim == a.dim);
}
