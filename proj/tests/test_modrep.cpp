#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "doctest.h"
#include "symplift/modrep.hpp"

using namespace symplift;

namespace {

KMatrix km(const Ring& R, int n, const std::vector<long long>& v, int shift = 0) {
  OKMatrix M = mat_zero(R, n, n);
  for (int i = 0; i < n; i++)
    for (int j = 0; j < n; j++) mat_set(M, i, j, ok_from_int(R, v[(size_t)(i * n + j)]));
  return kmat_normalize({M, shift});
}

// generator image for the 2-dim representation with minimal polynomial
// x^2 + x + 1 (order 3)
KMatrix companion3(const Ring& R) { return km(R, 2, {0, -1, 1, -1}); }

Representation c3_companion(const Ring& R) {
  return rep_from_input(family_cyclic(3), {1}, {companion3(R)}, R);
}

Representation cyclic_regular(const Ring& R, int n) {
  OKMatrix P = mat_zero(R, n, n);
  for (int i = 0; i < n; i++) mat_set(P, (i + 1) % n, i, ok_one(R));
  return rep_from_input(family_cyclic(n), {1}, {kmat(P)}, R);
}

Representation q8_standard(const Ring& R) {
  OKElem s = ok_sqrt(ok_from_int(R, -1));
  OKMatrix J = mat_zero(R, 2, 2);
  mat_set(J, 0, 0, s);
  mat_set(J, 1, 1, ok_neg(s));
  return rep_from_input(family_quaternion8(), {2, 4}, {km(R, 2, {0, -1, 1, 0}), kmat(J)}, R);
}

bool fq_span_invariant(const std::vector<FqMatrix>& gens, const FqMatrix& B) {
  const Ring& R = B.ring;
  FqSpan sp(R, B.rows);
  int m = R.m();
  for (int c = 0; c < B.cols; c++) {
    std::vector<uint64_t> v((size_t)B.rows * m);
    for (int i = 0; i < B.rows; i++)
      for (int t = 0; t < m; t++) v[(size_t)i * m + t] = B.at(i, c)[t];
    sp.insert(v.data());
  }
  if (sp.dim() != B.cols) return false;
  for (const auto& g : gens) {
    FqMatrix W = fqm_mul(g, B);
    for (int c = 0; c < W.cols; c++) {
      std::vector<uint64_t> v((size_t)W.rows * m);
      for (int i = 0; i < W.rows; i++)
        for (int t = 0; t < m; t++) v[(size_t)i * m + t] = W.at(i, c)[t];
      if (!sp.contains(v.data())) return false;
    }
  }
  return true;
}

// trace of a projector equals v at certified precision
bool trace_is(const KMatrix& P, long long v) {
  const Ring& R = P.M.ring;
  OKElem t = ok_zero(R);
  for (int i = 0; i < P.M.rows; i++) t = ok_add(t, mat_get(P.M, i, i));
  long long scale = 1;
  for (int s = P.shift; s < 0; s++) scale *= (long long)R.ell();
  return ok_eq(t, ok_from_int(R, v * scale));
}

}  // namespace

TEST_CASE("representations from generator images") {
  Ring R = Ring::create(5, 1, 12);
  Representation q8 = q8_standard(R);
  CHECK(q8.images.size() == 8);
  CHECK(kmat_eq(q8.img(1), km(R, 2, {-1, 0, 0, -1})));  // central element
  CHECK(!kmat_eq(q8.img(2), q8.img(4)));
  // i j = -j i comes out of the multiplication table
  CHECK(kmat_eq(kmat_mul(q8.img(2), q8.img(4)),
                kmat_mul(km(R, 2, {-1, 0, 0, -1}), kmat_mul(q8.img(4), q8.img(2)))));

  // commuting images contradict the table
  OKElem s = ok_sqrt(ok_from_int(R, -1));
  OKMatrix Jc = mat_zero(R, 2, 2);
  mat_set(Jc, 0, 0, s);
  mat_set(Jc, 1, 1, s);
  CHECK_THROWS_WITH_AS(
      rep_from_input(family_quaternion8(), {2, 4}, {km(R, 2, {0, -1, 1, 0}), kmat(Jc)}, R),
      doctest::Contains("RelationViolated"), Error);

  // <i> does not generate the quaternion group
  CHECK_THROWS_WITH_AS(rep_from_input(family_quaternion8(), {2}, {km(R, 2, {0, -1, 1, 0})}, R),
                       doctest::Contains("ParseError"), Error);

  // singular generator image
  CHECK_THROWS_WITH_AS(rep_from_input(family_cyclic(2), {1}, {km(R, 2, {1, 1, 1, 1})}, R),
                       doctest::Contains("NotInvertible"), Error);

  // non-faithful images are fine
  Representation triv = rep_from_input(family_cyclic(3), {1}, {kmat_id(R, 2)}, R);
  for (const auto& M : triv.images) CHECK(kmat_eq(M, kmat_id(R, 2)));
}

TEST_CASE("conjugation and restriction") {
  Ring R = Ring::create(5, 1, 10);
  Representation rho = c3_companion(R);
  KMatrix U = km(R, 2, {1, 1, 0, 1});
  Representation rho2 = rep_conjugate(rho, U);
  for (int g = 0; g < 3; g++)
    CHECK(kmat_eq(kmat_mul(U, rho2.img(g)), kmat_mul(rho.img(g), U)));

  Representation q8 = q8_standard(Ring::create(5, 1, 12));
  SubgroupRep sub = rep_restrict(q8, {0, 1, 2, 3});  // the subgroup generated by i
  CHECK(sub.rep.group.n == 4);
  CHECK(element_order(sub.rep.group, 1) > 1);
  for (int g = 0; g < 4; g++)
    for (int h = 0; h < 4; h++)
      CHECK(kmat_eq(sub.rep.img(sub.rep.group.at(g, h)),
                    kmat_mul(sub.rep.img(g), sub.rep.img(h))));
  CHECK_THROWS_WITH_AS(rep_restrict(q8, {0, 2}), doctest::Contains("Internal"), Error);
}

TEST_CASE("lattice stabilization and reduction") {
  Ring R = Ring::create(5, 1, 8);
  Representation rho = c3_companion(R);
  Lattice T = stabilize_lattice(rho);
  CHECK(lattice_eq(T, Lattice{kmat_id(R, 2)}));

  // images with denominators still stabilize
  KMatrix D = km(R, 2, {1, 0, 0, 5}, -1);  // diag(1/5, 1)
  Representation bad = rep_conjugate(rho, D);
  CHECK(!kmat_is_integral(bad.img(1)));
  Lattice T2 = stabilize_lattice(bad);
  std::vector<FqMatrix> red = reduce_mod_ell(bad, T2);
  REQUIRE(red.size() == 3);
  CHECK(fqm_eq(red[0], fqm_id(R, 2)));
  CHECK(!fqm_eq(red[1], fqm_id(R, 2)));
  CHECK(fqm_eq(fqm_mul(red[1], red[1]), red[2]));
  CHECK(fqm_eq(fqm_mul(red[1], red[2]), fqm_id(R, 2)));

  // the standard lattice is not stable for the conjugated action
  CHECK_THROWS_WITH_AS(reduce_mod_ell(bad, Lattice{kmat_id(R, 2)}),
                       doctest::Contains("NotStable"), Error);

  // order divisible by ell is rejected
  Representation c5 = rep_from_input(family_cyclic(5), {1}, {kmat_id(R, 1)}, R);
  CHECK_THROWS_WITH_AS(stabilize_lattice(c5), doctest::Contains("Internal"), Error);
}

TEST_CASE("meataxe verdicts") {
  Ring R = Ring::create(5, 1, 6);

  // regular representation of a 3-cycle is reducible mod 5
  Representation reg = cyclic_regular(R, 3);
  std::vector<FqMatrix> gens = reduce_mod_ell(reg, Lattice{kmat_id(R, 3)});
  for (uint64_t seed = 1; seed <= 5; seed++) {
    MeataxeResult res = meataxe_is_simple(gens, seed);
    CHECK(!res.simple);
    CHECK(res.submodule.cols >= 1);
    CHECK(res.submodule.cols < 3);
    CHECK(fq_span_invariant(gens, res.submodule));
  }

  // x^2 + x + 1 is irreducible mod 5
  Representation comp = c3_companion(R);
  std::vector<FqMatrix> cg = reduce_mod_ell(comp, Lattice{kmat_id(R, 2)});
  for (uint64_t seed = 1; seed <= 5; seed++) CHECK(meataxe_is_simple(cg, seed).simple);

  // dimension one is always simple
  CHECK(meataxe_is_simple({fqm_id(R, 1)}, 7).simple);

  // unipotent action: reducible but indecomposable, found through the dual
  FqMatrix U = fqm_id(R, 2);
  fqm_set(U, 0, 1, fq_from_int(R, 1));
  MeataxeResult ures = meataxe_is_simple({U}, 3);
  CHECK(!ures.simple);
  REQUIRE(ures.submodule.cols == 1);
  CHECK(fq_eq(fqm_get(ures.submodule, 0, 0), fq_one(R)));
  CHECK(fq_is_zero(fqm_get(ures.submodule, 1, 0)));

  // i generates a split torus mod 5: x^2 + 1 = (x - 2)(x + 2)
  Representation q8 = q8_standard(Ring::create(5, 1, 12));
  SubgroupRep c4 = rep_restrict(q8, {0, 1, 2, 3});
  std::vector<FqMatrix> c4g = reduce_mod_ell(c4.rep, Lattice{kmat_id(c4.rep.ring, 2)});
  MeataxeResult tres = meataxe_is_simple(c4g, 11);
  CHECK(!tres.simple);
  CHECK(tres.submodule.cols == 1);
}

TEST_CASE("isotypic projectors over the base field") {
  Ring R = Ring::create(5, 1, 8);

  // a fused pair of conjugate characters carries the whole plane
  Representation comp = c3_companion(R);
  CharacterTable t3 = character_table_dixon(family_cyclic(3));
  auto pieces = isotypic_projectors(comp, t3);
  REQUIRE(pieces.size() == 1);
  CHECK(kmat_eq(pieces[0].projector, kmat_id(R, 2)));
  CHECK(pieces[0].orbit == std::vector<int>{0, 1});
  CHECK(pieces[0].degree == 1);

  // the regular module sees both orbits
  Representation reg = cyclic_regular(R, 3);
  auto rp = isotypic_projectors(reg, t3);
  REQUIRE(rp.size() == 2);
  CHECK(rp[0].orbit == std::vector<int>{0, 1});
  CHECK(rp[1].orbit == std::vector<int>{2});
  OKMatrix ones = mat_zero(R, 3, 3);
  for (int i = 0; i < 3; i++)
    for (int j = 0; j < 3; j++) mat_set(ones, i, j, ok_one(R));
  KMatrix ptriv = kmat_scal(kmat(ones), ok_inv(ok_from_int(R, 3)));
  CHECK(kmat_eq(rp[1].projector, ptriv));
  CHECK(kmat_eq(kmat_add(rp[0].projector, rp[1].projector), kmat_id(R, 3)));
  CHECK(trace_is(rp[0].projector, 2));
  CHECK(trace_is(rp[1].projector, 1));

  // determinism
  auto rp2 = isotypic_projectors(reg, t3);
  REQUIRE(rp2.size() == rp.size());
  for (size_t i = 0; i < rp.size(); i++)
    CHECK(kmat_eq(rp[i].projector, rp2[i].projector));
}

TEST_CASE("isotypic projectors with an ell-part in the exponent") {
  Ring R = Ring::create(5, 1, 9);
  Representation reg = cyclic_regular(R, 15);
  CharacterTable t = character_table_dixon(family_cyclic(15));
  auto pieces = isotypic_projectors(reg, t);
  REQUIRE(pieces.size() == 4);
  std::vector<int> sizes;
  for (const auto& p : pieces) sizes.push_back((int)p.orbit.size());
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<int>{1, 2, 4, 8});
  int total = 0;
  for (const auto& p : pieces) {
    CHECK(trace_is(p.projector, (long long)p.orbit.size()));
    total += (int)p.orbit.size();
  }
  CHECK(total == 15);

  // ell^2 in the exponent
  Ring R2 = Ring::create(5, 1, 10);
  Representation reg25 = cyclic_regular(R2, 25);
  CharacterTable t25 = character_table_dixon(family_cyclic(25));
  auto p25 = isotypic_projectors(reg25, t25);
  REQUIRE(p25.size() == 3);
  std::vector<int> s25;
  for (const auto& p : p25) s25.push_back((int)p.orbit.size());
  std::sort(s25.begin(), s25.end());
  CHECK(s25 == std::vector<int>{1, 4, 20});
  for (const auto& p : p25) CHECK(trace_is(p.projector, (long long)p.orbit.size()));

  CHECK_THROWS_WITH_AS(isotypic_projectors(cyclic_regular(Ring::create(5, 1, 4), 15), t),
                       doctest::Contains("PrecisionTooLow"), Error);
}

TEST_CASE("isotypic projectors for a nonabelian group over a bigger residue field") {
  Ring R = Ring::create(7, 1, 6);
  FiniteGroup s3 = family_dihedral(3);
  // r acts with minimal polynomial x^2 + x + 1, s swaps the coordinates
  Representation rho = rep_from_input(s3, {1, 3}, {companion3(R), km(R, 2, {0, 1, 1, 0})}, R);
  CharacterTable t = character_table_dixon(s3);
  auto pieces = isotypic_projectors(rho, t);
  REQUIRE(pieces.size() == 1);
  CHECK(pieces[0].degree == 2);
  CHECK(pieces[0].orbit.size() == 1);
  CHECK(kmat_eq(pieces[0].projector, kmat_id(R, 2)));
}

TEST_CASE("splitting into simple summands") {
  Ring R = Ring::create(5, 1, 8);

  // trivial action: three lines
  Representation triv = rep_from_input(family_cyclic(1), {0}, {kmat_id(R, 3)}, R);
  auto lines = simple_split(triv, kmat_id(R, 3), 42);
  REQUIRE(lines.size() == 3);
  {
    std::vector<KMatrix> cols = lines;
    OKMatrix all = mat_zero(R, 3, 3);
    for (int p = 0; p < 3; p++) {
      CHECK(lines[(size_t)p].M.cols == 1);
      for (int i = 0; i < 3; i++) mat_set(all, i, p, mat_get(kmat_to_integral(lines[(size_t)p]), i, 0));
    }
    CHECK(mat_unit_det(all));
  }

  // two copies of the same simple plane
  Representation comp = c3_companion(R);
  OKMatrix blk = mat_zero(R, 4, 4);
  KMatrix C = companion3(R);
  for (int i = 0; i < 2; i++)
    for (int j = 0; j < 2; j++) {
      mat_set(blk, i, j, mat_get(C.M, i, j));
      mat_set(blk, i + 2, j + 2, mat_get(C.M, i, j));
    }
  Representation dbl = rep_from_input(family_cyclic(3), {1}, {kmat(blk)}, R);
  auto planes = simple_split(dbl, kmat_id(R, 4), 7);
  REQUIRE(planes.size() == 2);
  std::vector<FqMatrix> dg = reduce_mod_ell(dbl, Lattice{kmat_id(R, 4)});
  int dims = 0;
  for (const auto& p : planes) {
    CHECK(p.M.cols == 2);
    dims += p.M.cols;
    CHECK(fq_span_invariant(dg, fqm_from_okmat(kmat_to_integral(p))));
  }
  CHECK(dims == 4);

  // an already simple plane comes back unchanged
  auto one = simple_split(comp, kmat_id(R, 2), 9);
  REQUIRE(one.size() == 1);
  CHECK(lattice_eq(Lattice{one[0]}, Lattice{kmat_id(R, 2)}));

  // the regular module splits as a line plus a plane
  Representation reg = cyclic_regular(R, 3);
  auto mix = simple_split(reg, kmat_id(R, 3), 3);
  REQUIRE(mix.size() == 2);
  std::vector<int> md;
  for (const auto& p : mix) md.push_back(p.M.cols);
  std::sort(md.begin(), md.end());
  CHECK(md == std::vector<int>{1, 2});
  for (const auto& p : mix)
    if (p.M.cols == 1) {
      // the fixed line, saturated: all entries 1
      OKMatrix v = kmat_to_integral(p);
      for (int i = 0; i < 3; i++) CHECK(ok_eq(mat_get(v, i, 0), ok_one(R)));
    }

  // same seed, same answer
  auto mix2 = simple_split(reg, kmat_id(R, 3), 3);
  REQUIRE(mix2.size() == mix.size());
  for (size_t i = 0; i < mix.size(); i++) CHECK(kmat_eq(mix[i], mix2[i]));

  // a non-invariant subspace is refused
  OKMatrix e1 = mat_zero(R, 2, 1);
  mat_set(e1, 0, 0, ok_one(R));
  CHECK_THROWS_WITH_AS(simple_split(comp, kmat(e1), 1), doctest::Contains("Internal"), Error);
}

TEST_CASE("commuting algebra of a simple module") {
  Ring R = Ring::create(5, 1, 8);
  Representation comp = c3_companion(R);

  CentralizerData cd = centralizer_field(comp, nullptr);
  CHECK(cd.deg == 2);
  CHECK(!cd.has_invol);
  CHECK(cd.reg.size() == 2);
  auto ico = centralizer_coords(cd, mat_id(R, 2));
  REQUIRE(ico.size() == 2);
  auto cco = centralizer_coords(cd, kmat_to_integral(companion3(R)));
  REQUIRE(cco.size() == 2);
  OKMatrix outside = mat_zero(R, 2, 2);
  mat_set(outside, 0, 1, ok_one(R));
  CHECK_THROWS_WITH_AS(centralizer_coords(cd, outside), doctest::Contains("Internal"), Error);

  // the alternating form gives the inversion involution, fixing only K
  BilinearForm f;
  f.gram = km(R, 2, {0, 1, -1, 0});
  f.parity = Parity::Alternating;
  f.perfect = true;
  CentralizerData cdf = centralizer_field(comp, &f);
  CHECK(cdf.deg == 2);
  CHECK(cdf.has_invol);
  CHECK(cdf.e0_deg == 1);
  CHECK(cdf.e_over_e0 == 2);
  REQUIRE(cdf.e0_basis.size() == 1);
  CHECK(ok_is_zero(mat_get(cdf.e0_basis[0], 0, 1)));
  CHECK(ok_is_zero(mat_get(cdf.e0_basis[0], 1, 0)));
  CHECK(ok_eq(mat_get(cdf.e0_basis[0], 0, 0), mat_get(cdf.e0_basis[0], 1, 1)));

  // the quaternion plane is already absolutely simple
  Ring R12 = Ring::create(5, 1, 12);
  Representation q8 = q8_standard(R12);
  BilinearForm fq;
  fq.gram = km(R12, 2, {0, 1, -1, 0});
  fq.parity = Parity::Alternating;
  fq.perfect = true;
  CentralizerData cq = centralizer_field(q8, &fq);
  CHECK(cq.deg == 1);
  CHECK(cq.e0_deg == 1);
  CHECK(cq.e_over_e0 == 1);

  // trivial group on a line
  Representation tl = rep_from_input(family_cyclic(1), {0}, {kmat_id(R, 1)}, R);
  CHECK(centralizer_field(tl, nullptr).deg == 1);

  // a module with repeated factors has a noncommutative endomorphism ring
  Representation t2 = rep_from_input(family_cyclic(2), {1}, {kmat_id(R, 2)}, R);
  CHECK_THROWS_WITH_AS(centralizer_field(t2, nullptr), doctest::Contains("NotCommutative"),
                       Error);

  // a form that scales the coordinates pushes the adjoint out of O_K
  BilinearForm fb;
  fb.gram = km(R, 2, {1, 0, 0, 5});
  fb.parity = Parity::Symmetric;
  fb.perfect = false;
  CHECK_THROWS_WITH_AS(centralizer_field(comp, &fb), doctest::Contains("InvolutionEscapesE"),
                       Error);

  // the symmetric identity form transposes, which leaves the algebra
  BilinearForm fi;
  fi.gram = kmat_id(R, 2);
  fi.parity = Parity::Symmetric;
  fi.perfect = true;
  CHECK_THROWS_WITH_AS(centralizer_field(comp, &fi), doctest::Contains("InvolutionEscapesE"),
                       Error);
}

TEST_CASE("intertwiners between conjugate actions") {
  Ring R = Ring::create(5, 1, 8);
  Representation tau = c3_companion(R);

  // identical endpoints give the identity on the nose
  OKMatrix A = intertwiner(tau, tau, 5);
  CHECK(mat_is_identity(A));

  // a conjugated copy
  KMatrix U = km(R, 2, {1, 1, 0, 1});
  Representation tau2 = rep_conjugate(tau, U);
  OKMatrix B = intertwiner(tau, tau2, 5);
  CHECK(mat_unit_det(B));
  for (int g = 0; g < 3; g++)
    CHECK(kmat_eq(kmat_mul(tau2.img(g), kmat(B)), kmat_mul(kmat(B), tau.img(g))));
  // U B commutes with the original action
  OKMatrix UB = mat_mul(kmat_to_integral(U), B);
  OKMatrix Cm = kmat_to_integral(companion3(R));
  CHECK(mat_eq(mat_mul(UB, Cm), mat_mul(Cm, UB)));

  // distinct characters are not isomorphic
  Ring R2 = Ring::create(5, 2, 8);
  OKElem zeta = ok_zero(R2);
  {
    bool found = false;
    for (uint64_t a = 0; a < 5 && !found; a++)
      for (uint64_t b = 0; b < 5 && !found; b++) {
        FqElem z;
        z.ring = R2;
        z.c = {a, b};
        FqElem w = fq_add(fq_mul(z, z), fq_add(z, fq_one(R2)));
        if (fq_is_zero(w) && !fq_is_zero(z)) {
          zeta = teichmuller(z);
          found = true;
        }
      }
    REQUIRE(found);
  }
  OKMatrix Z = mat_zero(R2, 1, 1);
  mat_set(Z, 0, 0, zeta);
  Representation chi = rep_from_input(family_cyclic(3), {1}, {kmat(Z)}, R2);
  Representation one = rep_from_input(family_cyclic(3), {1}, {kmat_id(R2, 1)}, R2);
  CHECK_THROWS_WITH_AS(intertwiner(chi, one, 2), doctest::Contains("NotIsomorphic"), Error);
  CHECK_THROWS_WITH_AS(intertwiner(chi, one, 2), doctest::Contains("dimension 0"), Error);

  // non-integral images are refused
  KMatrix D = km(R, 2, {1, 0, 0, 5}, -1);
  Representation frac = rep_conjugate(tau, D);
  CHECK_THROWS_WITH_AS(intertwiner(frac, frac, 1), doctest::Contains("NotStable"), Error);
}
