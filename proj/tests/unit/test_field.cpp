#include <doctest.h>

#include <set>

#include "drl/field.hpp"

using namespace drl;

namespace {

// Oracle: exhaustive irreducibility check for quadratics over F_p by root
// scan (a quadratic is reducible over F_p iff it has a root).
bool quadratic_irreducible(std::uint64_t p, std::uint64_t c0,
                           std::uint64_t c1) {
  for (std::uint64_t x = 0; x < p; ++x) {
    if ((x * x + c1 * x + c0) % p == 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("prime field context uses the degree-one modulus X") {
  FieldCtx f7(7, 1);
  CHECK(f7.size() == 7);
  CHECK(f7.modulus() == std::vector<std::uint32_t>{0, 1});
  CHECK(f7.add(3, 5) == 1);
  CHECK(f7.mul(3, 5) == 1);
  CHECK(f7.neg(2) == 5);
}

TEST_CASE("canonical modulus of F_9 is the first irreducible by scan") {
  FieldCtx f9(3, 2);
  // oracle: scan lexicographically (constant term first)
  std::vector<std::uint32_t> expected;
  for (std::uint64_t c0 = 0; c0 < 3 && expected.empty(); ++c0)
    for (std::uint64_t c1 = 0; c1 < 3 && expected.empty(); ++c1)
      if (quadratic_irreducible(3, c0, c1))
        expected = {static_cast<std::uint32_t>(c0),
                    static_cast<std::uint32_t>(c1), 1};
  CHECK(f9.modulus() == expected);
  CHECK(expected == std::vector<std::uint32_t>{1, 0, 1});  // X^2 + 1
}

TEST_CASE("field size and determinism") {
  FieldCtx a(7, 2), b(7, 2);
  CHECK(a.size() == 49);
  CHECK(a.modulus() == b.modulus());
  // multiplicative group: every nonzero element has an inverse
  for (ElemCode x = 1; x < a.size(); ++x) {
    CHECK(a.mul(x, a.inv(x)) == a.one());
  }
}

TEST_CASE("make_field rejects bad input") {
  CHECK_THROWS_AS(FieldCtx(6, 1), Error);
  CHECK_THROWS_AS(FieldCtx(1, 1), Error);
  CHECK_THROWS_AS(FieldCtx(3, 0), Error);
}

TEST_CASE("frobenius fixes the prime field and moves generators") {
  FieldCtx f7(7, 1);
  CHECK(f7.frobenius(3, 7) == 3);

  FieldCtx f9(3, 2);
  // any element outside the constants moves under x -> x^3
  ElemCode g = f9.encode({0, 1});
  CHECK(f9.frobenius(g, 3) != g);
}

TEST_CASE("frobenius fixed points of F_49 are exactly the embedded F_7") {
  FieldCtx f49(7, 2);
  std::set<ElemCode> fixed;
  for (ElemCode x = 0; x < f49.size(); ++x)
    if (f49.frobenius(x, 7) == x) fixed.insert(x);
  CHECK(fixed.size() == 7);
  for (std::uint64_t c = 0; c < 7; ++c) CHECK(fixed.count(f49.from_int(c)));
}

TEST_CASE("frobenius is a ring homomorphism on small fields") {
  for (auto [p, n] : {std::pair<std::uint64_t, unsigned>{3, 2},
                      {5, 2},
                      {3, 3},
                      {7, 2}}) {
    FieldCtx f(p, n);
    for (ElemCode a = 0; a < f.size(); ++a) {
      for (ElemCode b = 0; b < f.size(); ++b) {
        CHECK(f.frobenius(f.mul(a, b), p) ==
              f.mul(f.frobenius(a, p), f.frobenius(b, p)));
        CHECK(f.frobenius(f.add(a, b), p) ==
              f.add(f.frobenius(a, p), f.frobenius(b, p)));
      }
    }
  }
}

TEST_CASE("frobenius iterated n times is the identity") {
  FieldCtx f(3, 4);
  for (ElemCode a = 0; a < f.size(); ++a) {
    ElemCode x = a;
    for (unsigned i = 0; i < 4; ++i) x = f.frobenius(x, 3);
    CHECK(x == a);
  }
}

TEST_CASE("quadratic roots over F_7") {
  FieldCtx f7(7, 1);
  SparseUniPoly p;  // X^2 - 2
  p.terms = {{2, f7.one()}, {0, f7.from_signed(-2)}};
  CHECK(poly_roots(p, f7) == std::vector<ElemCode>{3, 4});

  SparseUniPoly q;  // X^2 - 3: no roots, 3 is a non-square mod 7
  q.terms = {{2, f7.one()}, {0, f7.from_signed(-3)}};
  CHECK(poly_roots(q, f7).empty());
}

TEST_CASE("X^7 - X over F_7 has every element as a root") {
  FieldCtx f7(7, 1);
  SparseUniPoly p;
  p.terms = {{7, f7.one()}, {1, f7.from_signed(-1)}};
  auto roots = poly_roots(p, f7);
  CHECK(roots.size() == 7);
  for (ElemCode i = 0; i < 7; ++i) CHECK(roots[i] == i);
}

TEST_CASE("poly_roots completeness against an independent scan") {
  FieldCtx f(5, 2);
  SparseUniPoly p;  // x^6 + 2x + 1 (arbitrary)
  p.terms = {{6, f.one()}, {1, f.from_int(2)}, {0, f.one()}};
  auto roots = poly_roots(p, f);
  std::set<ElemCode> root_set(roots.begin(), roots.end());
  for (ElemCode x = 0; x < f.size(); ++x) {
    // independent dense evaluation by repeated multiplication
    ElemCode x6 = f.one();
    for (int i = 0; i < 6; ++i) x6 = f.mul(x6, x);
    ElemCode val = f.add(f.add(x6, f.mul(f.from_int(2), x)), f.one());
    CHECK((val == 0) == (root_set.count(x) > 0));
  }
  CHECK(std::is_sorted(roots.begin(), roots.end()));
}

TEST_CASE("zero polynomial is rejected") {
  FieldCtx f7(7, 1);
  SparseUniPoly z;
  CHECK_THROWS_AS(poly_roots(z, f7), Error);
}
