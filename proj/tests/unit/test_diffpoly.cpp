#include <doctest.h>

#include "drl/diffpoly.hpp"

using namespace drl;

namespace {
std::string name(int v) { return v == 0 ? "x" : (v == 1 ? "w" : "z"); }
}  // namespace

TEST_CASE("normalization is idempotent and order independent") {
  // 2x + 3x - 5 + w*x, entered in two different orders, mod 7
  DiffPolynomial a = DiffPolynomial::constant(2) * DiffPolynomial::variable(0) +
                     DiffPolynomial::constant(3) * DiffPolynomial::variable(0) -
                     DiffPolynomial::constant(5) +
                     DiffPolynomial::variable(1) * DiffPolynomial::variable(0);
  DiffPolynomial b = DiffPolynomial::variable(0) * DiffPolynomial::variable(1) -
                     DiffPolynomial::constant(5) +
                     DiffPolynomial::constant(5) * DiffPolynomial::variable(0);
  auto na = a.normalized(7);
  auto nb = b.normalized(7);
  CHECK(na == nb);
  CHECK(na.normalized(7) == na);
}

TEST_CASE("balanced residues keep signs portable across primes") {
  // x - 8 == x - 1 mod 7, and the balanced form stays -1 at any odd prime
  DiffPolynomial p =
      DiffPolynomial::variable(0) - DiffPolynomial::constant(8);
  auto n = p.normalized(7);
  REQUIRE(n.terms().size() == 2);
  CHECK(n.terms()[1].coeff == -1);
}

TEST_CASE("printing uses canonical descending term order") {
  DiffPolynomial p = DiffPolynomial::variable(0, 1) -
                     DiffPolynomial::variable(0);  // s(x) - x
  CHECK(p.normalized(7).to_string(name) == "s(x) - x");

  DiffPolynomial q =
      DiffPolynomial::variable(2).pow(2) - DiffPolynomial::variable(0) -
      DiffPolynomial::variable(1);
  CHECK(q.normalized(7).to_string(name) == "z^2 - w - x");
}

TEST_CASE("specialization turns shifts into q-power exponents") {
  // s(x) - x at q = 7 becomes x^7 - x
  DiffPolynomial p =
      (DiffPolynomial::variable(0, 1) - DiffPolynomial::variable(0))
          .normalized(7);
  auto s = specialize_poly(p, 7);
  REQUIRE(s.terms.size() == 2);
  CHECK(static_cast<std::uint64_t>(s.terms[0].factors[0].exp) == 7);
  CHECK(static_cast<std::uint64_t>(s.terms[1].factors[0].exp) == 1);

  // s^2(w) at q = 3 becomes w^9
  DiffPolynomial w = DiffPolynomial::variable(1, 2).normalized(7);
  auto sw = specialize_poly(w, 3);
  REQUIRE(sw.terms.size() == 1);
  CHECK(static_cast<std::uint64_t>(sw.terms[0].factors[0].exp) == 9);

  // s(z) - z^2 at q = 7 becomes z^7 - z^2
  DiffPolynomial d = (DiffPolynomial::variable(2, 1) -
                      DiffPolynomial::variable(2).pow(2))
                         .normalized(7);
  auto sd = specialize_poly(d, 7);
  REQUIRE(sd.terms.size() == 2);
  std::set<std::uint64_t> exps;
  for (const auto& t : sd.terms)
    exps.insert(static_cast<std::uint64_t>(t.factors[0].exp));
  CHECK(exps == std::set<std::uint64_t>{2, 7});
}

TEST_CASE("powers expand by repeated multiplication") {
  // (x + 1)^2 = x^2 + 2x + 1
  DiffPolynomial p =
      (DiffPolynomial::variable(0) + DiffPolynomial::constant(1)).pow(2);
  auto n = p.normalized(7);
  REQUIRE(n.terms().size() == 3);
  CHECK(n.terms()[0].factors[0].exp == 2);
  CHECK(n.terms()[1].coeff == 2);
  CHECK(n.terms()[2].coeff == 1);
}
