#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace drl {

/// One factor sigma^shift(var)^exp of a monomial. Shifts are nonnegative:
/// the language only admits positive powers of the difference operator.
struct DiffFactor {
  int var = 0;
  unsigned shift = 0;
  unsigned exp = 1;

  friend auto operator<=>(const DiffFactor&, const DiffFactor&) = default;
};

struct DiffTerm {
  std::int64_t coeff = 0;
  std::vector<DiffFactor> factors;  // sorted by (var, shift)
};

/// Sparse difference polynomial with integer coefficients. Coefficients
/// are kept as balanced residues modulo the declared characteristic so a
/// system can be specialized at any odd prime, not just the declared one.
class DiffPolynomial {
 public:
  DiffPolynomial() = default;

  static DiffPolynomial constant(std::int64_t c);
  static DiffPolynomial variable(int var, unsigned shift = 0);

  const std::vector<DiffTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  DiffPolynomial operator+(const DiffPolynomial& o) const;
  DiffPolynomial operator-(const DiffPolynomial& o) const;
  DiffPolynomial operator-() const;
  DiffPolynomial operator*(const DiffPolynomial& o) const;
  DiffPolynomial pow(unsigned e) const;

  /// Canonical form: like monomials combined, coefficients reduced to
  /// balanced residues mod p, zero terms dropped, terms sorted descending.
  /// Idempotent and order-independent.
  DiffPolynomial normalized(std::int64_t p) const;

  bool operator==(const DiffPolynomial& o) const;

  /// Every variable id mentioned, ascending.
  std::vector<int> variables() const;
  bool mentions(int var) const;
  unsigned max_shift() const;

  std::string to_string(
      const std::function<std::string(int)>& var_name) const;

  static DiffPolynomial from_terms(std::vector<DiffTerm> terms);

 private:
  std::vector<DiffTerm> terms_;
};

/// Frobenius specialization of a difference polynomial: every factor
/// sigma^k(v)^e becomes v^{e q^k}. Exponents can exceed 64 bits.
struct SpecFactor {
  int var;
  unsigned __int128 exp;
};
struct SpecTerm {
  std::int64_t coeff;
  std::vector<SpecFactor> factors;
};
struct SpecializedPoly {
  std::vector<SpecTerm> terms;
};

SpecializedPoly specialize_poly(const DiffPolynomial& poly, std::uint64_t q);

}  // namespace drl
