#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace drl {

/// Error with a stable machine-readable code, thrown by guard and
/// precondition violations throughout the library.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Elements of F_{p^n} are stored as packed integer codes. The code orders
/// elements by lexicographic comparison of their coefficient vectors
/// (constant term first), so sorting codes sorts elements canonically.
using ElemCode = std::uint64_t;

bool is_prime_u64(std::uint64_t v);

/// Exact arithmetic context for F_{p^n}. Immutable after construction;
/// all operations are pure and safe to share across threads.
///
/// The modulus is the lexicographically smallest monic irreducible of
/// degree n over F_p by coefficient sequence (constant term first), so
/// two contexts with equal (p, n) are bit-identical.
class FieldCtx {
 public:
  static constexpr std::uint64_t kMaxPrime = 1ull << 20;
  static constexpr std::uint64_t kMaxSize = 1ull << 40;
  static constexpr std::uint64_t kScanGuard = 1ull << 22;

  FieldCtx(std::uint64_t p, unsigned n);

  std::uint64_t p() const { return p_; }
  unsigned degree() const { return n_; }
  std::uint64_t size() const { return size_; }

  /// Modulus coefficients, constant term first, length degree()+1, monic.
  const std::vector<std::uint32_t>& modulus() const { return modulus_; }

  std::vector<std::uint32_t> decode(ElemCode a) const;
  ElemCode encode(const std::vector<std::uint32_t>& coeffs) const;

  /// Embeds c in {0..p-1} as a constant.
  ElemCode from_int(std::uint64_t c) const;
  /// Reduces a signed integer mod p and embeds it.
  ElemCode from_signed(std::int64_t c) const;

  ElemCode add(ElemCode a, ElemCode b) const;
  ElemCode sub(ElemCode a, ElemCode b) const;
  ElemCode neg(ElemCode a) const;
  ElemCode mul(ElemCode a, ElemCode b) const;
  ElemCode pow(ElemCode a, unsigned __int128 e) const;
  /// Multiplicative inverse; throws on zero.
  ElemCode inv(ElemCode a) const;

  bool is_zero(ElemCode a) const { return a == 0; }
  ElemCode zero() const { return 0; }
  ElemCode one() const { return from_int(1); }

  /// a^q where q must be a power of p. This is the difference operator of
  /// the Frobenius difference field F_{p^n} with sigma = x -> x^q.
  ElemCode frobenius(ElemCode a, std::uint64_t q) const;

  std::string to_string(ElemCode a) const;

 private:
  std::uint64_t p_;
  unsigned n_;
  std::uint64_t size_;
  std::vector<std::uint32_t> modulus_;
  // reduction_[k] = coefficients of X^{n+k} mod modulus, k in [0, n-1).
  std::vector<std::vector<std::uint32_t>> reduction_;

  void mul_vec(const std::uint32_t* a, const std::uint32_t* b,
               std::uint32_t* out) const;
};

/// Sparse univariate polynomial over a FieldCtx: (exponent, coefficient)
/// pairs. Exponents after Frobenius specialization can exceed 64 bits.
struct SparseUniPoly {
  struct Term {
    unsigned __int128 exp;
    ElemCode coeff;
  };
  std::vector<Term> terms;

  bool is_zero() const;
  ElemCode eval(const FieldCtx& ctx, ElemCode x) const;
};

/// All roots of poly in ctx, each once, in ascending canonical element
/// order. Exhaustive scan; ctx.size() must be within the scan guard.
/// Throws on the zero polynomial.
std::vector<ElemCode> poly_roots(const SparseUniPoly& poly,
                                 const FieldCtx& ctx);

/// Convenience: dense coefficients, index = exponent.
std::vector<ElemCode> poly_roots(const std::vector<ElemCode>& dense,
                                 const FieldCtx& ctx);

}  // namespace drl
