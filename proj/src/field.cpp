#include "drl/field.hpp"

#include <algorithm>
#include <array>

namespace drl {

namespace {

constexpr unsigned kMaxDegree = 64;

std::uint64_t ipow_checked(std::uint64_t base, unsigned e,
                           std::uint64_t limit) {
  std::uint64_t r = 1;
  for (unsigned i = 0; i < e; ++i) {
    if (r > limit / base) return limit + 1;
    r *= base;
  }
  return r;
}

}  // namespace

bool is_prime_u64(std::uint64_t v) {
  if (v < 2) return false;
  for (std::uint64_t d : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull,
                          19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (v % d == 0) return v == d;
    if (d * d > v) return true;
  }
  for (std::uint64_t d = 41; d * d <= v; d += 2) {
    if (v % d == 0) return false;
  }
  return true;
}

FieldCtx::FieldCtx(std::uint64_t p, unsigned n) : p_(p), n_(n) {
  if (!is_prime_u64(p)) throw Error("NONPRIME", "characteristic is not prime");
  if (p > kMaxPrime) throw Error("GUARD", "prime exceeds 2^20 guard");
  if (n < 1 || n > kMaxDegree) throw Error("GUARD", "bad extension degree");
  size_ = ipow_checked(p, n, kMaxSize);
  if (size_ > kMaxSize) throw Error("GUARD", "field size exceeds 2^40 guard");

  if (n_ == 1) {
    modulus_ = {0, 1};  // X: elements are the constants of F_p
    return;
  }

  // Scan monic degree-n polynomials in ascending lexicographic order of
  // the coefficient sequence (constant term first) for the first
  // irreducible one. Irreducibility by Rabin's test.
  auto padd = [&](std::uint64_t a, std::uint64_t b) { return (a + b) % p_; };
  auto pmul = [&](std::uint64_t a, std::uint64_t b) { return (a * b) % p_; };

  // Polynomials mod the candidate f, dense, degree < n.
  using Vec = std::vector<std::uint64_t>;
  auto polymulmod = [&](const Vec& a, const Vec& b, const Vec& f) {
    std::vector<std::uint64_t> acc(2 * n_ - 1, 0);
    for (unsigned i = 0; i < n_; ++i) {
      if (!a[i]) continue;
      for (unsigned j = 0; j < n_; ++j)
        acc[i + j] = (acc[i + j] + a[i] * b[j]) % p_;
    }
    // Reduce by monic f of degree n.
    for (int d = static_cast<int>(2 * n_ - 2); d >= static_cast<int>(n_);
         --d) {
      std::uint64_t c = acc[d];
      if (!c) continue;
      acc[d] = 0;
      for (unsigned j = 0; j < n_; ++j)
        acc[d - n_ + j] = (acc[d - n_ + j] + (p_ - 1) * c % p_ * f[j]) % p_;
    }
    return Vec(acc.begin(), acc.begin() + n_);
  };
  auto polypowmod = [&](Vec base, unsigned __int128 e, const Vec& f) {
    Vec r(n_, 0);
    r[0] = 1;
    while (e) {
      if (e & 1) r = polymulmod(r, base, f);
      base = polymulmod(base, base, f);
      e >>= 1;
    }
    return r;
  };
  auto polygcd_is_one = [&](Vec a, Vec b) {
    // gcd over F_p of dense polys (trim-led representation).
    auto deg = [](const Vec& v) {
      int d = static_cast<int>(v.size()) - 1;
      while (d >= 0 && v[d] == 0) --d;
      return d;
    };
    while (true) {
      int db = deg(b);
      if (db < 0) return deg(a) == 0;
      int da = deg(a);
      if (da < db) {
        std::swap(a, b);
        continue;
      }
      // a -= lead(a)/lead(b) * X^{da-db} * b
      std::uint64_t linv = 1, lb = b[db];
      // Fermat inverse mod p.
      std::uint64_t e = p_ - 2, base = lb;
      while (e) {
        if (e & 1) linv = pmul(linv, base);
        base = pmul(base, base);
        e >>= 1;
      }
      std::uint64_t q = pmul(a[da], linv);
      for (int j = 0; j <= db; ++j)
        a[da - db + j] = padd(a[da - db + j], (p_ - 1) * q % p_ * b[j] % p_);
    }
  };

  std::vector<unsigned> prime_divisors;
  {
    unsigned m = n_;
    for (unsigned d = 2; d * d <= m; ++d) {
      if (m % d == 0) {
        prime_divisors.push_back(d);
        while (m % d == 0) m /= d;
      }
    }
    if (m > 1) prime_divisors.push_back(m);
  }

  std::uint64_t span = 1;
  for (unsigned i = 0; i < n_; ++i) span *= p_;
  for (std::uint64_t code = 0; code < span; ++code) {
    // Decode lexicographically: constant term is the most significant digit.
    Vec f(n_ + 1, 0);
    f[n_] = 1;
    std::uint64_t rem = code;
    for (unsigned i = 0; i < n_; ++i) {
      f[n_ - 1 - i] = rem % p_;
      rem /= p_;
    }
    // Rabin: X^{p^n} == X mod f, and gcd(X^{p^{n/r}} - X, f) = 1 for each
    // prime r | n.
    Vec fx(f.begin(), f.begin() + n_);
    Vec x(n_, 0);
    if (n_ >= 2) x[1] = 1;
    unsigned __int128 pn = 1;
    for (unsigned i = 0; i < n_; ++i) pn *= p_;
    Vec xpn = polypowmod(x, pn, fx);
    if (!(xpn == x)) continue;
    bool ok = true;
    for (unsigned r : prime_divisors) {
      unsigned __int128 pd = 1;
      for (unsigned i = 0; i < n_ / r; ++i) pd *= p_;
      Vec xpd = polypowmod(x, pd, fx);
      // gcd(xpd - x, f)
      Vec diff(n_ + 1, 0);
      for (unsigned i = 0; i < n_; ++i)
        diff[i] = padd(xpd[i], (p_ - x[i]) % p_);
      Vec fv(f);
      if (!polygcd_is_one(fv, diff)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    modulus_.assign(f.begin(), f.end());
    break;
  }
  if (modulus_.empty())
    throw Error("INTERNAL", "no irreducible modulus found");

  reduction_.resize(n_ - 1);
  // X^{n} mod f = -f[0..n-1]; X^{n+k} = X * X^{n+k-1} mod f.
  std::vector<std::uint32_t> cur(n_);
  for (unsigned i = 0; i < n_; ++i)
    cur[i] = static_cast<std::uint32_t>((p_ - modulus_[i]) % p_);
  if (n_ >= 2) reduction_[0] = cur;
  for (unsigned k = 1; k + 1 < n_; ++k) {
    std::vector<std::uint32_t> nxt(n_, 0);
    std::uint64_t top = cur[n_ - 1];
    for (unsigned i = n_ - 1; i >= 1; --i) nxt[i] = cur[i - 1];
    nxt[0] = 0;
    if (top) {
      for (unsigned i = 0; i < n_; ++i)
        nxt[i] = static_cast<std::uint32_t>(
            (nxt[i] + top * reduction_[0][i]) % p_);
    }
    reduction_[k] = nxt;
    cur = nxt;
  }
}

std::vector<std::uint32_t> FieldCtx::decode(ElemCode a) const {
  std::vector<std::uint32_t> v(n_);
  for (unsigned i = 0; i < n_; ++i) {
    v[n_ - 1 - i] = static_cast<std::uint32_t>(a % p_);
    a /= p_;
  }
  return v;
}

ElemCode FieldCtx::encode(const std::vector<std::uint32_t>& coeffs) const {
  if (coeffs.size() != n_) throw Error("BADELEM", "coefficient vector length");
  ElemCode a = 0;
  for (unsigned i = 0; i < n_; ++i) {
    if (coeffs[i] >= p_) throw Error("BADELEM", "coefficient out of range");
    a = a * p_ + coeffs[i];
  }
  return a;
}

ElemCode FieldCtx::from_int(std::uint64_t c) const {
  c %= p_;
  ElemCode a = c;
  for (unsigned i = 1; i < n_; ++i) a *= p_;
  return a;
}

ElemCode FieldCtx::from_signed(std::int64_t c) const {
  std::int64_t m = c % static_cast<std::int64_t>(p_);
  if (m < 0) m += static_cast<std::int64_t>(p_);
  return from_int(static_cast<std::uint64_t>(m));
}

ElemCode FieldCtx::add(ElemCode a, ElemCode b) const {
  ElemCode r = 0;
  std::uint64_t scale = 1;
  for (unsigned i = 0; i < n_; ++i) {
    std::uint64_t da = a % p_, db = b % p_;
    r += ((da + db) % p_) * scale;
    a /= p_;
    b /= p_;
    scale *= p_;
  }
  return r;
}

ElemCode FieldCtx::neg(ElemCode a) const {
  ElemCode r = 0;
  std::uint64_t scale = 1;
  for (unsigned i = 0; i < n_; ++i) {
    std::uint64_t da = a % p_;
    r += ((p_ - da) % p_) * scale;
    a /= p_;
    scale *= p_;
  }
  return r;
}

ElemCode FieldCtx::sub(ElemCode a, ElemCode b) const {
  return add(a, neg(b));
}

void FieldCtx::mul_vec(const std::uint32_t* a, const std::uint32_t* b,
                       std::uint32_t* out) const {
  std::array<std::uint64_t, 2 * kMaxDegree> acc{};
  for (unsigned i = 0; i < n_; ++i) {
    if (!a[i]) continue;
    for (unsigned j = 0; j < n_; ++j)
      acc[i + j] += static_cast<std::uint64_t>(a[i]) * b[j];
  }
  for (unsigned d = 0; d + 1 < 2 * n_; ++d) acc[d] %= p_;
  for (unsigned k = 2 * n_ - 2; k >= n_ && n_ >= 2; --k) {
    std::uint64_t c = acc[k];
    if (c) {
      const auto& row = reduction_[k - n_];
      for (unsigned i = 0; i < n_; ++i)
        acc[i] = (acc[i] + c * row[i]) % p_;
    }
    if (k == n_) break;
  }
  for (unsigned i = 0; i < n_; ++i)
    out[i] = static_cast<std::uint32_t>(acc[i] % p_);
}

ElemCode FieldCtx::mul(ElemCode a, ElemCode b) const {
  if (n_ == 1) return (a * b) % p_;
  std::array<std::uint32_t, kMaxDegree> va{}, vb{}, vo{};
  for (unsigned i = 0; i < n_; ++i) {
    va[n_ - 1 - i] = static_cast<std::uint32_t>(a % p_);
    a /= p_;
    vb[n_ - 1 - i] = static_cast<std::uint32_t>(b % p_);
    b /= p_;
  }
  mul_vec(va.data(), vb.data(), vo.data());
  ElemCode r = 0;
  for (unsigned i = 0; i < n_; ++i) r = r * p_ + vo[i];
  return r;
}

ElemCode FieldCtx::pow(ElemCode a, unsigned __int128 e) const {
  ElemCode r = one();
  while (e) {
    if (e & 1) r = mul(r, a);
    a = mul(a, a);
    e >>= 1;
  }
  return r;
}

ElemCode FieldCtx::inv(ElemCode a) const {
  if (a == 0) throw Error("DIVZERO", "inverse of zero");
  return pow(a, size_ - 2);
}

ElemCode FieldCtx::frobenius(ElemCode a, std::uint64_t q) const {
  std::uint64_t v = q;
  while (v > 1) {
    if (v % p_ != 0)
      throw Error("NOTPOWER", "q is not a power of the characteristic");
    v /= p_;
  }
  if (q < 2) throw Error("NOTPOWER", "q must be at least p");
  return pow(a, q);
}

std::string FieldCtx::to_string(ElemCode a) const {
  auto v = decode(a);
  std::string s = "[";
  for (unsigned i = 0; i < n_; ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s + "]";
}

bool SparseUniPoly::is_zero() const {
  for (const auto& t : terms)
    if (t.coeff != 0) return false;
  return true;
}

ElemCode SparseUniPoly::eval(const FieldCtx& ctx, ElemCode x) const {
  ElemCode acc = 0;
  std::uint64_t order = ctx.size() - 1;
  for (const auto& t : terms) {
    if (t.coeff == 0) continue;
    ElemCode term = t.coeff;
    if (t.exp > 0) {
      if (x == 0) continue;
      unsigned __int128 e = t.exp % order;
      term = ctx.mul(term, ctx.pow(x, e));
    }
    acc = ctx.add(acc, term);
  }
  return acc;
}

std::vector<ElemCode> poly_roots(const SparseUniPoly& poly,
                                 const FieldCtx& ctx) {
  if (poly.is_zero()) throw Error("ZEROPOLY", "zero polynomial has no root set");
  if (ctx.size() > FieldCtx::kScanGuard)
    throw Error("GUARD", "field exceeds the 2^22 root-scan guard");
  std::vector<ElemCode> roots;
  for (ElemCode x = 0; x < ctx.size(); ++x) {
    if (poly.eval(ctx, x) == 0) roots.push_back(x);
  }
  return roots;
}

std::vector<ElemCode> poly_roots(const std::vector<ElemCode>& dense,
                                 const FieldCtx& ctx) {
  SparseUniPoly p;
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0) p.terms.push_back({i, dense[i]});
  }
  return poly_roots(p, ctx);
}

}  // namespace drl
