#include "drl/diffpoly.hpp"

#include <algorithm>
#include <map>

#include "drl/field.hpp"

namespace drl {

namespace {

// Total order on monomials: compare factor sequences lexicographically.
// Terms are stored descending so leading factors print first.
bool monomial_less(const std::vector<DiffFactor>& a,
                   const std::vector<DiffFactor>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::vector<DiffFactor> combine_factors(std::vector<DiffFactor> f) {
  std::sort(f.begin(), f.end(), [](const DiffFactor& x, const DiffFactor& y) {
    return std::tie(x.var, x.shift) < std::tie(y.var, y.shift);
  });
  std::vector<DiffFactor> out;
  for (const auto& x : f) {
    if (!out.empty() && out.back().var == x.var &&
        out.back().shift == x.shift) {
      out.back().exp += x.exp;
    } else {
      out.push_back(x);
    }
  }
  return out;
}

std::int64_t balanced_mod(std::int64_t c, std::int64_t p) {
  std::int64_t m = c % p;
  if (m < 0) m += p;
  if (m > p / 2) m -= p;
  return m;
}

}  // namespace

DiffPolynomial DiffPolynomial::constant(std::int64_t c) {
  DiffPolynomial r;
  if (c != 0) r.terms_.push_back({c, {}});
  return r;
}

DiffPolynomial DiffPolynomial::variable(int var, unsigned shift) {
  DiffPolynomial r;
  r.terms_.push_back({1, {{var, shift, 1}}});
  return r;
}

DiffPolynomial DiffPolynomial::from_terms(std::vector<DiffTerm> terms) {
  DiffPolynomial r;
  r.terms_ = std::move(terms);
  return r;
}

DiffPolynomial DiffPolynomial::operator+(const DiffPolynomial& o) const {
  DiffPolynomial r;
  r.terms_ = terms_;
  r.terms_.insert(r.terms_.end(), o.terms_.begin(), o.terms_.end());
  return r;
}

DiffPolynomial DiffPolynomial::operator-() const {
  DiffPolynomial r;
  r.terms_ = terms_;
  for (auto& t : r.terms_) t.coeff = -t.coeff;
  return r;
}

DiffPolynomial DiffPolynomial::operator-(const DiffPolynomial& o) const {
  return *this + (-o);
}

DiffPolynomial DiffPolynomial::operator*(const DiffPolynomial& o) const {
  DiffPolynomial r;
  for (const auto& a : terms_) {
    for (const auto& b : o.terms_) {
      DiffTerm t;
      // Coefficient products stay tiny in practice (inputs are balanced
      // residues of small primes); guard anyway.
      __int128 c = static_cast<__int128>(a.coeff) * b.coeff;
      if (c > INT64_MAX || c < INT64_MIN)
        throw Error("OVERFLOW", "coefficient overflow in polynomial product");
      t.coeff = static_cast<std::int64_t>(c);
      t.factors = a.factors;
      t.factors.insert(t.factors.end(), b.factors.begin(), b.factors.end());
      t.factors = combine_factors(std::move(t.factors));
      r.terms_.push_back(std::move(t));
    }
  }
  return r;
}

DiffPolynomial DiffPolynomial::pow(unsigned e) const {
  DiffPolynomial r = constant(1);
  DiffPolynomial base = *this;
  while (e) {
    if (e & 1) r = r * base;
    base = base * base;
    e >>= 1;
  }
  return r;
}

DiffPolynomial DiffPolynomial::normalized(std::int64_t p) const {
  std::map<std::vector<DiffFactor>, std::int64_t> acc;
  for (const auto& t : terms_) {
    auto f = combine_factors(t.factors);
    acc[f] = balanced_mod(acc[f] + balanced_mod(t.coeff, p), p);
  }
  std::vector<DiffTerm> out;
  for (auto it = acc.rbegin(); it != acc.rend(); ++it) {
    if (it->second != 0) out.push_back({it->second, it->first});
  }
  // map is keyed ascending by factor sequence; reverse iteration gives the
  // descending canonical term order.
  std::sort(out.begin(), out.end(), [](const DiffTerm& a, const DiffTerm& b) {
    return monomial_less(b.factors, a.factors);
  });
  return from_terms(std::move(out));
}

bool DiffPolynomial::operator==(const DiffPolynomial& o) const {
  if (terms_.size() != o.terms_.size()) return false;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (terms_[i].coeff != o.terms_[i].coeff) return false;
    if (terms_[i].factors != o.terms_[i].factors) return false;
  }
  return true;
}

std::vector<int> DiffPolynomial::variables() const {
  std::vector<int> v;
  for (const auto& t : terms_)
    for (const auto& f : t.factors) v.push_back(f.var);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

bool DiffPolynomial::mentions(int var) const {
  for (const auto& t : terms_)
    for (const auto& f : t.factors)
      if (f.var == var) return true;
  return false;
}

unsigned DiffPolynomial::max_shift() const {
  unsigned m = 0;
  for (const auto& t : terms_)
    for (const auto& f : t.factors) m = std::max(m, f.shift);
  return m;
}

std::string DiffPolynomial::to_string(
    const std::function<std::string(int)>& var_name) const {
  if (terms_.empty()) return "0";
  std::string s;
  bool first = true;
  for (const auto& t : terms_) {
    std::int64_t c = t.coeff;
    if (first) {
      if (c < 0) s += "-";
    } else {
      s += (c < 0) ? " - " : " + ";
    }
    std::int64_t a = c < 0 ? -c : c;
    bool need_coeff = (a != 1) || t.factors.empty();
    if (need_coeff) s += std::to_string(a);
    bool star = need_coeff;
    for (const auto& f : t.factors) {
      if (star) s += "*";
      star = true;
      std::string v = var_name(f.var);
      if (f.shift == 0) {
        s += v;
      } else if (f.shift == 1) {
        s += "s(" + v + ")";
      } else {
        s += "s^" + std::to_string(f.shift) + "(" + v + ")";
      }
      if (f.exp != 1) s += "^" + std::to_string(f.exp);
    }
    first = false;
  }
  return s;
}

SpecializedPoly specialize_poly(const DiffPolynomial& poly, std::uint64_t q) {
  if (q < 2) throw Error("NOTPOWER", "q must be a prime power >= 3");
  SpecializedPoly out;
  for (const auto& t : poly.terms()) {
    SpecTerm st;
    st.coeff = t.coeff;
    for (const auto& f : t.factors) {
      unsigned __int128 e = f.exp;
      for (unsigned k = 0; k < f.shift; ++k) e *= q;
      bool merged = false;
      for (auto& sf : st.factors) {
        if (sf.var == f.var) {
          sf.exp += e;
          merged = true;
          break;
        }
      }
      if (!merged) st.factors.push_back({f.var, e});
    }
    std::sort(st.factors.begin(), st.factors.end(),
              [](const SpecFactor& a, const SpecFactor& b) {
                return a.var < b.var;
              });
    out.terms.push_back(std::move(st));
  }
  return out;
}

}  // namespace drl
