#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>

#include "drl/field.hpp"
#include "drl/pointset.hpp"
#include "drl/system.hpp"

namespace drl {

struct EnumOptions {
  std::uint64_t max_points = 10'000'000;  // total point guard
  unsigned workers = 1;
};

/// Returns (prime, exponent) for an odd prime power q; throws otherwise.
std::pair<std::uint64_t, unsigned> factor_prime_power(std::uint64_t q);

/// A specialized equation bound to a coordinate layout: factors carry the
/// layout slot of their variable and the exponent reduced for evaluation.
struct EvalPoly {
  struct Factor {
    int slot;
    std::uint64_t exp_mod;  // exponent mod (|F|-1)
    bool positive_exp;      // true when the unreduced exponent is > 0
  };
  struct Term {
    ElemCode coeff;
    std::vector<Factor> factors;
  };
  std::vector<Term> terms;

  ElemCode eval(const FieldCtx& ctx, std::span<const ElemCode> row) const;
};

EvalPoly bind_eval(const SpecializedPoly& poly, const Layout& layout,
                   const FieldCtx& ctx);

/// Exact enumeration of a symbolic system over F_{q^m}: every subset in
/// the downward closure of the support gets its full point set, blocks
/// solved in triangular order via root scans.
class SpecializedSystem {
 public:
  SystemSpec spec;
  std::uint64_t q = 0;
  unsigned m = 1;
  std::uint64_t prime = 0;   // q = prime^k
  unsigned k = 1;
  std::shared_ptr<const FieldCtx> ctx;  // F_{prime^{k m}}
  std::map<Mask, PointSet> points;
  std::map<Mask, Layout> layouts;

  const PointSet& at(Mask u) const;
  const Layout& layout(Mask u) const;

  /// Layout of the fibre-product boundary: the layout of u minus u's own
  /// cover coordinates. For singletons this is the bare vertex coordinate.
  Layout boundary_layout(Mask u) const;

  std::map<std::string, std::uint64_t> counts() const;
};

Layout layout_for(const SystemSpec& spec, Mask u);

SpecializedSystem enumerate_system(const SystemSpec& spec, std::uint64_t q,
                                   unsigned m, const EnumOptions& opts = {});

/// Enumerates one sort (singleton subset).
PointSet enumerate_sort(const SystemSpec& spec, int vertex, std::uint64_t q,
                        unsigned m, const EnumOptions& opts = {});

/// Extends a base point set by a block's cover variables: solves each
/// cover variable in triangular order by root scan of the specialized
/// resolving equation, then keeps completions on which every remaining
/// equation vanishes.
PointSet extend_block(const SystemSpec& spec, const CoverBlock& block,
                      const Layout& base_layout, const PointSet& base,
                      const FieldCtx& ctx, std::uint64_t q,
                      const EnumOptions& opts);

}  // namespace drl
