#include "oracle.hpp"

#include <cmath>

namespace drl::testing {

namespace {

// Direct evaluation of a difference polynomial: sigma^k(v)^e computed as
// frobenius applied k times, then a plain power loop.
ElemCode eval_diff_poly(const DiffPolynomial& poly, const FieldCtx& ctx,
                        std::uint64_t q,
                        const std::vector<ElemCode>& values,
                        const std::vector<int>& slot_of_var) {
  ElemCode acc = ctx.zero();
  for (const auto& term : poly.terms()) {
    ElemCode v = ctx.from_signed(term.coeff);
    for (const auto& f : term.factors) {
      ElemCode x = values[slot_of_var[f.var]];
      for (unsigned k = 0; k < f.shift; ++k) x = ctx.frobenius(x, q);
      ElemCode p = ctx.one();
      for (unsigned e = 0; e < f.exp; ++e) p = ctx.mul(p, x);
      v = ctx.mul(v, p);
    }
    acc = ctx.add(acc, v);
  }
  return acc;
}

}  // namespace

double brute_force_space(const SystemSpec& spec, Mask u, std::uint64_t q,
                         unsigned m) {
  auto [prime, k] = factor_prime_power(q);
  double size = std::pow(static_cast<double>(prime),
                         static_cast<double>(k * m));
  Layout lay = layout_for(spec, u);
  return std::pow(size, static_cast<double>(lay.coords.size()));
}

PointSet brute_force_points(const SystemSpec& spec, Mask u, std::uint64_t q,
                            unsigned m, std::uint64_t guard) {
  auto [prime, k] = factor_prime_power(q);
  FieldCtx ctx(prime, k * m);
  Layout lay = layout_for(spec, u);
  std::uint32_t arity = lay.arity();
  std::vector<int> slot_of_var(spec.vars.size(), -1);
  for (std::uint32_t i = 0; i < arity; ++i) slot_of_var[lay.coords[i]] = i;

  std::vector<const DiffPolynomial*> eqs;
  for (const auto& [w, blk] : spec.blocks) {
    if ((w & ~u) != 0) continue;
    for (const auto& eq : blk.eqs) eqs.push_back(&eq);
  }

  // Odometer over all tuples.
  double space = brute_force_space(spec, u, q, m);
  if (space > static_cast<double>(guard))
    throw Error("GUARD", "brute-force space exceeds the oracle guard");

  PointSet out(arity);
  if (arity == 0) return PointSet::unit();
  std::vector<ElemCode> tuple(arity, 0);
  while (true) {
    bool ok = true;
    for (const auto* eq : eqs) {
      if (eval_diff_poly(*eq, ctx, q, tuple, slot_of_var) != 0) {
        ok = false;
        break;
      }
    }
    if (ok) out.append_row(tuple);
    // increment
    std::uint32_t pos = arity;
    while (pos > 0) {
      --pos;
      if (++tuple[pos] < ctx.size()) break;
      tuple[pos] = 0;
      if (pos == 0) {
        out.finish();
        return out;
      }
    }
  }
}

}  // namespace drl::testing
