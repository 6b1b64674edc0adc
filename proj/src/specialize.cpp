#include "drl/specialize.hpp"

#include <algorithm>
#include <mutex>
#include <thread>

namespace drl {

std::pair<std::uint64_t, unsigned> factor_prime_power(std::uint64_t q) {
  if (q < 3) throw Error("NOTPOWER", "q must be an odd prime power >= 3");
  std::uint64_t base = 0;
  for (std::uint64_t d = 3; d * d <= q; d += 2) {
    if (q % d == 0) {
      base = d;
      break;
    }
  }
  if (q % 2 == 0) throw Error("NOTPOWER", "even q is not supported");
  if (base == 0) return {q, 1};  // q prime
  unsigned k = 0;
  std::uint64_t v = q;
  while (v % base == 0) {
    v /= base;
    ++k;
  }
  if (v != 1 || !is_prime_u64(base))
    throw Error("NOTPOWER", std::to_string(q) + " is not a prime power");
  return {base, k};
}

ElemCode EvalPoly::eval(const FieldCtx& ctx,
                        std::span<const ElemCode> row) const {
  ElemCode acc = 0;
  for (const auto& t : terms) {
    ElemCode v = t.coeff;
    for (const auto& f : t.factors) {
      ElemCode x = row[f.slot];
      if (x == 0) {
        if (f.positive_exp) {
          v = 0;
          break;
        }
        continue;
      }
      v = ctx.mul(v, ctx.pow(x, f.exp_mod));
    }
    if (v) acc = ctx.add(acc, v);
  }
  return acc;
}

EvalPoly bind_eval(const SpecializedPoly& poly, const Layout& layout,
                   const FieldCtx& ctx) {
  EvalPoly out;
  std::uint64_t order = ctx.size() - 1;
  for (const auto& t : poly.terms) {
    EvalPoly::Term et;
    et.coeff = ctx.from_signed(t.coeff);
    if (et.coeff == 0) continue;
    for (const auto& f : t.factors) {
      int slot = layout.pos(f.var);
      if (slot < 0) throw Error("LAYOUT", "equation variable not in layout");
      EvalPoly::Factor ef;
      ef.slot = slot;
      ef.exp_mod = static_cast<std::uint64_t>(f.exp % order);
      ef.positive_exp = f.exp > 0;
      et.factors.push_back(ef);
    }
    out.terms.push_back(std::move(et));
  }
  return out;
}

Layout layout_for(const SystemSpec& spec, Mask u) {
  Layout l;
  for (int v : mask_vertices(u)) {
    int id = spec.vertex_var(v);
    if (id >= 0) l.coords.push_back(id);
  }
  std::vector<Mask> blocks;
  for (const auto& [w, blk] : spec.blocks)
    if ((w & ~u) == 0) blocks.push_back(w);
  std::sort(blocks.begin(), blocks.end(), subset_order_less);
  for (Mask w : blocks)
    for (int cv : spec.blocks.at(w).cover_vars) l.coords.push_back(cv);
  return l;
}

const PointSet& SpecializedSystem::at(Mask u) const {
  auto it = points.find(u);
  if (it == points.end())
    throw Error("NOSUBSET", "no point set for " + mask_to_string(u));
  return it->second;
}

const Layout& SpecializedSystem::layout(Mask u) const {
  auto it = layouts.find(u);
  if (it == layouts.end())
    throw Error("NOSUBSET", "no layout for " + mask_to_string(u));
  return it->second;
}

Layout SpecializedSystem::boundary_layout(Mask u) const {
  Layout l = layout_for(spec, u);
  auto it = spec.blocks.find(u);
  if (it != spec.blocks.end()) {
    for (int cv : it->second.cover_vars) {
      auto& c = l.coords;
      c.erase(std::remove(c.begin(), c.end(), cv), c.end());
    }
  }
  return l;
}

std::map<std::string, std::uint64_t> SpecializedSystem::counts() const {
  std::map<std::string, std::uint64_t> out;
  for (const auto& [u, ps] : points) out[mask_to_string(u)] = ps.size();
  return out;
}

namespace {

struct BlockPlan {
  // Per cover variable: the resolving equation specialized, with the
  // cover variable's own factors separated out.
  struct Resolver {
    int var_slot;  // slot of the cover variable in the output layout
    // Terms: coefficient-producing factors (earlier slots) and the
    // exponent contributed to the cover variable.
    struct Term {
      ElemCode coeff;
      std::vector<EvalPoly::Factor> others;
      unsigned __int128 self_exp;
    };
    std::vector<Term> terms;
  };
  std::vector<Resolver> resolvers;
  std::vector<EvalPoly> base_filters;  // equations without this block's covers
  std::vector<EvalPoly> verifiers;     // remaining equations
};

BlockPlan make_block_plan(const SystemSpec& spec, const CoverBlock& block,
                          const Layout& out_layout, const FieldCtx& ctx,
                          std::uint64_t q) {
  BlockPlan plan;
  std::uint64_t order = ctx.size() - 1;
  std::vector<SpecializedPoly> specs;
  specs.reserve(block.eqs.size());
  for (const auto& eq : block.eqs) specs.push_back(specialize_poly(eq, q));

  std::vector<bool> used(block.eqs.size(), false);
  for (std::size_t i = 0; i < block.cover_vars.size(); ++i) {
    int cv = block.cover_vars[i];
    int rEq = block.resolver[i];
    if (rEq < 0) throw Error("NON_TRIANGULAR", "block missing resolver");
    used[rEq] = true;
    BlockPlan::Resolver res;
    res.var_slot = out_layout.pos(cv);
    for (const auto& t : specs[rEq].terms) {
      BlockPlan::Resolver::Term rt;
      rt.coeff = ctx.from_signed(t.coeff);
      rt.self_exp = 0;
      if (rt.coeff == 0) continue;
      for (const auto& f : t.factors) {
        if (f.var == cv) {
          rt.self_exp += f.exp;
        } else {
          EvalPoly::Factor ef;
          ef.slot = out_layout.pos(f.var);
          ef.exp_mod = static_cast<std::uint64_t>(f.exp % order);
          ef.positive_exp = f.exp > 0;
          rt.others.push_back(ef);
        }
      }
      res.terms.push_back(std::move(rt));
    }
    plan.resolvers.push_back(std::move(res));
  }
  for (std::size_t e = 0; e < block.eqs.size(); ++e) {
    if (used[e]) continue;
    bool touches_cover = false;
    for (int cv : block.cover_vars)
      if (block.eqs[e].mentions(cv)) touches_cover = true;
    auto bound = bind_eval(specs[e], out_layout, ctx);
    if (touches_cover)
      plan.verifiers.push_back(std::move(bound));
    else
      plan.base_filters.push_back(std::move(bound));
  }
  return plan;
}

// Solves the block covers for base rows [lo, hi), appending full rows.
void solve_range(const BlockPlan& plan, const PointSet& base,
                 std::uint32_t out_arity, const FieldCtx& ctx,
                 std::uint64_t lo, std::uint64_t hi,
                 std::vector<ElemCode>& out) {
  std::uint64_t order = ctx.size() - 1;
  std::vector<ElemCode> row(out_arity);
  std::uint32_t base_arity = base.arity();

  // Recursive triangular solve over the resolver list.
  auto solve = [&](auto&& self, std::size_t level) -> void {
    if (level == plan.resolvers.size()) {
      for (const auto& v : plan.verifiers)
        if (v.eval(ctx, row) != 0) return;
      out.insert(out.end(), row.begin(), row.end());
      return;
    }
    const auto& res = plan.resolvers[level];
    // Assemble the univariate polynomial in the cover variable.
    SparseUniPoly uni;
    for (const auto& t : res.terms) {
      ElemCode c = t.coeff;
      for (const auto& f : t.others) {
        ElemCode x = row[f.slot];
        if (x == 0) {
          if (f.positive_exp) {
            c = 0;
            break;
          }
          continue;
        }
        c = ctx.mul(c, ctx.pow(x, f.exp_mod % order));
      }
      if (c == 0) continue;
      bool merged = false;
      for (auto& ut : uni.terms) {
        if (ut.exp == t.self_exp) {
          ut.coeff = ctx.add(ut.coeff, c);
          merged = true;
          break;
        }
      }
      if (!merged) uni.terms.push_back({t.self_exp, c});
    }
    if (uni.is_zero()) {
      std::string pt = "(";
      for (std::uint32_t i = 0; i < base_arity; ++i) {
        if (i) pt += ",";
        pt += ctx.to_string(row[i]);
      }
      pt += ")";
      throw Error("ZERO_RESOLVENT",
                  "resolving equation vanishes identically at base point " + pt);
    }
    for (ElemCode r : poly_roots(uni, ctx)) {
      row[res.var_slot] = r;
      self(self, level + 1);
    }
  };

  for (std::uint64_t i = lo; i < hi; ++i) {
    auto b = base.row(i);
    std::copy(b.begin(), b.end(), row.begin());
    bool keep = true;
    for (const auto& f : plan.base_filters) {
      if (f.eval(ctx, row) != 0) {
        keep = false;
        break;
      }
    }
    if (!keep) continue;
    solve(solve, 0);
  }
}

}  // namespace

PointSet extend_block(const SystemSpec& spec, const CoverBlock& block,
                      const Layout& base_layout, const PointSet& base,
                      const FieldCtx& ctx, std::uint64_t q,
                      const EnumOptions& opts) {
  Layout out_layout = base_layout;
  for (int cv : block.cover_vars) out_layout.coords.push_back(cv);
  BlockPlan plan = make_block_plan(spec, block, out_layout, ctx, q);

  std::uint32_t out_arity = out_layout.arity();
  std::uint64_t n = base.size();
  unsigned workers = std::max(1u, opts.workers);
  std::vector<std::vector<ElemCode>> chunks;
  if (workers <= 1 || n < 1024) {
    chunks.resize(1);
    solve_range(plan, base, out_arity, ctx, 0, n, chunks[0]);
  } else {
    chunks.resize(workers);
    std::vector<std::thread> threads;
    std::exception_ptr err;
    std::mutex err_mu;
    for (unsigned w = 0; w < workers; ++w) {
      std::uint64_t lo = n * w / workers;
      std::uint64_t hi = n * (w + 1) / workers;
      threads.emplace_back([&, w, lo, hi] {
        try {
          solve_range(plan, base, out_arity, ctx, lo, hi, chunks[w]);
        } catch (...) {
          std::lock_guard<std::mutex> g(err_mu);
          if (!err) err = std::current_exception();
        }
      });
    }
    for (auto& t : threads) t.join();
    if (err) std::rethrow_exception(err);
  }

  PointSet out(out_arity);
  std::uint64_t total = 0;
  for (auto& c : chunks) total += c.size() / out_arity;
  if (total > opts.max_points)
    throw Error("GUARD", "enumeration exceeds the point guard");
  std::vector<ElemCode> all;
  all.reserve(total * out_arity);
  for (auto& c : chunks) all.insert(all.end(), c.begin(), c.end());
  return PointSet::from_rows(out_arity, std::move(all));
}

PointSet enumerate_sort(const SystemSpec& spec, int vertex, std::uint64_t q,
                        unsigned m, const EnumOptions& opts) {
  auto [prime, k] = factor_prime_power(q);
  FieldCtx ctx(prime, k * m);
  Mask u = 1u << vertex;
  auto it = spec.blocks.find(u);
  if (it == spec.blocks.end())
    throw Error("MISSING_SINGLETON", "no sort block for vertex");
  if (ctx.size() > FieldCtx::kScanGuard)
    throw Error("GUARD", "sort scan exceeds the field guard");
  int xv = spec.vertex_var(vertex);
  Layout line_layout;
  line_layout.coords = {xv};
  PointSet line(1);
  for (ElemCode c = 0; c < ctx.size(); ++c) line.append_row({&c, 1});
  line.finish();
  return extend_block(spec, it->second, line_layout, line, ctx, q, opts);
}

SpecializedSystem enumerate_system(const SystemSpec& spec, std::uint64_t q,
                                   unsigned m, const EnumOptions& opts) {
  SpecializedSystem sys;
  sys.spec = spec;
  {
    auto diags = sys.spec.validate();  // fills resolvers
    if (!diags.empty())
      throw Error(diags[0].code, "invalid spec: " + diags[0].message);
  }
  sys.q = q;
  sys.m = m;
  auto [prime, k] = factor_prime_power(q);
  sys.prime = prime;
  sys.k = k;
  if (m < 1) throw Error("BADM", "degree bound m must be at least 1");
  sys.ctx = std::make_shared<FieldCtx>(prime, k * m);
  if (sys.ctx->size() > FieldCtx::kScanGuard)
    throw Error("GUARD", "field exceeds the scan guard");

  const FieldCtx& ctx = *sys.ctx;
  std::uint64_t running_total = 0;
  for (Mask u : sys.spec.closure()) {
    Layout lay = layout_for(sys.spec, u);
    PointSet ps;
    if (u == 0) {
      ps = PointSet::unit();
    } else if (popcount(u) == 1) {
      int vtx = mask_vertices(u)[0];
      int xv = sys.spec.vertex_var(vtx);
      Layout line_layout;
      line_layout.coords = {xv};
      PointSet line(1);
      for (ElemCode c = 0; c < ctx.size(); ++c) line.append_row({&c, 1});
      line.finish();
      ps = extend_block(sys.spec, sys.spec.blocks.at(u), line_layout, line,
                        ctx, q, opts);
    } else {
      // Fibre product of the maximal proper subsets, then the block.
      PointSet acc;
      Layout acc_layout;
      bool first = true;
      for (int v : mask_vertices(u)) {
        Mask w = u & ~(1u << v);
        Layout lw = layout_for(sys.spec, w);
        const PointSet& pw = sys.points.at(w);
        if (first) {
          acc = pw;
          acc_layout = lw;
          first = false;
          continue;
        }
        Layout merged;
        merged.coords = acc_layout.coords;
        for (int c : lw.coords)
          if (merged.pos(c) < 0) merged.coords.push_back(c);
        acc = join(acc, acc_layout, pw, lw, merged, opts.max_points);
        acc_layout = merged;
      }
      // Reorder to the boundary layout.
      Layout blay = lay;
      auto itb = sys.spec.blocks.find(u);
      if (itb != sys.spec.blocks.end()) {
        for (int cv : itb->second.cover_vars) {
          auto& c = blay.coords;
          c.erase(std::remove(c.begin(), c.end(), cv), c.end());
        }
      }
      std::vector<int> perm = acc_layout.positions_of(blay);
      PointSet base = acc.project(perm);
      if (itb != sys.spec.blocks.end()) {
        ps = extend_block(sys.spec, itb->second, blay, base, ctx, q, opts);
      } else {
        ps = std::move(base);
      }
    }
    running_total += ps.size();
    if (running_total > opts.max_points)
      throw Error("GUARD", "enumeration exceeds the point guard");
    sys.layouts[u] = std::move(lay);
    sys.points[u] = std::move(ps);
  }
  return sys;
}

}  // namespace drl
