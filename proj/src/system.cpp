#include "drl/system.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <sstream>

#include "drl/field.hpp"

namespace drl {

unsigned popcount(Mask m) { return static_cast<unsigned>(std::popcount(m)); }

std::vector<int> mask_vertices(Mask m) {
  std::vector<int> v;
  for (int i = 0; i < 32; ++i)
    if (m & (1u << i)) v.push_back(i);
  return v;
}

Mask mask_of(const std::vector<int>& vertices) {
  Mask m = 0;
  for (int v : vertices) m |= (1u << v);
  return m;
}

std::string mask_to_string(Mask m) {
  std::string s = "{";
  bool first = true;
  for (int v : mask_vertices(m)) {
    if (!first) s += ",";
    s += std::to_string(v);
    first = false;
  }
  return s + "}";
}

bool subset_order_less(Mask a, Mask b) {
  if (popcount(a) != popcount(b)) return popcount(a) < popcount(b);
  return a < b;
}

int SystemSpec::var_id(const std::string& n) const {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].name == n) return static_cast<int>(i);
  return -1;
}

int SystemSpec::vertex_var(int label) const {
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (vars[i].is_vertex && vars[i].vertex_label == label)
      return static_cast<int>(i);
  return -1;
}

std::vector<Mask> SystemSpec::closure() const {
  std::set<Mask> cl;
  cl.insert(0);
  for (const auto& [u, blk] : blocks) {
    for (Mask s = u;; s = (s - 1) & u) {
      cl.insert(s);
      if (s == 0) break;
    }
  }
  std::vector<Mask> out(cl.begin(), cl.end());
  std::sort(out.begin(), out.end(), subset_order_less);
  return out;
}

std::vector<Mask> SystemSpec::support() const {
  std::vector<Mask> out;
  for (const auto& [u, blk] : blocks)
    if (!blk.cover_vars.empty() || !blk.eqs.empty()) out.push_back(u);
  std::sort(out.begin(), out.end(), subset_order_less);
  return out;
}

std::vector<Diagnostic> SystemSpec::validate() {
  std::vector<Diagnostic> diags;
  auto report = [&](const std::string& code, const std::string& msg) {
    diags.push_back({0, 0, code, msg});
  };

  if (p < 3 || !is_prime_u64(static_cast<std::uint64_t>(p)))
    report("BAD_CHAR", "characteristic must be an odd prime");

  for (int label : vertices) {
    if (label < 0 || label > 30) {
      report("BAD_VERTEX", "vertex labels must lie in [0, 30]");
      return diags;
    }
    if (!blocks.count(Mask(1u << label)))
      report("MISSING_SINGLETON",
             "vertex " + std::to_string(label) + " has no sort block");
  }

  std::set<std::string> seen_names;
  for (const auto& v : vars) {
    if (!seen_names.insert(v.name).second)
      report("DUPLICATE_VARIABLE", "variable " + v.name + " declared twice");
  }

  for (auto& [u, blk] : blocks) {
    if ((u & ~vertex_mask) != 0)
      report("BAD_SUBSET",
             "block " + mask_to_string(u) + " mentions undeclared vertices");
    if (u == 0) report("BAD_SUBSET", "block on the empty subset");

    // Scope: equations at u may mention vertex variables of u and cover
    // variables of subsets of u.
    for (const auto& eq : blk.eqs) {
      for (int vid : eq.variables()) {
        const Variable& v = vars[vid];
        bool ok = v.is_vertex ? ((Mask(1u << v.vertex_label) & u) != 0)
                              : ((v.home & ~u) == 0);
        if (!ok)
          report("SCOPE_VIOLATION",
                 "equation at " + mask_to_string(u) + " mentions " + v.name +
                     " which is not in scope");
      }
    }

    // Triangularity: in declared order, each cover variable has an
    // equation univariate in it given everything resolved earlier.
    blk.resolver.assign(blk.cover_vars.size(), -1);
    std::set<int> resolved;
    for (int label : mask_vertices(u)) {
      int vv = vertex_var(label);
      if (vv >= 0) resolved.insert(vv);
    }
    for (const auto& [w, other] : blocks) {
      if (w != u && (w & ~u) == 0)
        for (int cv : other.cover_vars) resolved.insert(cv);
    }
    for (std::size_t i = 0; i < blk.cover_vars.size(); ++i) {
      int cv = blk.cover_vars[i];
      for (std::size_t e = 0; e < blk.eqs.size(); ++e) {
        if (!blk.eqs[e].mentions(cv)) continue;
        bool univariate = true;
        for (int vid : blk.eqs[e].variables()) {
          if (vid != cv && !resolved.count(vid)) {
            univariate = false;
            break;
          }
        }
        if (univariate) {
          blk.resolver[i] = static_cast<int>(e);
          break;
        }
      }
      if (blk.resolver[i] < 0)
        report("NON_TRIANGULAR",
               "cover variable " + vars[cv].name + " at " + mask_to_string(u) +
                   " has no resolving equation");
      resolved.insert(cv);
    }
  }
  return diags;
}

std::string SystemSpec::canonical_text() const {
  std::ostringstream os;
  os << "system " << name << "\n";
  os << "char " << p << "\n";
  os << "vertices";
  for (int v : vertices) os << " " << v;
  os << "\n";
  auto namer = [this](int id) { return vars[id].name; };
  std::vector<Mask> order;
  for (const auto& [u, blk] : blocks) order.push_back(u);
  std::sort(order.begin(), order.end(), subset_order_less);
  for (Mask u : order) {
    const CoverBlock& blk = blocks.at(u);
    if (popcount(u) == 1) {
      os << "sort " << mask_vertices(u)[0] << ":";
    } else {
      os << "cover " << mask_to_string(u) << ":";
    }
    if (!blk.cover_vars.empty()) {
      os << " vars";
      for (int cv : blk.cover_vars) os << " " << vars[cv].name;
      os << ";";
    }
    os << " eqs ";
    for (std::size_t i = 0; i < blk.eqs.size(); ++i) {
      if (i) os << ", ";
      os << blk.eqs[i].to_string(namer);
    }
    os << "\n";
  }
  return os.str();
}

bool structurally_equal(const SystemSpec& a, const SystemSpec& b) {
  return a.canonical_text() == b.canonical_text();
}

namespace {

DiffPolynomial resolve_raw(const RawPoly& raw, const SystemSpec& spec) {
  std::vector<DiffTerm> terms;
  for (const auto& rt : raw.terms) {
    DiffTerm t;
    t.coeff = rt.coeff;
    for (const auto& rf : rt.factors) {
      int vid = spec.var_id(rf.var);
      if (vid < 0)
        throw Error("UNKNOWN_VARIABLE",
                    "unknown variable " + rf.var + " in refinement");
      t.factors.push_back({vid, rf.shift, rf.exp});
    }
    terms.push_back(std::move(t));
  }
  return DiffPolynomial::from_terms(std::move(terms)).normalized(spec.p);
}

}  // namespace

SystemSpec apply_refinement(const SystemSpec& spec, const RefinementSpec& ref) {
  SystemSpec out = spec;
  for (const auto& entry : ref.entries) {
    if ((entry.u & ~out.vertex_mask) != 0)
      throw Error("BAD_SUBSET", "refinement targets undeclared vertices");
    CoverBlock& blk = out.blocks[entry.u];  // creates if absent
    blk.u = entry.u;
    for (const auto& vn : entry.new_vars) {
      int existing = out.var_id(vn);
      if (existing >= 0) {
        const Variable& ev = out.vars[existing];
        bool pull_down = !ev.is_vertex && (ev.home & ~entry.u) != 0 &&
                         (entry.u & ~ev.home) == 0 && ev.home != entry.u;
        if (!pull_down)
          throw Error("NAME_COLLISION",
                      "refinement variable " + vn + " already declared");
        CoverBlock& src = out.blocks.at(ev.home);
        src.cover_vars.erase(
            std::remove(src.cover_vars.begin(), src.cover_vars.end(),
                        existing),
            src.cover_vars.end());
        out.vars[existing].home = entry.u;
        out.vars[existing].block_pos = static_cast<int>(blk.cover_vars.size());
        blk.cover_vars.push_back(existing);
      } else {
        Variable v;
        v.name = vn;
        v.is_vertex = false;
        v.home = entry.u;
        v.block_pos = static_cast<int>(blk.cover_vars.size());
        out.vars.push_back(v);
        blk.cover_vars.push_back(static_cast<int>(out.vars.size()) - 1);
      }
    }
    for (const auto& rp : entry.eqs) {
      DiffPolynomial poly = resolve_raw(rp, out);
      bool dup = false;
      for (const auto& e : blk.eqs)
        if (e == poly) dup = true;
      if (!dup) blk.eqs.push_back(poly);
    }
  }
  // Drop equations at larger blocks that are now literal duplicates of
  // equations at contained blocks (after a pull-down the radical and
  // difference equations of the moved variable live at the target).
  for (auto& [u, blk] : out.blocks) {
    std::vector<DiffPolynomial> kept;
    for (const auto& eq : blk.eqs) {
      bool dup = false;
      for (const auto& [w, other] : out.blocks) {
        if (w == u || (w & ~u) != 0) continue;
        for (const auto& oe : other.eqs)
          if (oe == eq) dup = true;
      }
      if (!dup) kept.push_back(eq);
    }
    blk.eqs = std::move(kept);
  }
  auto diags = out.validate();
  if (!diags.empty())
    throw Error(diags[0].code, "refined spec invalid: " + diags[0].message);
  return out;
}

std::vector<RefinementSpec> generate_radical_twists(
    const SystemSpec& spec, const std::string& cover_var) {
  int vid = spec.var_id(cover_var);
  if (vid < 0 || spec.vars[vid].is_vertex)
    throw Error("NOT_RADICAL", cover_var + " is not a cover variable");
  const Variable& v = spec.vars[vid];
  const CoverBlock& blk = spec.blocks.at(v.home);

  // Locate w^e - g (g free of w, shift-0 power of w) and s(w) - w.
  std::optional<unsigned> radical_e;
  DiffPolynomial g;
  bool sigma_fixed = false;
  for (const auto& eq : blk.eqs) {
    const auto& ts = eq.terms();
    // s(w) - w
    if (ts.size() == 2 && ts[0].factors.size() == 1 &&
        ts[1].factors.size() == 1 && ts[0].factors[0].var == vid &&
        ts[1].factors[0].var == vid && ts[0].factors[0].shift == 1 &&
        ts[1].factors[0].shift == 0 && ts[0].factors[0].exp == 1 &&
        ts[1].factors[0].exp == 1 && ts[0].coeff == 1 && ts[1].coeff == -1) {
      sigma_fixed = true;
      continue;
    }
    // w^e - g with g free of w
    if (!ts.empty() && ts[0].factors.size() == 1 &&
        ts[0].factors[0].var == vid && ts[0].factors[0].shift == 0 &&
        ts[0].coeff == 1) {
      bool g_free = true;
      for (std::size_t i = 1; i < ts.size(); ++i)
        for (const auto& f : ts[i].factors)
          if (f.var == vid) g_free = false;
      if (g_free) {
        radical_e = ts[0].factors[0].exp;
        std::vector<DiffTerm> gt(ts.begin() + 1, ts.end());
        for (auto& t : gt) t.coeff = -t.coeff;
        g = DiffPolynomial::from_terms(std::move(gt)).normalized(spec.p);
      }
    }
  }
  if (!radical_e || !sigma_fixed)
    throw Error("NOT_RADICAL",
                cover_var + " does not have the radical shape (w^e - g, s(w) - w)");

  // Smallest subset scoping g: union of vertex labels and cover homes.
  Mask target = 0;
  for (int gv : g.variables()) {
    const Variable& vv = spec.vars[gv];
    target |= vv.is_vertex ? Mask(1u << vv.vertex_label) : vv.home;
  }
  if (target == 0 && !spec.vertices.empty())
    target = Mask(1u << spec.vertices[0]);

  // Units c with c^e = 1 mod p.
  std::vector<std::int64_t> roots_of_unity;
  for (std::int64_t c = 1; c < spec.p; ++c) {
    std::int64_t acc = 1;
    for (unsigned i = 0; i < *radical_e; ++i) acc = (acc * c) % spec.p;
    if (acc == 1) roots_of_unity.push_back(c);
  }

  auto namer = [&](int id) { return spec.vars[id].name; };
  std::vector<RefinementSpec> out;
  for (std::int64_t c : roots_of_unity) {
    RefinementSpec rs;
    rs.name = cover_var + "_t" + std::to_string(c);
    RefinementEntry entry;
    entry.u = target;
    std::string nv = cover_var + "_t" + std::to_string(c);
    entry.new_vars.push_back(nv);
    // nv^e - g
    RawPoly radical;
    {
      RawTerm lead;
      lead.coeff = 1;
      lead.factors.push_back({nv, 0, *radical_e});
      radical.terms.push_back(lead);
      for (const auto& t : g.terms()) {
        RawTerm rt;
        rt.coeff = -t.coeff;
        for (const auto& f : t.factors)
          rt.factors.push_back({namer(f.var), f.shift, f.exp});
        radical.terms.push_back(rt);
      }
    }
    entry.eqs.push_back(radical);
    // s(nv) - c nv, with c balanced so twists survive reduction at other
    // primes (-1 stays -1).
    RawPoly twist;
    {
      RawTerm lhs;
      lhs.coeff = 1;
      lhs.factors.push_back({nv, 1, 1});
      twist.terms.push_back(lhs);
      RawTerm rhs;
      std::int64_t cb = c > spec.p / 2 ? c - spec.p : c;
      rhs.coeff = -cb;
      rhs.factors.push_back({nv, 0, 1});
      twist.terms.push_back(rhs);
    }
    entry.eqs.push_back(twist);
    rs.entries.push_back(std::move(entry));
    out.push_back(std::move(rs));
  }
  return out;
}

}  // namespace drl
