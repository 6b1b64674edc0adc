#include "drl/lattice.hpp"

#include <algorithm>

namespace drl {

Layout LatticeView::layout(Mask u) const { return layout_for(sys_.spec, u); }

Layout LatticeView::boundary_layout(Mask u) const {
  if (popcount(u) == 1) {
    Layout l;
    l.coords = {sys_.spec.vertex_var(mask_vertices(u)[0])};
    return l;
  }
  return sys_.boundary_layout(u);
}

const PointSet& LatticeView::points(Mask u) {
  auto it = sys_.points.find(u);
  if (it != sys_.points.end()) return it->second;
  auto cached = pts_cache_.find(u);
  if (cached != pts_cache_.end()) return cached->second;
  pts_cache_[u] = compute_fibre_product(u);
  return pts_cache_.at(u);
}

PointSet LatticeView::compute_fibre_product(Mask u) {
  if (u == 0) return PointSet::unit();
  if (popcount(u) == 1)
    throw Error("NOSUBSET", "singleton outside the enumerated system");
  PointSet acc;
  Layout acc_layout;
  bool first = true;
  for (int v : mask_vertices(u)) {
    Mask w = u & ~(1u << v);
    const PointSet& pw = points(w);
    Layout lw = layout(w);
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
    acc = join(acc, acc_layout, pw, lw, merged, 1'000'000'000ull);
    acc_layout = merged;
  }
  Layout target = layout(u);
  return acc.project(acc_layout.positions_of(target));
}

const PointSet& LatticeView::boundary(Mask u) {
  auto it = boundary_cache_.find(u);
  if (it != boundary_cache_.end()) return it->second;
  PointSet out;
  if (popcount(u) == 1) {
    const FieldCtx& c = ctx();
    if (c.size() > FieldCtx::kScanGuard)
      throw Error("GUARD", "line materialization exceeds the scan guard");
    PointSet line(1);
    for (ElemCode e = 0; e < c.size(); ++e) line.append_row({&e, 1});
    line.finish();
    out = std::move(line);
  } else {
    // All tuples over the boundary coordinates compatible with every
    // proper subset: the join over maximal proper subsets.
    PointSet acc;
    Layout acc_layout;
    bool first = true;
    for (int v : mask_vertices(u)) {
      Mask w = u & ~(1u << v);
      const PointSet& pw = points(w);
      Layout lw = layout(w);
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
      acc = join(acc, acc_layout, pw, lw, merged, 1'000'000'000ull);
      acc_layout = merged;
    }
    out = acc.project(acc_layout.positions_of(boundary_layout(u)));
  }
  boundary_cache_[u] = std::move(out);
  return boundary_cache_.at(u);
}

const PointSet& LatticeView::rho_image(Mask u) {
  auto it = rho_cache_.find(u);
  if (it != rho_cache_.end()) return it->second;
  const PointSet& pts = points(u);
  Layout from = layout(u);
  Layout to = boundary_layout(u);
  rho_cache_[u] = pts.project(from.positions_of(to));
  return rho_cache_.at(u);
}

const std::vector<std::uint64_t>& LatticeView::fibre_sizes(Mask u) {
  auto it = fibre_cache_.find(u);
  if (it != fibre_cache_.end()) return it->second;
  const PointSet& base = boundary(u);
  const PointSet& pts = points(u);
  Layout from = layout(u);
  Layout to = boundary_layout(u);
  auto perm = from.positions_of(to);
  std::vector<std::uint64_t> sizes(base.size(), 0);
  std::vector<ElemCode> buf(to.coords.size());
  for (std::uint64_t i = 0; i < pts.size(); ++i) {
    auto r = pts.row(i);
    for (std::size_t j = 0; j < perm.size(); ++j) buf[j] = r[perm[j]];
    auto idx = base.index_of(buf);
    if (idx < 0)
      throw Error("COHERENCE", "point projects outside the fibre product");
    ++sizes[static_cast<std::size_t>(idx)];
  }
  fibre_cache_[u] = std::move(sizes);
  return fibre_cache_.at(u);
}

const std::vector<LatticeView::SignatureClass>& LatticeView::signature_classes(
    Mask u) {
  auto it = class_cache_.find(u);
  if (it != class_cache_.end()) return it->second;
  const auto& sizes = fibre_sizes(u);
  std::map<std::uint64_t, std::vector<std::uint64_t>> by_size;
  for (std::uint64_t i = 0; i < sizes.size(); ++i)
    by_size[sizes[i]].push_back(i);
  std::vector<SignatureClass> classes;
  for (auto& [s, rows] : by_size) classes.push_back({s, std::move(rows)});
  class_cache_[u] = std::move(classes);
  return class_cache_.at(u);
}

std::size_t LatticeView::modal_class(Mask u) {
  const auto& cls = signature_classes(u);
  if (cls.empty()) throw Error("EMPTY", "no signature classes");
  std::size_t best = 0;
  for (std::size_t i = 1; i < cls.size(); ++i) {
    if (cls[i].rows.size() >= cls[best].rows.size()) best = i;  // ties: larger fibre
  }
  return best;
}

DoubledEnumerator::DoubledEnumerator(LatticeView& lat, Mask u)
    : lat_(lat), u_(u) {
  const auto& spec = lat.system().spec;
  for (int v : mask_vertices(u)) {
    slots_.push_back({Mask(1u << v), 0});
    slots_.push_back({Mask(1u << v), Mask(1u << v)});
  }
  std::vector<Mask> bigger;
  for (const auto& [w, blk] : spec.blocks) {
    if (w != u && (w & ~u) == 0 && popcount(w) >= 2) bigger.push_back(w);
  }
  std::sort(bigger.begin(), bigger.end(), subset_order_less);
  for (Mask w : bigger) {
    std::vector<Mask> patterns;
    for (Mask iota = w;; iota = (iota - 1) & w) {
      patterns.push_back(iota);
      if (iota == 0) break;
    }
    std::sort(patterns.begin(), patterns.end());
    for (Mask iota : patterns) slots_.push_back({w, iota});
  }

  rows_.assign(slots_.size(), 0);
  Layout blay = lat.boundary_layout(u);
  out_arity_ = blay.arity();
  slot_to_out_.resize(slots_.size());
  slot_cover_pos_.resize(slots_.size());
  vertex_out_pos_.assign(slots_.size(), -1);
  slot_pts_.resize(slots_.size());
  prefix_src_.resize(slots_.size());
  auto find_slot = [&](Mask w, Mask iota) {
    for (std::size_t s = 0; s < slots_.size(); ++s)
      if (slots_[s].w == w && slots_[s].iota == iota)
        return static_cast<int>(s);
    return -1;
  };
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    Mask w = slots_[s].w;
    slot_pts_[s] = &lat.points(w);
    Layout lw = lat.layout(w);
    if (popcount(w) == 1) {
      int xv = spec.vertex_var(mask_vertices(w)[0]);
      vertex_out_pos_[s] = blay.pos(xv);
    }
    auto itb = spec.blocks.find(w);
    if (itb != spec.blocks.end()) {
      for (int cv : itb->second.cover_vars) {
        slot_cover_pos_[s].push_back(lw.pos(cv));
        slot_to_out_[s].push_back(blay.pos(cv));
      }
    }
    if (popcount(w) >= 2) {
      Layout bw = lat.system().boundary_layout(w);
      for (int coord : bw.coords) {
        const Variable& var = spec.vars[coord];
        Mask home = var.is_vertex ? Mask(1u << var.vertex_label) : var.home;
        Mask iota_home = slots_[s].iota & home;
        int srcs = find_slot(home, iota_home);
        if (srcs < 0) throw Error("INTERNAL", "missing doubling slot");
        Layout lh = lat.layout(home);
        prefix_src_[s].push_back({srcs, lh.pos(coord)});
      }
    }
  }
}

std::vector<int> DoubledEnumerator::slots_within(Mask part) const {
  std::vector<int> out;
  for (std::size_t s = 0; s < slots_.size(); ++s)
    if ((slots_[s].w & ~part) == 0) out.push_back(static_cast<int>(s));
  return out;
}

std::vector<int> DoubledEnumerator::slots_touching(int vertex, int copy) const {
  std::vector<int> out;
  Mask vb = 1u << vertex;
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    if ((slots_[s].w & vb) == 0) continue;
    if (((slots_[s].iota & vb) != 0) == (copy == 1))
      out.push_back(static_cast<int>(s));
  }
  return out;
}

void DoubledEnumerator::enumerate(const std::vector<int>& slot_idxs,
                                  const std::function<void()>& visit) {
  std::vector<ElemCode> prefix;
  auto rec = [&](auto&& self, std::size_t pos) -> void {
    if (pos == slot_idxs.size()) {
      visit();
      return;
    }
    int s = slot_idxs[pos];
    const PointSet& pw = *slot_pts_[s];
    if (popcount(slots_[s].w) == 1) {
      for (std::uint64_t i = 0; i < pw.size(); ++i) {
        rows_[s] = i;
        self(self, pos + 1);
      }
      return;
    }
    prefix.resize(prefix_src_[s].size());
    for (std::size_t j = 0; j < prefix_src_[s].size(); ++j) {
      const auto& src = prefix_src_[s][j];
      prefix[j] = slot_pts_[src.slot]->row(rows_[src.slot])[src.pos];
    }
    auto [lo, hi] = pw.prefix_range(prefix);
    for (std::uint64_t i = lo; i < hi; ++i) {
      rows_[s] = i;
      self(self, pos + 1);
    }
  };
  rec(rec, 0);
}

void DoubledEnumerator::project_pattern(Mask kappa,
                                        std::vector<ElemCode>& out) const {
  out.assign(out_arity_, 0);
  for (std::size_t s = 0; s < slots_.size(); ++s) {
    const CopySlot& slot = slots_[s];
    if ((kappa & slot.w) != slot.iota) continue;
    auto r = slot_pts_[s]->row(rows_[s]);
    if (vertex_out_pos_[s] >= 0) out[vertex_out_pos_[s]] = r[0];
    for (std::size_t j = 0; j < slot_to_out_[s].size(); ++j) {
      if (slot_to_out_[s][j] >= 0)
        out[slot_to_out_[s][j]] = r[slot_cover_pos_[s][j]];
    }
  }
}

std::uint64_t LatticeView::for_each_doubled(
    Mask u, const std::function<void(const DoubledEnumerator&)>& visit,
    std::optional<std::uint64_t> guard) {
  DoubledEnumerator en(*this, u);
  std::vector<int> all;
  for (std::size_t s = 0; s < en.slots().size(); ++s)
    all.push_back(static_cast<int>(s));
  std::uint64_t count = 0;
  en.enumerate(all, [&] {
    ++count;
    if (guard && count > *guard)
      throw Error("GUARD", "doubling exceeds the guard");
    visit(en);
  });
  return count;
}

std::uint64_t LatticeView::doubled_count(Mask u, std::uint64_t guard) {
  return for_each_doubled(u, [](const DoubledPoint&) {}, guard);
}

std::vector<int> name_projection(const SystemSpec& src_spec, const Layout& src,
                                 const SystemSpec& dst_spec,
                                 const Layout& dst) {
  std::vector<int> out;
  out.reserve(dst.coords.size());
  for (int dv : dst.coords) {
    const std::string& name = dst_spec.vars[dv].name;
    int sv = src_spec.var_id(name);
    if (sv < 0)
      throw Error("LAYOUT", "variable " + name + " missing from source spec");
    int pos = src.pos(sv);
    if (pos < 0)
      throw Error("LAYOUT", "variable " + name + " missing from source layout");
    out.push_back(pos);
  }
  return out;
}

PointSet fibre_product_plus(LatticeView& base, LatticeView& candidate, Mask u,
                            std::uint64_t max_rows) {
  const PointSet& a = base.points(u);
  const PointSet& b = candidate.points(u);
  Layout la = base.layout(u);
  Layout lb = candidate.layout(u);

  // Shared coordinates by name; all base boundary coordinates must be
  // shared or the layouts do not describe a common boundary.
  Layout bl = base.boundary_layout(u);
  for (int coord : bl.coords) {
    const std::string& name = base.system().spec.vars[coord].name;
    if (candidate.system().spec.var_id(name) < 0)
      throw Error("LAYOUT",
                  "candidate lacks boundary coordinate " + name);
  }

  // Translate b's layout into base variable-id space where names match;
  // unmatched variables get fresh negative ids so they stay distinct.
  Layout lb_as_base;
  int fresh = -1;
  for (int coord : lb.coords) {
    const std::string& name = candidate.system().spec.vars[coord].name;
    int bid = base.system().spec.var_id(name);
    lb_as_base.coords.push_back(bid >= 0 ? bid : fresh--);
  }
  Layout target;
  target.coords = la.coords;
  for (int c : lb_as_base.coords)
    if (target.pos(c) < 0) target.coords.push_back(c);
  return join(a, la, b, lb_as_base, target, max_rows);
}

}  // namespace drl
