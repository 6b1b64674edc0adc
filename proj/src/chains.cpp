#include "drl/chains.hpp"

#include <algorithm>
#include <random>

namespace drl {

const PointSet& Chain::at(Mask v) const {
  auto it = sets.find(v);
  if (it == sets.end())
    throw Error("NOSUBSET", "chain has no set at " + mask_to_string(v));
  return it->second;
}

namespace {

std::vector<Mask> proper_subsets(Mask u) {
  std::vector<Mask> out;
  for (Mask s = (u - 1) & u;; s = (s - 1) & u) {
    out.push_back(s);
    if (s == 0) break;
  }
  std::sort(out.begin(), out.end(), subset_order_less);
  return out;
}

}  // namespace

std::vector<ChainViolation> validate_chain(
    LatticeView& lat, const Chain& chain,
    const std::optional<std::vector<Mask>>& complex) {
  std::vector<ChainViolation> out;
  const auto& spec = lat.system().spec;
  for (const auto& [u, wu] : chain.sets) {
    Layout lu = lat.layout(u);
    for (const auto& [v, wv] : chain.sets) {
      if (v == u || (v & ~u) != 0) continue;
      Layout lv = lat.layout(v);
      auto perm = lu.positions_of(lv);
      std::vector<ElemCode> buf(perm.size());
      for (std::uint64_t i = 0; i < wu.size(); ++i) {
        auto r = wu.row(i);
        for (std::size_t j = 0; j < perm.size(); ++j) buf[j] = r[perm[j]];
        if (!wv.contains(buf)) {
          out.push_back({u, v, std::vector<ElemCode>(r.begin(), r.end()),
                         "projection of a point of W(" + mask_to_string(u) +
                             ") misses W(" + mask_to_string(v) + ")"});
          break;
        }
      }
    }
  }
  if (complex) {
    for (const auto& [u, wu] : chain.sets) {
      if (popcount(u) < 2) continue;
      bool in_complex = false;
      for (Mask m : *complex)
        if (m == u) in_complex = true;
      if (in_complex) continue;
      PointSet fp = chain_fibre_product(lat, chain, u);
      if (!(fp == wu)) {
        out.push_back({u, u, {},
                       "W(" + mask_to_string(u) +
                           ") is not the fibre product of its proper parts"});
      }
    }
  }
  (void)spec;
  return out;
}

PointSet chain_fibre_product(LatticeView& lat, const Chain& chain, Mask u) {
  PointSet acc;
  Layout acc_layout;
  bool first = true;
  for (int v : mask_vertices(u)) {
    Mask w = u & ~(1u << v);
    const PointSet& pw = chain.at(w);
    Layout lw = lat.layout(w);
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
  if (first) return PointSet::unit();
  Layout target = lat.boundary_layout(u);
  return acc.project(acc_layout.positions_of(target));
}

Chain random_chain(LatticeView& lat, Mask u, const mpq_class& density,
                   std::uint64_t seed) {
  if (density <= 0 || density > 1)
    throw Error("BADDENSITY", "density must lie in (0, 1]");
  Chain chain;
  chain.top = u;
  chain.sets[0] = PointSet::unit();

  std::mt19937_64 rng(seed);
  // Exact Bernoulli: draw < floor(2^64 num / den).
  mpz_class threshold_z = (mpz_class(1) << 64) * density.get_num() /
                          density.get_den();
  bool always = density == 1;
  auto keep = [&]() {
    std::uint64_t draw = rng();
    if (always) return true;
    mpz_class d(static_cast<unsigned long>(draw >> 32));
    d <<= 32;
    d += static_cast<unsigned long>(draw & 0xffffffffull);
    return d < threshold_z;
  };

  auto subs = proper_subsets(u);
  for (Mask v : subs) {
    if (v == 0) continue;
    const PointSet& pv = lat.points(v);
    PointSet wv(pv.arity());
    for (std::uint64_t i = 0; i < pv.size(); ++i) {
      if (keep()) wv.append_row(pv.row(i));
    }
    wv.finish();
    chain.sets[v] = std::move(wv);
  }
  // Downward closure: ascending cardinality, drop points whose projection
  // to a maximal proper subset fell out.
  for (Mask v : subs) {
    if (popcount(v) < 2) continue;
    Layout lv = lat.layout(v);
    PointSet& wv = chain.sets[v];
    PointSet fixed(wv.arity());
    std::vector<std::pair<std::vector<int>, const PointSet*>> targets;
    for (int i : mask_vertices(v)) {
      Mask w = v & ~(1u << i);
      if (w == 0) continue;
      targets.push_back(
          {lv.positions_of(lat.layout(w)), &chain.sets.at(w)});
    }
    std::vector<ElemCode> buf;
    for (std::uint64_t i = 0; i < wv.size(); ++i) {
      auto r = wv.row(i);
      bool ok = true;
      for (const auto& [perm, wset] : targets) {
        buf.resize(perm.size());
        for (std::size_t j = 0; j < perm.size(); ++j) buf[j] = r[perm[j]];
        if (!wset->contains(buf)) {
          ok = false;
          break;
        }
      }
      if (ok) fixed.append_row(r);
    }
    fixed.finish();
    chain.sets[v] = std::move(fixed);
  }
  chain.sets[u] = chain_fibre_product(lat, chain, u);
  return chain;
}

std::uint64_t ChainDecomposition::piece_count() const {
  std::uint64_t n = 0;
  for (const auto& [u, ps] : pieces) n += ps.size();
  return n;
}

namespace {

// piece index per point of the carrier, aligned with carrier rows.
std::vector<int> piece_index(const std::vector<Piece>& pieces,
                             const PointSet& carrier) {
  std::vector<int> idx(carrier.size(), -1);
  for (std::size_t p = 0; p < pieces.size(); ++p) {
    const PointSet& pts = pieces[p].pts;
    for (std::uint64_t i = 0; i < pts.size(); ++i) {
      auto widx = carrier.index_of(pts.row(i));
      if (widx >= 0) idx[static_cast<std::size_t>(widx)] = static_cast<int>(p);
    }
  }
  return idx;
}

bool is_partition(const std::vector<Piece>& pieces, const PointSet& carrier) {
  std::vector<char> hit(carrier.size(), 0);
  std::uint64_t total = 0;
  for (const auto& p : pieces) {
    total += p.pts.size();
    for (std::uint64_t i = 0; i < p.pts.size(); ++i) {
      auto idx = carrier.index_of(p.pts.row(i));
      if (idx < 0) return false;
      if (hit[static_cast<std::size_t>(idx)]) return false;
      hit[static_cast<std::size_t>(idx)] = 1;
    }
  }
  return total == carrier.size();
}

}  // namespace

ChainDecomposition build_section_decomposition(
    LatticeView& refined, const SystemSpec& base_spec,
    const std::vector<Mask>& complex) {
  ChainDecomposition out;
  const SystemSpec& rspec = refined.system().spec;
  std::vector<Mask> order = complex;
  std::sort(order.begin(), order.end(), subset_order_less);

  for (Mask u : order) {
    if (u == 0) {
      Piece unit;
      unit.pts = PointSet::unit();
      unit.lambda = 1;
      out.pieces[0].push_back(std::move(unit));
      continue;
    }
    const PointSet& carrier = refined.points(u);
    std::vector<Piece> pieces;
    if (popcount(u) == 1) {
      // Base case: sections of the projection to the base sort.
      Layout lu = refined.layout(u);
      Layout base_l = layout_for(base_spec, u);
      auto perm = name_projection(rspec, lu, base_spec, base_l);
      std::map<std::vector<ElemCode>, std::vector<std::uint64_t>> fibres;
      std::vector<ElemCode> key(perm.size());
      for (std::uint64_t i = 0; i < carrier.size(); ++i) {
        auto r = carrier.row(i);
        for (std::size_t j = 0; j < perm.size(); ++j) key[j] = r[perm[j]];
        fibres[key].push_back(i);
      }
      std::uint64_t max_fibre = 0;
      for (const auto& [k, rows] : fibres)
        max_fibre = std::max<std::uint64_t>(max_fibre, rows.size());
      for (std::uint64_t k = 0; k < max_fibre; ++k) {
        Piece piece;
        PointSet pts(carrier.arity());
        for (const auto& [bk, rows] : fibres) {
          if (k < rows.size()) pts.append_row(carrier.row(rows[k]));
        }
        pts.finish();
        piece.section = static_cast<int>(k);
        piece.lambda = carrier.size()
                           ? mpq_class(pts.size(), carrier.size())
                           : mpq_class(0);
        piece.parents[0] = 0;
        piece.pts = std::move(pts);
        pieces.push_back(std::move(piece));
      }
    } else {
      // Chain keys from the pieces of the proper subsets.
      auto subs = proper_subsets(u);
      std::vector<Mask> nonempty;
      for (Mask v : subs)
        if (v != 0) nonempty.push_back(v);
      // point -> piece maps per subset
      std::map<Mask, std::vector<int>> pidx;
      for (Mask v : nonempty)
        pidx[v] = piece_index(out.pieces.at(v), refined.points(v));

      const PointSet& bnd = refined.boundary(u);
      Layout blay = refined.boundary_layout(u);
      std::map<Mask, std::vector<int>> perms;
      for (Mask v : nonempty)
        perms[v] = blay.positions_of(refined.layout(v));

      // Group boundary rows by chain key.
      std::map<std::vector<int>, std::vector<std::uint64_t>> chains;
      std::vector<ElemCode> buf;
      for (std::uint64_t i = 0; i < bnd.size(); ++i) {
        auto r = bnd.row(i);
        std::vector<int> ck;
        ck.reserve(nonempty.size());
        bool ok = true;
        for (Mask v : nonempty) {
          const auto& perm = perms[v];
          buf.resize(perm.size());
          for (std::size_t j = 0; j < perm.size(); ++j) buf[j] = r[perm[j]];
          auto ridx = refined.points(v).index_of(buf);
          if (ridx < 0) {
            ok = false;
            break;
          }
          ck.push_back(pidx[v][static_cast<std::size_t>(ridx)]);
        }
        if (ok) chains[ck].push_back(i);
      }

      // Sections of the cover fibres over each chain's fibre product.
      Layout lu = refined.layout(u);
      auto bperm = lu.positions_of(blay);
      std::map<std::uint64_t, std::uint64_t> fibre_of_row;  // carrier row -> boundary row
      std::vector<std::vector<std::uint64_t>> fibre_rows(bnd.size());
      std::vector<ElemCode> key(bperm.size());
      for (std::uint64_t i = 0; i < carrier.size(); ++i) {
        auto r = carrier.row(i);
        for (std::size_t j = 0; j < bperm.size(); ++j) key[j] = r[bperm[j]];
        auto bidx = bnd.index_of(key);
        if (bidx < 0) throw Error("COHERENCE", "cover point off the boundary");
        fibre_rows[static_cast<std::size_t>(bidx)].push_back(i);
      }
      for (const auto& [ck, bnd_rows] : chains) {
        std::uint64_t max_fibre = 0;
        for (auto bi : bnd_rows)
          max_fibre = std::max<std::uint64_t>(max_fibre, fibre_rows[bi].size());
        for (std::uint64_t k = 0; k < max_fibre; ++k) {
          Piece piece;
          PointSet pts(carrier.arity());
          for (auto bi : bnd_rows) {
            if (k < fibre_rows[bi].size())
              pts.append_row(carrier.row(fibre_rows[bi][k]));
          }
          pts.finish();
          piece.section = static_cast<int>(k);
          for (std::size_t vi = 0; vi < nonempty.size(); ++vi)
            piece.parents[nonempty[vi]] = ck[vi];
          piece.lambda = carrier.size()
                             ? mpq_class(pts.size(), carrier.size())
                             : mpq_class(0);
          piece.pts = std::move(pts);
          pieces.push_back(std::move(piece));
        }
      }
      (void)fibre_of_row;
    }
    out.pieces[u] = std::move(pieces);
  }

  // Verification: partition per subset, injectivity of the base projection
  // on every piece.
  out.checks.partition_ok = true;
  out.checks.sections_ok = true;
  for (Mask u : order) {
    if (u == 0) continue;
    if (!is_partition(out.pieces.at(u), refined.points(u)))
      out.checks.partition_ok = false;
    Layout lu = refined.layout(u);
    Layout base_l = layout_for(base_spec, u);
    auto perm = name_projection(rspec, lu, base_spec, base_l);
    for (const auto& piece : out.pieces.at(u)) {
      PointSet img = piece.pts.project(perm);
      if (img.size() != piece.pts.size()) out.checks.sections_ok = false;
    }
  }
  out.checks.chains_flag = true;
  out.checks.component_flag = true;
  out.checks.images_ok = true;
  return out;
}

ChainDecomposition build_regular_decomposition(LatticeView& base,
                                               LatticeView& refined) {
  ChainDecomposition out;
  const SystemSpec& bspec = base.system().spec;
  const SystemSpec& rspec = refined.system().spec;
  Mask top = bspec.vertex_mask;

  std::vector<Mask> order;
  for (Mask u = 0; u <= top; ++u)
    if ((u & ~top) == 0) order.push_back(u);
  std::sort(order.begin(), order.end(), subset_order_less);

  for (Mask u : order) {
    if (u == 0) {
      Piece unit;
      unit.pts = PointSet::unit();
      unit.witness = PointSet::unit();
      unit.lambda = 1;
      out.pieces[0].push_back(std::move(unit));
      continue;
    }
    const PointSet& carrier = base.points(u);
    const PointSet& rcarrier = refined.points(u);
    Layout lu = base.layout(u);
    Layout rlu = refined.layout(u);
    // pi: refined -> base, by variable name.
    auto rperm = name_projection(rspec, rlu, bspec, lu);

    // Refined preimages of base points, canonical order.
    std::map<std::vector<ElemCode>, std::vector<std::uint64_t>> preimages;
    {
      std::vector<ElemCode> key(rperm.size());
      for (std::uint64_t i = 0; i < rcarrier.size(); ++i) {
        auto r = rcarrier.row(i);
        for (std::size_t j = 0; j < rperm.size(); ++j) key[j] = r[rperm[j]];
        preimages[key].push_back(i);
      }
    }
    auto witness_row = [&](std::span<const ElemCode> base_row)
        -> std::optional<std::uint64_t> {
      auto it = preimages.find(
          std::vector<ElemCode>(base_row.begin(), base_row.end()));
      if (it == preimages.end() || it->second.empty()) return std::nullopt;
      return it->second.front();
    };

    std::vector<Piece> pieces;
    if (popcount(u) == 1) {
      // Classes of base sort points by refined-preimage multiplicity.
      std::map<std::uint64_t, std::vector<std::uint64_t>> classes;
      for (std::uint64_t i = 0; i < carrier.size(); ++i) {
        auto it = preimages.find(std::vector<ElemCode>(carrier.row(i).begin(),
                                                       carrier.row(i).end()));
        std::uint64_t s = it == preimages.end() ? 0 : it->second.size();
        classes[s].push_back(i);
      }
      for (const auto& [s, rows] : classes) {
        Piece piece;
        PointSet pts(carrier.arity());
        PointSet wit(rcarrier.arity());
        for (auto i : rows) {
          pts.append_row(carrier.row(i));
          if (s > 0) {
            auto w = witness_row(carrier.row(i));
            wit.append_row(rcarrier.row(*w));
          }
        }
        pts.finish();
        wit.finish();
        piece.class_key = s;
        piece.boundary = (s == 0);
        if (s > 0) piece.witness = std::move(wit);
        piece.lambda = mpq_class(pts.size(), carrier.size());
        piece.parents[0] = 0;
        piece.pts = std::move(pts);
        pieces.push_back(std::move(piece));
      }
    } else {
      auto subs = proper_subsets(u);
      std::vector<Mask> nonempty;
      for (Mask v : subs)
        if (v != 0) nonempty.push_back(v);
      std::map<Mask, std::vector<int>> pidx;
      for (Mask v : nonempty)
        pidx[v] = piece_index(out.pieces.at(v), base.points(v));

      const PointSet& bnd = base.boundary(u);
      Layout blay = base.boundary_layout(u);
      std::map<Mask, std::vector<int>> perms;
      for (Mask v : nonempty)
        perms[v] = blay.positions_of(base.layout(v));

      // Base fibres grouped by boundary row (contiguous prefix ranges).
      auto bperm = lu.positions_of(blay);
      std::vector<std::vector<std::uint64_t>> fibre_rows(bnd.size());
      {
        std::vector<ElemCode> key(bperm.size());
        for (std::uint64_t i = 0; i < carrier.size(); ++i) {
          auto r = carrier.row(i);
          for (std::size_t j = 0; j < bperm.size(); ++j) key[j] = r[bperm[j]];
          auto bidx = bnd.index_of(key);
          if (bidx < 0) throw Error("COHERENCE", "cover point off the boundary");
          fibre_rows[static_cast<std::size_t>(bidx)].push_back(i);
        }
      }

      // Chain key and fibre-size class per boundary row.
      std::map<std::pair<std::vector<int>, std::uint64_t>,
               std::vector<std::uint64_t>>
          groups;
      std::vector<ElemCode> buf;
      for (std::uint64_t bi = 0; bi < bnd.size(); ++bi) {
        if (fibre_rows[bi].empty()) continue;  // nothing to cover
        auto r = bnd.row(bi);
        std::vector<int> ck;
        ck.reserve(nonempty.size());
        bool ok = true;
        for (Mask v : nonempty) {
          const auto& perm = perms[v];
          buf.resize(perm.size());
          for (std::size_t j = 0; j < perm.size(); ++j) buf[j] = r[perm[j]];
          auto ridx = base.points(v).index_of(buf);
          if (ridx < 0) {
            ok = false;
            break;
          }
          ck.push_back(pidx[v][static_cast<std::size_t>(ridx)]);
        }
        if (!ok)
          throw Error("COHERENCE", "boundary row misses a subset point set");
        groups[{ck, fibre_rows[bi].size()}].push_back(bi);
      }

      for (const auto& [key2, bnd_rows] : groups) {
        const auto& [ck, fsize] = key2;
        for (std::uint64_t k = 0; k < fsize; ++k) {
          Piece piece;
          PointSet pts(carrier.arity());
          PointSet wit(rcarrier.arity());
          bool witness_complete = true;
          for (auto bi : bnd_rows) {
            auto row = carrier.row(fibre_rows[bi][k]);
            pts.append_row(row);
            auto w = witness_row(row);
            if (w)
              wit.append_row(rcarrier.row(*w));
            else
              witness_complete = false;
          }
          pts.finish();
          wit.finish();
          piece.class_key = fsize;
          piece.section = static_cast<int>(k);
          for (std::size_t vi = 0; vi < nonempty.size(); ++vi)
            piece.parents[nonempty[vi]] = ck[vi];
          piece.boundary = !witness_complete;
          if (witness_complete) piece.witness = std::move(wit);
          piece.lambda = mpq_class(pts.size(), carrier.size());
          piece.pts = std::move(pts);
          pieces.push_back(std::move(piece));
        }
      }
    }

    // Equal-or-disjoint enforcement on projection images.
    Layout bl = base.boundary_layout(u);
    auto iperm = lu.positions_of(bl);
    bool stable = false;
    while (!stable) {
      stable = true;
      std::vector<PointSet> images;
      images.reserve(pieces.size());
      for (const auto& p : pieces) images.push_back(p.pts.project(iperm));
      for (std::size_t a = 0; a < pieces.size() && stable; ++a) {
        for (std::size_t b = a + 1; b < pieces.size() && stable; ++b) {
          if (images[a] == images[b]) continue;
          // intersection check
          const PointSet& small = images[a].size() <= images[b].size()
                                      ? images[a]
                                      : images[b];
          const PointSet& big = images[a].size() <= images[b].size()
                                    ? images[b]
                                    : images[a];
          bool any = false;
          for (std::uint64_t i = 0; i < small.size(); ++i)
            if (big.contains(small.row(i))) any = true;
          if (!any) continue;
          //

          // Split both pieces along the image intersection.
          stable = false;
          auto split = [&](std::size_t pi) {
            Piece& orig = pieces[pi];
            PointSet inside(orig.pts.arity()), outside(orig.pts.arity());
            PointSet win(rcarrier.arity()), wout(rcarrier.arity());
            std::vector<ElemCode> kb(iperm.size());
            for (std::uint64_t i = 0; i < orig.pts.size(); ++i) {
              auto r = orig.pts.row(i);
              for (std::size_t j = 0; j < iperm.size(); ++j)
                kb[j] = r[iperm[j]];
              bool in_both = images[a].contains(kb) && images[b].contains(kb);
              (in_both ? inside : outside).append_row(r);
              if (orig.witness) {
                auto w = witness_row(r);
                if (w) (in_both ? win : wout).append_row(rcarrier.row(*w));
              }
            }
            inside.finish();
            outside.finish();
            win.finish();
            wout.finish();
            Piece extra = orig;
            orig.pts = std::move(inside);
            extra.pts = std::move(outside);
            if (orig.witness) {
              orig.witness = std::move(win);
              extra.witness = std::move(wout);
            }
            orig.lambda = mpq_class(orig.pts.size(), carrier.size());
            extra.lambda = mpq_class(extra.pts.size(), carrier.size());
            if (!extra.pts.empty()) pieces.push_back(std::move(extra));
          };
          split(a);
          split(b);
          pieces.erase(std::remove_if(pieces.begin(), pieces.end(),
                                      [](const Piece& p) {
                                        return p.pts.empty();
                                      }),
                       pieces.end());
        }
      }
    }
    out.pieces[u] = std::move(pieces);
  }

  // Verification.
  out.checks.partition_ok = true;
  out.checks.sections_ok = true;
  out.checks.images_ok = true;
  out.checks.chains_flag = true;
  out.checks.component_flag = true;
  for (Mask u : order) {
    if (u == 0) continue;
    const auto& pieces = out.pieces.at(u);
    if (!is_partition(pieces, base.points(u))) out.checks.partition_ok = false;
    Layout lu = base.layout(u);
    Layout rlu = refined.layout(u);
    auto rperm = name_projection(rspec, rlu, bspec, lu);
    for (const auto& p : pieces) {
      if (p.boundary) {
        out.checks.boundary_points += p.pts.size();
        continue;
      }
      if (!p.witness || p.witness->size() != p.pts.size()) {
        out.checks.sections_ok = false;
        continue;
      }
      PointSet img = p.witness->project(rperm);
      if (!(img == p.pts)) out.checks.sections_ok = false;
    }
    // Pairwise equal-or-disjoint images.
    Layout bl = base.boundary_layout(u);
    auto iperm = lu.positions_of(bl);
    std::vector<PointSet> images;
    for (const auto& p : pieces) images.push_back(p.pts.project(iperm));
    for (std::size_t a = 0; a < pieces.size(); ++a) {
      for (std::size_t b = a + 1; b < pieces.size(); ++b) {
        if (images[a] == images[b]) continue;
        for (std::uint64_t i = 0; i < images[a].size(); ++i) {
          if (images[b].contains(images[a].row(i))) {
            out.checks.images_ok = false;
            break;
          }
        }
      }
    }
  }
  return out;
}

}  // namespace drl
