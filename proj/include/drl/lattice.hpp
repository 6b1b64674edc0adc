#pragma once

#include <functional>
#include <map>
#include <optional>

#include "drl/specialize.hpp"

namespace drl {

/// Copy slot inside a doubled configuration: the block at subset w, in the
/// copy indexed by iota (a submask of w: bit set = copy 1 for that vertex).
struct CopySlot {
  Mask w;
  Mask iota;
  friend auto operator<=>(const CopySlot&, const CopySlot&) = default;
};

/// Subset-lattice machinery over a specialized system: fibre products,
/// projection images, fibre signatures and doublings. Caches are write-once
/// per subset; concurrent readers are safe after warm-up.
class LatticeView {
 public:
  explicit LatticeView(const SpecializedSystem& sys) : sys_(sys) {}

  const SpecializedSystem& system() const { return sys_; }
  const FieldCtx& ctx() const { return *sys_.ctx; }

  /// Point set of any subset: enumerated sets inside the support closure,
  /// fibre products outside it.
  const PointSet& points(Mask u);
  Layout layout(Mask u) const;

  /// The fibre product over the proper subsets of u. For singletons this
  /// is the ambient line (every field element).
  const PointSet& boundary(Mask u);
  Layout boundary_layout(Mask u) const;

  /// Image of the projection of points(u) onto the boundary.
  const PointSet& rho_image(Mask u);

  /// Fibre size over each boundary row, aligned with boundary(u).
  const std::vector<std::uint64_t>& fibre_sizes(Mask u);

  struct SignatureClass {
    std::uint64_t fibre_size;
    std::vector<std::uint64_t> rows;  // boundary row indices, ascending
  };
  /// Partition of the boundary by fibre cardinality, ascending by size.
  /// The empirical surrogate for irreducible components.
  const std::vector<SignatureClass>& signature_classes(Mask u);

  /// Index of the largest class (ties broken toward larger fibre size).
  std::size_t modal_class(Mask u);

  /// Enumerates the doubling of the boundary of u: all assignments of a
  /// point of the block at w to every copy slot (w, iota), consistent on
  /// shared projections. Returns the number of doubled points visited.
  std::uint64_t for_each_doubled(
      Mask u, const std::function<void(const class DoubledEnumerator&)>& visit,
      std::optional<std::uint64_t> guard = std::nullopt);

  std::uint64_t doubled_count(Mask u, std::uint64_t guard);

 private:
  const SpecializedSystem& sys_;
  std::map<Mask, PointSet> pts_cache_;
  std::map<Mask, PointSet> boundary_cache_;
  std::map<Mask, PointSet> rho_cache_;
  std::map<Mask, std::vector<std::uint64_t>> fibre_cache_;
  std::map<Mask, std::vector<SignatureClass>> class_cache_;

  PointSet compute_fibre_product(Mask u);
};

/// Consistent assignments of block points to copy slots: the raw material
/// of doublings and their vertex-eliminated contractions. Slots can be
/// enumerated in phases as long as each phase's dependencies (slots at
/// smaller subsets) are assigned first.
class DoubledEnumerator {
 public:
  DoubledEnumerator(LatticeView& lat, Mask u);

  const std::vector<CopySlot>& slots() const { return slots_; }
  std::uint32_t out_arity() const { return out_arity_; }

  /// Indices of slots (w, iota) with w inside the given subset.
  std::vector<int> slots_within(Mask part) const;
  /// Indices of slots whose subset contains the vertex and whose pattern
  /// assigns it the given copy.
  std::vector<int> slots_touching(int vertex, int copy) const;

  /// Enumerates consistent assignments of the listed slots (ascending
  /// dependency order), keeping other slots fixed.
  void enumerate(const std::vector<int>& slot_idxs,
                 const std::function<void()>& visit);

  /// Boundary-layout row seen from choice pattern kappa (submask of u,
  /// bit set = copy 1).
  void project_pattern(Mask kappa, std::vector<ElemCode>& out) const;

 private:
  LatticeView& lat_;
  Mask u_;
  std::uint32_t out_arity_ = 0;
  std::vector<CopySlot> slots_;
  std::vector<std::uint64_t> rows_;
  std::vector<const PointSet*> slot_pts_;
  std::vector<std::vector<int>> slot_to_out_;
  std::vector<std::vector<int>> slot_cover_pos_;
  std::vector<int> vertex_out_pos_;
  struct PrefixSource {
    int slot;
    int pos;
  };
  std::vector<std::vector<PrefixSource>> prefix_src_;
};

/// The regularity fibre product: pairs (a, b) with a in base points(u) and
/// b in the candidate refinement's points(u), agreeing on the base
/// boundary coordinates. Coordinates are matched by variable name.
PointSet fibre_product_plus(LatticeView& base, LatticeView& candidate, Mask u,
                            std::uint64_t max_rows);

/// Positions in the source layout realizing the target layout, matching
/// variables by name across two specs.
std::vector<int> name_projection(const SystemSpec& src_spec, const Layout& src,
                                 const SystemSpec& dst_spec,
                                 const Layout& dst);

}  // namespace drl
