#pragma once

#include <gmpxx.h>

#include <map>
#include <optional>

#include "drl/lattice.hpp"

namespace drl {

/// Subset-indexed family W(v) of point subsets closed under projections.
struct Chain {
  Mask top = 0;
  std::map<Mask, PointSet> sets;  // every v strictly below top, plus top

  const PointSet& at(Mask v) const;
};

struct ChainViolation {
  Mask u = 0;
  Mask v = 0;
  std::vector<ElemCode> witness;
  std::string message;
};

/// Chain axioms: for v inside u, the projection of W(u) lands in W(v).
/// With a complex I given, additionally W(u) must equal the fibre product
/// of its proper parts for u outside I.
std::vector<ChainViolation> validate_chain(
    LatticeView& lat, const Chain& chain,
    const std::optional<std::vector<Mask>>& complex = std::nullopt);

/// Seeded random P(u)^- chain: includes each point of each proper subset
/// independently with the given density, restores the chain axiom by
/// intersecting downward, and sets W(u) to the fibre product. Reproducible
/// per seed, independent of worker count.
Chain random_chain(LatticeView& lat, Mask u, const mpq_class& density,
                   std::uint64_t seed);

/// The fibre product of the chain's proper parts at u.
PointSet chain_fibre_product(LatticeView& lat, const Chain& chain, Mask u);

struct Piece {
  PointSet pts;
  std::optional<PointSet> witness;  // section in the refinement
  std::map<Mask, int> parents;      // piece index per proper subset
  std::uint64_t class_key = 0;      // fibre-size key
  int section = 0;                  // k-th section
  bool boundary = false;            // non-generic or witness-less
  mpq_class lambda;                 // |X| / |carrier|
};

struct DecompositionChecks {
  bool partition_ok = false;
  bool sections_ok = false;       // property (2): bijective sections
  bool images_ok = false;         // property (5): equal-or-disjoint images
  bool chains_flag = false;       // property (3): by construction
  bool component_flag = false;    // property (4): surrogate-verified
  std::uint64_t boundary_points = 0;  // mass in boundary pieces
  std::string notes;
};

struct ChainDecomposition {
  std::map<Mask, std::vector<Piece>> pieces;
  DecompositionChecks checks;

  std::uint64_t piece_count() const;
};

/// Section decomposition of a refinement (the chain decomposition whose
/// pieces project injectively to the base): built inductively over the
/// complex, splitting each chain's fibres into k-th-element sections
/// under canonical point order.
ChainDecomposition build_section_decomposition(LatticeView& refined,
                                               const SystemSpec& base_spec,
                                               const std::vector<Mask>& complex);

/// Chain decomposition of the base system with section witnesses in the
/// refinement: per-chain fibre-signature classes with canonical sections,
/// witnesses as canonical preimages, and an equal-or-disjoint enforcement
/// pass on projection images.
ChainDecomposition build_regular_decomposition(LatticeView& base,
                                               LatticeView& refined);

}  // namespace drl
