#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "drl/diffpoly.hpp"

namespace drl {

/// Subsets of the vertex set, as bitmasks over vertex labels (< 32).
using Mask = std::uint32_t;

unsigned popcount(Mask m);
std::vector<int> mask_vertices(Mask m);
Mask mask_of(const std::vector<int>& vertices);
std::string mask_to_string(Mask m);  // "{0,1}", "{}" for the empty set

/// Orders subsets by (cardinality, numeric mask): the canonical subset
/// order used for coordinate layouts and block printing.
bool subset_order_less(Mask a, Mask b);

struct Variable {
  std::string name;
  bool is_vertex = false;
  int vertex_label = -1;  // for vertex variables
  Mask home = 0;          // block subset that introduces the variable
  int block_pos = 0;      // declaration position within the block
};

struct Diagnostic {
  int line = 0;
  int col = 0;
  std::string code;
  std::string message;
};

/// Cover block at a subset u: the polynomial family introducing the cover
/// variables of u. Equations may mention vertex variables of u and cover
/// variables of any v contained in u. Each cover variable must be
/// resolvable in declared order by an equation univariate in it.
struct CoverBlock {
  Mask u = 0;
  std::vector<int> cover_vars;
  std::vector<DiffPolynomial> eqs;
  /// resolver[i] = index of the resolving equation of cover_vars[i];
  /// filled by SystemSpec::validate.
  std::vector<int> resolver;
};

/// Symbolic system of difference varieties on a vertex set. Every
/// singleton carries a block; the support is the set of subsets with
/// blocks and its downward closure is a simplicial complex on V.
class SystemSpec {
 public:
  std::string name;
  std::int64_t p = 0;
  std::vector<int> vertices;  // ascending labels
  Mask vertex_mask = 0;
  std::vector<Variable> vars;
  std::map<Mask, CoverBlock> blocks;  // keyed by subset mask

  int var_id(const std::string& name) const;  // -1 if absent
  int vertex_var(int label) const;
  std::string var_name(int id) const { return vars[id].name; }

  /// Subsets in the downward closure of the support (all subsets of block
  /// masks, plus the empty set), in canonical subset order.
  std::vector<Mask> closure() const;

  /// Masks carrying a block with at least one cover variable or equation.
  std::vector<Mask> support() const;

  /// Syntactic validation; empty result means the spec is well-formed.
  /// Fills block resolvers as a side effect.
  std::vector<Diagnostic> validate();

  std::string canonical_text() const;
};

bool structurally_equal(const SystemSpec& a, const SystemSpec& b);

/// Textual-level polynomial, before variable resolution. Refinement files
/// are parsed to this form and resolved against a base spec when applied.
struct RawFactor {
  std::string var;
  unsigned shift = 0;
  unsigned exp = 1;
};
struct RawTerm {
  std::int64_t coeff = 1;
  std::vector<RawFactor> factors;
};
struct RawPoly {
  std::vector<RawTerm> terms;
  int line = 0;
};

struct RefinementEntry {
  Mask u = 0;
  std::vector<std::string> new_vars;
  std::vector<RawPoly> eqs;
};
struct RefinementSpec {
  std::string name;
  std::vector<RefinementEntry> entries;
};

/// Merges a refinement into a spec. New variables land in the blocks of
/// the listed subsets. A refinement variable whose name already exists at
/// a strict superset is pulled down: it moves to the target block with the
/// refinement's equations while the superset block keeps its remaining
/// equations (now referencing the lower variable). Any other collision is
/// an error. The merged spec is revalidated.
SystemSpec apply_refinement(const SystemSpec& spec, const RefinementSpec& ref);

/// Radical twist generator: for a cover variable with resolving equation
/// w^e - g and difference equation s(w) - w, produces one refinement per
/// c in F_p with c^e = 1, replacing the difference equation by s(w) - c w.
/// The candidate is placed at the smallest subset scoping g; variables are
/// named <w>_t<c>.
std::vector<RefinementSpec> generate_radical_twists(const SystemSpec& spec,
                                                    const std::string& cover_var);

}  // namespace drl
