#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drl/system.hpp"

namespace drl {

struct ParseResult {
  std::optional<SystemSpec> spec;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return spec.has_value() && diagnostics.empty(); }
};

/// Parses and validates a .dvs system description. On failure the spec is
/// absent and diagnostics carry line/column and a machine-readable code.
ParseResult parse_system(const std::string& text);

struct RefinementParseResult {
  std::optional<RefinementSpec> ref;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return ref.has_value() && diagnostics.empty(); }
};

/// Parses a refinement file: `refine {..}: vars ...; eqs ...` lines.
/// Variables are resolved later, against the spec being refined.
RefinementParseResult parse_refinement(const std::string& text);

/// Canonical text of a spec; parse_system(print_system(s)) is structurally
/// equal to s.
std::string print_system(const SystemSpec& spec);

}  // namespace drl
