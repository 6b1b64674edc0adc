#pragma once

#include "drl/specialize.hpp"

namespace drl::testing {

/// Independent brute-force enumerator: scans every coordinate tuple over
/// the layout of u and keeps those on which all equations of all blocks
/// inside u vanish. Difference polynomials are evaluated directly, factor
/// by factor, via iterated Frobenius — no shared code with the triangular
/// enumeration path.
PointSet brute_force_points(const SystemSpec& spec, Mask u, std::uint64_t q,
                            unsigned m, std::uint64_t guard = 20'000'000);

/// Total scan space of the brute-force enumeration of u.
double brute_force_space(const SystemSpec& spec, Mask u, std::uint64_t q,
                         unsigned m);

}  // namespace drl::testing
