#pragma once

#include <gmpxx.h>

#include <map>
#include <optional>
#include <string>

#include "drl/chains.hpp"
#include "drl/lattice.hpp"

namespace drl {

std::string mpq_to_string(const mpq_class& q);  // always "a/b"
double mpq_to_double(const mpq_class& q);

/// Comparison bound of the form c * q^{-1/root}; pass checks are exact:
/// dev <= c q^{-1/root}  iff  dev^root * q <= c^root.
struct Bound {
  mpq_class c = 0;
  unsigned root = 2;

  bool holds(const mpq_class& deviation, std::uint64_t q) const;
  double value(std::uint64_t q) const;
  std::string formula() const;
};

/// Exact-rational result of one statistical audit.
struct CheckReport {
  std::string kind;
  std::string system;
  std::vector<Mask> subjects;  // u, or the antichain J
  std::uint64_t q = 0;
  unsigned m = 1;
  std::uint64_t seed = 0;
  std::map<std::string, mpz_class> counts;
  mpq_class lhs = 0, rhs = 0, deviation = 0;
  std::optional<Bound> bound;
  std::optional<bool> pass;
  std::map<std::string, std::string> extra;

  void finish(std::uint64_t q_) {
    deviation = abs(lhs - rhs);
    if (bound) pass = bound->holds(deviation, q_);
  }
};

/// Rational reconstruction of a measure from a q-sweep of exact counts.
struct RationalEstimate {
  mpq_class value = 0;
  bool ok = false;  // reconstruction inside the denominator bound
  std::vector<std::uint64_t> qs;
  std::vector<mpq_class> ratios;
  std::vector<mpq_class> residuals;
  bool residuals_ok = false;  // each residual <= C q^{-1/2}, exactly
  double exponent = 0;        // log-log least squares slope
  bool exponent_consistent = false;
  std::string note;
};

/// Smallest-denominator rational in the closed interval [lo, hi].
mpq_class simplest_rational(const mpq_class& lo, const mpq_class& hi);

/// Fits counts N(q) ~ mu q^d: per-sample ratios, simplest rational within
/// the per-sample tolerance C q^{-1/2} (conservative rationalization),
/// exact residual checks, and the log-log slope as exponent estimate.
RationalEstimate count_fit(
    const std::vector<std::pair<std::uint64_t, mpz_class>>& counts, int d,
    const mpq_class& tolerance_c = mpq_class(1, 2),
    unsigned denominator_bound = 64);

/// Reconstructs a limit from explicit per-q ratios (used by nu sweeps).
RationalEstimate ratio_fit(
    const std::vector<std::tuple<std::uint64_t, mpz_class, mpz_class>>& ratios,
    const mpq_class& tolerance_c = mpq_class(1, 2),
    unsigned denominator_bound = 64);

/// Per-q normalized density data: |rho_u(points(u))| / |carrier| where the
/// carrier is the fibre-product boundary, optionally restricted to the
/// modal fibre-signature class.
std::pair<mpz_class, mpz_class> nu_ratio(LatticeView& lat, Mask u,
                                         bool generic_carrier = false);

CheckReport fubini_check(LatticeView& lat, Mask u, Mask v);

/// Stochastic independence audit: J an antichain covering V, members of
/// size >= 2; compares the joint density of the edge sets over the
/// boundary system with the product of their densities.
CheckReport independence_check(LatticeView& lat, const std::vector<Mask>& J,
                               const mpq_class& bound_c = 2);

std::vector<CheckReport> stationarity_check(LatticeView& lat,
                                            const std::vector<Mask>& J, Mask u,
                                            unsigned samples,
                                            std::uint64_t seed,
                                            const mpq_class& bound_c = 4);

/// Rational-valued function on the boundary of u: per-row numerators over
/// one global denominator.
struct BalancedFn {
  std::vector<std::int64_t> num;  // aligned with boundary(u) rows
  mpz_class den = 1;
};

/// f = indicator of the edge set minus its density.
BalancedFn balanced_indicator(LatticeView& lat, Mask u);

enum class OctMode { kNaive, kContracted, kBoth };

struct OctOptions {
  OctMode mode = OctMode::kBoth;
  std::uint64_t naive_guard = 10'000'000;
  std::uint64_t contraction_guard = 100'000'000;
};

/// Sum over the doubling of the boundary of prod over all 2^|u| patterns
/// of f at the pattern projection; exact. kBoth evaluates the naive
/// iteration and the vertex-elimination contraction and insists they
/// agree.
mpq_class octahedral_sum(LatticeView& lat, Mask u, const BalancedFn& f,
                         const OctOptions& opts = {});

CheckReport quasirandom_report(LatticeView& lat, Mask u,
                               const OctOptions& opts = {},
                               const mpq_class& bound_c = 1);

CheckReport edge_uniformity_dev(LatticeView& lat, Mask u, const Chain& W);

CheckReport etale_edge_uniformity_dev(LatticeView& base, LatticeView& refined,
                                      Mask u, const Chain& W);

CheckReport gowers_inequality_check(LatticeView& lat, Mask u, const Chain& W,
                                    const OctOptions& opts = {});

CheckReport fibre_histogram(LatticeView& lat, Mask u);

struct ProbeCandidate {
  std::string name;
  RefinementSpec refinement;
};

struct ProbeResult {
  std::string verdict;  // REGULAR-CONSISTENT, IRREGULAR(name), INCONCLUSIVE(name)
  double base_exponent = 0;
  struct PerCandidate {
    std::string name;
    bool dominant = true;
    double exponent = 0;
    double drop = 0;
    std::vector<std::pair<std::uint64_t, mpz_class>> counts;
  };
  std::vector<PerCandidate> candidates;
  std::vector<std::pair<std::uint64_t, mpz_class>> base_counts;
};

/// Regularity probe: for each candidate boundary refinement, counts the
/// fibre product of the u-cover with the candidate across the q-sweep and
/// compares growth exponents. Non-dominant candidates are excluded and
/// reported.
ProbeResult regularity_probe(const SystemSpec& base,
                             const std::vector<ProbeCandidate>& candidates,
                             Mask u, const std::vector<std::uint64_t>& q_list,
                             unsigned m, const EnumOptions& opts = {});

}  // namespace drl
