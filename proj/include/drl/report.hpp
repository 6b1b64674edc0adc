#pragma once

#include <string>
#include <vector>

#include "drl/chains.hpp"
#include "drl/stats.hpp"

#include <json.hpp>

namespace drl {

/// FNV-1a 64 of the canonical printed spec, as 16 hex digits: changes iff
/// the canonical text changes.
std::string spec_hash(const SystemSpec& spec);

/// One run document: { system, spec_hash, q, m, checks: [...], version }.
/// Rationals are serialized as "a/b" strings; every float is a rendering
/// of a rational stored next to it.
nlohmann::ordered_json report_document(const SystemSpec& spec, std::uint64_t q,
                                       unsigned m,
                                       const std::vector<CheckReport>& checks);

nlohmann::ordered_json check_to_json(const CheckReport& rep);

nlohmann::ordered_json decomposition_to_json(const ChainDecomposition& dec);

nlohmann::ordered_json estimate_to_json(const RationalEstimate& est);

nlohmann::ordered_json probe_to_json(const ProbeResult& probe);

/// CSV rows: q, m, kind, u, deviation_float, bound_float, pass. Mixed
/// check kinds require allow_mixed.
std::string emit_csv(const std::vector<CheckReport>& checks,
                     bool allow_mixed = false);

extern const char* kVersion;

}  // namespace drl
