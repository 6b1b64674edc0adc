#include "drl/report.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace drl {

const char* kVersion = "0.1.0";

std::string spec_hash(const SystemSpec& spec) {
  std::string text = spec.canonical_text();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

namespace {

nlohmann::ordered_json mask_list(const std::vector<Mask>& ms) {
  if (ms.size() == 1) {
    nlohmann::ordered_json u = nlohmann::ordered_json::array();
    for (int v : mask_vertices(ms[0])) u.push_back(v);
    return u;
  }
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (Mask m : ms) {
    nlohmann::ordered_json u = nlohmann::ordered_json::array();
    for (int v : mask_vertices(m)) u.push_back(v);
    arr.push_back(u);
  }
  return arr;
}

}  // namespace

nlohmann::ordered_json check_to_json(const CheckReport& rep) {
  nlohmann::ordered_json j;
  j["kind"] = rep.kind;
  j["u"] = mask_list(rep.subjects);
  nlohmann::ordered_json counts;
  for (const auto& [k, v] : rep.counts) counts[k] = v.get_str();
  j["counts"] = counts;
  j["lhs"] = mpq_to_string(rep.lhs);
  j["rhs"] = mpq_to_string(rep.rhs);
  j["deviation"] = mpq_to_string(rep.deviation);
  j["deviation_float"] = mpq_to_double(rep.deviation);
  if (rep.bound) {
    j["bound"] = rep.bound->formula();
    j["bound_float"] = rep.bound->value(rep.q);
  } else {
    j["bound"] = "exact";
    j["bound_float"] = mpq_to_double(rep.rhs);
  }
  if (rep.pass.has_value()) j["pass"] = *rep.pass;
  for (const auto& [k, v] : rep.extra) j[k] = v;
  return j;
}

nlohmann::ordered_json report_document(const SystemSpec& spec, std::uint64_t q,
                                       unsigned m,
                                       const std::vector<CheckReport>& checks) {
  nlohmann::ordered_json doc;
  doc["system"] = spec.name;
  doc["spec_hash"] = spec_hash(spec);
  doc["q"] = q;
  doc["m"] = m;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& c : checks) arr.push_back(check_to_json(c));
  doc["checks"] = arr;
  doc["version"] = kVersion;
  return doc;
}

nlohmann::ordered_json decomposition_to_json(const ChainDecomposition& dec) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json levels;
  for (const auto& [u, pieces] : dec.pieces) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : pieces) {
      nlohmann::ordered_json pj;
      pj["size"] = p.pts.size();
      pj["lambda"] = mpq_to_string(p.lambda);
      pj["lambda_float"] = mpq_to_double(p.lambda);
      pj["class"] = p.class_key;
      pj["section"] = p.section;
      pj["boundary"] = p.boundary;
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (std::uint64_t i = 0; i < p.pts.size(); ++i) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (auto c : p.pts.row(i)) row.push_back(c);
        rows.push_back(row);
      }
      pj["points"] = rows;
      if (p.witness) {
        nlohmann::ordered_json wrows = nlohmann::ordered_json::array();
        for (std::uint64_t i = 0; i < p.witness->size(); ++i) {
          nlohmann::ordered_json row = nlohmann::ordered_json::array();
          for (auto c : p.witness->row(i)) row.push_back(c);
          wrows.push_back(row);
        }
        pj["witness"] = wrows;
      }
      arr.push_back(pj);
    }
    levels[mask_to_string(u)] = arr;
  }
  j["pieces"] = levels;
  j["partition_ok"] = dec.checks.partition_ok;
  j["sections_ok"] = dec.checks.sections_ok;
  j["images_ok"] = dec.checks.images_ok;
  j["chains_by_construction"] = dec.checks.chains_flag;
  j["components_surrogate_verified"] = dec.checks.component_flag;
  j["boundary_points"] = dec.checks.boundary_points;
  return j;
}

nlohmann::ordered_json estimate_to_json(const RationalEstimate& est) {
  nlohmann::ordered_json j;
  j["value"] = mpq_to_string(est.value);
  j["value_float"] = mpq_to_double(est.value);
  j["ok"] = est.ok;
  nlohmann::ordered_json samples = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < est.qs.size(); ++i) {
    nlohmann::ordered_json s;
    s["q"] = est.qs[i];
    s["ratio"] = mpq_to_string(est.ratios[i]);
    s["residual"] = mpq_to_string(est.residuals[i]);
    samples.push_back(s);
  }
  j["samples"] = samples;
  j["residuals_ok"] = est.residuals_ok;
  if (!std::isnan(est.exponent)) {
    j["exponent"] = est.exponent;
    j["exponent_consistent"] = est.exponent_consistent;
  }
  if (!est.note.empty()) j["note"] = est.note;
  return j;
}

nlohmann::ordered_json probe_to_json(const ProbeResult& probe) {
  nlohmann::ordered_json j;
  j["verdict"] = probe.verdict;
  j["base_exponent"] = probe.base_exponent;
  nlohmann::ordered_json bc = nlohmann::ordered_json::array();
  for (const auto& [q, n] : probe.base_counts) {
    nlohmann::ordered_json e;
    e["q"] = q;
    e["count"] = n.get_str();
    bc.push_back(e);
  }
  j["base_counts"] = bc;
  nlohmann::ordered_json cands = nlohmann::ordered_json::array();
  for (const auto& c : probe.candidates) {
    nlohmann::ordered_json e;
    e["name"] = c.name;
    e["dominant"] = c.dominant;
    if (c.dominant) {
      if (std::isinf(c.exponent))
        e["exponent"] = "-inf";
      else
        e["exponent"] = c.exponent;
      e["drop"] = c.drop;
      nlohmann::ordered_json cc = nlohmann::ordered_json::array();
      for (const auto& [q, n] : c.counts) {
        nlohmann::ordered_json s;
        s["q"] = q;
        s["count"] = n.get_str();
        cc.push_back(s);
      }
      e["counts"] = cc;
    }
    cands.push_back(e);
  }
  j["candidates"] = cands;
  return j;
}

std::string emit_csv(const std::vector<CheckReport>& checks,
                     bool allow_mixed) {
  if (!allow_mixed) {
    for (std::size_t i = 1; i < checks.size(); ++i)
      if (checks[i].kind != checks[0].kind)
        throw Error("MIXEDKINDS",
                    "mixed check kinds in one table need --allow-mixed");
  }
  std::ostringstream os;
  os << "q,m,kind,u,deviation_float,bound_float,pass\n";
  for (const auto& c : checks) {
    os << c.q << "," << c.m << "," << c.kind << ",\"";
    for (std::size_t i = 0; i < c.subjects.size(); ++i) {
      if (i) os << ";";
      os << mask_to_string(c.subjects[i]);
    }
    os << "\"," << mpq_to_double(c.deviation) << ",";
    if (c.bound)
      os << c.bound->value(c.q);
    else
      os << mpq_to_double(c.rhs);
    os << ",";
    if (c.pass.has_value())
      os << (*c.pass ? "true" : "false");
    else
      os << "na";
    os << "\n";
  }
  return os.str();
}

}  // namespace drl
