#include "drl/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace drl {

std::string mpq_to_string(const mpq_class& q) {
  mpq_class c = q;
  c.canonicalize();
  return c.get_num().get_str() + "/" + c.get_den().get_str();
}

double mpq_to_double(const mpq_class& q) { return q.get_d(); }

bool Bound::holds(const mpq_class& deviation, std::uint64_t q) const {
  // dev <= c q^{-1/root}  iff  dev^root * q <= c^root
  mpq_class dev_pow = 1, c_pow = 1;
  for (unsigned i = 0; i < root; ++i) {
    dev_pow *= deviation;
    c_pow *= c;
  }
  return dev_pow * static_cast<unsigned long>(q) <= c_pow;
}

double Bound::value(std::uint64_t q) const {
  return mpq_to_double(c) *
         std::exp(-std::log(static_cast<double>(q)) / root);
}

std::string Bound::formula() const {
  mpq_class cc = c;
  cc.canonicalize();
  std::string cs = cc == 1 ? "" : mpq_to_string(cc) + "*";
  return cs + "q^(-1/" + std::to_string(root) + ")";
}

mpq_class simplest_rational(const mpq_class& lo, const mpq_class& hi) {
  if (lo > hi) throw Error("EMPTYINTERVAL", "empty reconstruction interval");
  // Stern-Brocot walk over the closed interval.
  std::function<mpq_class(mpq_class, mpq_class)> rec =
      [&](mpq_class a, mpq_class b) -> mpq_class {
    mpz_class fa;
    mpz_cdiv_q(fa.get_mpz_t(), a.get_num().get_mpz_t(),
               a.get_den().get_mpz_t());
    if (mpq_class(fa) <= b) return mpq_class(fa);
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), a.get_num().get_mpz_t(),
               a.get_den().get_mpz_t());
    mpq_class frac_a = a - mpq_class(fl);
    mpq_class frac_b = b - mpq_class(fl);
    // both in (0, 1): recurse on the reciprocal interval
    return mpq_class(fl) + 1 / rec(1 / frac_b, 1 / frac_a);
  };
  if (lo <= 0 && hi >= 0) return 0;
  if (hi < 0) return -rec(-hi, -lo);
  return rec(lo, hi);
}

namespace {

mpz_class q_pow(std::uint64_t q, unsigned e) {
  mpz_class r = 1;
  for (unsigned i = 0; i < e; ++i) r *= static_cast<unsigned long>(q);
  return r;
}

std::uint64_t isqrt_ceil(std::uint64_t q) {
  std::uint64_t s = static_cast<std::uint64_t>(std::sqrt(static_cast<double>(q)));
  while (s * s < q) ++s;
  while (s > 1 && (s - 1) * (s - 1) >= q) --s;
  return s;
}

double loglog_slope(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) return std::nan("");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double n = static_cast<double>(pts.size());
  double den = n * sxx - sx * sx;
  if (den == 0) return std::nan("");
  return (n * sxy - sx * sy) / den;
}

RationalEstimate fit_ratios(
    const std::vector<std::pair<std::uint64_t, mpq_class>>& samples,
    const mpq_class& C, unsigned denom_bound, int d_for_exponent,
    const std::vector<mpz_class>& raw_counts) {
  RationalEstimate est;
  if (samples.size() < 1) {
    est.note = "no samples";
    return est;
  }
  mpq_class lo, hi;
  bool first = true;
  for (const auto& [q, r] : samples) {
    est.qs.push_back(q);
    est.ratios.push_back(r);
    // conservative rational tolerance C / ceil(sqrt(q)) <= C q^{-1/2}
    mpq_class tol = C / mpq_class(static_cast<unsigned long>(isqrt_ceil(q)));
    mpq_class a = r - tol, b = r + tol;
    if (a < 0) a = 0;
    if (first) {
      lo = a;
      hi = b;
      first = false;
    } else {
      lo = std::max(lo, a);
      hi = std::min(hi, b);
    }
  }
  if (lo > hi) {
    est.ok = false;
    est.note = "inconsistent samples: empty tolerance interval";
  } else {
    est.value = simplest_rational(lo, hi);
    est.value.canonicalize();
    est.ok = est.value.get_den() <= denom_bound;
    if (!est.ok) est.note = "denominator bound exceeded";
  }
  est.residuals_ok = true;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    mpq_class res = abs(samples[i].second - est.value);
    est.residuals.push_back(res);
    // exact: res <= C q^{-1/2} iff res^2 q <= C^2
    if (res * res * static_cast<unsigned long>(samples[i].first) > C * C)
      est.residuals_ok = false;
  }
  // log-log exponent of the raw counts, when provided
  if (!raw_counts.empty()) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      double c = mpz_get_d(raw_counts[i].get_mpz_t());
      if (c > 0)
        pts.push_back({std::log(static_cast<double>(samples[i].first)),
                       std::log(c)});
    }
    est.exponent = loglog_slope(pts);
    est.exponent_consistent =
        !std::isnan(est.exponent) &&
        std::abs(est.exponent - d_for_exponent) <= 0.25;
    if (!est.exponent_consistent && est.note.empty())
      est.note = "fitted exponent deviates from the asserted dimension";
  }
  return est;
}

}  // namespace

RationalEstimate count_fit(
    const std::vector<std::pair<std::uint64_t, mpz_class>>& counts, int d,
    const mpq_class& tolerance_c, unsigned denominator_bound) {
  if (counts.size() < 3)
    throw Error("FEWSAMPLES", "count_fit needs at least three samples");
  {
    std::set<std::uint64_t> qs;
    for (const auto& [q, n] : counts) qs.insert(q);
    if (qs.size() != counts.size())
      throw Error("DUPSAMPLES", "count_fit samples must have distinct q");
  }
  std::vector<std::pair<std::uint64_t, mpq_class>> samples;
  std::vector<mpz_class> raw;
  for (const auto& [q, n] : counts) {
    samples.push_back({q, mpq_class(n) / mpq_class(q_pow(q, d))});
    raw.push_back(n);
  }
  return fit_ratios(samples, tolerance_c, denominator_bound, d, raw);
}

RationalEstimate ratio_fit(
    const std::vector<std::tuple<std::uint64_t, mpz_class, mpz_class>>& ratios,
    const mpq_class& tolerance_c, unsigned denominator_bound) {
  std::vector<std::pair<std::uint64_t, mpq_class>> samples;
  std::vector<mpz_class> raw;
  for (const auto& [q, num, den] : ratios) {
    if (den == 0) throw Error("EMPTY", "empty carrier in ratio sweep");
    samples.push_back({q, mpq_class(num) / mpq_class(den)});
    raw.push_back(num);
  }
  return fit_ratios(samples, tolerance_c, denominator_bound, 0, {});
}

std::pair<mpz_class, mpz_class> nu_ratio(LatticeView& lat, Mask u,
                                         bool generic_carrier) {
  const PointSet& image = lat.rho_image(u);
  if (!generic_carrier) {
    const PointSet& carrier = lat.boundary(u);
    return {mpz_class(static_cast<unsigned long>(image.size())),
            mpz_class(static_cast<unsigned long>(carrier.size()))};
  }
  const auto& cls = lat.signature_classes(u);
  std::size_t modal = lat.modal_class(u);
  const auto& rows = cls[modal].rows;
  // image points over the modal class
  const PointSet& carrier = lat.boundary(u);
  std::uint64_t in_image = 0;
  for (auto i : rows)
    if (image.contains(carrier.row(i))) ++in_image;
  return {mpz_class(static_cast<unsigned long>(in_image)),
          mpz_class(static_cast<unsigned long>(rows.size()))};
}

CheckReport fubini_check(LatticeView& lat, Mask u, Mask v) {
  if ((v & ~u) != 0) throw Error("BADSUBSET", "v must be a subset of u");
  CheckReport rep;
  rep.kind = "fubini";
  rep.system = lat.system().spec.name;
  rep.subjects = {u, v};
  rep.q = lat.system().q;
  rep.m = lat.system().m;
  const PointSet& pu = lat.points(u);
  const PointSet& pv = lat.points(v);
  Layout lu = lat.layout(u);
  Layout lv = lat.layout(v);
  auto perm = lu.positions_of(lv);
  std::map<std::uint64_t, std::uint64_t> fibre_count;  // v-row -> size
  std::vector<ElemCode> buf(perm.size());
  for (std::uint64_t i = 0; i < pu.size(); ++i) {
    auto r = pu.row(i);
    for (std::size_t j = 0; j < perm.size(); ++j) buf[j] = r[perm[j]];
    auto idx = pv.index_of(buf);
    if (idx < 0) throw Error("COHERENCE", "projection misses the subset set");
    ++fibre_count[static_cast<std::uint64_t>(idx)];
  }
  mpz_class total = 0;
  std::map<std::uint64_t, std::uint64_t> histogram;  // size -> how many rows
  for (std::uint64_t i = 0; i < pv.size(); ++i) {
    auto it = fibre_count.find(i);
    std::uint64_t s = it == fibre_count.end() ? 0 : it->second;
    ++histogram[s];
    total += static_cast<unsigned long>(s);
  }
  rep.counts["|points(u)|"] = static_cast<unsigned long>(pu.size());
  rep.counts["|points(v)|"] = static_cast<unsigned long>(pv.size());
  rep.counts["fibre_sum"] = total;
  // identity part
  bool identity_ok = total == mpz_class(static_cast<unsigned long>(pu.size()));
  // genericity: modal fibre size (ties toward larger size)
  std::uint64_t modal = 0, modal_rows = 0;
  for (const auto& [s, n] : histogram) {
    if (n >= modal_rows) {
      modal = s;
      modal_rows = n;
    }
  }
  rep.counts["modal_fibre"] = static_cast<unsigned long>(modal);
  mpz_class gen = mpz_class(static_cast<unsigned long>(modal)) *
                  static_cast<unsigned long>(pv.size());
  rep.lhs = mpq_class(mpz_class(static_cast<unsigned long>(pu.size())));
  rep.rhs = mpq_class(gen);
  rep.deviation = abs(rep.lhs - rep.rhs);
  rep.extra["identity"] = identity_ok ? "exact" : "violated";
  rep.pass = identity_ok;
  // informational bound: C q^{dim - 1/2} with the empirical dimension
  double qd = static_cast<double>(lat.system().q);
  double dim = pu.size() ? std::log(static_cast<double>(pu.size())) /
                               std::log(qd)
                         : 0;
  rep.extra["empirical_dim"] = std::to_string(dim);
  return rep;
}

namespace {

// Downward-closed family product: join over the maximal masks; returns the
// point set and its layout.
std::pair<PointSet, Layout> family_product(LatticeView& lat,
                                           std::vector<Mask> maximals) {
  std::sort(maximals.begin(), maximals.end(), subset_order_less);
  // drop masks contained in later ones
  std::vector<Mask> keep;
  for (Mask m : maximals) {
    bool contained = false;
    for (Mask o : maximals)
      if (o != m && (m & ~o) == 0) contained = true;
    if (!contained) keep.push_back(m);
  }
  if (keep.empty()) return {PointSet::unit(), Layout{}};
  PointSet acc = lat.points(keep[0]);
  Layout acc_layout = lat.layout(keep[0]);
  for (std::size_t i = 1; i < keep.size(); ++i) {
    const PointSet& pw = lat.points(keep[i]);
    Layout lw = lat.layout(keep[i]);
    Layout merged;
    merged.coords = acc_layout.coords;
    for (int c : lw.coords)
      if (merged.pos(c) < 0) merged.coords.push_back(c);
    acc = join(acc, acc_layout, pw, lw, merged, 1'000'000'000ull);
    acc_layout = merged;
  }
  return {std::move(acc), std::move(acc_layout)};
}

// Boundary complex of an antichain: all proper subsets of members.
std::vector<Mask> boundary_complex(const std::vector<Mask>& J) {
  std::set<Mask> all;
  for (Mask u : J) {
    for (Mask s = (u - 1) & u;; s = (s - 1) & u) {
      all.insert(s);
      if (s == 0) break;
    }
  }
  return {all.begin(), all.end()};
}

void check_antichain(const SystemSpec& spec, const std::vector<Mask>& J) {
  if (J.empty()) throw Error("BADANTICHAIN", "empty antichain");
  Mask cover = 0;
  for (Mask u : J) {
    if (popcount(u) < 2)
      throw Error("BADANTICHAIN", "antichain members must have size >= 2");
    cover |= u;
    for (Mask v : J)
      if (u != v && (v & ~u) == 0)
        throw Error("BADANTICHAIN", "antichain members must be incomparable");
  }
  if (cover != spec.vertex_mask)
    throw Error("BADANTICHAIN", "antichain must cover the vertex set");
}

}  // namespace

CheckReport independence_check(LatticeView& lat, const std::vector<Mask>& J,
                               const mpq_class& bound_c) {
  const SystemSpec& spec = lat.system().spec;
  check_antichain(spec, J);
  CheckReport rep;
  rep.kind = "independence";
  rep.system = spec.name;
  rep.subjects = J;
  rep.q = lat.system().q;
  rep.m = lat.system().m;

  auto dJ = boundary_complex(J);
  auto [full, full_layout] = family_product(lat, dJ);
  rep.counts["|boundary(V)|"] = static_cast<unsigned long>(full.size());
  if (full.empty()) throw Error("EMPTY", "empty boundary system");

  // lhs: density of the simultaneous edge sets
  std::uint64_t joint = 0;
  std::vector<std::pair<std::vector<int>, const PointSet*>> probes;
  for (Mask u : J) {
    Layout bu = lat.boundary_layout(u);
    probes.push_back({full_layout.positions_of(bu), &lat.rho_image(u)});
  }
  std::vector<ElemCode> buf;
  for (std::uint64_t i = 0; i < full.size(); ++i) {
    auto r = full.row(i);
    bool all_in = true;
    for (const auto& [perm, img] : probes) {
      buf.resize(perm.size());
      for (std::size_t j = 0; j < perm.size(); ++j) buf[j] = r[perm[j]];
      if (!img->contains(buf)) {
        all_in = false;
        break;
      }
    }
    if (all_in) ++joint;
  }
  rep.counts["joint"] = static_cast<unsigned long>(joint);
  rep.lhs = mpq_class(static_cast<unsigned long>(joint),
                      static_cast<unsigned long>(full.size()));
  rep.lhs.canonicalize();

  // rhs: product of the individual densities over their own boundaries
  rep.rhs = 1;
  for (Mask u : J) {
    const PointSet& img = lat.rho_image(u);
    const PointSet& bnd = lat.boundary(u);
    rep.counts["|edge" + mask_to_string(u) + "|"] =
        static_cast<unsigned long>(img.size());
    rep.counts["|boundary" + mask_to_string(u) + "|"] =
        static_cast<unsigned long>(bnd.size());
    if (bnd.empty()) throw Error("EMPTY", "empty boundary at subset");
    mpq_class d(static_cast<unsigned long>(img.size()),
                static_cast<unsigned long>(bnd.size()));
    d.canonicalize();
    rep.rhs *= d;
  }
  rep.bound = Bound{bound_c, 2};
  rep.finish(rep.q);
  return rep;
}

std::vector<CheckReport> stationarity_check(LatticeView& lat,
                                            const std::vector<Mask>& J, Mask u,
                                            unsigned samples,
                                            std::uint64_t seed,
                                            const mpq_class& bound_c) {
  const SystemSpec& spec = lat.system().spec;
  check_antichain(spec, J);
  if (u == 0) throw Error("BADSUBSET", "conditioning subset must be nonempty");
  if (samples < 1) throw Error("BADSAMPLES", "need at least one sample");

  auto dJ = boundary_complex(J);
  auto members_below = [&](Mask cap) {
    std::vector<Mask> out;
    for (Mask w : dJ)
      if ((w & ~cap) == 0) out.push_back(w);
    return out;
  };

  auto [full, full_layout] = family_product(lat, dJ);
  auto [cond, cond_layout] = family_product(lat, members_below(u));
  if (cond.empty()) throw Error("EMPTY", "empty conditioning set");

  // Fibre sizes of full -> cond; the generic class is the largest.
  auto cperm = full_layout.positions_of(cond_layout);
  std::vector<std::uint64_t> fibre(cond.size(), 0);
  {
    std::vector<ElemCode> buf(cperm.size());
    for (std::uint64_t i = 0; i < full.size(); ++i) {
      auto r = full.row(i);
      for (std::size_t j = 0; j < cperm.size(); ++j) buf[j] = r[cperm[j]];
      auto idx = cond.index_of(buf);
      if (idx < 0) throw Error("COHERENCE", "conditioning projection misses");
      ++fibre[static_cast<std::size_t>(idx)];
    }
  }
  std::map<std::uint64_t, std::vector<std::uint64_t>> classes;
  for (std::uint64_t i = 0; i < cond.size(); ++i)
    classes[fibre[i]].push_back(i);
  const std::vector<std::uint64_t>* generic = nullptr;
  std::uint64_t generic_size = 0;
  for (const auto& [s, rows] : classes) {
    if (s == 0) continue;
    if (rows.size() >= generic_size) {
      generic = &rows;
      generic_size = rows.size();
    }
  }
  if (!generic) throw Error("EMPTY", "no generic class with nonempty fibres");

  std::mt19937_64 rng(seed);
  std::vector<CheckReport> reports;
  for (unsigned s = 0; s < samples; ++s) {
    std::uint64_t pick = (*generic)[rng() % generic->size()];
    auto a = cond.row(pick);

    CheckReport rep;
    rep.kind = "stationarity";
    rep.system = spec.name;
    rep.subjects = J;
    rep.q = lat.system().q;
    rep.m = lat.system().m;
    rep.seed = seed;
    rep.extra["sample"] = std::to_string(s);
    rep.extra["conditioning"] = mask_to_string(u);

    // lhs: joint conditional density over the fibre of full above a.
    std::vector<std::pair<std::vector<int>, const PointSet*>> probes;
    for (Mask v : J) {
      Layout bv = lat.boundary_layout(v);
      probes.push_back({full_layout.positions_of(bv), &lat.rho_image(v)});
    }
    std::uint64_t fib = 0, joint = 0;
    std::vector<ElemCode> buf;
    for (std::uint64_t i = 0; i < full.size(); ++i) {
      auto r = full.row(i);
      bool in_fibre = true;
      for (std::size_t j = 0; j < cperm.size(); ++j) {
        if (r[cperm[j]] != a[j]) {
          in_fibre = false;
          break;
        }
      }
      if (!in_fibre) continue;
      ++fib;
      bool all_in = true;
      for (const auto& [perm, img] : probes) {
        buf.resize(perm.size());
        for (std::size_t j = 0; j < perm.size(); ++j) buf[j] = r[perm[j]];
        if (!img->contains(buf)) {
          all_in = false;
          break;
        }
      }
      if (all_in) ++joint;
    }
    rep.counts["fibre"] = static_cast<unsigned long>(fib);
    rep.counts["joint"] = static_cast<unsigned long>(joint);
    if (fib == 0) throw Error("EMPTY", "empty conditional fibre");
    rep.lhs = mpq_class(static_cast<unsigned long>(joint),
                        static_cast<unsigned long>(fib));
    rep.lhs.canonicalize();

    // rhs: product over members of conditional densities given a|(u cap v).
    rep.rhs = 1;
    for (Mask v : J) {
      auto [bv_set, bv_layout] = family_product(lat, members_below(v));
      auto [av_set, av_layout] = family_product(lat, members_below(u & v));
      // the sample restricted to the (u cap v) coordinates
      auto aperm = cond_layout.positions_of(av_layout);
      std::vector<ElemCode> av(aperm.size());
      for (std::size_t j = 0; j < aperm.size(); ++j) av[j] = a[aperm[j]];
      auto vperm = bv_layout.positions_of(av_layout);
      Layout bu = lat.boundary_layout(v);
      auto iperm = bv_layout.positions_of(bu);
      const PointSet& img = lat.rho_image(v);
      std::uint64_t fib_v = 0, in_v = 0;
      std::vector<ElemCode> vb(iperm.size());
      for (std::uint64_t i = 0; i < bv_set.size(); ++i) {
        auto r = bv_set.row(i);
        bool in_fibre = true;
        for (std::size_t j = 0; j < vperm.size(); ++j) {
          if (r[vperm[j]] != av[j]) {
            in_fibre = false;
            break;
          }
        }
        if (!in_fibre) continue;
        ++fib_v;
        for (std::size_t j = 0; j < iperm.size(); ++j) vb[j] = r[iperm[j]];
        if (img.contains(vb)) ++in_v;
      }
      if (fib_v == 0) throw Error("EMPTY", "empty member fibre");
      mpq_class d(static_cast<unsigned long>(in_v),
                  static_cast<unsigned long>(fib_v));
      d.canonicalize();
      rep.rhs *= d;
    }
    rep.bound = Bound{bound_c, 2};
    rep.finish(rep.q);
    reports.push_back(std::move(rep));
  }
  return reports;
}

BalancedFn balanced_indicator(LatticeView& lat, Mask u) {
  const PointSet& bnd = lat.boundary(u);
  const PointSet& img = lat.rho_image(u);
  BalancedFn f;
  f.den = static_cast<unsigned long>(bnd.size());
  f.num.resize(bnd.size());
  std::int64_t sz = static_cast<std::int64_t>(bnd.size());
  std::int64_t phi = static_cast<std::int64_t>(img.size());
  for (std::uint64_t i = 0; i < bnd.size(); ++i)
    f.num[i] = (img.contains(bnd.row(i)) ? sz : 0) - phi;
  return f;
}

namespace {

void mpz_add_i128(mpz_class& acc, __int128 v) {
  bool neg = v < 0;
  unsigned __int128 a = neg ? -static_cast<unsigned __int128>(v) : v;
  mpz_class big(static_cast<unsigned long>(a >> 64));
  big <<= 64;
  big += static_cast<unsigned long>(a & 0xffffffffffffffffull);
  if (neg)
    acc -= big;
  else
    acc += big;
}

struct PatternTable {
  std::vector<Mask> patterns;  // all submasks of u, ascending
  explicit PatternTable(Mask u) {
    for (Mask k = u;; k = (k - 1) & u) {
      patterns.push_back(k);
      if (k == 0) break;
    }
    std::sort(patterns.begin(), patterns.end());
  }
};

mpz_class oct_naive(LatticeView& lat, Mask u, const BalancedFn& f,
                    std::uint64_t guard) {
  const PointSet& bnd = lat.boundary(u);
  PatternTable pt(u);
  // precheck for the int128 product fast path
  std::int64_t max_abs = 1;
  for (auto v : f.num) max_abs = std::max<std::int64_t>(max_abs, std::abs(v));
  mpz_class bound = 1;
  for (std::size_t i = 0; i < pt.patterns.size(); ++i) bound *= max_abs;
  bool fast = bound < (mpz_class(1) << 120);

  mpz_class acc = 0;
  std::vector<ElemCode> buf;
  lat.for_each_doubled(
      u,
      [&](const DoubledEnumerator& en) {
        if (fast) {
          __int128 prod = 1;
          for (Mask k : pt.patterns) {
            en.project_pattern(k, buf);
            auto idx = bnd.index_of(buf);
            if (idx < 0) throw Error("COHERENCE", "doubled projection misses");
            prod *= f.num[static_cast<std::size_t>(idx)];
            if (prod == 0) break;
          }
          mpz_add_i128(acc, prod);
        } else {
          mpz_class prod = 1;
          for (Mask k : pt.patterns) {
            en.project_pattern(k, buf);
            auto idx = bnd.index_of(buf);
            if (idx < 0) throw Error("COHERENCE", "doubled projection misses");
            prod *= static_cast<long>(f.num[static_cast<std::size_t>(idx)]);
            if (prod == 0) break;
          }
          acc += prod;
        }
      },
      guard);
  return acc;
}

mpz_class oct_contracted(LatticeView& lat, Mask u, const BalancedFn& f,
                         std::uint64_t guard) {
  const PointSet& bnd = lat.boundary(u);
  const SystemSpec& spec = lat.system().spec;
  // Elimination vertex: fewest incident non-singleton blocks, then index.
  int star = -1;
  {
    int best_inc = INT32_MAX;
    for (int v : mask_vertices(u)) {
      int inc = 0;
      for (const auto& [w, blk] : spec.blocks)
        if (popcount(w) >= 2 && (w & (1u << v)) && (w & ~u) == 0 && w != u)
          ++inc;
      if (inc < best_inc) {
        best_inc = inc;
        star = v;
      }
    }
  }
  Mask uprime = u & ~(1u << star);
  PatternTable pt(uprime);

  DoubledEnumerator en(lat, u);
  auto z_slots = en.slots_within(uprime);
  auto side_slots = en.slots_touching(star, 0);

  std::int64_t max_abs = 1;
  for (auto v : f.num) max_abs = std::max<std::int64_t>(max_abs, std::abs(v));
  mpz_class pbound = 1;
  for (std::size_t i = 0; i < pt.patterns.size(); ++i) pbound *= max_abs;
  bool fast = pbound < (mpz_class(1) << 120);

  mpz_class acc = 0;
  std::uint64_t z_count = 0;
  std::vector<ElemCode> buf;
  en.enumerate(z_slots, [&] {
    ++z_count;
    if (z_count > guard)
      throw Error("GUARD", "contraction exceeds the intermediate guard");
    mpz_class g = 0;
    en.enumerate(side_slots, [&] {
      if (fast) {
        __int128 prod = 1;
        for (Mask kappa : pt.patterns) {
          en.project_pattern(kappa, buf);
          auto idx = bnd.index_of(buf);
          if (idx < 0) throw Error("COHERENCE", "contraction projection misses");
          prod *= f.num[static_cast<std::size_t>(idx)];
          if (prod == 0) break;
        }
        mpz_add_i128(g, prod);
      } else {
        mpz_class prod = 1;
        for (Mask kappa : pt.patterns) {
          en.project_pattern(kappa, buf);
          auto idx = bnd.index_of(buf);
          if (idx < 0) throw Error("COHERENCE", "contraction projection misses");
          prod *= static_cast<long>(f.num[static_cast<std::size_t>(idx)]);
        }
        g += prod;
      }
    });
    acc += g * g;
  });
  return acc;
}

}  // namespace

mpq_class octahedral_sum(LatticeView& lat, Mask u, const BalancedFn& f,
                         const OctOptions& opts) {
  if (popcount(u) < 2)
    throw Error("BADSUBSET", "octahedral sums need |u| >= 2");
  const PointSet& bnd = lat.boundary(u);
  if (f.num.size() != bnd.size())
    throw Error("BADFN", "function is not total on the boundary");
  unsigned copies = 1u << popcount(u);
  mpz_class den = 1;
  for (unsigned i = 0; i < copies; ++i) den *= f.den;

  std::optional<mpz_class> naive, contracted;
  if (opts.mode == OctMode::kNaive || opts.mode == OctMode::kBoth)
    naive = oct_naive(lat, u, f, opts.naive_guard);
  if (opts.mode == OctMode::kContracted || opts.mode == OctMode::kBoth)
    contracted = oct_contracted(lat, u, f, opts.contraction_guard);
  if (naive && contracted && *naive != *contracted)
    throw Error("OCTMISMATCH",
                "naive and contracted octahedral sums disagree");
  mpq_class out(naive ? *naive : *contracted, den);
  out.canonicalize();
  return out;
}

CheckReport quasirandom_report(LatticeView& lat, Mask u,
                               const OctOptions& opts,
                               const mpq_class& bound_c) {
  CheckReport rep;
  rep.kind = "quasirandom";
  rep.system = lat.system().spec.name;
  rep.subjects = {u};
  rep.q = lat.system().q;
  rep.m = lat.system().m;
  BalancedFn f = balanced_indicator(lat, u);
  mpq_class oct = octahedral_sum(lat, u, f, opts);
  const PointSet& bnd = lat.boundary(u);
  const PointSet& img = lat.rho_image(u);
  rep.counts["|boundary|"] = static_cast<unsigned long>(bnd.size());
  rep.counts["|edge|"] = static_cast<unsigned long>(img.size());
  mpz_class b2 = mpz_class(static_cast<unsigned long>(bnd.size()));
  b2 *= static_cast<unsigned long>(bnd.size());
  rep.lhs = abs(oct) / mpq_class(b2);
  rep.lhs.canonicalize();
  rep.rhs = 0;
  rep.extra["oct"] = mpq_to_string(oct);
  rep.bound = Bound{bound_c, 2};
  rep.finish(rep.q);
  return rep;
}

CheckReport edge_uniformity_dev(LatticeView& lat, Mask u, const Chain& W) {
  CheckReport rep;
  rep.kind = "edge-uniformity";
  rep.system = lat.system().spec.name;
  rep.subjects = {u};
  rep.q = lat.system().q;
  rep.m = lat.system().m;
  const PointSet& img = lat.rho_image(u);
  const PointSet& bnd = lat.boundary(u);
  const PointSet& wu = W.at(u);
  rep.counts["|edge|"] = static_cast<unsigned long>(img.size());
  rep.counts["|W(u)|"] = static_cast<unsigned long>(wu.size());
  rep.counts["|boundary|"] = static_cast<unsigned long>(bnd.size());
  if (img.empty()) {
    rep.extra["not_applicable"] = "empty edge set";
    return rep;
  }
  std::uint64_t inter = 0;
  for (std::uint64_t i = 0; i < wu.size(); ++i)
    if (img.contains(wu.row(i))) ++inter;
  rep.counts["|edge&W|"] = static_cast<unsigned long>(inter);
  rep.lhs = mpq_class(static_cast<unsigned long>(inter),
                      static_cast<unsigned long>(img.size()));
  rep.lhs.canonicalize();
  rep.rhs = mpq_class(static_cast<unsigned long>(wu.size()),
                      static_cast<unsigned long>(bnd.size()));
  rep.rhs.canonicalize();
  rep.bound = Bound{1, 1u << (popcount(u) + 1)};
  rep.finish(rep.q);
  return rep;
}

CheckReport etale_edge_uniformity_dev(LatticeView& base, LatticeView& refined,
                                      Mask u, const Chain& W) {
  CheckReport rep;
  rep.kind = "etale-edge-uniformity";
  rep.system = base.system().spec.name;
  rep.subjects = {u};
  rep.q = base.system().q;
  rep.m = base.system().m;
  const PointSet& img = base.rho_image(u);
  const PointSet& bnd = base.boundary(u);
  if (img.empty()) {
    rep.extra["not_applicable"] = "empty edge set";
    return rep;
  }
  // pi(W(u)): project the refined chain top into base boundary coordinates.
  const PointSet& wu = W.at(u);
  Layout rlay = refined.boundary_layout(u);
  Layout blay = base.boundary_layout(u);
  auto perm = name_projection(refined.system().spec, rlay,
                              base.system().spec, blay);
  PointSet piw = wu.project(perm);
  rep.counts["|pi(W(u))|"] = static_cast<unsigned long>(piw.size());
  rep.counts["|edge|"] = static_cast<unsigned long>(img.size());
  rep.counts["|boundary|"] = static_cast<unsigned long>(bnd.size());
  std::uint64_t inter = 0;
  for (std::uint64_t i = 0; i < piw.size(); ++i)
    if (img.contains(piw.row(i))) ++inter;
  rep.counts["|edge&piW|"] = static_cast<unsigned long>(inter);
  rep.lhs = mpq_class(static_cast<unsigned long>(inter),
                      static_cast<unsigned long>(img.size()));
  rep.lhs.canonicalize();
  rep.rhs = mpq_class(static_cast<unsigned long>(piw.size()),
                      static_cast<unsigned long>(bnd.size()));
  rep.rhs.canonicalize();
  rep.bound = Bound{1, 1u << (popcount(u) + 1)};
  rep.finish(rep.q);
  return rep;
}

CheckReport gowers_inequality_check(LatticeView& lat, Mask u, const Chain& W,
                                    const OctOptions& opts) {
  CheckReport rep;
  rep.kind = "gowers";
  rep.system = lat.system().spec.name;
  rep.subjects = {u};
  rep.q = lat.system().q;
  rep.m = lat.system().m;
  const PointSet& img = lat.rho_image(u);
  const PointSet& bnd = lat.boundary(u);
  const PointSet& wu = W.at(u);
  std::uint64_t inter = 0;
  for (std::uint64_t i = 0; i < wu.size(); ++i)
    if (img.contains(wu.row(i))) ++inter;
  rep.counts["|edge&W|"] = static_cast<unsigned long>(inter);
  rep.counts["|edge|"] = static_cast<unsigned long>(img.size());
  rep.counts["|W(u)|"] = static_cast<unsigned long>(wu.size());
  rep.counts["|boundary|"] = static_cast<unsigned long>(bnd.size());

  mpq_class density(static_cast<unsigned long>(img.size()),
                    static_cast<unsigned long>(bnd.size()));
  density.canonicalize();
  mpq_class delta = abs(mpq_class(static_cast<unsigned long>(inter)) -
                        density * static_cast<unsigned long>(wu.size()));

  BalancedFn f = balanced_indicator(lat, u);
  mpq_class oct = octahedral_sum(lat, u, f, opts);

  unsigned n = popcount(u);
  unsigned copies = 1u << n;
  mpq_class lhs = 1;
  for (unsigned i = 0; i < copies; ++i) lhs *= delta;

  // C = 1 on Cartesian boundaries, (max cover multiplicity)^{2^n} otherwise.
  mpq_class C = 1;
  bool cartesian = true;
  std::uint64_t max_mult = 1;
  for (const auto& [w, blk] : lat.system().spec.blocks) {
    if (popcount(w) >= 2 && w != u && (w & ~u) == 0) {
      cartesian = false;
      for (auto s : lat.fibre_sizes(w))
        max_mult = std::max<std::uint64_t>(max_mult, s);
    }
  }
  if (!cartesian) {
    C = 1;
    for (unsigned i = 0; i < copies; ++i)
      C *= static_cast<unsigned long>(max_mult);
  }
  mpq_class b2 = 1;
  for (unsigned i = 0; i + 2 < copies; ++i)
    b2 *= static_cast<unsigned long>(bnd.size());
  mpq_class rhs = C * b2 * oct;

  rep.lhs = lhs;
  rep.rhs = rhs;
  rep.deviation = lhs <= rhs ? mpq_class(0) : lhs - rhs;
  rep.extra["delta"] = mpq_to_string(delta);
  rep.extra["oct"] = mpq_to_string(oct);
  rep.extra["C"] = mpq_to_string(C);
  rep.pass = lhs <= rhs;
  return rep;
}

CheckReport fibre_histogram(LatticeView& lat, Mask u) {
  CheckReport rep;
  rep.kind = "fibre-histogram";
  rep.system = lat.system().spec.name;
  rep.subjects = {u};
  rep.q = lat.system().q;
  rep.m = lat.system().m;
  const auto& sizes = lat.fibre_sizes(u);
  std::map<std::uint64_t, std::uint64_t> hist;
  for (auto s : sizes) ++hist[s];
  std::uint64_t modal = 0, modal_rows = 0, total = sizes.size();
  for (const auto& [s, n] : hist) {
    rep.counts["fibre=" + std::to_string(s)] = static_cast<unsigned long>(n);
    if (n >= modal_rows) {
      modal = s;
      modal_rows = n;
    }
  }
  rep.counts["modal"] = static_cast<unsigned long>(modal);
  if (total) {
    rep.lhs = mpq_class(static_cast<unsigned long>(total - modal_rows),
                        static_cast<unsigned long>(total));
    rep.lhs.canonicalize();
  }
  rep.rhs = 0;
  rep.deviation = rep.lhs;
  rep.extra["non_modal_fraction"] = mpq_to_string(rep.lhs);
  return rep;
}

ProbeResult regularity_probe(const SystemSpec& base,
                             const std::vector<ProbeCandidate>& candidates,
                             Mask u, const std::vector<std::uint64_t>& q_list,
                             unsigned m, const EnumOptions& opts) {
  if (q_list.size() < 2)
    throw Error("FEWSAMPLES", "probe needs at least two q values");
  ProbeResult out;

  // Boundary spec: the base without blocks at u or above.
  SystemSpec boundary_spec = base;
  for (auto it = boundary_spec.blocks.begin();
       it != boundary_spec.blocks.end();) {
    if ((u & ~it->first) == 0 && popcount(it->first) >= popcount(u))
      it = boundary_spec.blocks.erase(it);
    else
      ++it;
  }

  struct Specialized {
    std::vector<SpecializedSystem> base_sys;
    std::vector<std::optional<SpecializedSystem>> cand_sys;
  };

  std::vector<SpecializedSystem> base_per_q;
  for (auto q : q_list) base_per_q.push_back(enumerate_system(base, q, m, opts));
  std::vector<std::pair<double, double>> base_pts;
  for (std::size_t i = 0; i < q_list.size(); ++i) {
    std::uint64_t c = base_per_q[i].points.count(u)
                          ? base_per_q[i].at(u).size()
                          : LatticeView(base_per_q[i]).points(u).size();
    out.base_counts.push_back({q_list[i], mpz_class(static_cast<unsigned long>(c))});
    if (c > 0)
      base_pts.push_back({std::log(static_cast<double>(q_list[i])),
                          std::log(static_cast<double>(c))});
  }
  out.base_exponent = loglog_slope(base_pts);

  std::string worst_irregular, worst_inconclusive;
  double worst_drop = 0;
  for (const auto& cand : candidates) {
    ProbeResult::PerCandidate pc;
    pc.name = cand.name;
    SystemSpec cand_spec;
    try {
      cand_spec = apply_refinement(boundary_spec, cand.refinement);
    } catch (const Error& e) {
      pc.dominant = false;
      pc.exponent = std::nan("");
      out.candidates.push_back(pc);
      continue;
    }
    bool dominant = true;
    std::vector<std::pair<double, double>> pts;
    for (std::size_t i = 0; i < q_list.size(); ++i) {
      SpecializedSystem cs = enumerate_system(cand_spec, q_list[i], m, opts);
      LatticeView cl(cs);
      LatticeView bl(base_per_q[i]);
      // dominance on each refined subset
      for (const auto& entry : cand.refinement.entries) {
        std::uint64_t nb = bl.points(entry.u).size();
        std::uint64_t nc = cl.points(entry.u).size();
        if (4 * nc < nb) dominant = false;
      }
      if (!dominant) break;
      PointSet plus = fibre_product_plus(bl, cl, u, opts.max_points);
      pc.counts.push_back(
          {q_list[i], mpz_class(static_cast<unsigned long>(plus.size()))});
      if (plus.size() > 0)
        pts.push_back({std::log(static_cast<double>(q_list[i])),
                       std::log(static_cast<double>(plus.size()))});
    }
    pc.dominant = dominant;
    if (!dominant) {
      pc.exponent = std::nan("");
      out.candidates.push_back(pc);
      continue;
    }
    pc.exponent = pts.size() >= 2 ? loglog_slope(pts)
                                  : -std::numeric_limits<double>::infinity();
    pc.drop = out.base_exponent - pc.exponent;
    if (pc.drop >= 0.5 && pc.drop > worst_drop) {
      worst_drop = pc.drop;
      worst_irregular = pc.name;
    } else if (std::abs(pc.exponent - out.base_exponent) > 0.25 &&
               worst_irregular.empty()) {
      worst_inconclusive = pc.name;
    }
    out.candidates.push_back(pc);
  }
  if (!worst_irregular.empty())
    out.verdict = "IRREGULAR(" + worst_irregular + ")";
  else if (!worst_inconclusive.empty())
    out.verdict = "INCONCLUSIVE(" + worst_inconclusive + ")";
  else
    out.verdict = "REGULAR-CONSISTENT";
  return out;
}

}  // namespace drl
