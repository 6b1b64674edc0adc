#include <doctest.h>

#include <fstream>
#include <sstream>

#include "drl/parser.hpp"
#include "drl/specialize.hpp"
#include "oracle.hpp"

using namespace drl;

namespace {

SystemSpec load(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  auto r = parse_system(os.str());
  REQUIRE_MESSAGE(r.ok(), path);
  return *r.spec;
}

}  // namespace

TEST_CASE("fixed-field sort has exactly q points") {
  auto spec = load("systems/cube2.dvs");
  PointSet s = enumerate_sort(spec, 0, 7, 1);
  CHECK(s.size() == 7);
  PointSet s2 = enumerate_sort(spec, 0, 7, 2);  // still the fixed field
  CHECK(s2.size() == 7);
}

TEST_CASE("dynamics sort x^q = x^2") {
  auto spec = load("systems/dynamics.dvs");
  PointSet s1 = enumerate_sort(spec, 0, 7, 1);
  CHECK(s1.size() == 2);  // 0 and 1 inside F_7
  PointSet s4 = enumerate_sort(spec, 0, 7, 4);
  CHECK(s4.size() == 6);  // 0, 1 and the four primitive fifth roots of unity
}

TEST_CASE("paper example counts at q = 7") {
  auto spec = load("systems/paper-example.dvs");
  auto sys = enumerate_system(spec, 7, 1);
  auto counts = sys.counts();
  CHECK(counts.at("{}") == 1);
  CHECK(counts.at("{0}") == 7);
  CHECK(counts.at("{1}") == 7);
  CHECK(counts.at("{0,1}") == 49);
}

TEST_CASE("paper example count is q^2 at q = 5 as well") {
  auto spec = load("systems/paper-example.dvs");
  auto sys = enumerate_system(spec, 5, 1);
  CHECK(sys.at(0b11).size() == 25);
}

TEST_CASE("two plain sorts give a Cartesian square") {
  auto spec = load("systems/cube2.dvs");
  auto sys = enumerate_system(spec, 11, 1);
  CHECK(sys.at(0b11).size() == 121);
}

TEST_CASE("quadratic radical sort cover has q points") {
  auto spec = load("systems/radical2.dvs");
  auto sys = enumerate_system(spec, 7, 1);
  CHECK(sys.at(0b10).size() == 7);
}

TEST_CASE("projection coherence on the refined example") {
  auto spec = load("systems/paper-example-refined.dvs");
  auto sys = enumerate_system(spec, 7, 1);
  const PointSet& top = sys.at(0b11);
  CHECK(top.size() == 49);
  Layout ltop = sys.layout(0b11);
  for (Mask v : {Mask(0b01), Mask(0b10)}) {
    Layout lv = sys.layout(v);
    auto perm = ltop.positions_of(lv);
    std::vector<ElemCode> buf(perm.size());
    for (std::uint64_t i = 0; i < top.size(); ++i) {
      auto r = top.row(i);
      for (std::size_t j = 0; j < perm.size(); ++j) buf[j] = r[perm[j]];
      CHECK(sys.at(v).contains(buf));
    }
  }
}

TEST_CASE("frobenius closure: sigma maps every point set into itself") {
  for (const char* path : {"systems/paper-example.dvs",
                           "systems/paper-example-refined.dvs",
                           "systems/dynamics.dvs"}) {
    auto spec = load(path);
    auto sys = enumerate_system(spec, 7, 2);
    for (const auto& [u, ps] : sys.points) {
      std::vector<ElemCode> buf(ps.arity());
      for (std::uint64_t i = 0; i < ps.size(); ++i) {
        auto r = ps.row(i);
        for (std::size_t j = 0; j < buf.size(); ++j)
          buf[j] = sys.ctx->frobenius(r[j], sys.q);
        CHECK_MESSAGE(ps.contains(buf), path);
      }
    }
  }
}

TEST_CASE("triangular enumeration equals the brute-force oracle") {
  struct Probe {
    const char* path;
    std::uint64_t q;
    unsigned m;
  };
  for (auto [path, q, m] : {Probe{"systems/paper-example.dvs", 7, 1},
                            Probe{"systems/paper-example-refined.dvs", 7, 1},
                            Probe{"systems/paper-example.dvs", 5, 1},
                            Probe{"systems/squares3.dvs", 5, 1},
                            Probe{"systems/diag3.dvs", 3, 1},
                            Probe{"systems/radical2.dvs", 7, 1},
                            Probe{"systems/radical3.dvs", 7, 1},
                            Probe{"systems/dynamics.dvs", 7, 2},
                            Probe{"systems/cube3.dvs", 7, 1}}) {
    auto spec = load(path);
    auto sys = enumerate_system(spec, q, m);
    for (const auto& [u, ps] : sys.points) {
      if (u == 0) continue;
      if (drl::testing::brute_force_space(spec, u, q, m) > 2'000'000) continue;
      PointSet oracle = drl::testing::brute_force_points(spec, u, q, m);
      CHECK_MESSAGE(ps == oracle, path << " at " << mask_to_string(u));
    }
  }
}

TEST_CASE("blocks whose equations filter without new variables") {
  auto spec = load("systems/diag3.dvs");
  auto sys = enumerate_system(spec, 3, 1);
  CHECK(sys.at(0b11).size() == 3);  // the diagonal of F_3 x F_3
}

TEST_CASE("a resolving equation that vanishes at a base point is an error") {
  auto r = parse_system(R"(system zr
char 7
vertices 0
sort 0: vars w; eqs s(x0) - x0, x0*w - x0
)");
  REQUIRE(r.ok());
  CHECK_THROWS_AS(enumerate_system(*r.spec, 7, 1), Error);
}

TEST_CASE("worker count does not change the result") {
  auto spec = load("systems/paper-example-refined.dvs");
  EnumOptions one, eight;
  one.workers = 1;
  eight.workers = 8;
  auto a = enumerate_system(spec, 13, 1, one);
  auto b = enumerate_system(spec, 13, 1, eight);
  for (const auto& [u, ps] : a.points) CHECK(ps == b.at(u));
}

TEST_CASE("point guard rejects oversized enumerations") {
  auto spec = load("systems/cube4.dvs");
  EnumOptions opts;
  opts.max_points = 100;
  CHECK_THROWS_AS(enumerate_system(spec, 7, 1, opts), Error);
}
