#include <doctest.h>

#include <fstream>
#include <sstream>

#include "drl/parser.hpp"

using namespace drl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const char* kPaperExample = R"(system paper-example
char 7
vertices 0 1
sort 0: eqs s(x0) - x0
sort 1: eqs s(x1) - x1
cover {0,1}: vars z t; eqs z^2 - x1, s(z) - z, t^2 - (x0 + z), s(t) - t
)";

}  // namespace

TEST_CASE("the worked example parses into the expected shape") {
  auto result = parse_system(kPaperExample);
  REQUIRE(result.ok());
  const SystemSpec& spec = *result.spec;
  CHECK(spec.name == "paper-example");
  CHECK(spec.p == 7);
  CHECK(spec.vertices == std::vector<int>{0, 1});
  CHECK(spec.blocks.size() == 3);
  CHECK(spec.blocks.count(0b01));
  CHECK(spec.blocks.count(0b10));
  CHECK(spec.blocks.count(0b11));
  CHECK(spec.blocks.at(0b11).cover_vars.size() == 2);
  CHECK(spec.blocks.at(0b11).eqs.size() == 4);
}

TEST_CASE("a minimal single-sort system parses") {
  auto result = parse_system(
      "system empty\nchar 7\nvertices 0\nsort 0: eqs s(x0) - x0\n");
  REQUIRE(result.ok());
  CHECK(result.spec->blocks.size() == 1);
}

TEST_CASE("scope violations are reported with the variable name") {
  std::string text = R"(system bad
char 7
vertices 0 1 2
sort 0: eqs s(x0) - x0
sort 1: eqs s(x1) - x1
sort 2: eqs s(x2) - x2
cover {0,1}: vars z; eqs z^2 - x2, s(z) - z
)";
  auto result = parse_system(text);
  CHECK(!result.ok());
  bool found = false;
  for (const auto& d : result.diagnostics) {
    if (d.code == "SCOPE_VIOLATION" &&
        d.message.find("x2") != std::string::npos)
      found = true;
  }
  CHECK(found);
}

TEST_CASE("missing singleton sorts are diagnosed") {
  std::string text = R"(system missing
char 7
vertices 0 1 2
sort 0: eqs s(x0) - x0
sort 1: eqs s(x1) - x1
cover {0,1}: vars z; eqs z^2 - x1, s(z) - z
)";
  auto result = parse_system(text);
  CHECK(!result.ok());
  bool found = false;
  for (const auto& d : result.diagnostics)
    if (d.code == "MISSING_SINGLETON") found = true;
  CHECK(found);
}

TEST_CASE("non-triangular blocks are diagnosed") {
  std::string text = R"(system nt
char 7
vertices 0 1
sort 0: eqs s(x0) - x0
sort 1: eqs s(x1) - x1
cover {0,1}: vars z t; eqs z - t, t - z
)";
  auto result = parse_system(text);
  CHECK(!result.ok());
  bool found = false;
  for (const auto& d : result.diagnostics)
    if (d.code == "NON_TRIANGULAR") found = true;
  CHECK(found);
}

TEST_CASE("duplicate blocks are diagnosed") {
  std::string text = R"(system dup
char 7
vertices 0
sort 0: eqs s(x0) - x0
sort 0: eqs s(x0) - x0
)";
  auto result = parse_system(text);
  CHECK(!result.ok());
  CHECK(result.diagnostics[0].code == "DUPLICATE_BLOCK");
}

TEST_CASE("print then parse is the identity on the corpus") {
  for (const char* path :
       {"systems/paper-example.dvs", "systems/paper-example-refined.dvs",
        "systems/squares3.dvs", "systems/diag3.dvs", "systems/cube2.dvs",
        "systems/cube3.dvs", "systems/cube4.dvs", "systems/radical2.dvs",
        "systems/radical3.dvs", "systems/dynamics.dvs"}) {
    auto first = parse_system(slurp(path));
    REQUIRE_MESSAGE(first.ok(), path);
    std::string printed = print_system(*first.spec);
    auto second = parse_system(printed);
    REQUIRE_MESSAGE(second.ok(), printed);
    CHECK_MESSAGE(structurally_equal(*first.spec, *second.spec), path);
    CHECK(print_system(*second.spec) == printed);
  }
}

TEST_CASE("term order in the source does not change the canonical form") {
  auto a = parse_system(
      "system t\nchar 7\nvertices 0\nsort 0: eqs s(x0) - x0 + 3\n");
  auto b = parse_system(
      "system t\nchar 7\nvertices 0\nsort 0: eqs 3 - x0 + s(x0)\n");
  REQUIRE(a.ok());
  REQUIRE(b.ok());
  CHECK(structurally_equal(*a.spec, *b.spec));
}

TEST_CASE("refinement files parse") {
  auto r = parse_refinement(slurp("systems/refine-z.dvs"));
  REQUIRE(r.ok());
  CHECK(r.ref->entries.size() == 1);
  CHECK(r.ref->entries[0].u == 0b10);
  CHECK(r.ref->entries[0].new_vars == std::vector<std::string>{"z"});
  CHECK(r.ref->entries[0].eqs.size() == 2);
}

TEST_CASE("unknown variables are lexed as diagnostics, not crashes") {
  auto result = parse_system(
      "system u\nchar 7\nvertices 0\nsort 0: eqs s(x0) - y\n");
  CHECK(!result.ok());
  bool found = false;
  for (const auto& d : result.diagnostics)
    if (d.code == "UNKNOWN_VARIABLE") found = true;
  CHECK(found);
}
