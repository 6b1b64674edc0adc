#include "drl/parser.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "drl/field.hpp"

namespace drl {

namespace {

struct Line {
  int number;
  std::string text;
};

std::vector<Line> split_lines(const std::string& text) {
  std::vector<Line> lines;
  std::istringstream is(text);
  std::string s;
  int n = 0;
  while (std::getline(is, s)) {
    ++n;
    auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    // strip trailing whitespace
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
      s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b])))
      ++b;
    s = s.substr(b);
    if (!s.empty()) lines.push_back({n, s});
  }
  return lines;
}

// --- polynomial expression parsing -> RawPoly --------------------------

struct RawBuilder {
  // Expanded polynomial over Z in raw (name, shift, exp) factors.
  std::vector<RawTerm> terms;

  static RawBuilder constant(std::int64_t c) {
    RawBuilder b;
    if (c != 0) b.terms.push_back({c, {}});
    return b;
  }
  static RawBuilder var(const std::string& name, unsigned shift) {
    RawBuilder b;
    b.terms.push_back({1, {{name, shift, 1}}});
    return b;
  }
  RawBuilder neg() const {
    RawBuilder b = *this;
    for (auto& t : b.terms) t.coeff = -t.coeff;
    return b;
  }
  RawBuilder add(const RawBuilder& o) const {
    RawBuilder b = *this;
    b.terms.insert(b.terms.end(), o.terms.begin(), o.terms.end());
    return b;
  }
  RawBuilder mul(const RawBuilder& o) const {
    RawBuilder b;
    for (const auto& x : terms) {
      for (const auto& y : o.terms) {
        RawTerm t;
        __int128 c = static_cast<__int128>(x.coeff) * y.coeff;
        if (c > INT64_MAX || c < INT64_MIN)
          throw Error("OVERFLOW", "coefficient overflow");
        t.coeff = static_cast<std::int64_t>(c);
        t.factors = x.factors;
        for (const auto& f : y.factors) {
          bool merged = false;
          for (auto& g : t.factors) {
            if (g.var == f.var && g.shift == f.shift) {
              g.exp += f.exp;
              merged = true;
              break;
            }
          }
          if (!merged) t.factors.push_back(f);
        }
        b.terms.push_back(std::move(t));
      }
    }
    return b;
  }
  RawBuilder pow(unsigned e) const {
    RawBuilder r = constant(1);
    RawBuilder base = *this;
    while (e) {
      if (e & 1) r = r.mul(base);
      base = base.mul(base);
      e >>= 1;
    }
    return r;
  }
};

class ExprParser {
 public:
  ExprParser(const std::string& s, int line, std::vector<Diagnostic>& diags)
      : s_(s), line_(line), diags_(diags) {}

  std::optional<RawBuilder> parse() {
    auto e = expr();
    skip_ws();
    if (e && pos_ != s_.size()) {
      error("LEX_ERROR", "unexpected trailing input in polynomial");
      return std::nullopt;
    }
    return e;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
  int line_;
  std::vector<Diagnostic>& diags_;
  bool failed_ = false;

  void error(const std::string& code, const std::string& msg) {
    if (!failed_)
      diags_.push_back({line_, static_cast<int>(pos_) + 1, code, msg});
    failed_ = true;
  }

  void skip_ws() {
    while (pos_ < s_.size() &&
           std::isspace(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  std::optional<std::int64_t> integer() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < s_.size() &&
           std::isdigit(static_cast<unsigned char>(s_[pos_])))
      ++pos_;
    if (pos_ == start) {
      error("LEX_ERROR", "expected integer");
      return std::nullopt;
    }
    return std::stoll(s_.substr(start, pos_ - start));
  }

  std::optional<std::string> ident() {
    skip_ws();
    std::size_t start = pos_;
    if (pos_ < s_.size() &&
        (std::isalpha(static_cast<unsigned char>(s_[pos_])) ||
         s_[pos_] == '_')) {
      ++pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
              s_[pos_] == '_'))
        ++pos_;
      return s_.substr(start, pos_ - start);
    }
    error("LEX_ERROR", "expected identifier");
    return std::nullopt;
  }

  std::optional<RawBuilder> expr() {
    bool negate = eat('-');
    auto t = term();
    if (!t) return std::nullopt;
    RawBuilder acc = negate ? t->neg() : *t;
    while (true) {
      char c = peek();
      if (c == '+' || c == '-') {
        ++pos_;
        auto nxt = term();
        if (!nxt) return std::nullopt;
        acc = acc.add(c == '+' ? *nxt : nxt->neg());
      } else {
        break;
      }
    }
    return acc;
  }

  std::optional<RawBuilder> term() {
    auto f = factor();
    if (!f) return std::nullopt;
    RawBuilder acc = *f;
    while (peek() == '*') {
      ++pos_;
      auto nxt = factor();
      if (!nxt) return std::nullopt;
      acc = acc.mul(*nxt);
    }
    return acc;
  }

  std::optional<RawBuilder> factor() {
    auto a = atom();
    if (!a) return std::nullopt;
    if (peek() == '^') {
      ++pos_;
      auto e = integer();
      if (!e) return std::nullopt;
      if (*e < 0 || *e > 1000000) {
        error("LEX_ERROR", "exponent out of range");
        return std::nullopt;
      }
      return a->pow(static_cast<unsigned>(*e));
    }
    return a;
  }

  std::optional<RawBuilder> atom() {
    char c = peek();
    if (c == '(') {
      ++pos_;
      auto e = expr();
      if (!e) return std::nullopt;
      if (!eat(')')) {
        error("LEX_ERROR", "expected ')'");
        return std::nullopt;
      }
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      auto n = integer();
      if (!n) return std::nullopt;
      return RawBuilder::constant(*n);
    }
    auto name = ident();
    if (!name) return std::nullopt;
    if (*name == "s") {
      // sigma application: s(VAR) or s^k(VAR)
      unsigned shift = 1;
      if (peek() == '^') {
        ++pos_;
        auto k = integer();
        if (!k) return std::nullopt;
        if (*k < 0 || *k > 63) {
          error("LEX_ERROR", "sigma power out of range");
          return std::nullopt;
        }
        shift = static_cast<unsigned>(*k);
      }
      if (!eat('(')) {
        error("LEX_ERROR", "expected '(' after s");
        return std::nullopt;
      }
      auto v = ident();
      if (!v) return std::nullopt;
      if (!eat(')')) {
        error("LEX_ERROR", "expected ')'");
        return std::nullopt;
      }
      return RawBuilder::var(*v, shift);
    }
    return RawBuilder::var(*name, 0);
  }
};

std::optional<RawPoly> parse_raw_poly(const std::string& s, int line,
                                      std::vector<Diagnostic>& diags) {
  ExprParser p(s, line, diags);
  auto b = p.parse();
  if (!b) return std::nullopt;
  RawPoly rp;
  rp.terms = b->terms;
  rp.line = line;
  return rp;
}

std::vector<std::string> split_top_level(const std::string& s, char sep) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == sep && depth == 0) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  std::string t;
  while (is >> t) out.push_back(t);
  return out;
}

struct BlockDecl {
  int line = 0;
  Mask u = 0;
  std::vector<std::string> var_names;
  std::vector<std::pair<int, std::string>> eq_texts;  // (line, text)
};

// Parses "vars a b ...; eqs P, P, ..." or "eqs P, P, ...".
bool parse_block_body(const std::string& body, int line, BlockDecl& decl,
                      std::vector<Diagnostic>& diags) {
  std::string rest = body;
  auto semi = rest.find(';');
  std::string head = rest;
  std::string tail;
  if (semi != std::string::npos) {
    head = rest.substr(0, semi);
    tail = rest.substr(semi + 1);
  }
  auto head_tokens = split_ws(head);
  if (!head_tokens.empty() && head_tokens[0] == "vars") {
    for (std::size_t i = 1; i < head_tokens.size(); ++i)
      decl.var_names.push_back(head_tokens[i]);
    rest = tail;
  }
  std::size_t b = 0;
  while (b < rest.size() && std::isspace(static_cast<unsigned char>(rest[b])))
    ++b;
  rest = rest.substr(b);
  if (rest.rfind("eqs", 0) != 0) {
    if (rest.empty()) return true;  // block with no equations
    diags.push_back({line, 1, "LEX_ERROR", "expected 'eqs' in block body"});
    return false;
  }
  rest = rest.substr(3);
  for (const auto& part : split_top_level(rest, ',')) {
    std::string t = part;
    std::size_t s0 = 0;
    while (s0 < t.size() && std::isspace(static_cast<unsigned char>(t[s0])))
      ++s0;
    t = t.substr(s0);
    if (!t.empty()) decl.eq_texts.push_back({line, t});
  }
  return true;
}

std::optional<Mask> parse_subset(const std::string& s, int line,
                                 std::vector<Diagnostic>& diags) {
  // "{i,j,...}"
  std::string t = s;
  if (t.size() < 2 || t.front() != '{' || t.back() != '}') {
    diags.push_back({line, 1, "LEX_ERROR", "expected subset like {0,1}"});
    return std::nullopt;
  }
  t = t.substr(1, t.size() - 2);
  Mask m = 0;
  for (const auto& part : split_top_level(t, ',')) {
    auto toks = split_ws(part);
    if (toks.size() != 1) {
      diags.push_back({line, 1, "LEX_ERROR", "bad subset element"});
      return std::nullopt;
    }
    int v = std::stoi(toks[0]);
    if (v < 0 || v > 30) {
      diags.push_back({line, 1, "BAD_VERTEX", "vertex label out of range"});
      return std::nullopt;
    }
    m |= (1u << v);
  }
  return m;
}

}  // namespace

ParseResult parse_system(const std::string& text) {
  ParseResult result;
  auto& diags = result.diagnostics;
  auto lines = split_lines(text);
  if (lines.empty()) {
    diags.push_back({0, 0, "LEX_ERROR", "empty input"});
    return result;
  }

  SystemSpec spec;
  std::vector<BlockDecl> decls;
  bool have_name = false, have_char = false, have_vertices = false;

  for (const auto& ln : lines) {
    auto toks = split_ws(ln.text);
    const std::string& kw = toks[0];
    if (kw == "system") {
      if (toks.size() != 2) {
        diags.push_back({ln.number, 1, "LEX_ERROR", "system NAME expected"});
        continue;
      }
      spec.name = toks[1];
      have_name = true;
    } else if (kw == "char") {
      if (toks.size() != 2) {
        diags.push_back({ln.number, 1, "LEX_ERROR", "char P expected"});
        continue;
      }
      spec.p = std::stoll(toks[1]);
      have_char = true;
    } else if (kw == "vertices") {
      for (std::size_t i = 1; i < toks.size(); ++i) {
        int v = std::stoi(toks[i]);
        spec.vertices.push_back(v);
      }
      std::sort(spec.vertices.begin(), spec.vertices.end());
      spec.vertices.erase(
          std::unique(spec.vertices.begin(), spec.vertices.end()),
          spec.vertices.end());
      spec.vertex_mask = mask_of(spec.vertices);
      have_vertices = true;
    } else if (kw == "sort" || kw == "cover") {
      auto colon = ln.text.find(':');
      if (colon == std::string::npos) {
        diags.push_back({ln.number, 1, "LEX_ERROR", "expected ':'"});
        continue;
      }
      std::string head = ln.text.substr(kw.size(), colon - kw.size());
      std::string body = ln.text.substr(colon + 1);
      BlockDecl decl;
      decl.line = ln.number;
      if (kw == "sort") {
        auto ht = split_ws(head);
        if (ht.size() != 1) {
          diags.push_back({ln.number, 1, "LEX_ERROR", "sort i: expected"});
          continue;
        }
        int v = std::stoi(ht[0]);
        if (v < 0 || v > 30) {
          diags.push_back({ln.number, 1, "BAD_VERTEX", "vertex out of range"});
          continue;
        }
        decl.u = (1u << v);
      } else {
        auto ht = split_ws(head);
        if (ht.size() != 1) {
          diags.push_back({ln.number, 1, "LEX_ERROR", "cover {..}: expected"});
          continue;
        }
        auto m = parse_subset(ht[0], ln.number, diags);
        if (!m) continue;
        decl.u = *m;
      }
      if (!parse_block_body(body, ln.number, decl, diags)) continue;
      decls.push_back(std::move(decl));
    } else if (kw == "refine") {
      diags.push_back({ln.number, 1, "LEX_ERROR",
                       "refine lines belong in refinement files"});
    } else {
      diags.push_back({ln.number, 1, "LEX_ERROR", "unknown directive " + kw});
    }
  }

  if (!have_name || !have_char || !have_vertices) {
    diags.push_back(
        {lines[0].number, 1, "LEX_ERROR",
         "system, char and vertices headers are all required"});
    return result;
  }

  // Duplicate blocks.
  {
    std::set<Mask> seen;
    for (const auto& d : decls) {
      if (!seen.insert(d.u).second)
        diags.push_back({d.line, 1, "DUPLICATE_BLOCK",
                         "duplicate block for " + mask_to_string(d.u)});
    }
  }
  if (!diags.empty()) return result;

  // Canonical variable ids: vertex variables by ascending label, then
  // cover variables by (block cardinality, block mask, declared position).
  for (int v : spec.vertices) {
    Variable var;
    var.name = "x" + std::to_string(v);
    var.is_vertex = true;
    var.vertex_label = v;
    var.home = (1u << v);
    spec.vars.push_back(var);
  }
  std::sort(decls.begin(), decls.end(),
            [](const BlockDecl& a, const BlockDecl& b) {
              return subset_order_less(a.u, b.u);
            });
  for (const auto& d : decls) {
    CoverBlock blk;
    blk.u = d.u;
    for (const auto& vn : d.var_names) {
      if (vn == "s" || spec.var_id(vn) >= 0) {
        diags.push_back({d.line, 1, "DUPLICATE_VARIABLE",
                         "variable " + vn + " already declared or reserved"});
        continue;
      }
      Variable var;
      var.name = vn;
      var.is_vertex = false;
      var.home = d.u;
      var.block_pos = static_cast<int>(blk.cover_vars.size());
      spec.vars.push_back(var);
      blk.cover_vars.push_back(static_cast<int>(spec.vars.size()) - 1);
    }
    spec.blocks[d.u] = std::move(blk);
  }
  if (!diags.empty()) return result;

  // Second pass: equations.
  for (const auto& d : decls) {
    CoverBlock& blk = spec.blocks[d.u];
    for (const auto& [line, text] : d.eq_texts) {
      auto rp = parse_raw_poly(text, line, diags);
      if (!rp) continue;
      std::vector<DiffTerm> terms;
      bool ok = true;
      for (const auto& rt : rp->terms) {
        DiffTerm t;
        t.coeff = rt.coeff;
        for (const auto& rf : rt.factors) {
          int vid = spec.var_id(rf.var);
          if (vid < 0) {
            diags.push_back({line, 1, "UNKNOWN_VARIABLE",
                             "unknown variable " + rf.var});
            ok = false;
            break;
          }
          t.factors.push_back({vid, rf.shift, rf.exp});
        }
        if (!ok) break;
        terms.push_back(std::move(t));
      }
      if (!ok) continue;
      blk.eqs.push_back(
          DiffPolynomial::from_terms(std::move(terms)).normalized(spec.p));
    }
  }
  if (!diags.empty()) return result;

  auto vdiags = spec.validate();
  diags.insert(diags.end(), vdiags.begin(), vdiags.end());
  if (!diags.empty()) return result;
  result.spec = std::move(spec);
  return result;
}

RefinementParseResult parse_refinement(const std::string& text) {
  RefinementParseResult result;
  auto& diags = result.diagnostics;
  RefinementSpec ref;
  for (const auto& ln : split_lines(text)) {
    auto toks = split_ws(ln.text);
    if (toks[0] == "refinement" || toks[0] == "system") {
      if (toks.size() == 2) ref.name = toks[1];
      continue;
    }
    if (toks[0] != "refine") {
      diags.push_back(
          {ln.number, 1, "LEX_ERROR", "expected 'refine' directive"});
      continue;
    }
    auto colon = ln.text.find(':');
    if (colon == std::string::npos) {
      diags.push_back({ln.number, 1, "LEX_ERROR", "expected ':'"});
      continue;
    }
    std::string head = ln.text.substr(6, colon - 6);
    std::string body = ln.text.substr(colon + 1);
    auto ht = split_ws(head);
    if (ht.size() != 1) {
      diags.push_back({ln.number, 1, "LEX_ERROR", "refine {..}: expected"});
      continue;
    }
    auto m = parse_subset(ht[0], ln.number, diags);
    if (!m) continue;
    BlockDecl decl;
    decl.line = ln.number;
    decl.u = *m;
    if (!parse_block_body(body, ln.number, decl, diags)) continue;
    RefinementEntry entry;
    entry.u = decl.u;
    entry.new_vars = decl.var_names;
    for (const auto& [line, text2] : decl.eq_texts) {
      auto rp = parse_raw_poly(text2, line, diags);
      if (rp) entry.eqs.push_back(*rp);
    }
    ref.entries.push_back(std::move(entry));
  }
  if (!diags.empty()) return result;
  if (ref.entries.empty()) {
    diags.push_back({0, 0, "LEX_ERROR", "no refine entries found"});
    return result;
  }
  result.ref = std::move(ref);
  return result;
}

std::string print_system(const SystemSpec& spec) { return spec.canonical_text(); }

}  // namespace drl
