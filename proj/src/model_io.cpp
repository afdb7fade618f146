#include <cctype>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "obsopt/model_io.hpp"

namespace obsopt::io {

using dbm::AtomicConstraint;
using dbm::Band;
using dbm::ClockId;
using dbm::Relation;
using tga::Cost;
using tga::ModelError;

namespace {

enum class Tok { ident, number, string, symbol, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  int line = 0;
  int col = 0;
};

struct Pos {
  int line = 0;
  int col = 0;
};

class Diagnostics {
 public:
  explicit Diagnostics(std::string source) : source_(std::move(source)) {}
  [[noreturn]] void fail(Pos p, const std::string& msg) const {
    throw ModelError(source_ + ":" + std::to_string(p.line) + ":" +
                     std::to_string(p.col) + ": " + msg);
  }

 private:
  std::string source_;
};

std::vector<Token> tokenize(std::string_view line, int lineno,
                            const Diagnostics& diag) {
  static const char* const kTwo[] = {"->", "..", "<=", ">=", "==",
                                     "!=", "&&", "||", ":="};
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    const int col = static_cast<int>(i) + 1;
    if (c == '#') break;
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < line.size() &&
             (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_'))
        ++j;
      out.push_back({Tok::ident, std::string(line.substr(i, j - i)), lineno, col});
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      if (j + 1 < line.size() && line[j] == '.' &&
          std::isdigit(static_cast<unsigned char>(line[j + 1]))) {
        ++j;
        while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      }
      out.push_back({Tok::number, std::string(line.substr(i, j - i)), lineno, col});
      i = j;
      continue;
    }
    if (c == '"') {
      const std::size_t j = line.find('"', i + 1);
      if (j == std::string_view::npos)
        diag.fail({lineno, col}, "unterminated string");
      out.push_back({Tok::string, std::string(line.substr(i + 1, j - i - 1)),
                     lineno, col});
      i = j + 1;
      continue;
    }
    bool matched = false;
    for (const char* two : kTwo)
      if (line.substr(i, 2) == two) {
        out.push_back({Tok::symbol, two, lineno, col});
        i += 2;
        matched = true;
        break;
      }
    if (matched) continue;
    if (std::string_view("<>=+-*/%(),:!").find(c) != std::string_view::npos) {
      out.push_back({Tok::symbol, std::string(1, c), lineno, col});
      ++i;
      continue;
    }
    diag.fail({lineno, col}, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::end, "", lineno, static_cast<int>(line.size()) + 1});
  return out;
}

// Integer expressions over constants (folded while parsing) and variables.
struct Expr {
  enum class Kind { number, var, unary, binary } kind = Kind::number;
  std::int64_t value = 0;
  std::size_t var = 0;
  std::string op;
  std::shared_ptr<const Expr> a, b;
  Pos pos;
};
using ExprP = std::shared_ptr<const Expr>;

struct VarDecl {
  std::string name;
  std::int64_t lo = 0, hi = 0, init = 0;
};

struct LocDecl {
  std::string name;
  std::vector<Band> invariant;
};

struct Scope {
  std::vector<std::size_t> at;  // empty: everywhere
  bool has_at = false;
  std::vector<std::size_t> except;
  ExprP when;
};

struct InvDecl {
  std::vector<Band> bands;
  Scope scope;
};

struct EdgeDecl {
  std::size_t src = 0, dst = 0;
  bool controllable = false;
  std::uint32_t action = 0;
  ExprP when;
  std::vector<AtomicConstraint> guard;
  std::vector<std::pair<std::size_t, ExprP>> assigns;
  std::vector<ClockId> resets;
  Pos pos;
};

struct PredDecl {
  std::string name;
  Cost cost{0};
  Scope scope;
  std::vector<Band> clock;
  bool safety = false;
  Pos pos;
};

const std::set<std::string, std::less<>> kReserved = {
    "const", "clock", "var", "location", "initial", "invariant", "edge",
    "controllable", "uncontrollable", "when", "guard", "do", "reset",
    "predicate", "cost", "at", "except", "safety", "true", "false", "and"};

class Parser {
 public:
  Parser(std::string source, const ParseOptions& options)
      : diag_(std::move(source)), options_(options) {}

  tga::TgaModel run(std::string_view text);

 private:
  // token cursor
  const Token& peek(std::size_t k = 0) const {
    return toks_[std::min(pos_ + k, toks_.size() - 1)];
  }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }
  Pos here() const { return {peek().line, peek().col}; }
  bool at_symbol(std::string_view s) const {
    return peek().kind == Tok::symbol && peek().text == s;
  }
  bool at_word(std::string_view s) const {
    return peek().kind == Tok::ident && peek().text == s;
  }
  bool accept_symbol(std::string_view s) {
    if (!at_symbol(s)) return false;
    ++pos_;
    return true;
  }
  bool accept_word(std::string_view s) {
    if (!at_word(s)) return false;
    ++pos_;
    return true;
  }
  void expect_symbol(std::string_view s) {
    if (!accept_symbol(s))
      diag_.fail(here(), "expected '" + std::string(s) + "'" + found());
  }
  std::string found() const {
    return peek().kind == Tok::end ? ", found end of line"
                                   : ", found '" + peek().text + "'";
  }
  std::string name() {
    if (peek().kind != Tok::ident || kReserved.count(peek().text))
      diag_.fail(here(), "expected a name" + found());
    return next().text;
  }
  std::string label() {
    if (peek().kind == Tok::string) return next().text;
    return name();
  }
  void expect_end() {
    if (peek().kind != Tok::end) diag_.fail(here(), "unexpected '" + peek().text + "'");
  }

  // expressions
  ExprP expr() { return or_expr(); }
  ExprP or_expr();
  ExprP and_expr();
  ExprP cmp_expr();
  ExprP add_expr();
  ExprP mul_expr();
  ExprP unary_expr();
  ExprP primary();
  ExprP make_binary(std::string op, ExprP a, ExprP b, Pos p);
  std::int64_t eval(const Expr& e, const std::vector<std::int64_t>& vals) const;
  std::int64_t const_expr();

  // clock constraints
  std::optional<ClockId> clock_named(std::string_view n) const {
    for (std::size_t i = 0; i < clocks_.size(); ++i)
      if (clocks_[i] == n) return static_cast<ClockId>(i + 1);
    return std::nullopt;
  }
  std::optional<Relation> relation();
  std::vector<std::pair<AtomicConstraint, Pos>> clock_conjunction();
  std::vector<Band> bands(const char* what);
  ClockId clock_ref();

  std::size_t location_ref();
  std::vector<std::size_t> location_list();
  bool scope_clause(Scope& s);

  void statement();
  void st_const();
  void st_clock();
  void st_var();
  void st_location();
  void st_invariant();
  void st_edge();
  void st_predicate(bool safety);

  bool in_scope(const Scope& s, std::size_t base,
                const std::vector<std::int64_t>& vals) const;
  tga::TgaModel compile();

  Diagnostics diag_;
  const ParseOptions& options_;
  std::vector<Token> toks_;
  std::size_t pos_ = 0;

  std::map<std::string, std::int64_t, std::less<>> consts_;
  std::set<std::string, std::less<>> used_overrides_;
  std::vector<std::string> clocks_;
  std::vector<VarDecl> vars_;
  std::vector<LocDecl> locs_;
  std::optional<std::size_t> initial_;
  std::vector<InvDecl> invs_;
  std::vector<EdgeDecl> edges_;
  std::vector<PredDecl> preds_;
  std::vector<std::string> cactions_, uactions_;
  Pos safety_pos_;
};

ExprP Parser::make_binary(std::string op, ExprP a, ExprP b, Pos p) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::binary;
  e->op = std::move(op);
  e->a = std::move(a);
  e->b = std::move(b);
  e->pos = p;
  return e;
}

ExprP Parser::or_expr() {
  ExprP lhs = and_expr();
  while (at_symbol("||")) {
    const Pos p = here();
    next();
    lhs = make_binary("||", lhs, and_expr(), p);
  }
  return lhs;
}

ExprP Parser::and_expr() {
  ExprP lhs = cmp_expr();
  while (at_symbol("&&") || at_word("and")) {
    const Pos p = here();
    next();
    lhs = make_binary("&&", lhs, cmp_expr(), p);
  }
  return lhs;
}

ExprP Parser::cmp_expr() {
  ExprP lhs = add_expr();
  for (const char* op : {"==", "!=", "<=", ">=", "<", ">"})
    if (at_symbol(op)) {
      const Pos p = here();
      next();
      return make_binary(op, lhs, add_expr(), p);
    }
  return lhs;
}

ExprP Parser::add_expr() {
  ExprP lhs = mul_expr();
  while (at_symbol("+") || at_symbol("-")) {
    const Pos p = here();
    std::string op = next().text;
    lhs = make_binary(op, lhs, mul_expr(), p);
  }
  return lhs;
}

ExprP Parser::mul_expr() {
  ExprP lhs = unary_expr();
  while (at_symbol("*") || at_symbol("/") || at_symbol("%")) {
    const Pos p = here();
    std::string op = next().text;
    lhs = make_binary(op, lhs, unary_expr(), p);
  }
  return lhs;
}

ExprP Parser::unary_expr() {
  if (at_symbol("-") || at_symbol("!")) {
    auto e = std::make_shared<Expr>();
    e->pos = here();
    e->kind = Expr::Kind::unary;
    e->op = next().text;
    e->a = unary_expr();
    return e;
  }
  return primary();
}

ExprP Parser::primary() {
  auto e = std::make_shared<Expr>();
  e->pos = here();
  if (accept_symbol("(")) {
    ExprP inner = expr();
    expect_symbol(")");
    return inner;
  }
  const Token& t = peek();
  if (t.kind == Tok::number) {
    if (t.text.find('.') != std::string::npos)
      diag_.fail(here(), "integer expected");
    next();
    try {
      e->value = std::stoll(t.text);
    } catch (const std::exception&) {
      diag_.fail(e->pos, "integer out of range");
    }
    return e;
  }
  if (t.kind == Tok::ident) {
    if (t.text == "true" || t.text == "false") {
      e->value = t.text == "true";
      next();
      return e;
    }
    for (std::size_t v = 0; v < vars_.size(); ++v)
      if (vars_[v].name == t.text) {
        next();
        e->kind = Expr::Kind::var;
        e->var = v;
        return e;
      }
    if (auto it = consts_.find(t.text); it != consts_.end()) {
      next();
      e->value = it->second;
      return e;
    }
    if (clock_named(t.text))
      diag_.fail(here(), "clock '" + t.text + "' in an integer expression");
    diag_.fail(here(), "unknown name '" + t.text + "'");
  }
  diag_.fail(here(), "expected an expression" + found());
}

std::int64_t Parser::eval(const Expr& e,
                          const std::vector<std::int64_t>& vals) const {
  switch (e.kind) {
    case Expr::Kind::number: return e.value;
    case Expr::Kind::var: return vals.at(e.var);
    case Expr::Kind::unary: {
      const auto v = eval(*e.a, vals);
      return e.op == "-" ? -v : !v;
    }
    case Expr::Kind::binary: break;
  }
  const auto x = eval(*e.a, vals);
  if (e.op == "&&") return x && eval(*e.b, vals);
  if (e.op == "||") return x || eval(*e.b, vals);
  const auto y = eval(*e.b, vals);
  if (e.op == "+") return x + y;
  if (e.op == "-") return x - y;
  if (e.op == "*") return x * y;
  if (e.op == "/" || e.op == "%") {
    if (y == 0) diag_.fail(e.pos, "division by zero");
    return e.op == "/" ? x / y : x % y;
  }
  if (e.op == "==") return x == y;
  if (e.op == "!=") return x != y;
  if (e.op == "<") return x < y;
  if (e.op == "<=") return x <= y;
  if (e.op == ">") return x > y;
  if (e.op == ">=") return x >= y;
  diag_.fail(e.pos, "bad operator");
}

std::int64_t Parser::const_expr() {
  const Pos p = here();
  ExprP e = add_expr();
  std::vector<std::int64_t> none;
  std::function<bool(const Expr&)> uses_var = [&](const Expr& x) {
    if (x.kind == Expr::Kind::var) return true;
    return (x.a && uses_var(*x.a)) || (x.b && uses_var(*x.b));
  };
  if (uses_var(*e)) diag_.fail(p, "constant expression expected");
  return eval(*e, none);
}

std::optional<Relation> Parser::relation() {
  static const std::pair<const char*, Relation> kRel[] = {
      {"<=", Relation::le}, {">=", Relation::ge}, {"==", Relation::eq},
      {"<", Relation::lt},  {">", Relation::gt}};
  for (auto [s, r] : kRel)
    if (accept_symbol(s)) return r;
  return std::nullopt;
}

ClockId Parser::clock_ref() {
  const Pos p = here();
  const std::string n = name();
  auto c = clock_named(n);
  if (!c) diag_.fail(p, "unknown clock '" + n + "'");
  return *c;
}

std::vector<std::pair<AtomicConstraint, Pos>> Parser::clock_conjunction() {
  std::vector<std::pair<AtomicConstraint, Pos>> out;
  if (accept_word("true")) return out;
  auto check_k = [&](std::int64_t k, Pos p) {
    if (k < 0) diag_.fail(p, "clock constants must be non-negative");
    if (k > 1'000'000) diag_.fail(p, "clock constant too large");
    return static_cast<std::int32_t>(k);
  };
  auto flip = [](Relation r) {
    switch (r) {
      case Relation::lt: return Relation::gt;
      case Relation::le: return Relation::ge;
      case Relation::gt: return Relation::lt;
      case Relation::ge: return Relation::le;
      case Relation::eq: return Relation::eq;
    }
    return r;
  };
  do {
    const Pos p = here();
    if (peek().kind == Tok::ident && clock_named(peek().text)) {
      const ClockId x = clock_ref();
      if (accept_symbol("-")) {
        const ClockId y = clock_ref();
        auto rel = relation();
        if (!rel) diag_.fail(here(), "expected a comparison" + found());
        const Pos kp = here();
        out.emplace_back(AtomicConstraint::difference(x, y, *rel, check_k(const_expr(), kp)), p);
      } else {
        auto rel = relation();
        if (!rel) diag_.fail(here(), "expected a comparison" + found());
        const Pos kp = here();
        out.emplace_back(AtomicConstraint::simple(x, *rel, check_k(const_expr(), kp)), p);
      }
    } else {
      const std::int32_t k1 = check_k(const_expr(), p);
      auto rel1 = relation();
      if (!rel1) diag_.fail(here(), "expected a comparison" + found());
      const ClockId x = clock_ref();
      const Pos p2 = here();
      auto rel2 = relation();
      if (rel2) {
        const std::int32_t k2 = check_k(const_expr(), p2);
        if (*rel1 == Relation::le && *rel2 == Relation::lt) {
          if (k2 <= k1) diag_.fail(p, "empty band: need k1 < k2");
          out.emplace_back(AtomicConstraint::band(x, k1, k2), p);
        } else {
          out.emplace_back(AtomicConstraint::simple(x, flip(*rel1), k1), p);
          out.emplace_back(AtomicConstraint::simple(x, *rel2, k2), p2);
        }
      } else {
        out.emplace_back(AtomicConstraint::simple(x, flip(*rel1), k1), p);
      }
    }
  } while (accept_symbol("&&") || accept_word("and"));
  return out;
}

std::vector<Band> Parser::bands(const char* what) {
  std::vector<Band> out;
  for (auto& [a, p] : clock_conjunction()) {
    auto b = a.as_band();
    if (!b)
      diag_.fail(p, std::string(what) +
                        " must use k1 <= x < k2, x < k or x >= k constraints");
    out.push_back(*b);
  }
  return out;
}

std::size_t Parser::location_ref() {
  const Pos p = here();
  const std::string n = name();
  for (std::size_t i = 0; i < locs_.size(); ++i)
    if (locs_[i].name == n) return i;
  diag_.fail(p, "unknown location '" + n + "'");
}

std::vector<std::size_t> Parser::location_list() {
  std::vector<std::size_t> out{location_ref()};
  while (accept_symbol(",")) out.push_back(location_ref());
  return out;
}

bool Parser::scope_clause(Scope& s) {
  if (accept_word("at")) {
    auto l = location_list();
    s.at.insert(s.at.end(), l.begin(), l.end());
    s.has_at = true;
    return true;
  }
  if (accept_word("except")) {
    auto l = location_list();
    s.except.insert(s.except.end(), l.begin(), l.end());
    return true;
  }
  if (accept_word("when")) {
    ExprP e = expr();
    s.when = s.when ? make_binary("&&", s.when, e, e->pos) : e;
    return true;
  }
  return false;
}

void Parser::st_const() {
  const Pos p = here();
  const std::string n = name();
  if (consts_.count(n) || clock_named(n)) diag_.fail(p, "'" + n + "' redefined");
  expect_symbol("=");
  std::int64_t v = const_expr();
  expect_end();
  if (auto it = options_.overrides.find(n); it != options_.overrides.end()) {
    v = it->second;
    used_overrides_.insert(n);
  }
  consts_[n] = v;
}

void Parser::st_clock() {
  do {
    const Pos p = here();
    const std::string n = name();
    if (clock_named(n) || consts_.count(n)) diag_.fail(p, "'" + n + "' redefined");
    for (const auto& v : vars_)
      if (v.name == n) diag_.fail(p, "'" + n + "' redefined");
    clocks_.push_back(n);
  } while (accept_symbol(","));
  expect_end();
}

void Parser::st_var() {
  const Pos p = here();
  VarDecl v;
  v.name = name();
  if (clock_named(v.name) || consts_.count(v.name))
    diag_.fail(p, "'" + v.name + "' redefined");
  for (const auto& o : vars_)
    if (o.name == v.name) diag_.fail(p, "'" + v.name + "' redefined");
  expect_symbol(":");
  v.lo = const_expr();
  expect_symbol("..");
  v.hi = const_expr();
  if (v.hi < v.lo) diag_.fail(p, "empty range");
  v.init = v.lo;
  if (accept_symbol("=")) {
    const Pos ip = here();
    v.init = const_expr();
    if (v.init < v.lo || v.init > v.hi) diag_.fail(ip, "initial value out of range");
  }
  expect_end();
  vars_.push_back(std::move(v));
}

void Parser::st_location() {
  const Pos p = here();
  LocDecl l;
  l.name = name();
  for (const auto& o : locs_)
    if (o.name == l.name) diag_.fail(p, "location '" + l.name + "' redefined");
  while (peek().kind != Tok::end) {
    if (accept_word("initial")) {
      if (initial_) diag_.fail(p, "second initial location");
      initial_ = locs_.size();
    } else if (accept_word("invariant")) {
      auto b = bands("invariants");
      l.invariant.insert(l.invariant.end(), b.begin(), b.end());
    } else {
      diag_.fail(here(), "unexpected '" + peek().text + "'");
    }
  }
  locs_.push_back(std::move(l));
}

void Parser::st_invariant() {
  InvDecl d;
  d.bands = bands("invariants");
  while (scope_clause(d.scope)) {
  }
  expect_end();
  invs_.push_back(std::move(d));
}

void Parser::st_edge() {
  EdgeDecl e;
  e.pos = here();
  e.src = location_ref();
  expect_symbol("->");
  e.dst = location_ref();
  expect_symbol(":");
  if (accept_word("controllable"))
    e.controllable = true;
  else if (!accept_word("uncontrollable"))
    diag_.fail(here(), "expected 'controllable' or 'uncontrollable'" + found());
  const Pos ap = here();
  const std::string action = name();
  auto& mine = e.controllable ? cactions_ : uactions_;
  const auto& other = e.controllable ? uactions_ : cactions_;
  if (std::find(other.begin(), other.end(), action) != other.end())
    diag_.fail(ap, "action '" + action + "' is both controllable and uncontrollable");
  auto it = std::find(mine.begin(), mine.end(), action);
  e.action = static_cast<std::uint32_t>(it - mine.begin());
  if (it == mine.end()) mine.push_back(action);

  while (peek().kind != Tok::end) {
    if (accept_word("when")) {
      ExprP c = expr();
      e.when = e.when ? make_binary("&&", e.when, c, c->pos) : c;
    } else if (accept_word("guard")) {
      for (auto& [a, p] : clock_conjunction()) {
        if (e.controllable && !a.as_band())
          diag_.fail(p, "controllable guards must use k1 <= x < k2, x < k or x >= k "
                        "constraints");
        e.guard.push_back(a);
      }
    } else if (accept_word("do")) {
      do {
        const Pos vp = here();
        const std::string n = name();
        std::size_t v = vars_.size();
        for (std::size_t i = 0; i < vars_.size(); ++i)
          if (vars_[i].name == n) v = i;
        if (v == vars_.size()) diag_.fail(vp, "unknown variable '" + n + "'");
        if (!accept_symbol(":=")) expect_symbol("=");
        e.assigns.emplace_back(v, expr());
      } while (accept_symbol(","));
    } else if (accept_word("reset")) {
      do {
        e.resets.push_back(clock_ref());
      } while (accept_symbol(","));
    } else {
      diag_.fail(here(), "unexpected '" + peek().text + "'");
    }
  }
  edges_.push_back(std::move(e));
}

void Parser::st_predicate(bool safety) {
  PredDecl d;
  d.pos = here();
  d.safety = safety;
  d.name = label();
  for (const auto& o : preds_)
    if (o.name == d.name) diag_.fail(d.pos, "predicate '" + d.name + "' redefined");
  if (safety) {
    for (const auto& o : preds_)
      if (o.safety) diag_.fail(d.pos, "second safety predicate");
  }
  while (peek().kind != Tok::end) {
    if (scope_clause(d.scope)) continue;
    if (!safety && accept_word("cost")) {
      const Pos cp = here();
      std::string text;
      if (accept_symbol("-")) diag_.fail(cp, "cost must be non-negative");
      if (peek().kind != Tok::number) diag_.fail(cp, "expected a cost" + found());
      text = next().text;
      if (accept_symbol("/")) {
        if (peek().kind != Tok::number) diag_.fail(here(), "expected a denominator");
        text += "/" + next().text;
      }
      try {
        d.cost = parse_cost(text);
      } catch (const std::exception& ex) {
        diag_.fail(cp, ex.what());
      }
    } else if (!safety && accept_word("clock")) {
      auto b = bands("observable predicates");
      d.clock.insert(d.clock.end(), b.begin(), b.end());
    } else {
      diag_.fail(here(), "unexpected '" + peek().text + "'");
    }
  }
  preds_.push_back(std::move(d));
}

void Parser::statement() {
  const Pos p = here();
  const std::string kw = peek().kind == Tok::ident ? next().text : "";
  if (kw == "const") return st_const();
  if (kw == "clock") return st_clock();
  if (kw == "var") return st_var();
  if (kw == "location") return st_location();
  if (kw == "invariant") return st_invariant();
  if (kw == "edge") return st_edge();
  if (kw == "predicate") return st_predicate(false);
  if (kw == "safety") return st_predicate(true);
  diag_.fail(p, "unknown statement" + (kw.empty() ? std::string() : " '" + kw + "'"));
}

bool Parser::in_scope(const Scope& s, std::size_t base,
                      const std::vector<std::int64_t>& vals) const {
  if (s.has_at && std::find(s.at.begin(), s.at.end(), base) == s.at.end())
    return false;
  if (std::find(s.except.begin(), s.except.end(), base) != s.except.end())
    return false;
  return !s.when || eval(*s.when, vals) != 0;
}

tga::TgaModel Parser::run(std::string_view text) {
  int lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    toks_ = tokenize(line, lineno, diag_);
    pos_ = 0;
    if (peek().kind != Tok::end) statement();
    start = end + 1;
  }
  for (const auto& [n, v] : options_.overrides)
    if (!used_overrides_.count(n))
      throw ModelError("no constant named '" + n + "' to set");
  return compile();
}

tga::TgaModel Parser::compile() {
  const Pos end{0, 0};
  if (locs_.empty()) diag_.fail(end, "no locations");
  if (!initial_) diag_.fail(end, "no initial location");
  bool has_safety = false;
  for (const auto& p : preds_) has_safety |= p.safety;
  if (!has_safety) diag_.fail(end, "missing safety predicate");

  tga::TgaModel m;
  m.clocks = dbm::ClockSet(clocks_);
  m.controllable_actions = cactions_;
  m.uncontrollable_actions = uactions_;

  using Key = std::pair<std::size_t, std::vector<std::int64_t>>;
  std::map<Key, tga::LocationId> index;
  std::vector<Key> product;
  std::deque<tga::LocationId> queue;

  auto intern = [&](Key k) -> tga::LocationId {
    auto it = index.find(k);
    if (it != index.end()) return it->second;
    const auto id = static_cast<tga::LocationId>(product.size());
    std::string n = locs_[k.first].name;
    if (!vars_.empty()) {
      n += "[";
      for (std::size_t v = 0; v < vars_.size(); ++v)
        n += (v ? "," : "") + vars_[v].name + "=" + std::to_string(k.second[v]);
      n += "]";
    }
    m.locations.push_back(std::move(n));
    std::vector<Band> inv = locs_[k.first].invariant;
    for (const auto& d : invs_)
      if (in_scope(d.scope, k.first, k.second))
        inv.insert(inv.end(), d.bands.begin(), d.bands.end());
    m.invariants.push_back(std::move(inv));
    index.emplace(k, id);
    product.push_back(std::move(k));
    queue.push_back(id);
    return id;
  };

  std::vector<std::int64_t> init;
  for (const auto& v : vars_) init.push_back(v.init);
  m.initial = intern({*initial_, init});

  while (!queue.empty()) {
    const tga::LocationId id = queue.front();
    queue.pop_front();
    const Key k = product[id];
    for (const auto& e : edges_) {
      if (e.src != k.first) continue;
      if (e.when && eval(*e.when, k.second) == 0) continue;
      std::vector<std::int64_t> vals = k.second;
      for (const auto& [v, rhs] : e.assigns) {
        const std::int64_t x = eval(*rhs, vals);
        if (x < vars_[v].lo || x > vars_[v].hi)
          diag_.fail(e.pos, "assignment sets " + vars_[v].name + " to " +
                                std::to_string(x) + ", outside " +
                                std::to_string(vars_[v].lo) + ".." +
                                std::to_string(vars_[v].hi) + " (from " +
                                m.locations[id] + ")");
        vals[v] = x;
      }
      const tga::LocationId dst = intern({e.dst, std::move(vals)});
      tga::Edge te;
      te.source = id;
      te.target = dst;
      te.controllable = e.controllable;
      te.action = e.action;
      te.guard = e.guard;
      te.resets = e.resets;
      m.edges.push_back(std::move(te));
    }
  }

  for (const auto& d : preds_) {
    tga::ObservationPredicate p;
    p.name = d.name;
    p.cost = d.cost;
    p.clock = d.clock;
    p.locations.resize(product.size());
    for (std::size_t l = 0; l < product.size(); ++l)
      p.locations[l] = in_scope(d.scope, product[l].first, product[l].second);
    if (d.safety) m.safety = m.predicates.size();
    m.predicates.push_back(std::move(p));
  }
  m.validate();
  return m;
}

}  // namespace

tga::Cost parse_cost(std::string_view s) {
  auto bad = [&] { return std::invalid_argument("bad cost '" + std::string(s) + "'"); };
  auto parse_int = [&](std::string_view t) -> std::int64_t {
    if (t.empty() || t.size() > 12) throw bad();
    std::int64_t v = 0;
    for (char c : t) {
      if (!std::isdigit(static_cast<unsigned char>(c))) throw bad();
      v = v * 10 + (c - '0');
    }
    return v;
  };
  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    const auto den = parse_int(s.substr(slash + 1));
    if (den == 0) throw bad();
    return Cost(parse_int(s.substr(0, slash)), den);
  }
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    const auto frac = s.substr(dot + 1);
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    return Cost(parse_int(s.substr(0, dot)) * den + parse_int(frac), den);
  }
  return Cost(parse_int(s));
}

std::string format_cost(const tga::Cost& c) {
  if (c.denominator() == 1) return std::to_string(c.numerator());
  return std::to_string(c.numerator()) + "/" + std::to_string(c.denominator());
}

tga::TgaModel parse_model(std::string_view text, const ParseOptions& options,
                          std::string_view source) {
  Parser p{std::string(source), options};
  return p.run(text);
}

tga::TgaModel load_model(const std::filesystem::path& path,
                         const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str(), options, path.string());
}

}  // namespace obsopt::io
