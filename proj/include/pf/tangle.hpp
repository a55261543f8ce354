#pragma once

#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pf/common.hpp"
#include "pf/loop.hpp"
#include "pf/tower.hpp"

namespace pf {

/// Boundary signature of a tangle or slot: number of strand pairs and shading.
struct Boundary {
  int n = 0;
  bool plus = true;

  friend bool operator==(const Boundary&, const Boundary&) = default;
  std::string str() const { return "(" + std::to_string(n) + "," + (plus ? "+" : "-") + ")"; }
};

inline LoopKind boundary_kind(const Boundary& b) { return b.plus ? LoopKind::GPlus : LoopKind::GMinus; }

// ---------------------------------------------------------------------------
// Closed-form actions of the generating tangles on the graph planar algebra.
// ---------------------------------------------------------------------------

/// iota_n^+: G_{n,+} -> G_{n+1,+}; appends the sum over edges at the middle
/// vertex to both halves.
inline LoopElement gpa_iota_plus(const LoopElement& x) {
  require(x.kind() == LoopKind::GPlus, Errc::AmbientMismatch, "iota+ takes G_{n,+}");
  const auto& ctx = x.ctx();
  const auto& g = ctx.graph();
  LoopElement r(ctx, x.level() + 1, LoopKind::GPlus);
  for (const auto& [w, c] : x.terms()) {
    auto [v, is_even] = path_endpoint(ctx, LoopKind::GPlus, w.base, w.left);
    const auto& ids = is_even ? g.edges_at_even(v) : g.edges_at_odd(v);
    for (int id : ids) {
      LoopWord nw = w;
      nw.left.push_back(id);
      nw.right.push_back(id);
      r.add_term(nw, c);
    }
  }
  return r;
}

/// iota_n^-: G_{n,-} -> G_{n+1,+}; prepends the sum over edges into the odd
/// base vertex to both halves.
inline LoopElement gpa_iota_minus(const LoopElement& x) {
  require(x.kind() == LoopKind::GMinus, Errc::AmbientMismatch, "iota- takes G_{n,-}");
  const auto& ctx = x.ctx();
  const auto& g = ctx.graph();
  LoopElement r(ctx, x.level() + 1, LoopKind::GPlus);
  for (const auto& [w, c] : x.terms()) {
    for (int id : g.edges_at_odd(w.base)) {
      LoopWord nw{g.edge_source(id), {id}, {id}};
      nw.left.insert(nw.left.end(), w.left.begin(), w.left.end());
      nw.right.insert(nw.right.end(), w.right.begin(), w.right.end());
      r.add_term(nw, c);
    }
  }
  return r;
}

/// alpha_n: G_{n,+} -> G_{n-1,+}; caps the middle edge pair with the weight
/// lambda(middle before)/lambda(middle after).
inline LoopElement gpa_alpha(const LoopElement& x) {
  require(x.kind() == LoopKind::GPlus, Errc::AmbientMismatch, "alpha takes G_{n,+}");
  require(x.level() >= 1, Errc::InvalidInput, "alpha needs n >= 1");
  const auto& ctx = x.ctx();
  const auto& s = ctx.spectral;
  const auto& g = ctx.graph();
  const int n = x.level();
  LoopElement r(ctx, n - 1, LoopKind::GPlus);
  for (const auto& [w, c] : x.terms()) {
    int e = w.left.back(), f = w.right.back();
    if (e != f) continue;
    double factor = (n % 2 == 0)
                        ? s.weight_even(g.edge_source(e)) / s.weight_odd(g.edge_target(e))
                        : s.weight_odd(g.edge_target(e)) / s.weight_even(g.edge_source(e));
    LoopWord nw{w.base, {w.left.begin(), w.left.end() - 1}, {w.right.begin(), w.right.end() - 1}};
    r.add_term(nw, c * factor);
  }
  return r;
}

/// beta_n: G_{n,+} -> G_{n-1,-}; caps the outermost edge pair with the weight
/// lambda(base)/lambda(new base).
inline LoopElement gpa_beta(const LoopElement& x) {
  require(x.kind() == LoopKind::GPlus, Errc::AmbientMismatch, "beta takes G_{n,+}");
  require(x.level() >= 1, Errc::InvalidInput, "beta needs n >= 1");
  const auto& ctx = x.ctx();
  const auto& s = ctx.spectral;
  const auto& g = ctx.graph();
  LoopElement r(ctx, x.level() - 1, LoopKind::GMinus);
  for (const auto& [w, c] : x.terms()) {
    int e = w.left.front(), f = w.right.front();
    if (e != f) continue;
    double factor = s.weight_even(g.edge_source(e)) / s.weight_odd(g.edge_target(e));
    LoopWord nw{g.edge_target(e), {w.left.begin() + 1, w.left.end()},
                {w.right.begin() + 1, w.right.end()}};
    r.add_term(nw, c * factor);
  }
  return r;
}

/// The Jones tangle element E_n in G_{n+1,+} (n >= 1). Cup-cap pairs over a
/// common stem, weighted by sqrt(lambda(w1) lambda(w2)) / lambda(v).
inline LoopElement gpa_jones(const GraphContext& ctx, int n) {
  require(n >= 1, Errc::InvalidInput, "E_n needs n >= 1");
  const auto& s = ctx.spectral;
  const auto& g = ctx.graph();
  LoopElement r(ctx, n + 1, LoopKind::GPlus);
  auto stems = half_paths(ctx, LoopKind::GPlus, n - 1);
  for (int b = 0; b < static_cast<int>(stems.size()); ++b) {
    for (const auto& stem : stems[b]) {
      auto [v, is_even] = path_endpoint(ctx, LoopKind::GPlus, b, stem);
      const auto& ids = is_even ? g.edges_at_even(v) : g.edges_at_odd(v);
      double wv = is_even ? s.weight_even(v) : s.weight_odd(v);
      for (int e : ids)
        for (int f : ids) {
          double we = is_even ? s.weight_odd(g.edge_target(e)) : s.weight_even(g.edge_source(e));
          double wf = is_even ? s.weight_odd(g.edge_target(f)) : s.weight_even(g.edge_source(f));
          LoopWord w{b, stem, stem};
          w.left.insert(w.left.end(), {e, e});
          w.right.insert(w.right.end(), {f, f});
          r.add_term(w, std::sqrt(we * wf) / wv);
        }
    }
  }
  return r;
}

/// Linear involution of G_{n,+-}; reverses loops, conjugates coefficients.
inline LoopElement involution(const LoopElement& x) {
  require(x.kind() != LoopKind::B, Errc::AmbientMismatch, "involution here acts on G_{n,+-}");
  return x.star();
}

/// Trace tangle value: the raw G_{0,+} element d^-n alpha_1 ... alpha_n(x)
/// together with the lambda0-contracted scalar.
struct GpaTrace {
  LoopElement raw;
  Complex scalar;
};

inline GpaTrace gpa_trace(const LoopElement& x) {
  require(x.kind() == LoopKind::GPlus, Errc::AmbientMismatch, "gpa_trace takes G_{n,+}");
  LoopElement cur = x;
  for (int k = x.level(); k >= 1; --k) cur = gpa_alpha(cur);
  cur *= Complex(std::pow(x.ctx().spectral.d, -x.level()));
  Complex scalar(0);
  for (const auto& [w, c] : cur.terms()) scalar += c * x.ctx().spectral.lambda0[w.base];
  return {cur, scalar};
}

// ---------------------------------------------------------------------------
// Tangle expressions: typed AST over the generating tangles.
// ---------------------------------------------------------------------------

enum class TangleOp { Unit, Id, Mult, InclPlus, InclMinus, Alpha, Beta, JonesE, Trace, Input };

struct TangleExpr {
  TangleOp op = TangleOp::Unit;
  int n = 0;        // subscript as written
  bool plus = true; // sign as written (Unit, Id, Mult, Incl)
  int slot = 0;     // Input only
  Boundary out;
  std::vector<Boundary> slots;
  std::vector<TangleExpr> children;

  /// Number of distinct input slots of the whole expression.
  int max_slot() const {
    int m = (op == TangleOp::Input) ? slot : 0;
    for (const auto& c : children) m = std::max(m, c.max_slot());
    return m;
  }
};

namespace detail {

/// Output boundary and slot boundaries from the node head alone.
inline void resolve_boundaries(TangleExpr& e) {
  switch (e.op) {
    case TangleOp::Unit:
      e.out = {e.n, e.plus};
      break;
    case TangleOp::Id:
      e.out = {e.n, e.plus};
      e.slots = {{e.n, e.plus}};
      break;
    case TangleOp::Mult:
      e.out = {e.n, e.plus};
      e.slots = {{e.n, e.plus}, {e.n, e.plus}};
      break;
    case TangleOp::InclPlus:
      e.out = {e.n + 1, true};
      e.slots = {{e.n, true}};
      break;
    case TangleOp::InclMinus:
      e.out = {e.n + 1, true};
      e.slots = {{e.n, false}};
      break;
    case TangleOp::Alpha:
      e.out = {e.n - 1, true};
      e.slots = {{e.n, true}};
      break;
    case TangleOp::Beta:
      e.out = {e.n - 1, false};
      e.slots = {{e.n, true}};
      break;
    case TangleOp::JonesE:
      e.out = {e.n + 1, true};
      break;
    case TangleOp::Trace:
      e.out = {0, true};
      e.slots = {{e.n, true}};
      break;
    case TangleOp::Input:
      break;  // inferred from the surrounding slot
  }
}

}  // namespace detail

/// Recursive-descent parser for the tangle DSL.
///
///   expr := atom | gen "(" expr {"," expr} ")"
///   gen  := ("alpha"|"beta") "_" INT | "m" SIGN "_" INT | "iota" SIGN "_" INT
///         | "E" "_" INT | "tr" "_" INT | "id" SIGN "_" INT
///   atom := "$" INT | "1" SIGN "_" INT
///
/// Whitespace is insignificant. Boundaries are fully resolved; shading or
/// arity conflicts are reported with their position.
class TangleParser {
 public:
  explicit TangleParser(std::string text) : text_(std::move(text)) {}

  TangleExpr parse() {
    TangleExpr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) syntax("unexpected trailing input");
    std::map<int, Boundary> slots;
    bind_inputs(e, std::nullopt, slots);
    int m = e.max_slot();
    for (int k = 1; k <= m; ++k)
      require(slots.count(k), Errc::ArityMismatch,
              "input slots must be contiguous from $1; $" + std::to_string(k) + " is missing");
    return e;
  }

 private:
  [[noreturn]] void syntax(const std::string& what) {
    fail(Errc::SyntaxError, what + " at position " + std::to_string(pos_));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!eat(c)) syntax(std::string("expected '") + c + "' (" + what + ")");
  }

  int parse_int() {
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) syntax("expected an integer");
    return std::stoi(text_.substr(start, pos_ - start));
  }

  bool parse_sign() {
    skip_ws();
    if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) return text_[pos_++] == '+';
    syntax("expected '+' or '-'");
  }

  TangleExpr parse_expr() {
    skip_ws();
    if (pos_ >= text_.size()) syntax("expected an expression");
    char c = text_[pos_];
    if (c == '$') {
      ++pos_;
      TangleExpr e;
      e.op = TangleOp::Input;
      e.slot = parse_int();
      if (e.slot < 1) syntax("input slots start at $1");
      return e;
    }
    if (c == '1') {
      ++pos_;
      TangleExpr e;
      e.op = TangleOp::Unit;
      e.plus = parse_sign();
      expect('_', "unit subscript");
      e.n = parse_int();
      detail::resolve_boundaries(e);
      return e;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    if (name.empty()) syntax("expected a generator name");

    TangleExpr e;
    bool has_sign = false;
    if (name == "alpha") {
      e.op = TangleOp::Alpha;
    } else if (name == "beta") {
      e.op = TangleOp::Beta;
    } else if (name == "m") {
      e.op = TangleOp::Mult;
      has_sign = true;
    } else if (name == "iota") {
      has_sign = true;
      e.op = TangleOp::InclPlus;  // refined after the sign
    } else if (name == "E") {
      e.op = TangleOp::JonesE;
    } else if (name == "tr") {
      e.op = TangleOp::Trace;
    } else if (name == "id") {
      e.op = TangleOp::Id;
      has_sign = true;
    } else {
      pos_ = start;
      syntax("unknown generator '" + name + "'");
    }
    if (has_sign) {
      e.plus = parse_sign();
      if (name == "iota") e.op = e.plus ? TangleOp::InclPlus : TangleOp::InclMinus;
    }
    expect('_', "generator subscript");
    e.n = parse_int();
    if ((e.op == TangleOp::Alpha || e.op == TangleOp::Beta || e.op == TangleOp::JonesE) && e.n < 1)
      fail(Errc::ArityMismatch, name + "_" + std::to_string(e.n) + " needs subscript >= 1");
    detail::resolve_boundaries(e);

    std::size_t arity = e.slots.size();
    if (arity == 0) {
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '(')
        fail(Errc::ArityMismatch, name + "_" + std::to_string(e.n) + " takes no arguments");
      return e;
    }
    expect('(', "argument list");
    e.children.push_back(parse_expr());
    while (eat(',')) e.children.push_back(parse_expr());
    expect(')', "argument list");
    if (e.children.size() != arity)
      fail(Errc::ArityMismatch, name + " expects " + std::to_string(arity) + " argument(s), got " +
                                    std::to_string(e.children.size()));
    return e;
  }

  /// Assigns input boundaries from their surrounding slots and checks that
  /// every composition is boundary-sound.
  void bind_inputs(TangleExpr& e, std::optional<Boundary> expected, std::map<int, Boundary>& slots) {
    if (e.op == TangleOp::Input) {
      if (!expected)
        fail(Errc::SyntaxError, "cannot infer the boundary of a bare input $" + std::to_string(e.slot));
      auto [it, inserted] = slots.emplace(e.slot, *expected);
      if (!inserted && !(it->second == *expected)) {
        Errc code = (it->second.plus != expected->plus) ? Errc::ShadingMismatch : Errc::ArityMismatch;
        fail(code, "$" + std::to_string(e.slot) + " is used with boundaries " + it->second.str() +
                       " and " + expected->str());
      }
      e.out = *expected;
      return;
    }
    if (expected && !(e.out == *expected)) {
      Errc code = (e.out.plus != expected->plus) ? Errc::ShadingMismatch : Errc::ArityMismatch;
      fail(code, "expression of boundary " + e.out.str() + " composed into a slot of boundary " +
                     expected->str());
    }
    for (std::size_t i = 0; i < e.children.size(); ++i) bind_inputs(e.children[i], e.slots[i], slots);
  }

  std::string text_;
  std::size_t pos_ = 0;
};

inline TangleExpr parse_tangle(const std::string& text) { return TangleParser(text).parse(); }

/// Evaluates a tangle expression bottom-up on the graph planar algebra.
/// Inputs are matched against the expression's slot boundaries.
inline LoopElement evaluate(const TangleExpr& e, const GraphContext& ctx,
                            const std::vector<LoopElement>& inputs) {
  LoopElement r = [&]() -> LoopElement {
    switch (e.op) {
      case TangleOp::Input: {
        if (e.slot > static_cast<int>(inputs.size()))
          fail(Errc::SlotUnbound, "no input bound to $" + std::to_string(e.slot));
        const LoopElement& x = inputs[e.slot - 1];
        require(&x.ctx() == &ctx, Errc::AmbientMismatch, "input lives on a different graph");
        require(x.level() == e.out.n && x.kind() == boundary_kind(e.out), Errc::AmbientMismatch,
                "input $" + std::to_string(e.slot) + " does not match boundary " + e.out.str());
        return x;
      }
      case TangleOp::Unit:
        return unit_element(ctx, e.n, e.plus ? LoopKind::GPlus : LoopKind::GMinus);
      case TangleOp::Id:
        return evaluate(e.children[0], ctx, inputs);
      case TangleOp::Mult:
        return multiply(evaluate(e.children[0], ctx, inputs), evaluate(e.children[1], ctx, inputs));
      case TangleOp::InclPlus:
        return gpa_iota_plus(evaluate(e.children[0], ctx, inputs));
      case TangleOp::InclMinus:
        return gpa_iota_minus(evaluate(e.children[0], ctx, inputs));
      case TangleOp::Alpha:
        return gpa_alpha(evaluate(e.children[0], ctx, inputs));
      case TangleOp::Beta:
        return gpa_beta(evaluate(e.children[0], ctx, inputs));
      case TangleOp::JonesE:
        return gpa_jones(ctx, e.n);
      case TangleOp::Trace:
        return gpa_trace(evaluate(e.children[0], ctx, inputs)).raw;
    }
    fail(Errc::InvalidInput, "unreachable tangle op");
  }();
  require(r.level() == e.out.n && r.kind() == boundary_kind(e.out), Errc::AmbientMismatch,
          "evaluation produced an element off the expression's boundary");
  return r;
}

}  // namespace pf
