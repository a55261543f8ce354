#pragma once

#include <compare>
#include <cstddef>
#include <map>
#include <tuple>
#include <vector>

#include "pf/common.hpp"
#include "pf/spectral.hpp"

namespace pf {

/// Which loop algebra an element lives in: G_{n,+}, G_{n,-} or B_n on the
/// augmented graph.
enum class LoopKind { GPlus, GMinus, B };

inline const char* loop_kind_name(LoopKind k) {
  switch (k) {
    case LoopKind::GPlus: return "G+";
    case LoopKind::GMinus: return "G-";
    case LoopKind::B: return "B";
  }
  return "?";
}

/// One basis loop [L (R)*], stored as the two half-paths of edge ids.
///
/// G-halves have length n and start at `base` (an even vertex for G+, odd for
/// G-). B-halves have length n + 1 and start at the star vertex, so their
/// first id is a star edge and `base` is -1. Traversal direction of each edge
/// is implied by its position.
struct LoopWord {
  int base = -1;
  std::vector<int> left, right;

  friend auto operator<=>(const LoopWord& a, const LoopWord& b) {
    return std::tie(a.base, a.left, a.right) <=> std::tie(b.base, b.left, b.right);
  }
  friend bool operator==(const LoopWord& a, const LoopWord& b) = default;
};

namespace detail {

/// Is step i of a half-path traversed even -> odd?
inline bool step_forward(LoopKind kind, int i) {
  switch (kind) {
    case LoopKind::GPlus: return i % 2 == 0;
    case LoopKind::GMinus: return i % 2 == 1;
    case LoopKind::B: return i % 2 == 1;  // step 0 is the star edge
  }
  return false;
}

}  // namespace detail

/// Vertex reached after the first `steps` edges of a half-path. Returns the
/// vertex index and whether it is even. For B-halves, steps >= 1.
inline std::pair<int, bool> half_vertex(const GraphContext& ctx, LoopKind kind, const LoopWord& w,
                                        std::size_t steps) {
  if (steps == 0) {
    if (kind == LoopKind::B) fail(Errc::InvalidInput, "B half-path starts at the star vertex");
    return {w.base, kind == LoopKind::GPlus};
  }
  const auto& g = ctx.graph();
  int i = static_cast<int>(steps) - 1;
  int id = w.left[i];
  if (kind == LoopKind::B && i == 0) return {ctx.ag.star_target(id), true};
  if (detail::step_forward(kind, i)) return {g.edge_target(id), false};
  return {g.edge_source(id), true};
}

/// Endpoint (the loop's middle vertex) of a half-path given explicitly.
inline std::pair<int, bool> path_endpoint(const GraphContext& ctx, LoopKind kind, int base,
                                          const std::vector<int>& half) {
  if (half.empty()) return {base, kind == LoopKind::GPlus};
  const auto& g = ctx.graph();
  int i = static_cast<int>(half.size()) - 1;
  int id = half.back();
  if (kind == LoopKind::B && i == 0) return {ctx.ag.star_target(id), true};
  if (detail::step_forward(kind, i)) return {g.edge_target(id), false};
  return {g.edge_source(id), true};
}

/// Checks the adjacency constraints of a single half-path.
inline bool half_path_valid(const GraphContext& ctx, LoopKind kind, int base,
                            const std::vector<int>& half, std::size_t expect_len) {
  if (half.size() != expect_len) return false;
  const auto& g = ctx.graph();
  int at = base;
  bool at_even = (kind == LoopKind::GPlus);
  for (std::size_t i = 0; i < half.size(); ++i) {
    int id = half[i];
    if (kind == LoopKind::B && i == 0) {
      if (!ctx.ag.is_star_edge(id)) return false;
      at = ctx.ag.star_target(id);
      at_even = true;
      continue;
    }
    if (id < 0 || id >= g.num_edges()) return false;
    if (detail::step_forward(kind, static_cast<int>(i))) {
      if (!at_even || g.edge_source(id) != at) return false;
      at = g.edge_target(id);
      at_even = false;
    } else {
      if (at_even || g.edge_target(id) != at) return false;
      at = g.edge_source(id);
      at_even = true;
    }
  }
  return true;
}

/// Full validity check of a loop word at a given level.
inline bool loop_word_valid(const GraphContext& ctx, LoopKind kind, int level, const LoopWord& w) {
  std::size_t len = (kind == LoopKind::B) ? level + 1 : level;
  if (kind == LoopKind::B) {
    if (w.base != -1) return false;
  } else {
    int count = (kind == LoopKind::GPlus) ? ctx.graph().num_even() : ctx.graph().num_odd();
    if (w.base < 0 || w.base >= count) return false;
  }
  if (!half_path_valid(ctx, kind, w.base, w.left, len)) return false;
  if (!half_path_valid(ctx, kind, w.base, w.right, len)) return false;
  if (len == 0) return true;
  return path_endpoint(ctx, kind, w.base, w.left) == path_endpoint(ctx, kind, w.base, w.right);
}

/// A sparse linear combination of loop words with a fixed ambient signature
/// (graph, level, kind). Immutable in spirit: operations return new values.
class LoopElement {
 public:
  LoopElement(const GraphContext& ctx, int level, LoopKind kind)
      : ctx_(&ctx), level_(level), kind_(kind) {}

  const GraphContext& ctx() const { return *ctx_; }
  int level() const { return level_; }
  LoopKind kind() const { return kind_; }
  const std::map<LoopWord, Complex>& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }

  /// Number of inclusion steps applied to produce this element (mixed-level
  /// products record how far the lower factor was promoted).
  int promotion_depth() const { return promotion_depth_; }
  void set_promotion_depth(int d) { promotion_depth_ = d; }

  void add_term(const LoopWord& w, Complex c) {
    if (c == Complex(0)) return;
    auto [it, inserted] = terms_.emplace(w, c);
    if (!inserted) {
      it->second += c;
      if (it->second == Complex(0)) terms_.erase(it);
    }
  }

  Complex coeff(const LoopWord& w) const {
    auto it = terms_.find(w);
    return it == terms_.end() ? Complex(0) : it->second;
  }

  LoopElement& operator+=(const LoopElement& o) {
    check_same_ambient(o);
    for (const auto& [w, c] : o.terms_) add_term(w, c);
    return *this;
  }
  LoopElement& operator-=(const LoopElement& o) {
    check_same_ambient(o);
    for (const auto& [w, c] : o.terms_) add_term(w, -c);
    return *this;
  }
  LoopElement& operator*=(Complex s) {
    if (s == Complex(0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [w, c] : terms_) c *= s;
    return *this;
  }

  friend LoopElement operator+(LoopElement a, const LoopElement& b) { return a += b; }
  friend LoopElement operator-(LoopElement a, const LoopElement& b) { return a -= b; }
  friend LoopElement operator*(Complex s, LoopElement a) { return a *= s; }
  friend LoopElement operator*(LoopElement a, Complex s) { return a *= s; }

  /// Antilinear involution: reverse every loop and conjugate coefficients.
  LoopElement star() const {
    LoopElement r(*ctx_, level_, kind_);
    for (const auto& [w, c] : terms_) r.add_term(LoopWord{w.base, w.right, w.left}, std::conj(c));
    return r;
  }

  double max_abs() const {
    double m = 0;
    for (const auto& [w, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Entrywise max distance in the canonical loop basis.
  double distance(const LoopElement& o) const {
    check_same_ambient(o);
    double m = 0;
    auto it = terms_.begin();
    auto jt = o.terms_.begin();
    while (it != terms_.end() || jt != o.terms_.end()) {
      if (jt == o.terms_.end() || (it != terms_.end() && it->first < jt->first)) {
        m = std::max(m, std::abs(it->second));
        ++it;
      } else if (it == terms_.end() || jt->first < it->first) {
        m = std::max(m, std::abs(jt->second));
        ++jt;
      } else {
        m = std::max(m, std::abs(it->second - jt->second));
        ++it;
        ++jt;
      }
    }
    return m;
  }

  /// Drop terms with |coefficient| <= eps (report hygiene, not arithmetic).
  LoopElement pruned(double eps) const {
    LoopElement r(*ctx_, level_, kind_);
    for (const auto& [w, c] : terms_)
      if (std::abs(c) > eps) r.add_term(w, c);
    return r;
  }

  void check_same_ambient(const LoopElement& o) const {
    require(ctx_ == o.ctx_ && level_ == o.level_ && kind_ == o.kind_, Errc::AmbientMismatch,
            "elements live in different loop algebras");
  }

 private:
  const GraphContext* ctx_;
  int level_;
  LoopKind kind_;
  int promotion_depth_ = 0;
  std::map<LoopWord, Complex> terms_;
};

namespace detail {

/// All half-paths of the given length from one base vertex, lexicographic in
/// edge ids. For B, base is ignored and paths start with each star edge.
inline void enumerate_halves(const GraphContext& ctx, LoopKind kind, int base, std::size_t len,
                             std::vector<std::vector<int>>& out) {
  const auto& g = ctx.graph();
  std::vector<int> cur;
  cur.reserve(len);
  auto rec = [&](auto&& self, int at, bool at_even, std::size_t i) -> void {
    if (i == len) {
      out.push_back(cur);
      return;
    }
    if (kind == LoopKind::B && i == 0) {
      for (int v = 0; v < g.num_even(); ++v)
        for (int id : ctx.ag.star_edges_at(v)) {
          cur.push_back(id);
          self(self, v, true, i + 1);
          cur.pop_back();
        }
      return;
    }
    if (step_forward(kind, static_cast<int>(i))) {
      for (int id : g.edges_at_even(at)) {
        cur.push_back(id);
        self(self, g.edge_target(id), false, i + 1);
        cur.pop_back();
      }
    } else {
      for (int id : g.edges_at_odd(at)) {
        cur.push_back(id);
        self(self, g.edge_source(id), true, i + 1);
        cur.pop_back();
      }
    }
  };
  rec(rec, base, kind == LoopKind::GPlus, 0);
}

}  // namespace detail

/// All half-paths of an algebra level, grouped per base vertex (one group for
/// kind B). Order inside a group is lexicographic in edge ids.
inline std::vector<std::vector<std::vector<int>>> half_paths(const GraphContext& ctx, LoopKind kind,
                                                             int level) {
  std::vector<std::vector<std::vector<int>>> groups;
  if (kind == LoopKind::B) {
    groups.resize(1);
    detail::enumerate_halves(ctx, kind, -1, level + 1, groups[0]);
  } else {
    int nbases = (kind == LoopKind::GPlus) ? ctx.graph().num_even() : ctx.graph().num_odd();
    groups.resize(nbases);
    for (int b = 0; b < nbases; ++b) detail::enumerate_halves(ctx, kind, b, level, groups[b]);
  }
  return groups;
}

/// Ordered loop basis of G_{n,+-}. For n = 0 these are the vertices.
inline std::vector<LoopWord> loop_basis(const GraphContext& ctx, int n, LoopKind kind,
                                        std::size_t cap = 1000000) {
  require(n >= 0, Errc::InvalidInput, "level must be nonnegative");
  require(kind != LoopKind::B, Errc::InvalidInput, "use bn_basis for the B tower");
  std::vector<LoopWord> basis;
  auto groups = half_paths(ctx, kind, n);
  for (int b = 0; b < static_cast<int>(groups.size()); ++b) {
    // Bucket halves by endpoint so only closing pairs are formed.
    std::map<int, std::vector<const std::vector<int>*>> bucket;
    for (const auto& h : groups[b]) bucket[path_endpoint(ctx, kind, b, h).first].push_back(&h);
    for (const auto& l : groups[b]) {
      int end = path_endpoint(ctx, kind, b, l).first;
      for (const auto* r : bucket[end]) {
        require(basis.size() < cap, Errc::BasisTooLarge,
                "loop basis exceeds cap of " + std::to_string(cap) + " words");
        basis.push_back(LoopWord{b, l, *r});
      }
    }
  }
  return basis;
}

/// Ordered loop basis of B_n on the augmented graph.
inline std::vector<LoopWord> bn_basis(const GraphContext& ctx, int n, std::size_t cap = 1000000) {
  require(n >= 0, Errc::InvalidInput, "level must be nonnegative");
  std::vector<LoopWord> basis;
  auto groups = half_paths(ctx, LoopKind::B, n);
  std::map<int, std::vector<const std::vector<int>*>> bucket;
  for (const auto& h : groups[0]) bucket[path_endpoint(ctx, LoopKind::B, -1, h).first].push_back(&h);
  for (const auto& l : groups[0]) {
    int end = path_endpoint(ctx, LoopKind::B, -1, l).first;
    for (const auto* r : bucket[end]) {
      require(basis.size() < cap, Errc::BasisTooLarge,
              "loop basis exceeds cap of " + std::to_string(cap) + " words");
      basis.push_back(LoopWord{-1, l, *r});
    }
  }
  return basis;
}

inline LoopElement element_from_word(const GraphContext& ctx, int level, LoopKind kind,
                                     const LoopWord& w, Complex c = Complex(1)) {
  require(loop_word_valid(ctx, kind, level, w), Errc::InvalidInput,
          "loop word violates the adjacency constraints of its level");
  LoopElement e(ctx, level, kind);
  e.add_term(w, c);
  return e;
}

/// Identity of the algebra: sum of [p p*] over all half-paths p.
inline LoopElement unit_element(const GraphContext& ctx, int level, LoopKind kind) {
  LoopElement e(ctx, level, kind);
  auto groups = half_paths(ctx, kind, level);
  for (int b = 0; b < static_cast<int>(groups.size()); ++b) {
    int base = (kind == LoopKind::B) ? -1 : b;
    for (const auto& h : groups[b]) e.add_term(LoopWord{base, h, h}, Complex(1));
  }
  return e;
}

/// Inclusion step iota: B_n -> B_{n+1}, appending the sum over admissible
/// edges at the middle vertex to both halves. Injective, unital, *-preserving.
inline LoopElement include_step(const LoopElement& x) {
  require(x.kind() == LoopKind::B, Errc::AmbientMismatch, "include_step acts on the B tower");
  const auto& ctx = x.ctx();
  const auto& g = ctx.graph();
  LoopElement r(ctx, x.level() + 1, LoopKind::B);
  for (const auto& [w, c] : x.terms()) {
    auto [v, is_even] = path_endpoint(ctx, LoopKind::B, w.base, w.left);
    const auto& ids = is_even ? g.edges_at_even(v) : g.edges_at_odd(v);
    for (int id : ids) {
      LoopWord nw = w;
      nw.left.push_back(id);
      nw.right.push_back(id);
      r.add_term(nw, c);
    }
  }
  r.set_promotion_depth(x.promotion_depth() + 1);
  return r;
}

/// Half-path concatenation product with Kronecker match of the inner halves.
/// Mixed-level B elements are promoted with include_step first.
inline LoopElement multiply(const LoopElement& a, const LoopElement& b) {
  require(&a.ctx() == &b.ctx() && a.kind() == b.kind(), Errc::AmbientMismatch,
          "product factors live in different loop algebras");
  if (a.level() != b.level()) {
    require(a.kind() == LoopKind::B, Errc::AmbientMismatch,
            "only B-tower elements may mix levels");
    if (a.level() < b.level()) {
      LoopElement ap = a;
      while (ap.level() < b.level()) ap = include_step(ap);
      return multiply(ap, b);
    }
    LoopElement bp = b;
    while (bp.level() < a.level()) bp = include_step(bp);
    return multiply(a, bp);
  }
  LoopElement r(a.ctx(), a.level(), a.kind());
  r.set_promotion_depth(std::max(a.promotion_depth(), b.promotion_depth()));
  // Index b's words by (base, left half) for the Kronecker join.
  std::map<std::pair<int, std::vector<int>>, std::vector<const std::pair<const LoopWord, Complex>*>> by_left;
  for (const auto& term : b.terms()) by_left[{term.first.base, term.first.left}].push_back(&term);
  for (const auto& [wa, ca] : a.terms()) {
    auto it = by_left.find({wa.base, wa.right});
    if (it == by_left.end()) continue;
    for (const auto* tb : it->second) r.add_term(LoopWord{wa.base, wa.left, tb->first.right}, ca * tb->second);
  }
  return r;
}

inline LoopElement operator*(const LoopElement& a, const LoopElement& b) { return multiply(a, b); }

}  // namespace pf
