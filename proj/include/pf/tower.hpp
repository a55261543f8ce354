#pragma once

#include <cmath>
#include <vector>

#include "pf/common.hpp"
#include "pf/loop.hpp"

namespace pf {

/// Normalized trace on B_n: tr([l1 (l2)*]) = delta_{l1,l2} lambda^n(t(l1)).
inline Complex trace_n(const LoopElement& x) {
  require(x.kind() == LoopKind::B, Errc::AmbientMismatch, "trace_n acts on the B tower");
  const auto& s = x.ctx().spectral;
  Complex acc(0);
  for (const auto& [w, c] : x.terms()) {
    if (w.left != w.right) continue;
    auto [v, is_even] = path_endpoint(x.ctx(), LoopKind::B, w.base, w.left);
    acc += c * s.lambda_level(x.level(), v);
  }
  return acc;
}

/// The tr-preserving conditional expectation B_n -> B_{n-1}: drops the middle
/// edge pair with a Kronecker match and the Perron-Frobenius weight of the
/// matched edge (d^-2 lambda0(s)/lambda1(t) for n even, lambda1(t)/lambda0(s)
/// for n odd).
inline LoopElement cond_exp_down(const LoopElement& x) {
  require(x.kind() == LoopKind::B, Errc::AmbientMismatch, "cond_exp_down acts on the B tower");
  require(x.level() >= 1, Errc::InvalidInput, "cond_exp_down needs level >= 1");
  const auto& ctx = x.ctx();
  const auto& s = ctx.spectral;
  const auto& g = ctx.graph();
  const int n = x.level();
  LoopElement r(ctx, n - 1, LoopKind::B);
  for (const auto& [w, c] : x.terms()) {
    int e = w.left.back(), f = w.right.back();
    if (e != f) continue;
    double factor;
    if (n % 2 == 0) {
      factor = s.lambda0[g.edge_source(e)] / (s.d_squared * s.lambda1[g.edge_target(e)]);
    } else {
      factor = s.lambda1[g.edge_target(e)] / s.lambda0[g.edge_source(e)];
    }
    LoopWord nw{w.base, {w.left.begin(), w.left.end() - 1}, {w.right.begin(), w.right.end() - 1}};
    r.add_term(nw, c * factor);
  }
  return r;
}

/// The Jones element F_n in B_{n+1} (n >= 1); e_n = d^-1 F_n is the Jones
/// projection implementing E_{B_{n-1}}.
inline LoopElement jones_f(const GraphContext& ctx, int n) {
  require(n >= 1, Errc::InvalidInput, "jones_f needs n >= 1");
  const auto& s = ctx.spectral;
  const auto& g = ctx.graph();
  LoopElement r(ctx, n + 1, LoopKind::B);
  auto stems = half_paths(ctx, LoopKind::B, n - 1);  // star-rooted paths of length n
  for (const auto& stem : stems[0]) {
    auto [v, is_even] = path_endpoint(ctx, LoopKind::B, -1, stem);
    if (n % 2 == 1) {
      for (int e : g.edges_at_even(v))
        for (int f : g.edges_at_even(v)) {
          double coeff =
              s.d * std::sqrt(s.lambda1[g.edge_target(e)] * s.lambda1[g.edge_target(f)]) /
              s.lambda0[v];
          LoopWord w{-1, stem, stem};
          w.left.insert(w.left.end(), {e, e});
          w.right.insert(w.right.end(), {f, f});
          r.add_term(w, coeff);
        }
    } else {
      for (int e : g.edges_at_odd(v))
        for (int f : g.edges_at_odd(v)) {
          double coeff =
              std::sqrt(s.lambda0[g.edge_source(e)] * s.lambda0[g.edge_source(f)]) /
              (s.d * s.lambda1[v]);
          LoopWord w{-1, stem, stem};
          w.left.insert(w.left.end(), {e, e});
          w.right.insert(w.right.end(), {f, f});
          r.add_term(w, coeff);
        }
    }
  }
  return r;
}

inline LoopElement jones_e(const GraphContext& ctx, int n) {
  return (Complex(1) / ctx.spectral.d) * jones_f(ctx, n);
}

/// Pimsner-Popa basis S = S1 + S2 for B_1 over B_0. S1 runs over the loops of
/// G_{1,+} with the eta-sum over all star edges at the base vertex; S2 runs
/// over edge pairs with a common target and distinct sources, using the
/// distinguished (lowest-id) star edge at each even vertex.
inline std::vector<LoopElement> pp_basis(const GraphContext& ctx) {
  const auto& s = ctx.spectral;
  const auto& g = ctx.graph();
  std::vector<LoopElement> out;
  auto scale = [&](int e2) {
    return std::sqrt(s.lambda0[g.edge_source(e2)] / s.lambda1[g.edge_target(e2)]);
  };
  for (const auto& w : loop_basis(ctx, 1, LoopKind::GPlus)) {
    int e1 = w.left[0], e2 = w.right[0];
    LoopElement el(ctx, 1, LoopKind::B);
    for (int eta : ctx.ag.star_edges_at(w.base)) el.add_term(LoopWord{-1, {eta, e1}, {eta, e2}}, scale(e2));
    out.push_back(el);
  }
  for (int e1 = 0; e1 < g.num_edges(); ++e1)
    for (int e2 = 0; e2 < g.num_edges(); ++e2) {
      if (g.edge_target(e1) != g.edge_target(e2)) continue;
      if (g.edge_source(e1) == g.edge_source(e2)) continue;
      int eta1 = ctx.ag.distinguished_star_edge(g.edge_source(e1));
      int eta2 = ctx.ag.distinguished_star_edge(g.edge_source(e2));
      LoopElement el(ctx, 1, LoopKind::B);
      el.add_term(LoopWord{-1, {eta1, e1}, {eta2, e2}}, scale(e2));
      out.push_back(el);
    }
  return out;
}

// ---------------------------------------------------------------------------
// Relative commutants of the loop tower and the isomorphisms phi_{n,+-}.
// ---------------------------------------------------------------------------

/// The element of B_0' cap B_n spanned by one G_{n,+} loop: the eta-wrapped
/// sum. This is phi_{n,+}^{-1} on a basis word.
inline LoopElement commutant_lift_plus(const GraphContext& ctx, int n, const LoopWord& w) {
  LoopElement r(ctx, n, LoopKind::B);
  for (int eta : ctx.ag.star_edges_at(w.base)) {
    LoopWord bw{-1, {eta}, {eta}};
    bw.left.insert(bw.left.end(), w.left.begin(), w.left.end());
    bw.right.insert(bw.right.end(), w.right.begin(), w.right.end());
    r.add_term(bw, Complex(1));
  }
  return r;
}

/// phi_{n,+}^{-1}: G_{n,+} -> B_0' cap B_n, linear extension of the lift.
inline LoopElement phi_plus_inverse(const LoopElement& x) {
  require(x.kind() == LoopKind::GPlus, Errc::AmbientMismatch, "phi_plus_inverse takes G_{n,+}");
  LoopElement r(x.ctx(), x.level(), LoopKind::B);
  for (const auto& [w, c] : x.terms()) r += c * commutant_lift_plus(x.ctx(), x.level(), w);
  return r;
}

/// phi_{n,+}: B_0' cap B_n -> G_{n,+}. When certify is set, membership in the
/// span of the commutant basis is verified to tolerance.
inline LoopElement phi_plus(const LoopElement& x, bool certify = true, double tol = kDefaultTol) {
  require(x.kind() == LoopKind::B, Errc::AmbientMismatch, "phi_plus takes a B-tower element");
  const auto& ctx = x.ctx();
  LoopElement r(ctx, x.level(), LoopKind::GPlus);
  for (const auto& [w, c] : x.terms()) {
    int eta = w.left[0];
    if (w.right[0] != eta) continue;
    int v = ctx.ag.star_target(eta);
    if (eta != ctx.ag.distinguished_star_edge(v)) continue;
    r.add_term(LoopWord{v, {w.left.begin() + 1, w.left.end()}, {w.right.begin() + 1, w.right.end()}},
               c);
  }
  if (certify) {
    LoopElement back = phi_plus_inverse(r);
    double resid = back.distance(x);
    double scale = std::max(1.0, x.max_abs());
    require(resid <= tol * scale, Errc::NotInCommutant,
            "element is not in B_0' cap B_n (residual " + std::to_string(resid) + ")");
  }
  return r;
}

/// The element of B_1' cap B_{m+1} spanned by one G_{m,-} loop: wrap with all
/// (eta, epsilon) pairs feeding the odd base vertex. phi_{m,-}^{-1} on a word.
inline LoopElement commutant_lift_minus(const GraphContext& ctx, int m, const LoopWord& w) {
  const auto& g = ctx.graph();
  LoopElement r(ctx, m + 1, LoopKind::B);
  for (int e : g.edges_at_odd(w.base)) {
    for (int eta : ctx.ag.star_edges_at(g.edge_source(e))) {
      LoopWord bw{-1, {eta, e}, {eta, e}};
      bw.left.insert(bw.left.end(), w.left.begin(), w.left.end());
      bw.right.insert(bw.right.end(), w.right.begin(), w.right.end());
      r.add_term(bw, Complex(1));
    }
  }
  return r;
}

/// phi_{m,-}^{-1}: G_{m,-} -> B_1' cap B_{m+1}.
inline LoopElement phi_minus_inverse(const LoopElement& x) {
  require(x.kind() == LoopKind::GMinus, Errc::AmbientMismatch, "phi_minus_inverse takes G_{n,-}");
  LoopElement r(x.ctx(), x.level() + 1, LoopKind::B);
  for (const auto& [w, c] : x.terms()) r += c * commutant_lift_minus(x.ctx(), x.level(), w);
  return r;
}

/// phi_{m,-}: B_1' cap B_{m+1} -> G_{m,-}.
inline LoopElement phi_minus(const LoopElement& x, bool certify = true, double tol = kDefaultTol) {
  require(x.kind() == LoopKind::B, Errc::AmbientMismatch, "phi_minus takes a B-tower element");
  require(x.level() >= 1, Errc::InvalidInput, "phi_minus needs level >= 1");
  const auto& ctx = x.ctx();
  const auto& g = ctx.graph();
  LoopElement r(ctx, x.level() - 1, LoopKind::GMinus);
  for (const auto& [w, c] : x.terms()) {
    if (w.left[0] != w.right[0] || w.left[1] != w.right[1]) continue;
    int eta = w.left[0], e = w.left[1];
    int base = g.edge_target(e);
    if (e != g.edges_at_odd(base).front()) continue;
    if (eta != ctx.ag.distinguished_star_edge(g.edge_source(e))) continue;
    r.add_term(LoopWord{base, {w.left.begin() + 2, w.left.end()}, {w.right.begin() + 2, w.right.end()}},
               c);
  }
  if (certify) {
    LoopElement back = phi_minus_inverse(r);
    double resid = back.distance(x);
    double scale = std::max(1.0, x.max_abs());
    require(resid <= tol * scale, Errc::NotInCommutant,
            "element is not in B_1' cap B_{n+1} (residual " + std::to_string(resid) + ")");
  }
  return r;
}

/// Basis of H_{n,+} = B_0' cap B_n, one lift per G_{n,+} loop.
inline std::vector<LoopElement> h_plus_basis(const GraphContext& ctx, int n) {
  std::vector<LoopElement> out;
  for (const auto& w : loop_basis(ctx, n, LoopKind::GPlus))
    out.push_back(commutant_lift_plus(ctx, n, w));
  return out;
}

/// Basis of H_{n,-} = B_1' cap B_{n+1}, one lift per G_{n,-} loop.
inline std::vector<LoopElement> h_minus_basis(const GraphContext& ctx, int n) {
  std::vector<LoopElement> out;
  for (const auto& w : loop_basis(ctx, n, LoopKind::GMinus))
    out.push_back(commutant_lift_minus(ctx, n, w));
  return out;
}

/// Closed-form tr-preserving conditional expectation B_0' cap B_n -> B_1' cap
/// B_n: strip the outermost edge pair with factor d^-2 lambda0(s)/lambda1(t).
inline LoopElement cond_exp_b1_commutant(const LoopElement& x, double tol = kDefaultTol) {
  require(x.level() >= 1, Errc::InvalidInput, "needs level >= 1");
  const auto& ctx = x.ctx();
  const auto& s = ctx.spectral;
  const auto& g = ctx.graph();
  LoopElement gx = phi_plus(x, /*certify=*/true, tol);  // throws NotInCommutant if unsuitable
  LoopElement r(ctx, x.level(), LoopKind::B);
  for (const auto& [w, c] : gx.terms()) {
    int x1 = w.left[0], x2 = w.right[0];
    if (x1 != x2) continue;
    double factor = s.lambda0[g.edge_source(x1)] / (s.d_squared * s.lambda1[g.edge_target(x1)]);
    LoopWord inner{g.edge_target(x1), {w.left.begin() + 1, w.left.end()},
                   {w.right.begin() + 1, w.right.end()}};
    r += (c * factor) * commutant_lift_minus(ctx, x.level() - 1, inner);
  }
  return r;
}

/// Averaging route for the same conditional expectation: d^-2 sum_s s x s*
/// over the Pimsner-Popa basis. Independent of the closed form above.
inline LoopElement commutant_average(const GraphContext& ctx, const LoopElement& x) {
  require(x.kind() == LoopKind::B, Errc::AmbientMismatch, "commutant_average takes a B element");
  auto basis = pp_basis(ctx);
  LoopElement acc(ctx, x.level(), LoopKind::B);
  for (const auto& s : basis) acc += s * x * s.star();
  return (Complex(1) / ctx.spectral.d_squared) * acc;
}

// ---------------------------------------------------------------------------
// Span utilities over loop coefficients.
// ---------------------------------------------------------------------------

/// l2 inner product of the coefficient maps.
inline Complex loop_l2_ip(const LoopElement& a, const LoopElement& b) {
  Complex acc(0);
  auto it = a.terms().begin();
  auto jt = b.terms().begin();
  while (it != a.terms().end() && jt != b.terms().end()) {
    if (it->first < jt->first) {
      ++it;
    } else if (jt->first < it->first) {
      ++jt;
    } else {
      acc += std::conj(it->second) * jt->second;
      ++it;
      ++jt;
    }
  }
  return acc;
}

inline double loop_l2_norm(const LoopElement& a) {
  return std::sqrt(std::max(0.0, loop_l2_ip(a, a).real()));
}

/// Rank of the span of the given elements, by incremental Gram-Schmidt on the
/// coefficient maps.
inline int loop_span_rank(const std::vector<LoopElement>& elems, double tol = 1e-8) {
  std::vector<LoopElement> onb;
  for (const auto& e : elems) {
    LoopElement r = e;
    for (const auto& b : onb) r -= loop_l2_ip(b, r) * b;
    for (const auto& b : onb) r -= loop_l2_ip(b, r) * b;
    double n = loop_l2_norm(r);
    if (n > tol * std::max(1.0, loop_l2_norm(e))) onb.push_back((Complex(1) / n) * r);
  }
  return static_cast<int>(onb.size());
}

/// Dimension of the unital algebra generated inside B_level by the given
/// elements (promoted as needed), via product closure with rank tracking.
inline int loop_algebra_dimension(const GraphContext& ctx, int level,
                                  const std::vector<LoopElement>& gens, double tol = 1e-8) {
  std::vector<LoopElement> basis;
  auto try_add = [&](const LoopElement& e) {
    LoopElement r = e;
    for (const auto& b : basis) r -= loop_l2_ip(b, r) * b;
    for (const auto& b : basis) r -= loop_l2_ip(b, r) * b;
    double n = loop_l2_norm(r);
    if (n <= tol * std::max(1.0, loop_l2_norm(e))) return false;
    basis.push_back((Complex(1) / n) * r);
    return true;
  };
  try_add(unit_element(ctx, level, LoopKind::B));
  for (const auto& g : gens) {
    LoopElement p = g;
    while (p.level() < level) p = include_step(p);
    require(p.level() == level && p.kind() == LoopKind::B, Errc::AmbientMismatch,
            "generator does not fit the requested level");
    try_add(p);
    try_add(p.star());
  }
  std::size_t processed = 0;
  while (processed < basis.size()) {
    std::size_t upto = basis.size();
    for (std::size_t i = 0; i < upto; ++i)
      for (std::size_t j = 0; j < upto; ++j) {
        if (i < processed && j < processed) continue;
        try_add(basis[i] * basis[j]);
      }
    processed = upto;
  }
  return static_cast<int>(basis.size());
}

}  // namespace pf
