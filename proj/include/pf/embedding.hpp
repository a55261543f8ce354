#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pf/commuting_square.hpp"
#include "pf/tangle.hpp"
#include "pf/tower.hpp"

namespace pf {

/// The trace-preserving isomorphism phi_k: A_{k,0} -> B_k, realized as a
/// linear map on an orthonormalized matrix basis with matched loop shadows.
/// Built by closing generator pairs under products; the generators are the
/// path matrix units of A_{1,0} (shadows: their B_1 loops) and the Jones
/// projections (shadows: d^-1 F_j).
class TowerIso {
 public:
  TowerIso(const GraphContext& ctx, int level, Matrix density)
      : ctx_(&ctx), level_(level), density_(std::move(density)) {}

  int level() const { return level_; }
  int dim() const { return static_cast<int>(xs_.size()); }

  /// Worst shadow mismatch seen on linearly dependent products; a residual of
  /// working-precision size certifies that the map extends linearly.
  double consistency() const { return consistency_; }

  void add_pair(const Matrix& x, const LoopElement& y, double tol = kRankTol) {
    Matrix rx = x;
    LoopElement ry = promoted(y);
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      Complex c = trace_ip(density_, xs_[i], rx);
      rx -= c * xs_[i];
      ry -= c * ys_[i];
    }
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      Complex c = trace_ip(density_, xs_[i], rx);
      rx -= c * xs_[i];
      ry -= c * ys_[i];
    }
    double n = trace_norm(density_, rx);
    if (n > tol) {
      xs_.push_back(rx / n);
      ys_.push_back((Complex(1) / n) * ry);
    } else {
      consistency_ = std::max(consistency_, ry.max_abs());
    }
  }

  /// Product closure until the span reaches the expected dimension.
  void close(int expected_dim) {
    std::size_t processed = 0;
    while (processed < xs_.size() && dim() < expected_dim) {
      std::size_t upto = xs_.size();
      for (std::size_t i = 0; i < upto && dim() < expected_dim; ++i)
        for (std::size_t j = 0; j < upto && dim() < expected_dim; ++j) {
          if (i < processed && j < processed) continue;
          add_pair(xs_[i] * xs_[j], ys_[i] * ys_[j]);
          add_pair(xs_[i].adjoint(), ys_[i].star());
        }
      processed = upto;
    }
    require(dim() == expected_dim, Errc::RankDeficient,
            "tower isomorphism closure reached dimension " + std::to_string(dim()) +
                ", expected " + std::to_string(expected_dim));
  }

  /// phi_k(x): expand x over the matrix basis and map the coordinates.
  LoopElement apply(const Matrix& x, double tol = 1e-7) const {
    LoopElement out(*ctx_, level_, LoopKind::B);
    Matrix r = x;
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      Complex c = trace_ip(density_, xs_[i], r);
      out += c * ys_[i];
      r -= c * xs_[i];
    }
    require(entry_norm(r) <= tol * std::max(1.0, entry_norm(x)), Errc::InvalidInput,
            "element is not in the span of the tower algebra");
    return out;
  }

  /// phi_k^{-1}(y): solve for the loop coordinates over the shadow basis.
  Matrix pull(const LoopElement& y, double tol = 1e-7) const {
    LoopElement yy = promoted(y);
    std::map<LoopWord, int> index;
    for (const auto& ye : ys_)
      for (const auto& [w, c] : ye.terms()) index.emplace(w, static_cast<int>(index.size()));
    for (const auto& [w, c] : yy.terms()) index.emplace(w, static_cast<int>(index.size()));
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(index.size(), ys_.size());
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(index.size());
    for (std::size_t j = 0; j < ys_.size(); ++j)
      for (const auto& [w, c] : ys_[j].terms()) a(index.at(w), j) = c;
    for (const auto& [w, c] : yy.terms()) b(index.at(w)) = c;
    Eigen::VectorXcd coef = a.colPivHouseholderQr().solve(b);
    require((a * coef - b).cwiseAbs().maxCoeff() <= tol * std::max(1.0, yy.max_abs()),
            Errc::InvalidInput, "loop element is not in the image of the tower isomorphism");
    Matrix out = Matrix::Zero(density_.rows(), density_.cols());
    for (std::size_t i = 0; i < xs_.size(); ++i) out += coef(i) * xs_[i];
    return out;
  }

  /// Max |tau(x_i) - tr_n(y_i)| over the basis pairs.
  double trace_residual() const {
    double worst = 0;
    for (std::size_t i = 0; i < xs_.size(); ++i)
      worst = std::max(worst, std::abs((density_ * xs_[i]).trace() - trace_n(ys_[i])));
    return worst;
  }

 private:
  LoopElement promoted(LoopElement y) const {
    while (y.level() < level_) y = include_step(y);
    y.check_same_ambient(LoopElement(*ctx_, level_, LoopKind::B));
    return y;
  }

  const GraphContext* ctx_;
  int level_;
  Matrix density_;
  std::vector<Matrix> xs_;
  std::vector<LoopElement> ys_;
  double consistency_ = 0.0;
};

/// Everything needed to evaluate psi_{n,+-} and the generator intertwinings:
/// the loop side of the K graph, the per-level tower isomorphisms (all

/// matrices in the top slice ambient) and the matrix-side Pimsner-Popa basis.
struct Embedding {
  std::shared_ptr<GraphContext> ctx;
  const Tower* tower = nullptr;
  int depth = 0;
  std::vector<TowerIso> phi;       // phi[k-1]: A_{k,0} -> B_k
  std::vector<Matrix> pp_matrices; // phi_1^{-1} of the loop PP basis
  double d = 0.0;

  const TowerIso& phi_at(int k) const {
    require(k >= 1 && k <= depth, Errc::DepthUnavailable,
            "tower isomorphism at level " + std::to_string(k) + " unavailable");
    return phi[k - 1];
  }

  /// A_{m,0} in the top ambient (A_{0,0} for m = 0).
  const RepresentedAlgebra& level_algebra(int m) const {
    const TowerSlice& top = tower->slice(depth);
    if (m == 0) return top.a00;
    require(m <= depth, Errc::DepthUnavailable, "A_{m,0} unavailable at m = " + std::to_string(m));
    return top.a_k0[m - 1];
  }

  LoopElement psi_plus(int n, const Matrix& x, double tol = 1e-7) const {
    return phi_plus(phi_at(n).apply(x, tol), true, tol);
  }
  LoopElement psi_minus(int n, const Matrix& x, double tol = 1e-7) const {
    return phi_minus(phi_at(n + 1).apply(x, tol), true, tol);
  }
};

/// Builds the embedding data on top of a verified square and its tower.
inline Embedding make_embedding(const CommutingSquareSpec& spec, const Tower& tower) {
  require(spec.verified(), Errc::InvalidInput, "embedding needs a verified commuting square");
  Embedding emb;
  emb.ctx = std::make_shared<GraphContext>(spec.k_graph);
  emb.tower = &tower;
  emb.depth = tower.depth_reached;
  emb.d = emb.ctx->d();

  const TowerSlice& top = tower.slice(emb.depth);

  // Generator pairs: path matrix units of A_{1,0} with their B_1 loops.
  std::vector<std::pair<Matrix, LoopElement>> unit_pairs;
  for (std::size_t w = 0; w < spec.k_path_units.blocks.size(); ++w) {
    const auto& fam = spec.k_path_units.blocks[w];
    std::vector<std::pair<std::pair<int, int>, int>> paths;  // ((v,k), i)
    for (const auto& [vk, ws] : fam.isometries)
      for (int i = 0; i < static_cast<int>(ws.size()); ++i) paths.push_back({vk, i});
    for (const auto& pa : paths)
      for (const auto& pb : paths) {
        auto [vka, ia] = pa;
        auto [vkb, ib] = pb;
        Matrix u = spec.k_path_units.unit(static_cast<int>(w), vka.first, ia, vka.second,
                                          vkb.first, ib, vkb.second);
        int eta_a = emb.ctx->ag.star_edges_at(vka.first)[ia];
        int eta_b = emb.ctx->ag.star_edges_at(vkb.first)[ib];
        int ea = spec.edge_ids[vka.first][w][vka.second];
        int eb = spec.edge_ids[vkb.first][w][vkb.second];
        LoopElement loop(*emb.ctx, 1, LoopKind::B);
        loop.add_term(LoopWord{-1, {eta_a, ea}, {eta_b, eb}}, Complex(1));
        unit_pairs.push_back({tower.push_to_top(1, u), loop});
      }
  }

  for (int k = 1; k <= emb.depth; ++k) {
    TowerIso iso(*emb.ctx, k, top.density);
    iso.add_pair(Matrix::Identity(top.ambient, top.ambient), unit_element(*emb.ctx, k, LoopKind::B));
    for (const auto& [m, l] : unit_pairs) iso.add_pair(m, l);
    for (int j = 1; j < k; ++j) iso.add_pair(top.jones[j - 1], jones_e(*emb.ctx, j));
    iso.close(top.a_k0[k - 1].dim());
    emb.phi.push_back(std::move(iso));
  }

  for (const auto& s : pp_basis(*emb.ctx)) emb.pp_matrices.push_back(emb.phi[0].pull(s));
  return emb;
}

/// psi_{n,+-} on a basis of Q_{n,+-}: the embedding matrix, its rank and the
/// homomorphism certificates.
struct EmbeddingData {
  int n = 0;
  bool plus = true;
  std::vector<Matrix> domain;        // basis of Q_{n,+-}
  std::vector<LoopElement> image;    // psi of the basis
  int rank = 0;
  bool injective = false;
  double hom_residual = 0.0;         // max over basis pairs
  double star_residual = 0.0;
  double unit_residual = 0.0;
  int dim_p = 0;                     // dim of the subfactor-side subspace
};

inline EmbeddingData psi(const Embedding& emb, int n, bool plus, double tol = 1e-7) {
  const TowerSlice& top = emb.tower->slice(emb.depth);
  EmbeddingData data;
  data.n = n;
  data.plus = plus;

  if (plus) {
    require(n >= 0 && n <= emb.depth, Errc::DepthUnavailable, "psi_{n,+} needs tower depth n");
    data.domain = relative_commutant(top.a00.basis, emb.level_algebra(std::max(n, 1)));
    if (n == 0) data.domain = relative_commutant(top.a00.basis, top.a00);
    data.dim_p = static_cast<int>(relative_commutant(top.a01.basis, n == 0 ? top.a00 : emb.level_algebra(n)).size());
    for (const auto& x : data.domain) data.image.push_back(emb.psi_plus(std::max(n, 1), x, tol));
  } else {
    require(n >= 0 && n + 1 <= emb.depth, Errc::DepthUnavailable,
            "psi_{n,-} needs tower depth n + 1");
    data.domain = relative_commutant(top.a10.basis, emb.level_algebra(n + 1));
    data.dim_p = static_cast<int>(relative_commutant(top.a11.basis, emb.level_algebra(n + 1)).size());
    for (const auto& x : data.domain) data.image.push_back(emb.psi_minus(n, x, tol));
  }

  data.rank = loop_span_rank(data.image);
  data.injective = data.rank == static_cast<int>(data.domain.size());
  require(data.injective, Errc::RankDeficient,
          "psi is not injective on Q at level " + std::to_string(n));

  auto psi_of = [&](const Matrix& x) {
    return plus ? emb.psi_plus(std::max(n, 1), x, tol) : emb.psi_minus(n, x, tol);
  };
  for (std::size_t i = 0; i < data.domain.size(); ++i) {
    data.star_residual = std::max(
        data.star_residual, psi_of(data.domain[i].adjoint()).distance(data.image[i].star()));
    for (std::size_t j = 0; j < data.domain.size(); ++j) {
      LoopElement lhs = psi_of(data.domain[i] * data.domain[j]);
      data.hom_residual = std::max(data.hom_residual, lhs.distance(data.image[i] * data.image[j]));
    }
  }
  int lvl = plus ? n : n;
  LoopKind kind = plus ? LoopKind::GPlus : LoopKind::GMinus;
  Matrix one = Matrix::Identity(top.ambient, top.ambient);
  data.unit_residual = psi_of(one).distance(unit_element(*emb.ctx, lvl, kind));
  return data;
}

/// Max intertwining residual of one generating tangle at level n over a basis
/// of Q_{n,+-}: || psi(Z1_g x) - Z2_g(psi x) ||.
inline double check_intertwining(const Embedding& emb, const std::string& gen, int n,
                                 double tol = 1e-7) {
  const TowerSlice& top = emb.tower->slice(emb.depth);
  double worst = 0;
  if (gen == "iota+") {
    require(n + 1 <= emb.depth, Errc::DepthUnavailable, "iota+ at n needs depth n+1");
    auto basis = relative_commutant(top.a00.basis, emb.level_algebra(std::max(n, 1)));
    for (const auto& x : basis)
      worst = std::max(worst, emb.psi_plus(n + 1, x, tol)
                                  .distance(gpa_iota_plus(emb.psi_plus(std::max(n, 1), x, tol))));
  } else if (gen == "iota-") {
    require(n + 2 <= emb.depth, Errc::DepthUnavailable, "iota- at n needs depth n+2");
    auto basis = relative_commutant(top.a10.basis, emb.level_algebra(n + 1));
    for (const auto& x : basis)
      worst = std::max(worst,
                       emb.psi_plus(n + 1, x, tol).distance(gpa_iota_minus(emb.psi_minus(n, x, tol))));
  } else if (gen == "alpha") {
    require(n >= 1 && n <= emb.depth, Errc::DepthUnavailable, "alpha at n needs depth n");
    auto basis = relative_commutant(top.a00.basis, emb.level_algebra(n));
    for (const auto& x : basis) {
      Matrix z1 = emb.d * conditional_expectation(x, emb.level_algebra(n - 1));
      LoopElement lhs = (n == 1) ? phi_plus(emb.phi_at(1).apply(z1, tol), true, tol)
                                 : emb.psi_plus(n - 1, z1, tol);
      if (n == 1) lhs = LoopElement(lhs);  // already G_{0,+}
      worst = std::max(worst, lhs.distance(gpa_alpha(emb.psi_plus(n, x, tol))));
    }
  } else if (gen == "beta") {
    require(n >= 1 && n <= emb.depth, Errc::DepthUnavailable, "beta at n needs depth n");
    auto basis = relative_commutant(top.a00.basis, emb.level_algebra(n));
    for (const auto& x : basis) {
      Matrix z1 = Matrix::Zero(top.ambient, top.ambient);
      for (const auto& s : emb.pp_matrices) z1 += s * x * s.adjoint();
      z1 /= emb.d;  // d * d^-2 sum s x s*
      worst = std::max(worst, emb.psi_minus(n - 1, z1, tol).distance(gpa_beta(emb.psi_plus(n, x, tol))));
    }
  } else if (gen == "E") {
    require(n >= 1 && n + 1 <= emb.depth, Errc::DepthUnavailable, "E at n needs depth n+1");
    Matrix z1 = emb.d * emb.tower->slice(emb.depth).jones[n - 1];
    worst = emb.psi_plus(n + 1, z1, tol).distance(gpa_jones(*emb.ctx, n));
  } else if (gen == "m") {
    // Certified by the homomorphism residual of psi itself.
    worst = psi(emb, n, true, tol).hom_residual;
  } else {
    fail(Errc::InvalidInput, "unknown generator '" + gen + "'");
  }
  return worst;
}

/// Aggregated embedding report at desk scale.
struct EmbedReport {
  bool precondition_ok = false;
  std::string precondition_msg;
  double index = 0.0;
  double d = 0.0;
  double d_graph = 0.0;
  int depth_requested = 0;
  int depth_reached = 0;
  double tol = 0.0;
  struct Level {
    int n;
    char parity;
    int dim_q;
    int dim_p;
    bool injective;
    double hom_residual;
  };
  std::vector<Level> levels;
  std::map<std::string, std::vector<std::pair<int, double>>> generators;  // gen -> (n, residual)
  // Open question data: dims of A'_{1,1} cap A_{n+1,0} vs A'_{1,0} cap A_{n+1,0}.
  std::vector<std::array<int, 3>> minus_parity_dims;
  bool all_pass = false;
  std::string verdict;
};

inline EmbedReport embed_report(const CommutingSquareSpec& spec, int depth,
                                std::size_t gns_cap = 64, double tol = 1e-8) {
  EmbedReport rep;
  rep.depth_requested = depth;
  rep.tol = tol;
  if (!spec.verified()) {
    rep.precondition_msg = "precondition failed: not a verified nondegenerate commuting square";
    rep.verdict = rep.precondition_msg;
    return rep;
  }
  rep.precondition_ok = true;
  rep.index = spec.index;

  Tower tower = vertical_tower(spec, depth, gns_cap);
  rep.depth_reached = tower.depth_reached;
  Embedding emb = make_embedding(spec, tower);
  rep.d = emb.d;
  rep.d_graph = std::sqrt(spec.index);

  double worst = 0;
  const TowerSlice& top = tower.slice(tower.depth_reached);
  for (int n = 1; n <= tower.depth_reached; ++n) {
    auto dp = psi(emb, n, true, tol * 10);
    rep.levels.push_back({n, '+', static_cast<int>(dp.domain.size()), dp.dim_p, dp.injective,
                          dp.hom_residual});
    worst = std::max({worst, dp.hom_residual, dp.star_residual, dp.unit_residual});
    if (n + 1 <= tower.depth_reached) {
      auto dm = psi(emb, n, false, tol * 10);
      rep.levels.push_back({n, '-', static_cast<int>(dm.domain.size()), dm.dim_p, dm.injective,
                            dm.hom_residual});
      worst = std::max({worst, dm.hom_residual, dm.star_residual, dm.unit_residual});
      // Both candidate finite levels for the minus-parity commutant.
      int dim_a11 = static_cast<int>(relative_commutant(top.a11.basis, emb.level_algebra(n + 1)).size());
      int dim_a10 = static_cast<int>(relative_commutant(top.a10.basis, emb.level_algebra(n + 1)).size());
      rep.minus_parity_dims.push_back({n, dim_a11, dim_a10});
    }
  }
  for (const char* gen : {"iota+", "iota-", "alpha", "beta", "E"}) {
    std::vector<std::pair<int, double>> rs;
    for (int n = 0; n <= tower.depth_reached; ++n) {
      try {
        if ((std::string(gen) == "alpha" || std::string(gen) == "beta" ||
             std::string(gen) == "E") &&
            n < 1)
          continue;
        double r = check_intertwining(emb, gen, n, tol * 10);
        rs.push_back({n, r});
        worst = std::max(worst, r);
      } catch (const Error& e) {
        if (e.code() != Errc::DepthUnavailable) throw;
      }
    }
    rep.generators[gen] = std::move(rs);
  }
  rep.all_pass = worst <= tol * 100;
  rep.verdict = rep.all_pass
                    ? "embedding verified to depth " + std::to_string(rep.depth_reached) +
                          " (worst residual " + std::to_string(worst) + ")"
                    : "embedding checks FAILED (worst residual " + std::to_string(worst) + ")";
  return rep;
}

}  // namespace pf
