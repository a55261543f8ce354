#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pf/graph.hpp"
#include "pf/matrix_algebra.hpp"
#include "pf/spectral.hpp"

namespace pf {

using IntMatrix = std::vector<std::vector<long long>>;

inline IntMatrix int_mat_mul(const IntMatrix& a, const IntMatrix& b) {
  IntMatrix r(a.size(), std::vector<long long>(b.empty() ? 0 : b[0].size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < r[i].size(); ++j) r[i][j] += a[i][k] * b[k][j];
  return r;
}

inline IntMatrix int_mat_transpose(const IntMatrix& a) {
  if (a.empty()) return {};
  IntMatrix r(a[0].size(), std::vector<long long>(a.size(), 0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) r[j][i] = a[i][j];
  return r;
}

inline bool int_mat_connected(const IntMatrix& a) {
  if (a.empty() || a[0].empty()) return false;
  std::size_t rows = a.size(), cols = a[0].size();
  std::vector<char> sr(rows, 0), sc(cols, 0);
  std::vector<std::pair<std::size_t, bool>> stack = {{0, true}};
  sr[0] = 1;
  while (!stack.empty()) {
    auto [i, is_row] = stack.back();
    stack.pop_back();
    if (is_row) {
      for (std::size_t j = 0; j < cols; ++j)
        if (a[i][j] != 0 && !sc[j]) {
          sc[j] = 1;
          stack.push_back({j, false});
        }
    } else {
      for (std::size_t r = 0; r < rows; ++r)
        if (a[r][i] != 0 && !sr[r]) {
          sr[r] = 1;
          stack.push_back({r, true});
        }
    }
  }
  for (char c : sr)
    if (!c) return false;
  for (char c : sc)
    if (!c) return false;
  return true;
}

/// Squared graph norm ||Lambda||^2 = top eigenvalue of Lambda Lambda^t.
inline double int_mat_norm_squared(const IntMatrix& a) {
  std::vector<std::vector<double>> m(a.size(), std::vector<double>(a.size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) {
      double acc = 0;
      for (std::size_t k = 0; k < a[0].size(); ++k)
        acc += static_cast<double>(a[i][k]) * static_cast<double>(a[j][k]);
      m[i][j] = acc;
    }
  return detail::top_eigenpair<double>(m, 1e-13, 100000).first;
}

/// Per-axiom verification result of a commuting square.
struct VerificationReport {
  double tol = kDefaultTol;
  double commuting_residual = 0.0;  // max over ambient units, both orders
  IntMatrix g, h, k, l;             // inclusion graphs per the square labeling
  bool graph_identities = false;    // GH == KL and H L^t == G^t K, exactly
  bool connected = false;           // all four graphs connected
  double markov_residual = 0.0;     // worst residual over the four inclusions
  double index = 0.0;               // ||K||^2
  double index_h = 0.0;             // ||H||^2 (equals index when nondegenerate)
  bool nondegenerate = false;
  bool pass = false;
};

/// Four nested algebras A00 in A10/A01 in A11 with a common trace, plus the
/// block data and the derived first vertical inclusion graph.
struct CommutingSquareSpec {
  int ambient = 0;
  Matrix density;
  RepresentedAlgebra a00, a01, a10, a11;
  std::vector<BlockInfo> b00, b01, b10, b11;
  std::vector<BlockUnits> u00;
  PathUnits k_path_units;        // path units of A00 in A10
  BipartiteGraph k_graph;        // Bratteli diagram of A00 in A10
  IntMatrix k_matrix;
  std::vector<std::vector<std::vector<int>>> edge_ids;  // [v][w] -> edge ids (copy order)
  double index = 0.0;            // ||K||^2
  std::optional<VerificationReport> report;

  bool verified() const { return report && report->pass; }
};

namespace detail {

/// Builds the bipartite Bratteli graph of A00 in A10 with edge ids grouped by
/// (even block, odd block, copy), matching the path-unit indexing.
inline void derive_k_graph(CommutingSquareSpec& s) {
  s.k_matrix = inclusion_matrix_of(s.u00, s.b10);
  GraphSpec gs;
  for (std::size_t v = 0; v < s.b00.size(); ++v) gs.even.push_back("p" + std::to_string(v));
  for (std::size_t w = 0; w < s.b10.size(); ++w) gs.odd.push_back("q" + std::to_string(w));
  for (std::size_t v = 0; v < s.b00.size(); ++v) {
    gs.m_plus[gs.even[v]] = s.b00[v].size;
    for (std::size_t w = 0; w < s.b10.size(); ++w)
      for (long long c = 0; c < s.k_matrix[v][w]; ++c) gs.edges.push_back({gs.even[v], gs.odd[w]});
  }
  s.k_graph = validate_and_canonicalize(gs);
  s.edge_ids.assign(s.b00.size(), std::vector<std::vector<int>>(s.b10.size()));
  int id = 0;
  for (std::size_t v = 0; v < s.b00.size(); ++v)
    for (std::size_t w = 0; w < s.b10.size(); ++w)
      for (long long c = 0; c < s.k_matrix[v][w]; ++c) s.edge_ids[v][w].push_back(id++);
}

}  // namespace detail

/// Assembles a commuting-square candidate from explicit generators. The trace
/// is the block trace vector over A11 when given, the normalized matrix trace
/// otherwise. Inclusions are certified at tolerance.
inline CommutingSquareSpec make_square(const std::vector<Matrix>& g00,
                                       const std::vector<Matrix>& g01,
                                       const std::vector<Matrix>& g10,
                                       const std::vector<Matrix>& g11, int ambient,
                                       const std::vector<double>& trace_vector = {},
                                       double tol = 1e-8) {
  CommutingSquareSpec s;
  s.ambient = ambient;
  Matrix flat = Matrix::Identity(ambient, ambient) / static_cast<double>(ambient);

  if (trace_vector.empty()) {
    s.density = flat;
  } else {
    RepresentedAlgebra a11_flat = algebra_from_generators(g11, flat);
    auto blocks = block_structure(a11_flat);
    require(blocks.size() == trace_vector.size(), Errc::InvalidInput,
            "trace vector length " + std::to_string(trace_vector.size()) + " != number of A11 blocks " +
                std::to_string(blocks.size()));
    s.density = Matrix::Zero(ambient, ambient);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      require(trace_vector[i] > 0, Errc::NonFaithfulTrace, "trace vector entries must be positive");
      s.density += (trace_vector[i] / blocks[i].multiplicity) * blocks[i].central;
    }
    double total = s.density.trace().real();
    require(std::abs(total - 1.0) < 1e-6, Errc::InvalidInput,
            "trace vector does not normalize: sum n_i t_i = " + std::to_string(total));
    s.density /= total;
  }

  s.a00 = algebra_from_generators(g00, s.density);
  s.a01 = algebra_from_generators(g01, s.density);
  s.a10 = algebra_from_generators(g10, s.density);
  s.a11 = algebra_from_generators(g11, s.density);

  auto check_incl = [&](const RepresentedAlgebra& sub, const RepresentedAlgebra& super,
                        const char* what) {
    for (const auto& b : sub.basis)
      require(super.contains(b, tol), Errc::InvalidInput,
              std::string("inclusion violated: ") + what);
  };
  check_incl(s.a00, s.a01, "A00 in A01");
  check_incl(s.a00, s.a10, "A00 in A10");
  check_incl(s.a01, s.a11, "A01 in A11");
  check_incl(s.a10, s.a11, "A10 in A11");

  s.b00 = block_structure(s.a00);
  s.b01 = block_structure(s.a01);
  s.b10 = block_structure(s.a10);
  s.b11 = block_structure(s.a11);
  s.u00 = matrix_units(s.a00, s.b00);
  s.k_path_units = path_matrix_units(s.u00, s.a10, s.b10);
  detail::derive_k_graph(s);
  s.index = int_mat_norm_squared(s.k_matrix);
  return s;
}

/// Spin model commuting square of a complex Hadamard matrix u: the square
/// C in Delta_n over C in u Delta_n u* inside M_n with the normalized trace.
inline CommutingSquareSpec spin_model(const Matrix& u, double tol = kDefaultTol) {
  const int n = static_cast<int>(u.rows());
  require(n >= 2 && u.cols() == n, Errc::InvalidInput, "Hadamard matrix must be square, n >= 2");
  double unit_res = entry_norm(Matrix(u.adjoint() * u) - Matrix::Identity(n, n));
  require(unit_res <= std::max(tol, 1e-8), Errc::NotUnitary,
          "matrix is not unitary (residual " + std::to_string(unit_res) + ")");
  double want = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      require(std::abs(std::abs(u(i, j)) - want) <= std::max(tol, 1e-8), Errc::NotHadamard,
              "entry modulus is not 1/sqrt(n): not a complex Hadamard matrix");

  std::vector<Matrix> diag_units, conj_units, full_units;
  for (int i = 0; i < n; ++i) {
    Matrix d = Matrix::Zero(n, n);
    d(i, i) = 1;
    diag_units.push_back(d);
    conj_units.push_back(u * d * u.adjoint());
  }
  Matrix shift = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) shift((i + 1) % n, i) = 1;
  full_units = {diag_units[0], shift};
  return make_square({}, conj_units, diag_units, full_units, n, {}, tol);
}

/// Runs the per-axiom checks: expectation composition on an ambient basis,
/// the integer graph identities, connectivity, and the Markov property of the
/// trace on all four inclusions.
inline VerificationReport verify(CommutingSquareSpec& s, double tol = kDefaultTol) {
  VerificationReport r;
  r.tol = tol;

  const int n = s.ambient;
  double worst = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Matrix x = Matrix::Zero(n, n);
      x(i, j) = 1;
      Matrix e00 = s.a00.expect(x);
      worst = std::max(worst, entry_norm(s.a10.expect(s.a01.expect(x)) - e00));
      worst = std::max(worst, entry_norm(s.a01.expect(s.a10.expect(x)) - e00));
    }
  r.commuting_residual = worst;

  auto u01 = matrix_units(s.a01, s.b01);
  auto u10 = matrix_units(s.a10, s.b10);
  r.g = inclusion_matrix_of(s.u00, s.b01);
  r.h = inclusion_matrix_of(u01, s.b11);
  r.k = s.k_matrix;
  r.l = inclusion_matrix_of(u10, s.b11);
  r.graph_identities = int_mat_mul(r.g, r.h) == int_mat_mul(r.k, r.l) &&
                       int_mat_mul(r.h, int_mat_transpose(r.l)) ==
                           int_mat_mul(int_mat_transpose(r.g), r.k);
  r.connected = int_mat_connected(r.g) && int_mat_connected(r.h) && int_mat_connected(r.k) &&
                int_mat_connected(r.l);

  auto markov = [&](const std::vector<BlockInfo>& sub, const std::vector<BlockInfo>& super,
                    const IntMatrix& lam) {
    double norm2 = int_mat_norm_squared(lam);
    double res = 0;
    for (std::size_t i = 0; i < sub.size(); ++i) {
      double acc = 0;
      for (std::size_t j = 0; j < super.size(); ++j) acc += lam[i][j] * super[j].min_trace;
      res = std::max(res, std::abs(acc - sub[i].min_trace));
    }
    for (std::size_t j = 0; j < super.size(); ++j) {
      double acc = 0;
      for (std::size_t i = 0; i < sub.size(); ++i) acc += lam[i][j] * sub[i].min_trace;
      res = std::max(res, std::abs(acc - norm2 * super[j].min_trace));
    }
    return res;
  };
  r.markov_residual = std::max({markov(s.b00, s.b01, r.g), markov(s.b01, s.b11, r.h),
                                markov(s.b00, s.b10, r.k), markov(s.b10, s.b11, r.l)});

  r.index = s.index;
  r.index_h = int_mat_norm_squared(r.h);
  r.nondegenerate = r.graph_identities && r.connected;
  r.pass = r.nondegenerate && r.commuting_residual <= tol && r.markov_residual <= tol;
  s.report = r;
  return r;
}

// ---------------------------------------------------------------------------
// The vertical tower and its profiles.
// ---------------------------------------------------------------------------

/// One level of the vertical lattice, every carried algebra represented in
/// the current GNS ambient.
struct TowerSlice {
  int depth = 1;  // j
  int ambient = 0;
  Matrix density;
  RepresentedAlgebra a00, a01, a10, a11;
  RepresentedAlgebra prev_a1;              // A_{j-1,1}
  RepresentedAlgebra aj1;                  // A_{j,1}
  std::vector<RepresentedAlgebra> a_k0;    // A_{k,0}, k = 1..j
  std::vector<Matrix> jones;               // e_1 .. e_{j-1}
};

struct Tower {
  double index = 0.0;
  int depth_requested = 0;
  int depth_reached = 0;
  std::vector<TowerSlice> slices;  // slices[j-1] is level j
  std::vector<GnsStep> steps;      // steps[j-1] pushes slice j into slice j+1

  const TowerSlice& slice(int j) const {
    require(j >= 1 && j <= depth_reached, Errc::DepthUnavailable,
            "tower level " + std::to_string(j) + " not built (depth reached " +
                std::to_string(depth_reached) + ")");
    return slices[j - 1];
  }

  /// Pushes a matrix from the ambient of slice `from` into the top slice.
  Matrix push_to_top(int from, Matrix x) const {
    for (int j = from; j < depth_reached; ++j) x = steps[j - 1].push(x);
    return x;
  }
};

namespace detail {

inline RepresentedAlgebra push_algebra(const GnsStep& gns, const RepresentedAlgebra& a,
                                       const Matrix& new_density) {
  RepresentedAlgebra r;
  r.ambient = gns.dim;
  r.density = new_density;
  r.basis.reserve(a.basis.size());
  for (const auto& b : a.basis) r.basis.push_back(gns.push(b));
  return r;
}

}  // namespace detail

/// Iterates the vertical basic construction A_{j+1,1} = <A_{j,1}, e_j> with
/// e_j projecting onto A_{j-1,1}, carrying A_{j,0} = alg(A_{1,0}, e_1..e_{j-1})
/// along. Stops at the requested depth or when the GNS dimension cap is hit.
inline Tower vertical_tower(const CommutingSquareSpec& s, int depth, std::size_t gns_cap = 64) {
  require(s.verified(), Errc::InvalidInput,
          "vertical_tower needs a verified nondegenerate commuting square");
  require(depth >= 1, Errc::InvalidInput, "depth must be >= 1");
  Tower t;
  t.index = s.index;
  t.depth_requested = depth;

  TowerSlice first;
  first.depth = 1;
  first.ambient = s.ambient;
  first.density = s.density;
  first.a00 = s.a00;
  first.a01 = s.a01;
  first.a10 = s.a10;
  first.a11 = s.a11;
  first.prev_a1 = s.a01;
  first.aj1 = s.a11;
  first.a_k0 = {s.a10};
  t.slices.push_back(std::move(first));
  t.depth_reached = 1;

  for (int j = 1; j < depth; ++j) {
    const TowerSlice& cur = t.slices.back();
    if (static_cast<std::size_t>(cur.aj1.dim()) > gns_cap) break;
    BasicConstruction bc;
    try {
      bc = basic_construction_gns(cur.prev_a1, cur.aj1, t.index, gns_cap);
    } catch (const Error& e) {
      if (e.code() == Errc::ClosureOverflow) break;
      throw;
    }
    TowerSlice next;
    next.depth = j + 1;
    next.ambient = bc.b2.ambient;
    next.density = bc.b2.density;
    next.a00 = detail::push_algebra(bc.gns, cur.a00, next.density);
    next.a01 = detail::push_algebra(bc.gns, cur.a01, next.density);
    next.a10 = detail::push_algebra(bc.gns, cur.a10, next.density);
    next.a11 = detail::push_algebra(bc.gns, cur.a11, next.density);
    next.prev_a1 = detail::push_algebra(bc.gns, cur.aj1, next.density);
    next.aj1 = bc.b2;
    for (const auto& e : cur.jones) next.jones.push_back(bc.gns.push(e));
    next.jones.push_back(bc.e);
    for (const auto& a : cur.a_k0) next.a_k0.push_back(detail::push_algebra(bc.gns, a, next.density));
    std::vector<Matrix> gens = next.a10.basis;
    gens.insert(gens.end(), next.jones.begin(), next.jones.end());
    next.a_k0.push_back(algebra_from_generators(gens, next.density));
    t.slices.push_back(std::move(next));
    t.steps.push_back(bc.gns);
    t.depth_reached = j + 1;
  }
  return t;
}

/// Higher relative commutants at one level: P_{j,+} = A'_{0,1} cap A_{j,0}
/// and Q_{j,+} = A'_{0,0} cap A_{j,0}.
struct CommutantPair {
  std::vector<Matrix> p, q;
};

inline CommutantPair relative_commutants_at(const Tower& t, int j) {
  const TowerSlice& sl = t.slice(j);
  CommutantPair out;
  out.p = relative_commutant(sl.a01.basis, sl.a_k0[j - 1]);
  out.q = relative_commutant(sl.a00.basis, sl.a_k0[j - 1]);
  return out;
}

inline long long catalan_number(int n) {
  long long c = 1;
  for (int k = 0; k < n; ++k) c = c * 2 * (2 * k + 1) / (k + 2);
  return c;
}

/// Dimension of the unital algebra generated by e_1..e_{j-1} at level j.
inline int tl_dimension_at(const Tower& t, int j) {
  const TowerSlice& sl = t.slice(j);
  std::vector<Matrix> gens(sl.jones.begin(), sl.jones.begin() + (j - 1));
  return algebra_from_generators(gens, sl.density).dim();
}

struct ProfileLevel {
  int j = 0;
  int dim_p = 0;
  int dim_q = 0;
  int dim_tl = 0;
  long long catalan = 0;
  std::string verdict;  // "equal" when dim_tl == dim_p, else "strictly-larger"
};

/// Per-level dimension profile: relative commutants vs the Temperley-Lieb
/// span vs Catalan numbers.
inline std::vector<ProfileLevel> relative_commutant_profile(const Tower& t, int depth) {
  std::vector<ProfileLevel> out;
  for (int j = 1; j <= std::min(depth, t.depth_reached); ++j) {
    ProfileLevel lv;
    lv.j = j;
    auto pq = relative_commutants_at(t, j);
    lv.dim_p = static_cast<int>(pq.p.size());
    lv.dim_q = static_cast<int>(pq.q.size());
    lv.dim_tl = tl_dimension_at(t, j);
    lv.catalan = catalan_number(j);
    lv.verdict = (lv.dim_p == lv.dim_tl) ? "equal" : "strictly-larger";
    out.push_back(lv);
    // P subset Q: certify by projecting P onto the span of Q.
    RepresentedAlgebra qspan;
    qspan.ambient = t.slice(j).ambient;
    qspan.density = t.slice(j).density;
    qspan.basis = pq.q;
    for (const auto& x : pq.p)
      require(qspan.contains(x, 1e-7), Errc::DegenerateDecomposition,
              "P_{j,+} escaped Q_{j,+} at level " + std::to_string(j));
  }
  return out;
}

/// The j = 1 instance of the horizontal compactness mechanism: one horizontal
/// basic construction does not change A'_{0,-} cap A_{1,0}.
inline bool horizontal_stability_check(const CommutingSquareSpec& s, std::size_t gns_cap = 64) {
  require(s.verified(), Errc::InvalidInput, "needs a verified square");
  auto bc = basic_construction_gns(s.a10, s.a11, int_mat_norm_squared(s.report->l), gns_cap);
  Matrix w2 = bc.b2.density;
  RepresentedAlgebra a10_p = detail::push_algebra(bc.gns, s.a10, w2);
  RepresentedAlgebra a01_p = detail::push_algebra(bc.gns, s.a01, w2);
  std::vector<Matrix> gens = a01_p.basis;
  gens.push_back(bc.e);
  RepresentedAlgebra a02 = algebra_from_generators(gens, w2);

  auto before = relative_commutant(a01_p.basis, a10_p);
  auto after = relative_commutant(a02.basis, a10_p);
  if (before.size() != after.size()) return false;
  RepresentedAlgebra span_b;
  span_b.ambient = a10_p.ambient;
  span_b.density = w2;
  span_b.basis = before;
  for (const auto& x : after)
    if (!span_b.contains(x, 1e-7)) return false;
  return true;
}

}  // namespace pf
