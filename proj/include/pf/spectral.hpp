#pragma once

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <sstream>
#include <vector>

#include "pf/common.hpp"
#include "pf/graph.hpp"

namespace pf {

/// High-precision real used inside the Perron-Frobenius solve. Results are
/// rounded to double once; 40+ significant digits are available on demand.
using BigReal = boost::multiprecision::cpp_bin_float_50;

namespace detail {

/// Power iteration for the top eigenpair of a symmetric nonnegative matrix.
/// The matrix is small (vertex count squared), so no sparsity games.
template <typename Real>
std::pair<Real, std::vector<Real>> top_eigenpair(const std::vector<std::vector<Real>>& m,
                                                 Real tol, int max_iter) {
  const std::size_t n = m.size();
  std::vector<Real> v(n, Real(1)), w(n);
  Real value(0);
  for (int it = 0; it < max_iter; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      Real acc(0);
      for (std::size_t j = 0; j < n; ++j) acc += m[i][j] * v[j];
      w[i] = acc;
    }
    Real norm(0);
    for (auto& x : w) norm += x * x;
    using std::sqrt;
    norm = sqrt(norm);
    if (norm == Real(0)) fail(Errc::ConvergenceFailure, "matrix annihilated the iterate");
    for (std::size_t i = 0; i < n; ++i) w[i] /= norm;
    // Rayleigh quotient and residual ||Mv - rv||.
    Real rayleigh(0);
    for (std::size_t i = 0; i < n; ++i) {
      Real acc(0);
      for (std::size_t j = 0; j < n; ++j) acc += m[i][j] * w[j];
      rayleigh += w[i] * acc;
    }
    Real resid(0);
    for (std::size_t i = 0; i < n; ++i) {
      Real acc(0);
      for (std::size_t j = 0; j < n; ++j) acc += m[i][j] * w[j];
      Real r = acc - rayleigh * w[i];
      resid += r * r;
    }
    v = w;
    value = rayleigh;
    using std::abs;
    if (sqrt(resid) <= tol * (Real(1) + abs(rayleigh))) {
      for (auto& x : v) x = abs(x);  // PF eigenvector is positive
      return {value, v};
    }
  }
  fail(Errc::ConvergenceFailure, "power iteration did not reach tolerance");
}

}  // namespace detail

/// Perron-Frobenius data of a bipartite graph: the inclusion matrix, the graph
/// norm d, the Markov trace vectors and the dimension vectors.
///
/// Conventions:
///   - nu0 = m+, nu1 = Lambda^t nu0.
///   - lambda0 is the positive eigenvector of Lambda Lambda^t with eigenvalue
///     d^2, scaled so nu0 . lambda0 = 1 (then nu1 . lambda1 = 1 follows).
///   - lambda1 = d^-2 Lambda^t lambda0, so Lambda lambda1 = lambda0.
struct SpectralData {
  std::vector<std::vector<long long>> inclusion;  // rows = even, cols = odd
  double d = 0.0;
  double d_squared = 0.0;
  std::vector<double> lambda0, lambda1;
  std::vector<long long> nu0, nu1;
  std::string d_squared_digits;  // 40 significant digits

  /// Trace vector at tower level n: d^-n lambda0 (n even, on even vertices),
  /// d^-(n-1) lambda1 (n odd, on odd vertices). Computed lazily, never stored.
  double lambda_level(int n, int vertex) const {
    if (n % 2 == 0) return std::pow(d, -n) * lambda0[vertex];
    return std::pow(d, -(n - 1)) * lambda1[vertex];
  }

  /// Weight function of the planar-algebra action: lambda0 on even vertices.
  double weight_even(int v) const { return lambda0[v]; }
  /// d * lambda1 on odd vertices.
  double weight_odd(int w) const { return d * lambda1[w]; }
};

inline SpectralData spectral_data(const BipartiteGraph& g) {
  SpectralData s;
  s.inclusion = g.inclusion_matrix();
  const int ne = g.num_even();

  std::vector<std::vector<BigReal>> m(ne, std::vector<BigReal>(ne, BigReal(0)));
  for (int i = 0; i < ne; ++i)
    for (int j = 0; j < ne; ++j) {
      long long acc = 0;
      for (int w = 0; w < g.num_odd(); ++w) acc += s.inclusion[i][w] * s.inclusion[j][w];
      m[i][j] = BigReal(acc);
    }

  auto [d2, vec] = detail::top_eigenpair<BigReal>(m, BigReal("1e-45"), 200000);

  // Scale so nu0 . lambda0 = 1.
  s.nu0.resize(ne);
  BigReal dot(0);
  for (int v = 0; v < ne; ++v) {
    s.nu0[v] = g.m_plus(v);
    dot += BigReal(s.nu0[v]) * vec[v];
  }
  for (auto& x : vec) x /= dot;

  s.d_squared = d2.convert_to<double>();
  using boost::multiprecision::sqrt;
  s.d = sqrt(d2).convert_to<double>();
  {
    std::ostringstream os;
    os.precision(40);
    os << d2;
    s.d_squared_digits = os.str();
  }

  s.lambda0.resize(ne);
  for (int v = 0; v < ne; ++v) s.lambda0[v] = vec[v].convert_to<double>();

  const int no = g.num_odd();
  s.nu1.assign(no, 0);
  s.lambda1.assign(no, 0.0);
  for (int w = 0; w < no; ++w) {
    BigReal acc(0);
    for (int v = 0; v < ne; ++v) {
      s.nu1[w] += s.inclusion[v][w] * s.nu0[v];
      acc += BigReal(s.inclusion[v][w]) * vec[v];
    }
    s.lambda1[w] = (acc / d2).convert_to<double>();
  }
  return s;
}

/// Graph together with its spectral data; the ambient context every loop and
/// tangle computation runs in.
struct GraphContext {
  AugmentedGraph ag;
  SpectralData spectral;

  explicit GraphContext(const BipartiteGraph& g) : ag(augment(g)), spectral(spectral_data(g)) {}

  const BipartiteGraph& graph() const { return ag.base(); }
  double d() const { return spectral.d; }
};

}  // namespace pf
