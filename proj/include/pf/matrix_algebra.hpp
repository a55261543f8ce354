#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <map>
#include <random>
#include <utility>
#include <vector>

#include "pf/common.hpp"

namespace pf {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Trace inner product <a, b> = Tr(W a^* b) with density W.
inline Complex trace_ip(const Matrix& w, const Matrix& a, const Matrix& b) {
  return (w * a.adjoint() * b).trace();
}

inline double trace_norm(const Matrix& w, const Matrix& a) {
  return std::sqrt(std::max(0.0, trace_ip(w, a, a).real()));
}

inline double entry_norm(const Matrix& a) { return a.cwiseAbs().maxCoeff(); }

/// Hermitian square root and inverse square root of a positive density.
inline std::pair<Matrix, Matrix> density_sqrt(const Matrix& w) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(w);
  require(es.eigenvalues().minCoeff() > 0, Errc::NonFaithfulTrace,
          "trace density is not positive definite");
  Matrix s = es.operatorSqrt();
  Matrix si = es.operatorInverseSqrt();
  return {s, si};
}

/// Orthonormalization under the W-inner product, by column-pivoted QR on the
/// weighted vectorizations m -> vec(m W^{1/2}). Candidates are first projected
/// against the existing basis; new directions below the rank tolerance are
/// dropped. Deterministic (largest remaining pivot first).
inline void extend_orthonormal(std::vector<Matrix>& basis, const std::vector<Matrix>& candidates,
                               const Matrix& w, double tol = kRankTol) {
  if (candidates.empty()) return;
  const Eigen::Index n = w.rows();
  auto [wh, whi] = density_sqrt(w);
  auto vec_of = [&](const Matrix& m) {
    Matrix t = m * wh;
    return Vector(Eigen::Map<const Vector>(t.data(), n * n));
  };
  Eigen::MatrixXcd qb(n * n, basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) qb.col(i) = vec_of(basis[i]);

  const std::size_t chunk = 1024;
  for (std::size_t off = 0; off < candidates.size(); off += chunk) {
    std::size_t m = std::min(chunk, candidates.size() - off);
    Eigen::MatrixXcd c(n * n, m);
    for (std::size_t i = 0; i < m; ++i) c.col(i) = vec_of(candidates[off + i]);
    if (qb.cols() > 0) c -= qb * (qb.adjoint() * c);
    if (qb.cols() > 0) c -= qb * (qb.adjoint() * c);  // second pass for orthogonality
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(c);
    Eigen::Index rank = 0;
    Eigen::MatrixXcd r = qr.matrixR();
    for (Eigen::Index i = 0; i < std::min<Eigen::Index>(r.rows(), r.cols()); ++i)
      if (std::abs(r(i, i)) > tol) ++rank;
    if (rank == 0) continue;
    Eigen::MatrixXcd q = qr.householderQ() * Eigen::MatrixXcd::Identity(n * n, rank);
    Eigen::Index old = qb.cols();
    qb.conservativeResize(Eigen::NoChange, old + rank);
    for (Eigen::Index i = 0; i < rank; ++i) {
      qb.col(old + i) = q.col(i);
      Matrix mat = Eigen::Map<const Matrix>(q.col(i).data(), n, n) * whi;
      basis.push_back(mat);
    }
  }
}

/// A unital *-subalgebra of an ambient matrix algebra M_N, carried with the
/// trace density W (positive definite, Tr W = 1, tracial on the algebra) and
/// an orthonormal basis under the W-inner product.
struct RepresentedAlgebra {
  int ambient = 0;
  Matrix density;              // W
  std::vector<Matrix> basis;   // orthonormal, contains the identity direction

  int dim() const { return static_cast<int>(basis.size()); }

  /// tau(x) = Tr(W x).
  Complex trace(const Matrix& x) const { return (density * x).trace(); }

  /// Orthogonal projection onto the algebra: the trace-preserving conditional
  /// expectation when W is tracial on a superalgebra containing x.
  Matrix expect(const Matrix& x) const {
    Matrix r = Matrix::Zero(ambient, ambient);
    for (const auto& b : basis) r += trace_ip(density, b, x) * b;
    return r;
  }

  /// Distance from x to the span of the algebra.
  double span_residual(const Matrix& x) const { return entry_norm(x - expect(x)); }

  bool contains(const Matrix& x, double tol = 1e-8) const {
    return span_residual(x) <= tol * std::max(1.0, entry_norm(x));
  }
};

inline void check_density(const Matrix& w) {
  require(w.rows() == w.cols(), Errc::InvalidInput, "density must be square");
  require(entry_norm(w - Matrix(w.adjoint())) < 1e-10, Errc::NonFaithfulTrace,
          "trace density is not self-adjoint");
  Eigen::SelfAdjointEigenSolver<Matrix> es(w);
  require(es.eigenvalues().minCoeff() > 1e-12, Errc::NonFaithfulTrace,
          "trace density is not positive definite (trace would not be faithful)");
}

/// Smallest unital *-closed algebra containing the generators, built by
/// iterated product/star closure with pivoted orthonormalization.
inline RepresentedAlgebra algebra_from_generators(const std::vector<Matrix>& gens, const Matrix& w,
                                                  std::size_t dim_cap = 4096,
                                                  double tol = kRankTol) {
  check_density(w);
  const int n = static_cast<int>(w.rows());
  RepresentedAlgebra alg;
  alg.ambient = n;
  alg.density = w;

  std::vector<Matrix> seed = {Matrix::Identity(n, n)};
  for (const auto& g : gens) {
    require(g.rows() == n && g.cols() == n, Errc::InvalidInput, "generator has wrong ambient size");
    seed.push_back(g);
    seed.push_back(g.adjoint());
  }
  extend_orthonormal(alg.basis, seed, w, tol);

  std::size_t processed = 0;
  while (processed < alg.basis.size()) {
    require(alg.basis.size() <= dim_cap, Errc::ClosureOverflow,
            "algebra closure exceeded the dimension cap");
    std::size_t upto = alg.basis.size();
    std::vector<Matrix> cand;
    for (std::size_t i = processed; i < upto; ++i) cand.push_back(alg.basis[i].adjoint());
    for (std::size_t i = 0; i < upto; ++i)
      for (std::size_t j = 0; j < upto; ++j) {
        if (i < processed && j < processed) continue;
        cand.push_back(alg.basis[i] * alg.basis[j]);
      }
    processed = upto;
    extend_orthonormal(alg.basis, cand, w, tol);
  }
  require(alg.basis.size() <= dim_cap, Errc::ClosureOverflow,
          "algebra closure exceeded the dimension cap");
  return alg;
}

/// Trace-preserving conditional expectation onto a represented algebra.
inline Matrix conditional_expectation(const Matrix& x, const RepresentedAlgebra& a) {
  require(x.rows() == a.ambient && x.cols() == a.ambient, Errc::AmbientMismatch,
          "element and algebra live in different ambients");
  return a.expect(x);
}

/// Orthonormal basis (deterministic) of {x in span(C) : x s = s x for all s}.
inline std::vector<Matrix> relative_commutant(const std::vector<Matrix>& s,
                                              const RepresentedAlgebra& c) {
  const int n = c.ambient;
  const int k = c.dim();
  if (k == 0) return {};
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(s.size()) * n * n, k);
  for (int j = 0; j < k; ++j) {
    for (std::size_t t = 0; t < s.size(); ++t) {
      Matrix comm = c.basis[j] * s[t] - s[t] * c.basis[j];
      m.block(static_cast<Eigen::Index>(t) * n * n, j, n * n, 1) =
          Eigen::Map<const Vector>(comm.data(), n * n);
    }
  }
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  double cut = std::max(1e-12, (sv.size() ? sv(0) : 0.0) * kRankTol);
  std::vector<Matrix> out;
  for (int j = 0; j < k; ++j) {
    double sigma = (j < sv.size()) ? sv(j) : 0.0;
    if (sigma > cut) continue;
    Matrix x = Matrix::Zero(n, n);
    for (int i = 0; i < k; ++i) x += svd.matrixV()(i, j) * c.basis[i];
    out.push_back(x);
  }
  return out;
}

namespace detail {

/// Splits the range of projection p by the spectral decomposition of the
/// compressed Hermitian element h, clustering eigenvalues with a gap rule.
inline std::vector<Matrix> split_by_spectrum(const Matrix& p, const Matrix& h,
                                             double cluster_gap = 1e-6) {
  Eigen::SelfAdjointEigenSolver<Matrix> ep(p);
  std::vector<int> cols;
  for (int i = 0; i < ep.eigenvalues().size(); ++i)
    if (ep.eigenvalues()(i) > 0.5) cols.push_back(i);
  if (cols.empty()) return {};
  Matrix q(p.rows(), cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) q.col(i) = ep.eigenvectors().col(cols[i]);
  Matrix compressed = q.adjoint() * h * q;
  Eigen::SelfAdjointEigenSolver<Matrix> eh((compressed + compressed.adjoint()) / 2.0);
  const auto& ev = eh.eigenvalues();
  double scale = std::max(1.0, std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1))));
  std::vector<Matrix> parts;
  int start = 0;
  for (int i = 1; i <= ev.size(); ++i) {
    if (i == ev.size() || ev(i) - ev(i - 1) > cluster_gap * scale) {
      Matrix vsub = eh.eigenvectors().middleCols(start, i - start);
      Matrix sub = q * vsub;
      parts.push_back(sub * sub.adjoint());
      start = i;
    }
  }
  return parts;
}

}  // namespace detail

/// Minimal central projections of the algebra, in the deterministic order
/// produced by refining over the basis in insertion order.
inline std::vector<Matrix> central_projections(const RepresentedAlgebra& a, double tol = 1e-8) {
  std::vector<Matrix> center = relative_commutant(a.basis, a);
  std::vector<Matrix> atoms = {Matrix::Identity(a.ambient, a.ambient)};
  for (const auto& z : center) {
    std::vector<Matrix> h = {(z + z.adjoint()) / 2.0, (z - z.adjoint()) / Complex(0, 2)};
    for (const auto& hz : h) {
      if (entry_norm(hz) < 1e-12) continue;
      std::vector<Matrix> next;
      for (const auto& p : atoms) {
        auto parts = detail::split_by_spectrum(p, hz);
        next.insert(next.end(), parts.begin(), parts.end());
      }
      atoms = std::move(next);
    }
  }
  for (auto& p : atoms) {
    require(entry_norm(p * p - p) < tol, Errc::DegenerateDecomposition,
            "central projection candidate failed idempotency");
    require(a.contains(p, tol), Errc::DegenerateDecomposition,
            "central projection candidate left the algebra span");
  }
  return atoms;
}

/// Per-block data of a represented algebra: the minimal central projection,
/// the matrix size of the simple summand, its ambient multiplicity and the
/// trace of a minimal projection.
struct BlockInfo {
  Matrix central;     // minimal central projection z
  int size = 0;       // n: block is M_n
  int multiplicity = 0;
  double min_trace = 0.0;  // trace of a minimal projection of the block
};

inline std::vector<BlockInfo> block_structure(const RepresentedAlgebra& a, double tol = 1e-8) {
  std::vector<BlockInfo> out;
  for (const auto& z : central_projections(a, tol)) {
    BlockInfo b;
    b.central = z;
    std::vector<Matrix> corner;
    corner.reserve(a.basis.size());
    for (const auto& x : a.basis) corner.push_back(z * x * z);
    std::vector<Matrix> onb;
    extend_orthonormal(onb, corner, a.density);
    double sq = std::sqrt(static_cast<double>(onb.size()));
    b.size = static_cast<int>(std::lround(sq));
    require(std::abs(sq - b.size) < 1e-6, Errc::DegenerateDecomposition,
            "block dimension is not a perfect square");
    int rank = static_cast<int>(std::lround(z.trace().real()));
    require(rank % b.size == 0, Errc::DegenerateDecomposition,
            "ambient rank is not a multiple of the block size");
    b.multiplicity = rank / b.size;
    b.min_trace = (a.density * z).trace().real() / b.size;
    out.push_back(std::move(b));
  }
  return out;
}

/// A full system of matrix units for one simple summand.
struct BlockUnits {
  int block = 0;                            // index into block_structure order
  std::vector<std::vector<Matrix>> unit;    // unit[i][j], i,j < size
};

namespace detail {

/// Deterministic pseudo-random self-adjoint combination of a matrix family.
inline Matrix generic_self_adjoint(const std::vector<Matrix>& fam, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.25, 1.0);
  Matrix h = Matrix::Zero(fam[0].rows(), fam[0].cols());
  for (const auto& f : fam) {
    h += u(rng) * (f + f.adjoint());
    h += u(rng) * Complex(0, 1) * (f - f.adjoint());
  }
  return (h + Matrix(h.adjoint())) / 2.0;
}

/// Splits a projection q (lying in the algebra) into `count` mutually
/// orthogonal minimal projections of the algebra, each of ambient rank
/// `mult`, by spectral splitting of generic self-adjoint corner elements.
inline std::vector<Matrix> split_into_minimals(const RepresentedAlgebra& a, const Matrix& q,
                                               int count, int mult, double tol) {
  if (count == 1) return {q};
  std::vector<Matrix> corner;
  for (const auto& x : a.basis) {
    Matrix c = q * x * q;
    if (entry_norm(c) > 1e-12) corner.push_back(c);
  }
  for (unsigned seed = 1; seed <= 16; ++seed) {
    Matrix h = generic_self_adjoint(corner, seed);
    auto parts = detail::split_by_spectrum(q, h);
    if (static_cast<int>(parts.size()) != count) continue;
    bool good = true;
    for (const auto& p : parts) {
      if (std::lround(p.trace().real()) != mult || !a.contains(p, tol) ||
          entry_norm(p * p - p) > tol) {
        good = false;
        break;
      }
    }
    if (good) return parts;
  }
  fail(Errc::DegenerateDecomposition,
       "could not separate the minimal projections of a block at the working tolerance");
}

/// Minimal projections of one block.
inline std::vector<Matrix> minimal_projections(const RepresentedAlgebra& a, const BlockInfo& blk,
                                               double tol) {
  return split_into_minimals(a, blk.central, blk.size, blk.multiplicity, tol);
}

/// Partial isometry v with v v* = p, v* v = q, for equivalent minimal
/// projections p, q of the algebra; found by first-hit polar decomposition
/// over the algebra basis.
inline Matrix connecting_isometry(const RepresentedAlgebra& a, const Matrix& p, const Matrix& q,
                                  double tol) {
  for (const auto& b : a.basis) {
    Matrix x = p * b * q;
    double c2 = (x.adjoint() * x).trace().real() / std::max(1.0, q.trace().real());
    if (c2 < 1e-10) continue;
    Matrix v = x / std::sqrt(c2);
    if (entry_norm(v * v.adjoint() - p) < 1e-6 && entry_norm(v.adjoint() * v - q) < 1e-6)
      return v;
  }
  (void)tol;
  fail(Errc::DegenerateDecomposition, "no connecting partial isometry found inside the block");
}

}  // namespace detail

/// Matrix units for every simple summand of the algebra. Deterministic:
/// minimal projections ordered by the spectral split, partial isometries by
/// first-hit pivoting over the basis in insertion order.
inline std::vector<BlockUnits> matrix_units(const RepresentedAlgebra& a,
                                            const std::vector<BlockInfo>& blocks,
                                            double tol = 1e-8) {
  std::vector<BlockUnits> out;
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const auto& blk = blocks[bi];
    auto mins = detail::minimal_projections(a, blk, tol);
    std::vector<Matrix> v(mins.size());
    v[0] = mins[0];
    for (std::size_t i = 1; i < mins.size(); ++i)
      v[i] = detail::connecting_isometry(a, mins[0], mins[i], tol);
    BlockUnits bu;
    bu.block = static_cast<int>(bi);
    bu.unit.assign(mins.size(), std::vector<Matrix>(mins.size()));
    for (std::size_t i = 0; i < mins.size(); ++i)
      for (std::size_t j = 0; j < mins.size(); ++j) bu.unit[i][j] = v[i].adjoint() * v[j];
    out.push_back(std::move(bu));
  }
  return out;
}

/// Integer inclusion matrix of a unital inclusion A subset B from central
/// supports: Lambda_ij = rank(p_i z_j) / rank(q_j) with p_i, q_j minimal
/// projections of the respective blocks.
inline std::vector<std::vector<long long>> inclusion_matrix_of(
    const std::vector<BlockUnits>& sub_units, const std::vector<BlockInfo>& super_blocks,
    double tol = 1e-6) {
  std::vector<std::vector<long long>> lambda(sub_units.size(),
                                             std::vector<long long>(super_blocks.size(), 0));
  for (std::size_t i = 0; i < sub_units.size(); ++i) {
    const Matrix& p = sub_units[i].unit[0][0];
    for (std::size_t j = 0; j < super_blocks.size(); ++j) {
      double r = (p * super_blocks[j].central).trace().real();
      double val = r / super_blocks[j].multiplicity;
      long long entry = std::llround(val);
      require(std::abs(val - entry) < tol, Errc::DegenerateDecomposition,
              "inclusion matrix entry is not an integer");
      lambda[i][j] = entry;
    }
  }
  return lambda;
}

/// Path matrix units of a unital inclusion A subset B: for every B-block w, a
/// family of partial isometries W_{(v,i,k)} from a block anchor to the minimal
/// projection indexed by the Bratteli path (A-block v, A-row i, edge copy k).
/// Units U_{ab} = W_a W_b^* refine the A-units:
///   p^v_{ij} = sum over (w, k) of U^w_{(v,i,k),(v,j,k)}.
struct PathUnits {
  struct BlockFamily {
    // isometries[(v, k)][i] = W_{(v,i,k)}; key order fixes the path order.
    std::map<std::pair<int, int>, std::vector<Matrix>> isometries;
  };
  std::vector<BlockFamily> blocks;  // one per B-block, in block order

  Matrix unit(int w, int v, int i, int k, int v2, int j, int k2) const {
    const auto& fam = blocks[w];
    return fam.isometries.at({v, k})[i] * fam.isometries.at({v2, k2})[j].adjoint();
  }
};

inline PathUnits path_matrix_units(const std::vector<BlockUnits>& sub_units,
                                   const RepresentedAlgebra& super,
                                   const std::vector<BlockInfo>& super_blocks, double tol = 1e-8) {
  PathUnits out;
  out.blocks.resize(super_blocks.size());
  for (std::size_t w = 0; w < super_blocks.size(); ++w) {
    const auto& zb = super_blocks[w];
    // Atoms r^{vw}_k under each p^v_{11} z_w, then one anchor per block.
    std::vector<std::pair<std::pair<int, int>, Matrix>> atoms;
    for (std::size_t v = 0; v < sub_units.size(); ++v) {
      Matrix q = sub_units[v].unit[0][0] * zb.central;
      long long lam = std::llround(q.trace().real() / zb.multiplicity);
      if (lam == 0) continue;
      auto parts = detail::split_into_minimals(super, q, static_cast<int>(lam), zb.multiplicity, tol);
      for (std::size_t k = 0; k < parts.size(); ++k)
        atoms.push_back({{static_cast<int>(v), static_cast<int>(k)}, parts[k]});
    }
    require(!atoms.empty(), Errc::DegenerateDecomposition,
            "a superalgebra block carries no Bratteli path (inclusion not unital?)");
    const Matrix& anchor = atoms.front().second;
    for (const auto& [vk, r] : atoms) {
      // t: anchor -> r inside B.
      Matrix t = (&r == &atoms.front().second)
                     ? anchor
                     : detail::connecting_isometry(super, r, anchor, tol);
      auto [v, k] = vk;
      int nv = static_cast<int>(sub_units[v].unit.size());
      std::vector<Matrix> ws(nv);
      for (int i = 0; i < nv; ++i) ws[i] = sub_units[v].unit[i][0] * t;
      out.blocks[w].isometries[{v, k}] = std::move(ws);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// GNS representation and the Jones basic construction.
// ---------------------------------------------------------------------------

/// The GNS step data of (B, tau): an orthonormal basis of B serves as the
/// coordinate system of L^2(B, tau), and push(x) is left multiplication.
struct GnsStep {
  std::vector<Matrix> onb;  // W-orthonormal basis of B
  Matrix w;                 // density of tau on the old ambient
  int dim = 0;              // K = dim B

  /// Left-multiplication matrix of x on L^2(B).
  Matrix push(const Matrix& x) const {
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) m(i, j) = trace_ip(w, onb[i], x * onb[j]);
    return m;
  }

  /// Coordinates of an element of B in L^2(B).
  Vector coords(const Matrix& x) const {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = trace_ip(w, onb[i], x);
    return v;
  }
};

/// Result of one basic-construction step <B, e_A> on L^2(B, tau).
struct BasicConstruction {
  GnsStep gns;              // how to push old elements forward
  Matrix e;                 // the Jones projection onto L^2(A)
  RepresentedAlgebra b2;    // the new algebra with its Markov-extension trace
};

/// Jones basic construction of A subset B with Markov index d^2: represents B
/// on L^2(B, tau), adjoins the projection onto L^2(A), and equips the result
/// with the Markov extension trace (block trace vector d^-2 times the matched
/// A-block values).
inline BasicConstruction basic_construction_gns(const RepresentedAlgebra& sub,
                                                const RepresentedAlgebra& super, double d_squared,
                                                std::size_t gns_dim_cap = 64,
                                                double tol = 1e-8) {
  require(sub.ambient == super.ambient, Errc::AmbientMismatch,
          "sub- and superalgebra live in different ambients");
  const int k = super.dim();
  require(static_cast<std::size_t>(k) <= gns_dim_cap, Errc::ClosureOverflow,
          "GNS dimension " + std::to_string(k) + " exceeds the cap of " +
              std::to_string(gns_dim_cap));

  BasicConstruction out;
  out.gns.onb = super.basis;
  out.gns.w = super.density;
  out.gns.dim = k;

  // e projects onto the coordinates of the subalgebra.
  out.e = Matrix::Zero(k, k);
  for (const auto& a : sub.basis) {
    Vector v = out.gns.coords(a);
    out.e += v * v.adjoint();
  }
  require(entry_norm(out.e * out.e - out.e) < tol, Errc::DegenerateDecomposition,
          "Jones projection failed idempotency (subalgebra basis not orthonormal?)");

  // Generate <B, e> with a provisional flat trace, then install the Markov
  // extension trace and re-orthonormalize.
  std::vector<Matrix> gens;
  gens.reserve(super.basis.size() + 1);
  for (const auto& b : super.basis) gens.push_back(out.gns.push(b));
  gens.push_back(out.e);
  Matrix flat = Matrix::Identity(k, k) / static_cast<double>(k);
  RepresentedAlgebra provisional = algebra_from_generators(gens, flat);

  auto blocks2 = block_structure(provisional, tol);
  auto sub_blocks = block_structure(sub, tol);
  // Match each block of B2 to the block of A carrying it: z_p (z_A e) != 0.
  Matrix w2 = Matrix::Zero(k, k);
  std::vector<char> used(sub_blocks.size(), 0);
  for (const auto& blk : blocks2) {
    int match = -1;
    double best = 0;
    for (std::size_t i = 0; i < sub_blocks.size(); ++i) {
      double overlap = std::abs((blk.central * out.gns.push(sub_blocks[i].central) * out.e).trace());
      if (overlap > best) {
        best = overlap;
        match = static_cast<int>(i);
      }
    }
    require(match >= 0 && best > tol, Errc::DegenerateDecomposition,
            "basic-construction block has no matching subalgebra block");
    require(!used[match], Errc::DegenerateDecomposition,
            "two basic-construction blocks matched one subalgebra block");
    used[match] = 1;
    double t_new = sub_blocks[match].min_trace / d_squared;
    w2 += (t_new / blk.multiplicity) * blk.central;
  }
  double total = w2.trace().real();
  require(std::abs(total - 1.0) < 1e-6, Errc::DegenerateDecomposition,
          "Markov extension trace does not normalize to 1 (got " + std::to_string(total) + ")");
  w2 /= total;

  out.b2.ambient = k;
  out.b2.density = w2;
  extend_orthonormal(out.b2.basis, provisional.basis, w2);
  return out;
}

}  // namespace pf
