#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace pf {

using Complex = std::complex<double>;

/// Error codes used across the library. Each maps 1:1 onto a thrown Error.
enum class Errc {
  NotBipartite,
  Disconnected,
  EmptyGraph,
  NonPositiveDimension,
  UnknownVertex,
  ConvergenceFailure,
  BasisTooLarge,
  AmbientMismatch,
  NotInCommutant,
  ClosureOverflow,
  NonFaithfulTrace,
  DegenerateDecomposition,
  NotHadamard,
  NotUnitary,
  DepthUnavailable,
  RankDeficient,
  SyntaxError,
  ShadingMismatch,
  ArityMismatch,
  SlotUnbound,
  InvalidInput,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::NotBipartite: return "NotBipartite";
    case Errc::Disconnected: return "Disconnected";
    case Errc::EmptyGraph: return "EmptyGraph";
    case Errc::NonPositiveDimension: return "NonPositiveDimension";
    case Errc::UnknownVertex: return "UnknownVertex";
    case Errc::ConvergenceFailure: return "ConvergenceFailure";
    case Errc::BasisTooLarge: return "BasisTooLarge";
    case Errc::AmbientMismatch: return "AmbientMismatch";
    case Errc::NotInCommutant: return "NotInCommutant";
    case Errc::ClosureOverflow: return "ClosureOverflow";
    case Errc::NonFaithfulTrace: return "NonFaithfulTrace";
    case Errc::DegenerateDecomposition: return "DegenerateDecomposition";
    case Errc::NotHadamard: return "NotHadamard";
    case Errc::NotUnitary: return "NotUnitary";
    case Errc::DepthUnavailable: return "DepthUnavailable";
    case Errc::RankDeficient: return "RankDeficient";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::ShadingMismatch: return "ShadingMismatch";
    case Errc::ArityMismatch: return "ArityMismatch";
    case Errc::SlotUnbound: return "SlotUnbound";
    case Errc::InvalidInput: return "InvalidInput";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

/// Default tolerance for approximate equalities (relative where a scale exists).
inline constexpr double kDefaultTol = 1e-9;

/// Rank / orthonormalization tolerance for dense linear algebra.
inline constexpr double kRankTol = 1e-10;

inline bool approx_equal(double a, double b, double tol = kDefaultTol) {
  double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= tol * scale;
}

/// Run fn(i) for i in [0, n). With threads <= 1 this is a plain loop.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  unsigned t = std::min<unsigned>(threads, static_cast<unsigned>(n));
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (unsigned w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += t) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace pf
