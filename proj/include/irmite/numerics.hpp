#pragma once

// Seeded sampling plus the small dense linear-algebra kernel the rest of the
// library is built on. Storage is Eigen; the Cholesky factorization with its
// jitter policy is implemented here, SPD solves and QR delegate to Eigen.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/QR>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irmite/error.hpp"

namespace irmite {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// xoshiro256** generator seeded through splitmix64.
///
/// Children are derived with split(label): the child seed is
/// splitmix64(seed ^ fnv1a(label)), so it depends only on the parent's seed and
/// the label, never on how many draws the parent has made. Normals use the
/// Box-Muller transform; the second variate of each pair is cached.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s = detail::splitmix64(s);
      word = s;
    }
  }

  std::uint64_t seed() const noexcept { return seed_; }

  Rng split(std::string_view label) const {
    return Rng(detail::splitmix64(seed_ ^ detail::fnv1a(label)));
  }

  Rng split(std::string_view label, std::uint64_t index) const {
    return Rng(detail::splitmix64(detail::splitmix64(seed_ ^ detail::fnv1a(label)) + index));
  }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // [0, 1) with 53 bits of resolution.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept {
    const double u = lo + (hi - lo) * uniform();
    return u < hi ? u : std::nextafter(hi, lo);
  }

  double normal() noexcept {
    if (spare_) {
      const double z = *spare_;
      spare_.reset();
      return z;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    return r * std::cos(theta);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  // Uniform integer in [0, n).
  std::size_t below(std::size_t n) noexcept {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> state_{};
  std::optional<double> spare_;
};

inline Vector sample_uniform(Rng& rng, double lo, double hi, std::size_t n) {
  require(lo < hi, ErrorCode::InvalidArg, "sample_uniform needs lo < hi");
  require(n >= 1, ErrorCode::InvalidArg, "sample_uniform needs n >= 1");
  Vector out(static_cast<Eigen::Index>(n));
  for (auto& v : out) v = rng.uniform(lo, hi);
  return out;
}

inline Vector sample_normal(Rng& rng, std::size_t n) {
  require(n >= 1, ErrorCode::InvalidArg, "sample_normal needs n >= 1");
  Vector out(static_cast<Eigen::Index>(n));
  for (auto& v : out) v = rng.normal();
  return out;
}

inline std::vector<int> sample_bernoulli(Rng& rng, double p, std::size_t n) {
  require(p >= 0.0 && p <= 1.0, ErrorCode::InvalidArg, "sample_bernoulli needs p in [0, 1]");
  std::vector<int> out(n);
  for (auto& v : out) v = rng.bernoulli(p) ? 1 : 0;
  return out;
}

inline Matrix sample_normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix g(rows, cols);
  // Fill row by row so the stream order matches the row-major reading of g.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) g(i, j) = rng.normal();
  return g;
}

/// Q factor of g's QR decomposition with column signs chosen so that R has a
/// non-negative diagonal (identity maps to identity).
inline Matrix qr_orthonormal(const Matrix& g) {
  require(g.rows() == g.cols() && g.rows() >= 1, ErrorCode::DimensionMismatch,
          "qr_orthonormal needs a non-empty square matrix");
  const Eigen::Index d = g.rows();
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  const double scale = std::max(r.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (std::abs(r(j, j)) <= 1e-12 * scale)
      throw Error(ErrorCode::SingularInput, "qr_orthonormal input is rank-deficient");
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  return q;
}

/// Random orthonormal d x d matrix: QR of a standard-normal matrix, redrawn on
/// a singular draw.
inline Matrix random_orthonormal(Rng& rng, Eigen::Index d, int max_retries = 100) {
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    try {
      return qr_orthonormal(sample_normal_matrix(rng, d, d));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularInput) throw;
    }
  }
  throw Error(ErrorCode::SingularInput, "random_orthonormal exhausted its retry budget");
}

namespace detail {

// Returns nullopt when a pivot falls in (-tol, 0] and clamping was not allowed.
inline std::optional<Matrix> cholesky_pass(const Matrix& a, bool clamp) {
  constexpr double kNegTol = 1e-10;
  const Eigen::Index n = a.rows();
  Matrix l = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = a(j, j) - l.row(j).head(j).squaredNorm();
    if (pivot < -kNegTol)
      throw Error(ErrorCode::NotPSD, "cholesky pivot " + std::to_string(pivot) + " at column " +
                                         std::to_string(j));
    if (pivot <= 0.0) {
      if (!clamp) return std::nullopt;
      continue;  // semidefinite direction: column stays zero
    }
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < n; ++i)
      l(i, j) = (a(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
  }
  return l;
}

}  // namespace detail

/// Lower-triangular L with L L^T = sigma for a symmetric PSD sigma.
///
/// Pivots below -1e-10 raise NotPSD. Non-positive pivots above that bound are
/// rounding noise: the factorization is retried with 1e-12 added to the
/// diagonal, and any pivot that is still non-positive is clamped to zero.
inline Matrix cholesky(const Matrix& sigma) {
  require(sigma.rows() == sigma.cols(), ErrorCode::DimensionMismatch, "cholesky needs a square matrix");
  if (auto l = detail::cholesky_pass(sigma, false)) return *l;
  const Matrix jittered = sigma + 1e-12 * Matrix::Identity(sigma.rows(), sigma.cols());
  return *detail::cholesky_pass(jittered, true);
}

inline Vector solve_spd(const Matrix& a, const Vector& b) {
  require(a.rows() == a.cols() && a.rows() == b.size(), ErrorCode::DimensionMismatch,
          "solve_spd shape mismatch");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPD, "solve_spd factorization failed");
  Vector x = llt.solve(b);
  if (!x.allFinite()) throw Error(ErrorCode::NotPD, "solve_spd produced non-finite values");
  return x;
}

}  // namespace irmite
