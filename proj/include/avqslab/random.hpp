// Seeded randomness with platform-independent draws.
//
// std::uniform_int_distribution, std::normal_distribution and std::shuffle are
// implementation-defined, so reports would not be bit-reproducible across
// standard libraries. Everything here is built directly on mt19937_64 output.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "avqslab/qcore.hpp"

namespace avqslab {

using Permutation = std::vector<std::size_t>;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next() { return engine_(); }

  // Uniform on [0,1) with 53 random bits.
  double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on {0,...,n-1} by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  // Box-Muller.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u;
    do {
      u = uniform();
    } while (u <= 0.0);
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * std::numbers::pi * v);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * v);
  }

  Complex complex_normal() {
    const double re = normal();
    const double im = normal();
    return {re, im};
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
  double spare_ = 0;
  bool has_spare_ = false;
};

// splitmix64 finalizer; derives independent child seeds from a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Fisher-Yates.
inline Permutation random_permutation(std::size_t l, Rng& rng) {
  Permutation p(l);
  for (std::size_t i = 0; i < l; ++i) p[i] = i;
  for (std::size_t i = l; i-- > 1;) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(p[i], p[j]);
  }
  return p;
}

inline Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = rng.complex_normal();
  }
  return g;
}

// Haar-distributed unitary (QR of a Ginibre matrix with phase correction).
inline Matrix random_unitary(std::size_t d, Rng& rng) {
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::HouseholderQR<Matrix> qr(ginibre(n, n, rng));
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < n; ++i) {
    const Complex diag = r(i, i);
    if (std::abs(diag) > 0) q.col(i) *= diag / std::abs(diag);
  }
  return q;
}

// Induced-measure random state G G^dagger / tr; `rank` 0 means full rank.
inline DensityMatrix random_density(const HilbertLayout& layout, Rng& rng, std::size_t rank = 0) {
  const auto d = static_cast<Eigen::Index>(layout.dimension());
  const auto k = rank == 0 ? d : static_cast<Eigen::Index>(rank);
  const Matrix g = ginibre(d, k, rng);
  Matrix m = g * g.adjoint();
  m /= m.trace().real();
  m = 0.5 * (m + m.adjoint());
  return DensityMatrix::unchecked(layout, m);
}

inline PureState random_pure(const HilbertLayout& layout, Rng& rng) {
  Vector v = ginibre(static_cast<Eigen::Index>(layout.dimension()), 1, rng).col(0);
  v.normalize();
  return PureState(layout, v);
}

inline std::vector<double> random_distribution(std::size_t n, Rng& rng) {
  std::vector<double> p(n);
  double total = 0;
  for (auto& x : p) {
    double u;
    do {
      u = rng.uniform();
    } while (u <= 0.0);
    x = -std::log(u);
    total += x;
  }
  for (auto& x : p) x /= total;
  return p;
}

}  // namespace avqslab
