#include <cmath>
#include <functional>
#include <numeric>

#include <gtest/gtest.h>

#include "avqslab/random.hpp"
#include "avqslab/schur.hpp"

using namespace avqslab;

namespace {

// Schur polynomial s_lambda(x) by enumerating semistandard tableaux; the
// oracle for tr(P_lambda rho^l) = dim_lambda * s_lambda(spectrum).
double schur_polynomial(const Partition& shape, const std::vector<double>& x) {
  std::vector<std::pair<int, int>> cells;
  for (std::size_t r = 0; r < shape.size(); ++r) {
    for (int c = 0; c < shape[r]; ++c) cells.emplace_back(static_cast<int>(r), c);
  }
  std::vector<std::vector<int>> t(shape.size());
  for (std::size_t r = 0; r < shape.size(); ++r) t[r].assign(static_cast<std::size_t>(shape[r]), -1);
  const int n = static_cast<int>(x.size());
  double total = 0;
  std::function<void(std::size_t, double)> fill = [&](std::size_t k, double weight) {
    if (k == cells.size()) {
      total += weight;
      return;
    }
    const auto [r, c] = cells[k];
    int lo = 0;
    if (c > 0) lo = std::max(lo, t[static_cast<std::size_t>(r)][static_cast<std::size_t>(c - 1)]);
    if (r > 0) lo = std::max(lo, t[static_cast<std::size_t>(r - 1)][static_cast<std::size_t>(c)] + 1);
    for (int v = lo; v < n; ++v) {
      t[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = v;
      fill(k + 1, weight * x[static_cast<std::size_t>(v)]);
    }
  };
  fill(0, 1.0);
  return total;
}

Matrix permutation_operator(const std::vector<std::size_t>& sigma, int d) {
  const int l = static_cast<int>(sigma.size());
  const auto n = static_cast<Eigen::Index>(std::pow(d, l));
  Matrix u = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::vector<int> dig(static_cast<std::size_t>(l));
    Eigen::Index x = i;
    for (int k = l - 1; k >= 0; --k) {
      dig[static_cast<std::size_t>(k)] = static_cast<int>(x % d);
      x /= d;
    }
    Eigen::Index j = 0;
    for (int k = 0; k < l; ++k) j = j * d + dig[sigma[static_cast<std::size_t>(k)]];
    u(j, i) = 1.0;
  }
  return u;
}

DensityMatrix single(std::vector<double> p) { return DensityMatrix::diagonal(HilbertLayout::single(p.size(), "A"), p); }

}  // namespace

TEST(Frames, Enumeration) {
  auto parts = [](const std::vector<YoungFrame>& f) {
    std::vector<Partition> out;
    for (const auto& x : f) out.push_back(x.parts());
    return out;
  };
  EXPECT_EQ(parts(enumerate_frames(2, 2)), (std::vector<Partition>{{2, 0}, {1, 1}}));
  EXPECT_EQ(parts(enumerate_frames(2, 3)), (std::vector<Partition>{{3, 0}, {2, 1}}));
  EXPECT_EQ(parts(enumerate_frames(3, 4)), (std::vector<Partition>{{4, 0, 0}, {3, 1, 0}, {2, 2, 0}, {2, 1, 1}}));
  for (int d = 1; d <= 4; ++d) {
    for (int l = 1; l <= 8; ++l) {
      EXPECT_LE(enumerate_frames(d, l).size(), std::pow(l + 1, d));
    }
  }
  EXPECT_THROW(enumerate_frames(0, 2), Error);
  EXPECT_THROW(YoungFrame({1, 2}), Error);
}

TEST(Characters, ReferenceValues) {
  for (int l = 1; l <= 6; ++l) {
    for (const auto& mu : partitions(l, l)) EXPECT_EQ(character(YoungFrame({l}), mu), 1);
  }
  EXPECT_EQ(character(YoungFrame({1, 1}), {1, 1}), 1);
  EXPECT_EQ(character(YoungFrame({1, 1}), {2}), -1);
  EXPECT_EQ(character(YoungFrame({2, 1}), {1, 1, 1}), 2);
  EXPECT_EQ(character(YoungFrame({2, 1}), {2, 1}), 0);
  EXPECT_EQ(character(YoungFrame({2, 1}), {3}), -1);
  EXPECT_THROW(character(YoungFrame({2, 1}), {2}), Error);
}

TEST(Characters, DimensionsFromHookLengths) {
  EXPECT_EQ(irrep_dimension(YoungFrame({3})), 1);
  EXPECT_EQ(irrep_dimension(YoungFrame({1, 1, 1})), 1);
  EXPECT_EQ(irrep_dimension(YoungFrame({2, 1})), 2);
  EXPECT_EQ(irrep_dimension(YoungFrame({4, 2})), 9);
  EXPECT_EQ(irrep_dimension(YoungFrame({3, 2, 1})), 16);
  for (int l = 1; l <= 7; ++l) {
    std::int64_t sum_sq = 0;
    for (const auto& p : partitions(l, l)) {
      const YoungFrame f(p);
      EXPECT_EQ(irrep_dimension(f), character(f, Partition(static_cast<std::size_t>(l), 1)));
      sum_sq += irrep_dimension(f) * irrep_dimension(f);
    }
    EXPECT_EQ(sum_sq, factorial(l));
  }
}

TEST(Characters, Orthogonality) {
  for (int l = 1; l <= 6; ++l) {
    const auto all = partitions(l, l);
    std::int64_t class_total = 0;
    for (const auto& mu : all) class_total += class_size(mu);
    EXPECT_EQ(class_total, factorial(l));
    for (const auto& a : all) {
      for (const auto& b : all) {
        std::int64_t s = 0;
        for (const auto& mu : all) s += class_size(mu) * character(YoungFrame(a), mu) * character(YoungFrame(b), mu);
        EXPECT_EQ(s, a == b ? factorial(l) : 0);
      }
    }
  }
}

TEST(Projectors, SymmetricAndAntisymmetricQubitPairs) {
  const auto sym = isotypic_projector(YoungFrame({2, 0}), 2);
  const auto anti = isotypic_projector(YoungFrame({1, 1}), 2);
  EXPECT_NEAR(sym.rank(), 3.0, 1e-12);
  EXPECT_NEAR(anti.rank(), 1.0, 1e-12);
  const Matrix swap = permutation_operator({1, 0}, 2);
  EXPECT_LT((sym.matrix - 0.5 * (Matrix::Identity(4, 4) + swap)).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_THROW(isotypic_projector(YoungFrame({1, 1, 1}), 2), Error);
}

TEST(Projectors, RanksForFourQubits) {
  double total = 0;
  for (const auto& f : enumerate_frames(2, 4)) total += isotypic_projector(f, 2).rank();
  EXPECT_EQ(enumerate_frames(2, 4).size(), 3u);
  EXPECT_NEAR(total, 16.0, 1e-9);
}

TEST(Projectors, CompleteOrthogonalAndPermutationInvariant) {
  for (auto [d, lmax] : {std::pair{2, 6}, std::pair{3, 4}}) {
    for (int l = 2; l <= lmax; ++l) {
      const auto frames = enumerate_frames(d, l);
      std::vector<Matrix> p;
      for (const auto& f : frames) p.push_back(isotypic_projector(f, d).matrix);
      const auto n = p[0].rows();
      Matrix sum = Matrix::Zero(n, n);
      for (std::size_t a = 0; a < p.size(); ++a) {
        sum += p[a];
        EXPECT_LT((p[a] * p[a] - p[a]).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LT((p[a] - p[a].adjoint()).cwiseAbs().maxCoeff(), 1e-9);
        for (std::size_t b = a + 1; b < p.size(); ++b) EXPECT_LT((p[a] * p[b]).cwiseAbs().maxCoeff(), 1e-9);
      }
      EXPECT_LT((sum - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-9);
      std::vector<std::size_t> cyc(static_cast<std::size_t>(l));
      std::iota(cyc.begin(), cyc.end(), 1);
      cyc.back() = 0;
      const Matrix u = permutation_operator(cyc, d);
      for (const auto& m : p) EXPECT_LT((u * m - m * u).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
}

TEST(SpectrumProbability, ReferenceValues) {
  EXPECT_NEAR(spectrum_probability(YoungFrame({2, 0}), single({0.5, 0.5}), 2), 0.75, 1e-12);
  const auto rho = single({2.0 / 3.0, 1.0 / 3.0});
  EXPECT_NEAR(spectrum_probability(YoungFrame({2, 0}), rho, 2), 7.0 / 9.0, 1e-12);
  const double anti = spectrum_probability(YoungFrame({1, 1}), rho, 2);
  EXPECT_NEAR(anti, 2.0 / 9.0, 1e-12);
  const double bound = keyl_werner_bound(YoungFrame({1, 1}), {2.0 / 3.0, 1.0 / 3.0});
  EXPECT_NEAR(bound, 3.0 * std::exp2(-2.0 * relative_entropy({0.5, 0.5}, {2.0 / 3.0, 1.0 / 3.0})), 1e-12);
  EXPECT_LE(anti, bound);
  EXPECT_THROW(spectrum_probability(YoungFrame({2, 0}), rho, 3), Error);
}

TEST(SpectrumProbability, MatchesSchurPolynomialOracle) {
  Rng rng(77);
  for (auto [d, l] : {std::pair{2, 3}, std::pair{2, 5}, std::pair{3, 3}, std::pair{3, 4}}) {
    const auto rho = random_density(HilbertLayout::single(static_cast<std::size_t>(d), "A"), rng);
    const auto r = sorted_spectrum(rho);
    double total = 0;
    for (const auto& f : enumerate_frames(d, l)) {
      const double value = spectrum_probability(f, rho, l);
      EXPECT_NEAR(value, double(irrep_dimension(f)) * schur_polynomial(trimmed(f.parts()), r), 1e-10);
      EXPECT_LE(value, keyl_werner_bound(f, r) + 1e-12);
      total += value;
    }
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(SpectrumProbability, UnitarilyInvariant) {
  Rng rng(78);
  const auto rho = random_density(HilbertLayout::single(2, "A"), rng);
  const auto proj = isotypic_projector(YoungFrame({3, 1}), 2);
  const double base = spectrum_probability(proj, rho);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix u = random_unitary(2, rng);
    const auto rotated = DensityMatrix::unchecked(rho.layout(), u * rho.matrix() * u.adjoint());
    EXPECT_NEAR(spectrum_probability(proj, rotated), base, 1e-9);
  }
}

TEST(SpectrumProbability, DegenerateSpectrumHasZeroBound) {
  const auto pure = single({1.0, 0.0});
  EXPECT_EQ(keyl_werner_bound(YoungFrame({2, 1}), sorted_spectrum(pure)), 0.0);
  EXPECT_NEAR(spectrum_probability(YoungFrame({2, 1}), pure, 3), 0.0, 1e-12);
}

TEST(EntropyBands, QubitPairClassification) {
  const auto inst = entropy_band_instrument(2, 2, 0.5);
  ASSERT_EQ(inst.band_count(), 2u);
  EXPECT_EQ(inst.edges, (std::vector<double>{0.0, 0.5, 1.0}));
  ASSERT_EQ(inst.members[0].size(), 1u);
  EXPECT_EQ(inst.frames[inst.members[0][0]].parts(), (Partition{2, 0}));
  ASSERT_EQ(inst.members[1].size(), 1u);
  EXPECT_EQ(inst.frames[inst.members[1][0]].parts(), (Partition{1, 1}));
  EXPECT_THROW(entropy_band_instrument(2, 2, 0.0), Error);
  EXPECT_THROW(entropy_band_instrument(2, 2, 1.5), Error);
}

TEST(EntropyBands, LastBandEndsAtLogD) {
  const auto edges = band_edges(0.3, 2);
  EXPECT_EQ(edges.size(), 5u);
  EXPECT_DOUBLE_EQ(edges.back(), 1.0);
  const auto e3 = band_edges(0.25, 3);
  EXPECT_DOUBLE_EQ(e3.back(), std::log2(3.0));
  const auto inst = entropy_band_instrument(2, 4, 0.25);
  EXPECT_EQ(inst.band_of(0.0), 0u);
  EXPECT_EQ(inst.band_of(0.25), 0u);
  EXPECT_EQ(inst.band_of(0.2500001), 1u);
  EXPECT_EQ(inst.band_of(1.0), 3u);
}

TEST(EntropyBands, ProjectionValuedMeasure) {
  const auto inst = entropy_band_instrument(2, 3, 0.25);
  const auto n = inst.projectors[0].rows();
  Matrix sum = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < inst.band_count(); ++i) {
    sum += inst.projectors[i];
    for (std::size_t j = i + 1; j < inst.band_count(); ++j) {
      EXPECT_LT((inst.projectors[i] * inst.projectors[j]).cwiseAbs().maxCoeff(), 1e-9);
    }
  }
  EXPECT_LT((sum - Matrix::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(EntropyBands, PureStateConcentratesInFirstBand) {
  const auto pure = single({1.0, 0.0});
  double prev = 0;
  for (int l = 2; l <= 6; ++l) {
    const auto masses = band_masses(entropy_band_instrument(2, l, 0.25), pure);
    EXPECT_GE(masses[0], prev - 1e-12);
    EXPECT_NEAR(masses[0], 1.0, 1e-9);
    prev = masses[0];
  }
}

TEST(AppendixConstant, ModulusInverseAndMonotonicity) {
  EXPECT_LT(appendix_constant(0.1, 2), appendix_constant(0.5, 2));
  EXPECT_GT(appendix_constant(0.1, 2), 0.0);
  for (int d : {2, 3, 4}) {
    for (double eta : {0.05, 0.1, 0.3, 0.5, 0.9}) {
      EXPECT_NEAR(entropy_modulus(inverse_entropy_modulus(eta, d), d), eta, 1e-9);
    }
  }
  EXPECT_THROW(appendix_constant(0.0, 2), Error);
  EXPECT_THROW(appendix_constant(1.2, 2), Error);
  EXPECT_NO_THROW(appendix_constant(1.5, 3));
}

TEST(AppendixConstant, BinaryGridFindsNoViolation) {
  const int steps = 1000;
  for (double eta : {0.1, 0.3, 0.5}) {
    const double threshold = 2 * appendix_constant(eta, 2);
    for (int i = 0; i <= steps; ++i) {
      const double p = double(i) / steps;
      for (int j = 0; j <= steps; ++j) {
        const double q = double(j) / steps;
        if (std::abs(binary_entropy(p) - binary_entropy(q)) < eta) continue;
        ASSERT_GE(relative_entropy({p, 1 - p}, {q, 1 - q}), threshold) << p << " " << q;
      }
    }
  }
}
