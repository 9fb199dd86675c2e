#include <cmath>

#include <gtest/gtest.h>

#include "avqslab/channels.hpp"
#include "avqslab/states.hpp"

using namespace avqslab;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

// Kraus form of X -> (1-g) X + g tr(X) I/d.
KrausMap depolarizing(const HilbertLayout& layout, double g) {
  const auto d = static_cast<Eigen::Index>(layout.dimension());
  std::vector<Matrix> kraus{std::sqrt(1 - g) * Matrix::Identity(d, d)};
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      Matrix k = Matrix::Zero(d, d);
      k(i, j) = std::sqrt(g / double(d));
      kraus.push_back(k);
    }
  }
  return KrausMap(layout, layout, kraus);
}

}  // namespace

TEST(KrausMap, RejectsTraceIncreasingAndBadShapes) {
  const auto layout = HilbertLayout::single(2, "A");
  EXPECT_THROW(KrausMap(layout, layout, {Matrix::Identity(2, 2) * 1.1}), Error);
  EXPECT_THROW(KrausMap(layout, layout, {Matrix::Identity(3, 3)}), Error);
  EXPECT_TRUE(KrausMap::identity(layout).is_channel());
  EXPECT_FALSE(KrausMap(layout, layout, {Matrix::Identity(2, 2) * 0.5}).is_channel());
}

TEST(Apply, IdentityAndProjectiveBranch) {
  Rng rng(1);
  const auto rho = random_density(HilbertLayout::bipartite(2, 3), rng);
  const auto same = apply(KrausMap::identity(HilbertLayout::single(2, "A")), rho, {"A"});
  EXPECT_LT(max_abs(same.matrix() - rho.matrix()), 1e-15);
  EXPECT_EQ(same.layout(), rho.layout());

  const auto layout = HilbertLayout::single(2, "A");
  const auto meas = Instrument::computational(layout);
  const auto mixed = DensityMatrix::maximally_mixed(layout);
  const auto out = apply(meas.branches()[0], mixed, {"A"});
  EXPECT_NEAR(out.trace(), 0.5, 1e-15);
  EXPECT_NEAR(DensityMatrix::normalized(out).matrix()(0, 0).real(), 1.0, 1e-15);
  EXPECT_THROW(apply(meas.branches()[0], rho, {"B"}), Error);
}

TEST(Apply, KrausDepolarizationAgreesWithClosedForm) {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rho = random_density(HilbertLayout::bipartite(2, 2 + trial % 2), rng);
    const double g = rng.uniform();
    const auto na = depolarizing(HilbertLayout::single(2, "A"), g);
    const auto nb = depolarizing(HilbertLayout::single(rho.layout().dims()[1], "B"), g);
    const auto via_kraus = apply(nb, apply(na, rho, {"A"}), {"B"});
    EXPECT_LT(max_abs(via_kraus.matrix() - depolarize_local(rho, g).matrix()), 1e-10);
  }
}

TEST(Apply, NonEndomorphicMapPlacesOutputAtFirstActingSlot) {
  // Discard A (trace out) and prepare |1> on a new register C.
  const auto psi = PureState::basis(HilbertLayout::single(2, "C"), 1);
  const auto map = KrausMap::replace(HilbertLayout::single(2, "A"), psi);
  Rng rng(4);
  const auto rho = random_density(HilbertLayout::bipartite(2, 3), rng);
  const auto out = apply(map, rho, {"A"});
  EXPECT_EQ(out.layout().labels(), (Labels{"C", "B"}));
  const auto rb = partial_trace(rho, {"B"});
  EXPECT_LT(max_abs(out.matrix() - kron(psi.density().matrix(), rb.matrix())), 1e-14);
}

TEST(InstrumentOutcomes, ReferenceCases) {
  Rng rng(3);
  const auto sigma = random_density(HilbertLayout::bipartite(2, 2), rng);
  const auto id = Instrument::identity(HilbertLayout::single(2, "A"));
  const auto one = instrument_outcomes(id, sigma);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_NEAR(one[0].weight, 1.0, 1e-14);
  EXPECT_LT(max_abs(one[0].state.matrix() - sigma.matrix()), 1e-14);

  const auto comp = Instrument::computational(HilbertLayout::single(2, "A"));
  const auto cc = instrument_outcomes(comp, states::classically_correlated());
  ASSERT_EQ(cc.size(), 2u);
  EXPECT_NEAR(cc[0].weight, 0.5, 1e-15);
  EXPECT_LT(max_abs(cc[0].state.matrix() - states::product_basis(0, 0).matrix()), 1e-15);
  EXPECT_LT(max_abs(cc[1].state.matrix() - states::product_basis(1, 1).matrix()), 1e-15);

  Matrix plus(2, 2), minus(2, 2);
  plus << 0.5, 0.5, 0.5, 0.5;
  minus << 0.5, -0.5, -0.5, 0.5;
  const auto pm = Instrument::projective(HilbertLayout::single(2, "A"), {plus, minus});
  const auto bell = instrument_outcomes(pm, states::bell());
  ASSERT_EQ(bell.size(), 2u);
  for (const auto& o : bell) {
    EXPECT_NEAR(o.weight, 0.5, 1e-14);
    EXPECT_NEAR(von_neumann_entropy(o.state), 0.0, 1e-10);
    EXPECT_NEAR(o.state.trace(), 1.0, 1e-14);
  }

  // Branch with zero weight is pruned.
  const auto pruned = instrument_outcomes(comp, states::product_basis(0, 1));
  ASSERT_EQ(pruned.size(), 1u);
  EXPECT_EQ(pruned[0].branch, 0u);
}

TEST(InstrumentOutcomes, WeightsSumToOne) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto t = random_instrument(HilbertLayout::single(2, "A"), 1 + trial % 4, rng);
    const auto sigma = random_density(HilbertLayout::bipartite(2, 2), rng);
    double total = 0;
    for (const auto& o : instrument_outcomes(t, sigma)) total += o.weight;
    EXPECT_NEAR(total, 1.0, 1e-9);
  }
}

TEST(OneShotRate, ReferenceCases) {
  const auto id = Instrument::identity(HilbertLayout::single(2, "A"));
  EXPECT_NEAR(one_shot_rate(id, states::bell()), 1.0, 1e-10);
  EXPECT_NEAR(one_shot_rate(id, states::product_basis(0, 1)), 0.0, 1e-10);
  EXPECT_NEAR(one_shot_rate(id, states::classically_correlated()), 0.0, 1e-10);

  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sigma = random_density(HilbertLayout::bipartite(2, 3), rng);
    EXPECT_NEAR(one_shot_rate(id, sigma), coherent_information(sigma, {"A"}, {"B"}), 1e-12);
  }
}

TEST(HatChannel, SingleBranchKeepsCoherentInformation) {
  Rng rng(13);
  const auto sigma = random_density(HilbertLayout::bipartite(2, 2), rng);
  const auto id = Instrument::identity(HilbertLayout::single(2, "A"));
  const auto hat = hat_channel(id, HilbertLayout::single(2, "B"));
  const auto out = DensityMatrix::normalized(apply(hat, sigma, {"A"}, {"B"}));
  EXPECT_EQ(out.layout().dims(), (std::vector<std::size_t>{2, 2, 1}));
  EXPECT_NEAR(coherent_information(out, {"A"}, {"B", "B'"}), coherent_information(sigma, {"A"}, {"B"}), 1e-10);
}

TEST(HatChannel, TwoBranchMeasurementOnClassicalState) {
  const auto comp = Instrument::computational(HilbertLayout::single(2, "A"));
  const auto sigma = states::classically_correlated();
  const auto out = DensityMatrix::normalized(apply(hat_channel(comp, HilbertLayout::single(2, "B")), sigma,
                                                   {"A"}, {"B"}));
  EXPECT_NEAR(one_shot_rate(comp, sigma), coherent_information(out, {"A"}, {"B", "B'"}), 1e-10);
}

TEST(HatChannel, IdentityOnRandomInstruments) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_instrument(HilbertLayout::single(2, "A"), 3, rng);
    const auto sigma = random_density(HilbertLayout::bipartite(2, 2), rng);
    const auto hat = hat_channel(t, HilbertLayout::single(2, "B"));
    const auto out = apply(hat, sigma, {"A"}, {"B"});
    EXPECT_NEAR(out.trace(), 1.0, 1e-9);
    EXPECT_NEAR(one_shot_rate(t, sigma),
                coherent_information(DensityMatrix::normalized(out), {"A"}, {"B", "B'"}), 1e-9);
  }
}

TEST(OneWayLocc, BranchSumIsTracePreserving) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto t = random_instrument(HilbertLayout::single(2, "A"), 2, rng);
    std::vector<KrausMap> b;
    for (int k = 0; k < 2; ++k) {
      const Matrix u = random_unitary(3, rng);
      b.emplace_back(HilbertLayout::single(3, "B"), HilbertLayout::single(3, "B"), std::vector<Matrix>{u});
    }
    const OneWayLocc locc(t, b);
    const auto rho = random_density(HilbertLayout::bipartite(2, 3), rng);
    EXPECT_NEAR(apply(locc, rho, {"A"}, {"B"}).trace(), 1.0, 1e-9);
  }
  const auto t = Instrument::identity(HilbertLayout::single(2, "A"));
  EXPECT_THROW(OneWayLocc(t, {}), Error);
  const auto half = KrausMap(HilbertLayout::single(2, "B"), HilbertLayout::single(2, "B"),
                             {Matrix::Identity(2, 2) * 0.5});
  EXPECT_THROW(OneWayLocc(t, {half}), Error);
}

TEST(PermuteFactors, IdentitySwapAndCycle) {
  Rng rng(40);
  std::vector<DensityMatrix> s;
  for (int i = 0; i < 3; ++i) s.push_back(random_density(HilbertLayout::bipartite(2, 2), rng));
  auto product = [&](std::vector<int> seq) {
    DensityMatrix out = s[static_cast<std::size_t>(seq[0])].relabeled({"A1", "B1"});
    for (std::size_t i = 1; i < seq.size(); ++i) {
      out = tensor(out, s[static_cast<std::size_t>(seq[i])].relabeled(
                            {"A" + std::to_string(i + 1), "B" + std::to_string(i + 1)}));
    }
    return out;
  };
  const auto r01 = product({0, 1});
  EXPECT_LT(max_abs(permute_factors(r01, {0, 1}).matrix() - r01.matrix()), 1e-15);
  EXPECT_LT(max_abs(permute_factors(r01, {1, 0}).matrix() - product({1, 0}).matrix()), 1e-12);

  const auto r012 = product({0, 1, 2});
  EXPECT_LT(max_abs(permute_factors(r012, {2, 0, 1}).matrix() - product({2, 0, 1}).matrix()), 1e-12);

  EXPECT_THROW(permute_factors(r012, {0, 1, 2, 3}), Error);
  EXPECT_THROW(permute_factors(r012, {0, 0, 1}), Error);
}

TEST(PermuteFactors, IsAGroupAction) {
  Rng rng(41);
  const auto rho = random_density(HilbertLayout({2, 2, 2, 2, 2, 2}, {"A1", "B1", "A2", "B2", "A3", "B3"}), rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto p = random_permutation(3, rng);
    const auto q = random_permutation(3, rng);
    Permutation pq(3);
    for (std::size_t i = 0; i < 3; ++i) pq[i] = p[q[i]];
    const auto lhs = permute_factors(permute_factors(rho, p), q);
    EXPECT_LT(max_abs(lhs.matrix() - permute_factors(rho, pq).matrix()), 1e-12);
  }
}
