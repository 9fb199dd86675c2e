// Merging fidelity, compound cost functionals and the orthogonal-support
// counterexample family.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "avqslab/avqs.hpp"
#include "avqslab/channels.hpp"
#include "avqslab/qcore.hpp"

namespace avqslab {

// B' copy of an A-side label: "A" -> "B'", "A3" -> "B'3".
inline std::string merged_label(const std::string& label) {
  if (label.empty() || label[0] != 'A') return label;
  return "B'" + label.substr(1);
}

// One-way LOCC from K0 (x) (AB)^l to K1 (x) (B'B)^l with maximally entangled
// resources phi0 on {K0A, K0B} and phi1 on {K1A, K1B}.
struct MergingProtocol {
  OneWayLocc locc;
  PureState phi0;
  PureState phi1;
  std::size_t l = 1;
  Labels a_labels;  // instrument input: K0A then A-side source labels
  Labels b_labels;  // channel input: K0B then B-side source labels

  // k_l = sr(phi0) / sr(phi1)
  double k() const {
    return double(schmidt_rank(phi0, {phi0.layout().labels()[0]})) /
           double(schmidt_rank(phi1, {phi1.layout().labels()[0]}));
  }
  std::size_t branch_count() const { return locc.branch_count(); }
};

// Dimension-1 resource pair on {a, b}.
inline PureState trivial_resource(const std::string& a, const std::string& b) {
  return PureState(HilbertLayout({1, 1}, {a, b}), Vector::Ones(1));
}

// Same protocol with `post` applied after every B-side channel.
inline MergingProtocol then_on_b(const MergingProtocol& m, const KrausMap& post) {
  std::vector<KrausMap> b;
  for (const auto& r : m.locc.b_channels()) {
    if (r.out_layout().dims() != post.in_layout().dims()) throw Error("then_on_b: layout mismatch");
    std::vector<Matrix> kraus;
    for (const auto& l2 : post.kraus()) {
      for (const auto& k1 : r.kraus()) kraus.push_back(l2 * k1);
    }
    b.emplace_back(r.in_layout(), post.out_layout(), std::move(kraus));
  }
  MergingProtocol out = m;
  out.locc = OneWayLocc(m.locc.a_instrument(), std::move(b));
  return out;
}

// F(M (x) id_E (phi0 (x) psi), phi1 (x) psi') for a given purification psi.
inline double merging_fidelity(const PureState& psi, const MergingProtocol& m) {
  const auto input = tensor(m.phi0, psi);
  const auto out = apply(m.locc, input.density().matrix(), input.layout(), m.a_labels, m.b_labels);
  Labels moved;
  for (const auto& s : psi.layout().labels()) moved.push_back(merged_label(s));
  const auto target = tensor(m.phi1, psi.relabeled(moved));
  const auto aligned = reorder(out, target.layout().labels());
  return std::clamp(fidelity(aligned.matrix(), target.amplitudes()), 0.0, 1.0);
}

inline double merging_fidelity(const DensityMatrix& rho, const MergingProtocol& m) {
  return merging_fidelity(purify(rho, "E"), m);
}

// sup_s S(A|B, rho_s)
inline double compound_merging_cost(const StateSet& set) {
  const auto& labels = set.layout().labels();
  if (labels.size() != 2) throw Error("compound_merging_cost: set must be bipartite");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& rho : set.states()) best = std::max(best, conditional_entropy(rho, {labels[1]}));
  return best;
}

// I(A;E) of the purification, via S(rho_A) + S(A|B, rho).
inline double classical_cost_of(const DensityMatrix& rho) {
  const auto& labels = rho.layout().labels();
  return marginal_entropy(rho, {labels[0]}) + conditional_entropy(rho, {labels[1]});
}

// sup_s I(A;E, rho_s)
inline double compound_classical_cost(const StateSet& set) {
  if (set.layout().size() != 2) throw Error("compound_classical_cost: set must be bipartite");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& rho : set.states()) best = std::max(best, classical_cost_of(rho));
  return best;
}

// ---------------------------------------------------------------------------
// Counterexample

struct CounterexampleFamily {
  DensityMatrix base;             // rho_1 with its A support embedded in the first block
  std::size_t N = 1;
  std::size_t support_rank = 0;   // r = rank of rho_{A,1}
  Matrix embedding;               // (N r) x dim A isometry on supp(rho_{A,1})
  std::vector<Matrix> unitaries;  // U_1 = I, U_s swaps block 1 and block s
  StateSet states;

  std::size_t a_dimension() const { return N * support_rank; }

  // Projector onto the s-th block (0-based) of the enlarged A space.
  Matrix support_projector(std::size_t s) const {
    const auto d = static_cast<Eigen::Index>(a_dimension());
    const auto r = static_cast<Eigen::Index>(support_rank);
    Matrix p = Matrix::Zero(d, d);
    p.block(static_cast<Eigen::Index>(s) * r, static_cast<Eigen::Index>(s) * r, r, r) = Matrix::Identity(r, r);
    return p;
  }
};

inline Matrix block_swap(std::size_t blocks, std::size_t r, std::size_t s) {
  const auto d = static_cast<Eigen::Index>(blocks * r);
  Matrix u = Matrix::Identity(d, d);
  if (s == 0) return u;
  const auto ri = static_cast<Eigen::Index>(r);
  const auto si = static_cast<Eigen::Index>(s) * ri;
  u.block(0, 0, ri, ri).setZero();
  u.block(si, si, ri, ri).setZero();
  u.block(si, 0, ri, ri) = Matrix::Identity(ri, ri);
  u.block(0, si, ri, ri) = Matrix::Identity(ri, ri);
  return u;
}

inline CounterexampleFamily build_counterexample(const DensityMatrix& rho1, std::size_t N) {
  if (N < 1) throw Error("build_counterexample: N must be at least 1");
  if (rho1.layout().size() != 2) throw Error("build_counterexample: base state must be bipartite");
  const auto& labels = rho1.layout().labels();
  const double cond = conditional_entropy(rho1, {labels[1]});
  if (!(cond < 0)) throw Error("build_counterexample: S(A|B) = " + std::to_string(cond) + " is not negative");

  const auto rho_a = partial_trace(rho1, {labels[0]});
  const auto eig = hermitian_eigen(rho_a.matrix());
  Matrix projector = Matrix::Zero(eig.vectors.rows(), eig.vectors.rows());
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) > tol::kRank) projector += eig.vectors.col(i) * eig.vectors.col(i).adjoint();
  }
  // Gram-Schmidt on the projected computational basis
  std::vector<Vector> support;
  for (Eigen::Index c = 0; c < projector.cols(); ++c) {
    Vector v = projector.col(c);
    for (const auto& u : support) v -= u.dot(v) * u;
    if (v.norm() > 1e-8) support.push_back(v / v.norm());
  }
  CounterexampleFamily fam;
  fam.N = N;
  fam.support_rank = support.size();
  const auto r = static_cast<Eigen::Index>(fam.support_rank);
  const auto da = static_cast<Eigen::Index>(rho1.layout().dims()[0]);
  const auto db = static_cast<Eigen::Index>(rho1.layout().dims()[1]);
  const auto d = static_cast<Eigen::Index>(fam.a_dimension());
  if (std::size_t(d) * std::size_t(db) > kDefaultDimensionCap) throw Error("build_counterexample: dimension cap exceeded");

  fam.embedding = Matrix::Zero(d, da);
  for (Eigen::Index i = 0; i < r; ++i) fam.embedding.row(i) = support[std::size_t(i)].adjoint();
  const Matrix v = kron(fam.embedding, Matrix(Matrix::Identity(db, db)));
  const HilbertLayout layout({std::size_t(d), std::size_t(db)}, labels);
  fam.base = DensityMatrix::unchecked(layout, v * rho1.matrix() * v.adjoint());

  std::vector<DensityMatrix> members;
  std::vector<std::string> names;
  for (std::size_t s = 0; s < N; ++s) {
    fam.unitaries.push_back(block_swap(N, fam.support_rank, s));
    const Matrix u = kron(fam.unitaries.back(), Matrix(Matrix::Identity(db, db)));
    members.push_back(DensityMatrix::unchecked(layout, u * fam.base.matrix() * u.adjoint()));
    names.push_back(std::to_string(s + 1));
  }
  fam.states = StateSet(names, members);
  return fam;
}

struct FamilyDiagnostics {
  double max_support_overlap = 0;  // max_{s != s'} ||P_s supp(rho_{A,s'})||
  double max_b_marginal_defect = 0;
};

inline FamilyDiagnostics check_family(const CounterexampleFamily& fam) {
  FamilyDiagnostics out;
  const auto& labels = fam.base.layout().labels();
  const auto b1 = partial_trace(fam.base, {labels[1]});
  for (std::size_t s = 0; s < fam.N; ++s) {
    const auto a = partial_trace(fam.states[s], {labels[0]});
    for (std::size_t t = 0; t < fam.N; ++t) {
      if (t == s) continue;
      const Matrix p = fam.support_projector(t);
      out.max_support_overlap = std::max(out.max_support_overlap, (p * a.matrix() * p).cwiseAbs().maxCoeff());
    }
    const auto b = partial_trace(fam.states[s], {labels[1]});
    out.max_b_marginal_defect = std::max(out.max_b_marginal_defect, trace_distance(b.matrix(), b1.matrix()));
  }
  return out;
}

// Branch s applies U_s^dagger P_s on A: it maps rho_s to rho_1 and
// annihilates every other member.
inline Instrument detection_instrument(const CounterexampleFamily& fam) {
  const auto a = HilbertLayout::single(fam.a_dimension(), fam.base.layout().labels()[0]);
  std::vector<Matrix> kraus;
  for (std::size_t s = 0; s < fam.N; ++s) kraus.push_back(fam.unitaries[s].adjoint() * fam.support_projector(s));
  return Instrument::from_kraus(a, a, kraus);
}

struct CounterexampleGap {
  std::size_t N = 1;
  double avqs_cost = 0;             // S(A|B, rho_1)
  double compound_cost = 0;         // max_p S(A|B, rho_p)
  double gap = 0;                   // compound_cost - avqs_cost
  double classical_compound = 0;    // max_p I(A;E, rho_p)
  double classical_avqs_bound = 0;  // classical_compound - log N
  double grid_max_conditional = 0;  // simplex grid oracle for compound_cost
  double grid_max_classical = 0;
  double max_conditional_residual = 0;  // |S(A|B,rho_p) - S(A|B,rho_1) - H(p)| over the grid
  double max_classical_residual = 0;    // |I(A;E,rho_p) - I(A;E,rho_1) - 2H(p)| over the grid
  std::size_t grid_points = 0;
  bool consistent = false;
};

inline CounterexampleGap counterexample_gap(const CounterexampleFamily& fam, std::size_t grid_steps = 20,
                                            double tolerance = 1e-6) {
  CounterexampleGap g;
  g.N = fam.N;
  const auto& labels = fam.base.layout().labels();
  const Labels given{labels[1]};
  g.avqs_cost = conditional_entropy(fam.base, given);
  const double classical1 = classical_cost_of(fam.base);

  const auto uniform = mixture(fam.states, MixtureWeights::uniform(fam.N));
  g.compound_cost = conditional_entropy(uniform, given);
  g.classical_compound = classical_cost_of(uniform);
  g.gap = g.compound_cost - g.avqs_cost;
  g.classical_avqs_bound = g.classical_compound - std::log2(double(fam.N));

  g.grid_max_conditional = -std::numeric_limits<double>::infinity();
  g.grid_max_classical = -std::numeric_limits<double>::infinity();
  for (const auto& p : simplex_grid(fam.N, grid_steps)) {
    const auto rho = mixture(fam.states, p);
    const double h = shannon_entropy(p.values());
    const double c = conditional_entropy(rho, given);
    const double i = classical_cost_of(rho);
    g.grid_max_conditional = std::max(g.grid_max_conditional, c);
    g.grid_max_classical = std::max(g.grid_max_classical, i);
    g.max_conditional_residual = std::max(g.max_conditional_residual, std::abs(c - g.avqs_cost - h));
    g.max_classical_residual = std::max(g.max_classical_residual, std::abs(i - classical1 - 2 * h));
    ++g.grid_points;
  }
  const double log_n = std::log2(double(fam.N));
  g.consistent = std::abs(g.gap - log_n) <= tolerance &&
                 std::abs(g.classical_compound - classical1 - 2 * log_n) <= tolerance &&
                 g.grid_max_conditional <= g.compound_cost + tolerance &&
                 g.grid_max_classical <= g.classical_compound + tolerance;
  return g;
}

}  // namespace avqslab
