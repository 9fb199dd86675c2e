// Kraus maps, quantum instruments and one-way LOCC channels, together with
// the one-shot distillation functional
//
//   D1(sigma, T) = sum_j lambda_j I_c(A>B, sigma_j),
//
// and its classical-flag form T^ = sum_j T_j (x) |e_j><e_j|.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "avqslab/qcore.hpp"
#include "avqslab/random.hpp"

namespace avqslab {

namespace tol {
inline constexpr double kCompleteness = 1e-9;
inline constexpr double kBranchWeight = 1e-12;  // branches at or below this weight are dropped
}  // namespace tol

// Completely positive trace-nonincreasing map given by Kraus operators of
// shape out_dim x in_dim.
class KrausMap {
 public:
  KrausMap() = default;
  KrausMap(HilbertLayout in, HilbertLayout out, std::vector<Matrix> kraus)
      : in_(std::move(in)), out_(std::move(out)), kraus_(std::move(kraus)) {
    const auto din = static_cast<Eigen::Index>(in_.dimension());
    const auto dout = static_cast<Eigen::Index>(out_.dimension());
    if (kraus_.empty()) throw Error("KrausMap: no Kraus operators");
    for (const auto& k : kraus_) {
      if (k.rows() != dout || k.cols() != din) throw Error("KrausMap: Kraus operator has wrong shape");
    }
    if (hermitian_eigen(gram()).values.maxCoeff() > 1 + tol::kCompleteness) {
      throw Error("KrausMap: map is trace increasing");
    }
  }

  static KrausMap identity(const HilbertLayout& layout) {
    const auto d = static_cast<Eigen::Index>(layout.dimension());
    return KrausMap(layout, layout, {Matrix::Identity(d, d)});
  }

  // Prepares the fixed pure state `psi` on `out`, discarding the input.
  static KrausMap replace(const HilbertLayout& in, const PureState& psi) {
    std::vector<Matrix> kraus;
    const auto din = static_cast<Eigen::Index>(in.dimension());
    for (Eigen::Index i = 0; i < din; ++i) {
      Matrix k = Matrix::Zero(psi.amplitudes().size(), din);
      k.col(i) = psi.amplitudes();
      kraus.push_back(std::move(k));
    }
    return KrausMap(in, psi.layout(), std::move(kraus));
  }

  const HilbertLayout& in_layout() const { return in_; }
  const HilbertLayout& out_layout() const { return out_; }
  const std::vector<Matrix>& kraus() const { return kraus_; }

  // sum_K K^dagger K
  Matrix gram() const {
    const auto din = static_cast<Eigen::Index>(in_.dimension());
    Matrix g = Matrix::Zero(din, din);
    for (const auto& k : kraus_) g += k.adjoint() * k;
    return g;
  }

  bool is_channel(double tolerance = tol::kCompleteness) const {
    const auto din = static_cast<Eigen::Index>(in_.dimension());
    return (gram() - Matrix::Identity(din, din)).cwiseAbs().maxCoeff() <= tolerance;
  }

  bool endomorphic() const { return in_ == out_; }

 private:
  HilbertLayout in_;
  HilbertLayout out_;
  std::vector<Matrix> kraus_;
};

// Applies `map` to the subsystems `acting_on` (whose joint dimension must equal
// the map's input dimension). The output factors take the place of the first
// acting factor; an endomorphic map keeps the acting labels and dims.
inline PsdOperator apply(const KrausMap& map, const Matrix& rho, const HilbertLayout& layout,
                         const Labels& acting_on) {
  if (acting_on.empty()) throw Error("apply: empty acting set");
  const auto idx = layout.indices_of(acting_on);
  std::size_t acting_dim = 1;
  for (auto i : idx) acting_dim *= layout.dims()[i];
  if (acting_dim != map.in_layout().dimension()) {
    throw Error("apply: acting subsystems do not match the map's input dimension");
  }

  std::vector<std::size_t> order = idx;
  Labels rest_labels;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (std::find(idx.begin(), idx.end(), k) == idx.end()) {
      order.push_back(k);
      rest_labels.push_back(layout.labels()[k]);
    }
  }
  const HilbertLayout rest = layout.select(rest_labels);
  const Matrix r = reorder_factors(rho, layout.dims(), order);
  const auto rest_dim = static_cast<Eigen::Index>(rest.dimension());
  const Matrix id_rest = Matrix::Identity(rest_dim, rest_dim);

  const auto dout = static_cast<Eigen::Index>(map.out_layout().dimension());
  Matrix out = Matrix::Zero(dout * rest_dim, dout * rest_dim);
  for (const auto& k : map.kraus()) {
    const Matrix big = rest_dim == 1 ? k : kron(k, id_rest);
    out.noalias() += big * r * big.adjoint();
  }

  const HilbertLayout out_sub = map.endomorphic() ? layout.select(acting_on) : map.out_layout();
  const HilbertLayout staged = out_sub.concat(rest);

  // Final order: original order with the acting block replaced by the output block.
  const std::size_t first = *std::min_element(idx.begin(), idx.end());
  Labels final_labels;
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (k == first) final_labels.insert(final_labels.end(), out_sub.labels().begin(), out_sub.labels().end());
    if (std::find(idx.begin(), idx.end(), k) == idx.end()) final_labels.push_back(layout.labels()[k]);
  }
  const auto final_order = staged.indices_of(final_labels);
  return PsdOperator::unchecked(staged.select(final_labels),
                                reorder_factors(out, staged.dims(), final_order));
}

inline PsdOperator apply(const KrausMap& map, const DensityMatrix& rho, const Labels& acting_on) {
  return apply(map, rho.matrix(), rho.layout(), acting_on);
}

inline PsdOperator apply(const KrausMap& map, const PsdOperator& op, const Labels& acting_on) {
  return apply(map, op.matrix(), op.layout(), acting_on);
}

// Finite family of trace-nonincreasing maps summing to a channel.
class Instrument {
 public:
  Instrument() = default;
  explicit Instrument(std::vector<KrausMap> branches) : branches_(std::move(branches)) {
    if (branches_.empty()) throw Error("Instrument: no branches");
    const auto& in = branches_.front().in_layout();
    const auto& out = branches_.front().out_layout();
    const auto din = static_cast<Eigen::Index>(in.dimension());
    Matrix total = Matrix::Zero(din, din);
    for (const auto& b : branches_) {
      if (!(b.in_layout() == in) || !(b.out_layout() == out)) {
        throw Error("Instrument: branches have different layouts");
      }
      total += b.gram();
    }
    if ((total - Matrix::Identity(din, din)).cwiseAbs().maxCoeff() > tol::kCompleteness) {
      throw Error("Instrument: branches do not sum to a channel");
    }
  }

  static Instrument identity(const HilbertLayout& layout) { return Instrument({KrausMap::identity(layout)}); }

  // One Kraus operator per branch.
  static Instrument from_kraus(const HilbertLayout& in, const HilbertLayout& out,
                               const std::vector<Matrix>& kraus) {
    std::vector<KrausMap> branches;
    for (const auto& k : kraus) branches.emplace_back(in, out, std::vector<Matrix>{k});
    return Instrument(std::move(branches));
  }

  static Instrument projective(const HilbertLayout& layout, const std::vector<Matrix>& projectors) {
    return from_kraus(layout, layout, projectors);
  }

  static Instrument computational(const HilbertLayout& layout) {
    const auto d = static_cast<Eigen::Index>(layout.dimension());
    std::vector<Matrix> p;
    for (Eigen::Index i = 0; i < d; ++i) {
      Matrix m = Matrix::Zero(d, d);
      m(i, i) = 1.0;
      p.push_back(std::move(m));
    }
    return projective(layout, p);
  }

  const std::vector<KrausMap>& branches() const { return branches_; }
  std::size_t size() const { return branches_.size(); }
  const HilbertLayout& in_layout() const { return branches_.front().in_layout(); }
  const HilbertLayout& out_layout() const { return branches_.front().out_layout(); }

 private:
  std::vector<KrausMap> branches_;
};

// Random instrument with one Kraus operator per branch, normalized through
// (sum K^dagger K)^{-1/2}.
inline Instrument random_instrument(const HilbertLayout& layout, std::size_t branches, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(layout.dimension());
  std::vector<Matrix> kraus;
  Matrix g = Matrix::Zero(d, d);
  for (std::size_t j = 0; j < branches; ++j) {
    kraus.push_back(ginibre(d, d, rng));
    g += kraus.back().adjoint() * kraus.back();
  }
  const Matrix s = psd_inverse_sqrt(g);
  for (auto& k : kraus) k = k * s;
  return Instrument::from_kraus(layout, layout, kraus);
}

// sum_k T_k (x) R_k: an A-side instrument whose outcome selects a B-side channel.
class OneWayLocc {
 public:
  OneWayLocc() = default;
  OneWayLocc(Instrument a_instrument, std::vector<KrausMap> b_channels)
      : a_(std::move(a_instrument)), b_(std::move(b_channels)) {
    if (a_.size() != b_.size()) throw Error("OneWayLocc: branch counts differ");
    for (const auto& r : b_) {
      if (!r.is_channel()) throw Error("OneWayLocc: B-side map is not trace preserving");
      if (!(r.in_layout().dims() == b_.front().in_layout().dims()) ||
          !(r.out_layout() == b_.front().out_layout())) {
        throw Error("OneWayLocc: B-side channels have different layouts");
      }
    }
  }

  const Instrument& a_instrument() const { return a_; }
  const std::vector<KrausMap>& b_channels() const { return b_; }
  std::size_t branch_count() const { return a_.size(); }

 private:
  Instrument a_;
  std::vector<KrausMap> b_;
};

inline PsdOperator apply(const OneWayLocc& locc, const Matrix& rho, const HilbertLayout& layout,
                         const Labels& a_labels, const Labels& b_labels) {
  PsdOperator total;
  for (std::size_t k = 0; k < locc.branch_count(); ++k) {
    const auto after_a = apply(locc.a_instrument().branches()[k], rho, layout, a_labels);
    const auto after_b = apply(locc.b_channels()[k], after_a, b_labels);
    if (k == 0) {
      total = after_b;
    } else {
      if (!(after_b.layout() == total.layout())) throw Error("OneWayLocc: branch outputs differ in layout");
      total = PsdOperator::unchecked(total.layout(), total.matrix() + after_b.matrix());
    }
  }
  return total;
}

inline PsdOperator apply(const OneWayLocc& locc, const DensityMatrix& rho, const Labels& a_labels,
                         const Labels& b_labels) {
  return apply(locc, rho.matrix(), rho.layout(), a_labels, b_labels);
}

struct Outcome {
  std::size_t branch;
  double weight;         // lambda_j
  DensityMatrix state;   // sigma_j, unit trace
};

// (lambda_j, sigma_j) for every branch with lambda_j above the pruning threshold.
inline std::vector<Outcome> instrument_outcomes(const Instrument& t, const DensityMatrix& sigma,
                                                const Labels& a_labels = {"A"}) {
  std::vector<Outcome> out;
  for (std::size_t j = 0; j < t.size(); ++j) {
    const auto op = apply(t.branches()[j], sigma, a_labels);
    const double w = op.trace();
    if (w <= tol::kBranchWeight) continue;
    out.push_back({j, w, DensityMatrix::normalized(op)});
  }
  return out;
}

// D1(sigma, T) = sum_j lambda_j I_c(A>B, sigma_j); may be negative.
inline double one_shot_rate(const Instrument& t, const DensityMatrix& sigma, const Labels& a_labels = {"A"},
                            const Labels& b_labels = {"B"}) {
  double rate = 0;
  for (const auto& o : instrument_outcomes(t, sigma, a_labels)) {
    rate += o.weight * (marginal_entropy(o.state, b_labels) - von_neumann_entropy(o.state));
  }
  return rate;
}

// T^ with a classical register "B'" of dimension J appended on B's side.
// `b_layout` is the B-side input layout the register is attached to.
inline OneWayLocc hat_channel(const Instrument& t, const HilbertLayout& b_layout,
                              const std::string& register_label = "B'") {
  const std::size_t j_count = t.size();
  const auto db = static_cast<Eigen::Index>(b_layout.dimension());
  const HilbertLayout out = b_layout.concat(HilbertLayout::single(j_count, register_label));
  std::vector<KrausMap> b;
  for (std::size_t j = 0; j < j_count; ++j) {
    Vector e = Vector::Zero(static_cast<Eigen::Index>(j_count));
    e(static_cast<Eigen::Index>(j)) = 1.0;
    const Matrix k = kron(Matrix(Matrix::Identity(db, db)), Matrix(e));
    b.emplace_back(b_layout, out, std::vector<Matrix>{k});
  }
  return OneWayLocc(t, std::move(b));
}

// Layout dims of an l-fold product, checking that every block repeats.
inline std::size_t product_block_size(const HilbertLayout& layout, std::size_t l) {
  if (l == 0 || layout.size() % l != 0) throw Error("permute_factors: layout is not an l-fold product");
  const std::size_t b = layout.size() / l;
  for (std::size_t i = 1; i < l; ++i) {
    for (std::size_t t = 0; t < b; ++t) {
      if (layout.dims()[i * b + t] != layout.dims()[t]) {
        throw Error("permute_factors: layout is not an l-fold product");
      }
    }
  }
  return b;
}

inline void check_permutation(const Permutation& perm) {
  std::vector<bool> seen(perm.size(), false);
  for (auto p : perm) {
    if (p >= perm.size() || seen[p]) throw Error("invalid permutation");
    seen[p] = true;
  }
}

// U_sigma rho U_sigma^dagger on an l-fold product, l = perm.size(): block i of
// the result is block perm[i] of the input, so a product state at sequence s
// maps to the product state at (s_{perm[0]}, ..., s_{perm[l-1]}).
inline Matrix permute_factors(const Matrix& rho, const HilbertLayout& layout, const Permutation& perm) {
  check_permutation(perm);
  const std::size_t b = product_block_size(layout, perm.size());
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t t = 0; t < b; ++t) order.push_back(perm[i] * b + t);
  }
  return reorder_factors(rho, layout.dims(), order);
}

inline DensityMatrix permute_factors(const DensityMatrix& rho, const Permutation& perm) {
  return DensityMatrix::unchecked(rho.layout(), permute_factors(rho.matrix(), rho.layout(), perm));
}

}  // namespace avqslab
