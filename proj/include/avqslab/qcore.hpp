// Dense linear algebra over small composite Hilbert spaces, together with the
// entropic and distance functionals used throughout avqslab.
//
// All logarithms are base two. Matrices are Eigen::MatrixXcd; subsystem
// structure is carried by HilbertLayout and the first listed subsystem is the
// most significant factor of the Kronecker product.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace avqslab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Labels = std::vector<std::string>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace tol {
inline constexpr double kEigenClip = 1e-12;       // |eigenvalue| below this counts as 0
inline constexpr double kNegativeEigen = 1e-9;    // more negative than -this is an error
inline constexpr double kRank = 1e-10;            // singular value / eigenvalue rank cutoff
inline constexpr double kTrace = 1e-9;
inline constexpr double kHermitian = 1e-9;
inline constexpr double kReconstruction = 1e-10;
}  // namespace tol

inline constexpr std::size_t kDefaultDimensionCap = 4096;

// ---------------------------------------------------------------------------
// HilbertLayout

class HilbertLayout {
 public:
  HilbertLayout() = default;

  HilbertLayout(std::vector<std::size_t> dims, Labels labels)
      : dims_(std::move(dims)), labels_(std::move(labels)) {
    if (dims_.size() != labels_.size()) {
      throw Error("HilbertLayout: dims and labels differ in length");
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < dims_.size(); ++i) {
      if (dims_[i] == 0) throw Error("HilbertLayout: zero dimension for " + labels_[i]);
      if (!seen.insert(labels_[i]).second) {
        throw Error("HilbertLayout: duplicate label " + labels_[i]);
      }
    }
  }

  static HilbertLayout single(std::size_t dim, std::string label) {
    return HilbertLayout({dim}, {std::move(label)});
  }
  static HilbertLayout bipartite(std::size_t da, std::size_t db) {
    return HilbertLayout({da, db}, {"A", "B"});
  }

  const std::vector<std::size_t>& dims() const { return dims_; }
  const Labels& labels() const { return labels_; }
  std::size_t size() const { return dims_.size(); }
  bool empty() const { return dims_.empty(); }

  std::size_t dimension() const {
    std::size_t d = 1;
    for (auto x : dims_) d *= x;
    return d;
  }

  bool contains(const std::string& label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
  }

  std::size_t index_of(const std::string& label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) throw Error("unknown subsystem label: " + label);
    return static_cast<std::size_t>(it - labels_.begin());
  }

  std::size_t dim_of(const std::string& label) const { return dims_[index_of(label)]; }

  std::vector<std::size_t> indices_of(const Labels& labels) const {
    std::vector<std::size_t> idx;
    idx.reserve(labels.size());
    for (const auto& l : labels) idx.push_back(index_of(l));
    return idx;
  }

  // Subsystems listed in `labels`, in that order.
  HilbertLayout select(const Labels& labels) const {
    std::vector<std::size_t> d;
    for (const auto& l : labels) d.push_back(dim_of(l));
    return HilbertLayout(std::move(d), labels);
  }

  HilbertLayout concat(const HilbertLayout& other) const {
    auto d = dims_;
    auto l = labels_;
    d.insert(d.end(), other.dims_.begin(), other.dims_.end());
    l.insert(l.end(), other.labels_.begin(), other.labels_.end());
    return HilbertLayout(std::move(d), std::move(l));
  }

  // Same layout with every label passed through `rename`.
  template <typename F>
  HilbertLayout relabeled(F&& rename) const {
    Labels l;
    for (const auto& s : labels_) l.push_back(rename(s));
    return HilbertLayout(dims_, std::move(l));
  }

  friend bool operator==(const HilbertLayout& a, const HilbertLayout& b) {
    return a.dims_ == b.dims_ && a.labels_ == b.labels_;
  }

 private:
  std::vector<std::size_t> dims_;
  Labels labels_;
};

// ---------------------------------------------------------------------------
// Kernels on raw matrices

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

// Basis-index map for reordering tensor factors: new index i <- old index map[i].
// `order[k]` names the old factor that becomes new factor k.
inline std::vector<std::size_t> factor_permutation_map(const std::vector<std::size_t>& dims,
                                                       const std::vector<std::size_t>& order) {
  const std::size_t n = dims.size();
  std::vector<std::size_t> old_stride(n, 1);
  for (std::size_t k = n; k-- > 1;) old_stride[k - 1] = old_stride[k] * dims[k];
  std::size_t total = 1;
  for (auto d : dims) total *= d;

  std::vector<std::size_t> new_dims(n);
  for (std::size_t k = 0; k < n; ++k) new_dims[k] = dims[order[k]];

  std::vector<std::size_t> map(total);
  std::vector<std::size_t> digit(n, 0);
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t old = 0;
    for (std::size_t k = 0; k < n; ++k) old += digit[k] * old_stride[order[k]];
    map[i] = old;
    for (std::size_t k = n; k-- > 0;) {
      if (++digit[k] < new_dims[k]) break;
      digit[k] = 0;
    }
  }
  return map;
}

inline Matrix reorder_factors(const Matrix& m, const std::vector<std::size_t>& dims,
                              const std::vector<std::size_t>& order) {
  const auto map = factor_permutation_map(dims, order);
  const auto n = static_cast<Eigen::Index>(map.size());
  Matrix out(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) out(i, j) = m(map[i], map[j]);
  }
  return out;
}

inline Vector reorder_factors(const Vector& v, const std::vector<std::size_t>& dims,
                              const std::vector<std::size_t>& order) {
  const auto map = factor_permutation_map(dims, order);
  Vector out(static_cast<Eigen::Index>(map.size()));
  for (std::size_t i = 0; i < map.size(); ++i) out(i) = v(map[i]);
  return out;
}

// Traces out every factor not in `keep` (indices into dims); kept factors stay
// in their original relative order.
inline Matrix partial_trace_indices(const Matrix& m, const std::vector<std::size_t>& dims,
                                    std::vector<std::size_t> keep) {
  std::sort(keep.begin(), keep.end());
  std::vector<std::size_t> order = keep;
  std::size_t kept_dim = 1;
  for (auto k : keep) kept_dim *= dims[k];
  for (std::size_t k = 0; k < dims.size(); ++k) {
    if (!std::binary_search(keep.begin(), keep.end(), k)) order.push_back(k);
  }
  const Matrix r = reorder_factors(m, dims, order);
  const auto kd = static_cast<Eigen::Index>(kept_dim);
  const Eigen::Index td = r.rows() / kd;
  Matrix out = Matrix::Zero(kd, kd);
  for (Eigen::Index i = 0; i < kd; ++i) {
    for (Eigen::Index j = 0; j < kd; ++j) {
      Complex acc = 0;
      for (Eigen::Index t = 0; t < td; ++t) acc += r(i * td + t, j * td + t);
      out(i, j) = acc;
    }
  }
  return out;
}

struct HermitianEigen {
  RealVector values;  // ascending
  Matrix vectors;     // columns are eigenvectors
};

// The single eigen-kernel behind entropies, square roots and trace norms.
inline HermitianEigen hermitian_eigen(const Matrix& m) {
  const Matrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
  if (solver.info() != Eigen::Success) throw Error("Hermitian eigendecomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

inline double hermiticity_defect(const Matrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

inline Matrix psd_sqrt(const Matrix& m) {
  auto e = hermitian_eigen(m);
  RealVector s = e.values.unaryExpr([](double x) { return x > tol::kEigenClip ? std::sqrt(x) : 0.0; });
  return e.vectors * s.asDiagonal() * e.vectors.adjoint();
}

// Inverse square root on the support; used to renormalize Kraus families.
inline Matrix psd_inverse_sqrt(const Matrix& m) {
  auto e = hermitian_eigen(m);
  RealVector s = e.values.unaryExpr(
      [](double x) { return x > tol::kRank ? 1.0 / std::sqrt(x) : 0.0; });
  return e.vectors * s.asDiagonal() * e.vectors.adjoint();
}

// Sum of singular values.
inline double trace_norm(const Matrix& m) {
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

inline double trace_norm_hermitian(const Matrix& m) {
  return hermitian_eigen(m).values.cwiseAbs().sum();
}

inline double entropy_of_spectrum(const RealVector& values) {
  double s = 0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    const double x = values(i);
    if (x < -tol::kNegativeEigen) throw Error("negative eigenvalue in entropy: " + std::to_string(x));
    if (x > tol::kEigenClip) s -= x * std::log2(x);
  }
  return s;
}

inline double matrix_entropy(const Matrix& m) { return entropy_of_spectrum(hermitian_eigen(m).values); }

// ---------------------------------------------------------------------------
// State types

// Positive semidefinite operator of trace at most one (possibly sub-normalized).
class PsdOperator {
 public:
  PsdOperator() = default;
  PsdOperator(HilbertLayout layout, Matrix entries) : layout_(std::move(layout)), m_(std::move(entries)) {
    check_shape();
    if (hermiticity_defect(m_) > tol::kHermitian) throw Error("PsdOperator: not Hermitian");
    const double min_eig = hermitian_eigen(m_).values.minCoeff();
    if (min_eig < -tol::kNegativeEigen) throw Error("PsdOperator: not positive semidefinite");
    if (trace() > 1 + tol::kTrace) throw Error("PsdOperator: trace exceeds one");
  }

  // Skips the PSD test; for results of maps known to preserve positivity.
  static PsdOperator unchecked(HilbertLayout layout, Matrix entries) {
    PsdOperator p;
    p.layout_ = std::move(layout);
    p.m_ = std::move(entries);
    p.check_shape();
    return p;
  }

  const HilbertLayout& layout() const { return layout_; }
  const Matrix& matrix() const { return m_; }
  double trace() const { return m_.trace().real(); }

 private:
  void check_shape() const {
    const auto d = static_cast<Eigen::Index>(layout_.dimension());
    if (m_.rows() != d || m_.cols() != d) throw Error("operator shape does not match layout");
  }

  HilbertLayout layout_;
  Matrix m_;
};

class DensityMatrix {
 public:
  DensityMatrix() = default;

  DensityMatrix(HilbertLayout layout, Matrix entries) : layout_(std::move(layout)), m_(std::move(entries)) {
    check_shape();
    if (hermiticity_defect(m_) > tol::kHermitian) throw Error("DensityMatrix: not Hermitian");
    if (std::abs(m_.trace() - Complex(1.0)) > tol::kTrace) {
      throw Error("DensityMatrix: trace " + std::to_string(m_.trace().real()) + " != 1");
    }
    if (hermitian_eigen(m_).values.minCoeff() < -tol::kNegativeEigen) {
      throw Error("DensityMatrix: negative eigenvalue");
    }
  }

  static DensityMatrix unchecked(HilbertLayout layout, Matrix entries) {
    DensityMatrix d;
    d.layout_ = std::move(layout);
    d.m_ = std::move(entries);
    d.check_shape();
    return d;
  }

  // Renormalizes a positive operator of nonzero trace.
  static DensityMatrix normalized(const PsdOperator& op) {
    const double t = op.trace();
    if (t <= 0) throw Error("cannot normalize an operator of zero trace");
    return unchecked(op.layout(), op.matrix() / t);
  }

  static DensityMatrix maximally_mixed(HilbertLayout layout) {
    const auto d = static_cast<Eigen::Index>(layout.dimension());
    return unchecked(std::move(layout), Matrix::Identity(d, d) / static_cast<double>(d));
  }

  static DensityMatrix diagonal(HilbertLayout layout, const std::vector<double>& p) {
    const auto d = static_cast<Eigen::Index>(layout.dimension());
    if (static_cast<Eigen::Index>(p.size()) != d) throw Error("diagonal: size mismatch");
    Matrix m = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) m(i, i) = p[static_cast<std::size_t>(i)];
    return DensityMatrix(std::move(layout), std::move(m));
  }

  const HilbertLayout& layout() const { return layout_; }
  const Matrix& matrix() const { return m_; }
  double trace() const { return m_.trace().real(); }
  PsdOperator as_operator() const { return PsdOperator::unchecked(layout_, m_); }

  // Same entries, new labels (dims must agree).
  DensityMatrix relabeled(const Labels& labels) const {
    return unchecked(HilbertLayout(layout_.dims(), labels), m_);
  }

 private:
  void check_shape() const {
    const auto d = static_cast<Eigen::Index>(layout_.dimension());
    if (m_.rows() != d || m_.cols() != d) throw Error("DensityMatrix: shape does not match layout");
  }

  HilbertLayout layout_;
  Matrix m_;
};

class PureState {
 public:
  PureState() = default;
  PureState(HilbertLayout layout, Vector amplitudes) : layout_(std::move(layout)), v_(std::move(amplitudes)) {
    if (v_.size() != static_cast<Eigen::Index>(layout_.dimension())) {
      throw Error("PureState: amplitude count does not match layout");
    }
    if (std::abs(v_.norm() - 1.0) > tol::kTrace) throw Error("PureState: not normalized");
  }

  static PureState basis(HilbertLayout layout, std::size_t index) {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(layout.dimension()));
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return PureState(std::move(layout), std::move(v));
  }

  // (1/sqrt d) sum_i |i>|i> on labels {a, b}.
  static PureState maximally_entangled(std::size_t d, const std::string& a = "A",
                                       const std::string& b = "B") {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(d * d));
    for (std::size_t i = 0; i < d; ++i) v(static_cast<Eigen::Index>(i * d + i)) = 1.0 / std::sqrt(double(d));
    return PureState(HilbertLayout({d, d}, {a, b}), std::move(v));
  }

  const HilbertLayout& layout() const { return layout_; }
  const Vector& amplitudes() const { return v_; }

  DensityMatrix density() const { return DensityMatrix::unchecked(layout_, v_ * v_.adjoint()); }

  PureState relabeled(const Labels& labels) const {
    PureState p;
    p.layout_ = HilbertLayout(layout_.dims(), labels);
    p.v_ = v_;
    return p;
  }

 private:
  HilbertLayout layout_;
  Vector v_;
};

// ---------------------------------------------------------------------------
// Structural operations

inline DensityMatrix tensor(const DensityMatrix& a, const DensityMatrix& b,
                            std::size_t cap = kDefaultDimensionCap) {
  if (a.layout().dimension() * b.layout().dimension() > cap) {
    throw Error("tensor: ambient dimension exceeds cap " + std::to_string(cap));
  }
  return DensityMatrix::unchecked(a.layout().concat(b.layout()), kron(a.matrix(), b.matrix()));
}

inline PureState tensor(const PureState& a, const PureState& b, std::size_t cap = kDefaultDimensionCap) {
  if (a.layout().dimension() * b.layout().dimension() > cap) {
    throw Error("tensor: ambient dimension exceeds cap " + std::to_string(cap));
  }
  return PureState(a.layout().concat(b.layout()), kron(a.amplitudes(), b.amplitudes()));
}

// Copies of `rho` with labels suffixed 1..l (A,B -> A1,B1,A2,B2,...).
inline DensityMatrix tensor_power(const DensityMatrix& rho, std::size_t l,
                                  std::size_t cap = kDefaultDimensionCap) {
  if (l == 0) throw Error("tensor_power: l must be positive");
  auto suffixed = [&](std::size_t k) {
    Labels out;
    for (const auto& s : rho.layout().labels()) out.push_back(s + std::to_string(k));
    return rho.relabeled(out);
  };
  DensityMatrix out = suffixed(1);
  for (std::size_t k = 2; k <= l; ++k) out = tensor(out, suffixed(k), cap);
  return out;
}

// Moves the subsystems into the order given by `labels` (a permutation of the layout labels).
inline DensityMatrix reorder(const DensityMatrix& rho, const Labels& labels) {
  if (labels.size() != rho.layout().size()) throw Error("reorder: label count mismatch");
  const auto order = rho.layout().indices_of(labels);
  return DensityMatrix::unchecked(rho.layout().select(labels),
                                  reorder_factors(rho.matrix(), rho.layout().dims(), order));
}

inline PsdOperator reorder(const PsdOperator& op, const Labels& labels) {
  if (labels.size() != op.layout().size()) throw Error("reorder: label count mismatch");
  const auto order = op.layout().indices_of(labels);
  return PsdOperator::unchecked(op.layout().select(labels),
                                reorder_factors(op.matrix(), op.layout().dims(), order));
}

inline PureState reorder(const PureState& psi, const Labels& labels) {
  if (labels.size() != psi.layout().size()) throw Error("reorder: label count mismatch");
  const auto order = psi.layout().indices_of(labels);
  return PureState(psi.layout().select(labels),
                   reorder_factors(psi.amplitudes(), psi.layout().dims(), order));
}

inline Matrix partial_trace_matrix(const Matrix& m, const HilbertLayout& layout, const Labels& keep) {
  if (keep.empty()) throw Error("partial_trace: keep set must be nonempty");
  return partial_trace_indices(m, layout.dims(), layout.indices_of(keep));
}

// Marginal on `keep`; kept subsystems retain their layout order.
inline DensityMatrix partial_trace(const DensityMatrix& rho, const Labels& keep) {
  if (keep.empty()) throw Error("partial_trace: keep set must be nonempty");
  auto idx = rho.layout().indices_of(keep);
  std::sort(idx.begin(), idx.end());
  Labels ordered;
  for (auto i : idx) ordered.push_back(rho.layout().labels()[i]);
  return DensityMatrix::unchecked(rho.layout().select(ordered),
                                  partial_trace_indices(rho.matrix(), rho.layout().dims(), idx));
}

inline PsdOperator partial_trace(const PsdOperator& op, const Labels& keep) {
  if (keep.empty()) throw Error("partial_trace: keep set must be nonempty");
  auto idx = op.layout().indices_of(keep);
  std::sort(idx.begin(), idx.end());
  Labels ordered;
  for (auto i : idx) ordered.push_back(op.layout().labels()[i]);
  return PsdOperator::unchecked(op.layout().select(ordered),
                                partial_trace_indices(op.matrix(), op.layout().dims(), idx));
}

// Eigendecomposition purification; the environment "E" has dimension rank(rho).
inline PureState purify(const DensityMatrix& rho, const std::string& env_label = "E") {
  const auto e = hermitian_eigen(rho.matrix());
  std::vector<Eigen::Index> support;
  for (Eigen::Index i = e.values.size(); i-- > 0;) {
    if (e.values(i) > tol::kRank) support.push_back(i);
  }
  const auto d = rho.matrix().rows();
  const auto r = static_cast<Eigen::Index>(support.size());
  Vector psi = Vector::Zero(d * r);
  for (Eigen::Index k = 0; k < r; ++k) {
    const double w = std::sqrt(e.values(support[static_cast<std::size_t>(k)]));
    const auto col = e.vectors.col(support[static_cast<std::size_t>(k)]);
    for (Eigen::Index i = 0; i < d; ++i) psi(i * r + k) += w * col(i);
  }
  psi.normalize();
  return PureState(rho.layout().concat(HilbertLayout::single(static_cast<std::size_t>(r), env_label)),
                   std::move(psi));
}

inline Eigen::VectorXd schmidt_coefficients(const PureState& psi, const Labels& cut) {
  const auto& layout = psi.layout();
  if (cut.empty() || cut.size() >= layout.size()) throw Error("schmidt: cut must be a proper nonempty subset");
  std::vector<std::size_t> order = layout.indices_of(cut);
  std::size_t left = 1;
  for (auto i : order) left *= layout.dims()[i];
  for (std::size_t k = 0; k < layout.size(); ++k) {
    if (std::find(order.begin(), order.end(), k) == order.end()) order.push_back(k);
  }
  const Vector v = reorder_factors(psi.amplitudes(), layout.dims(), order);
  const auto rows = static_cast<Eigen::Index>(left);
  const Eigen::Index cols = v.size() / rows;
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) m.row(i) = v.segment(i * cols, cols).transpose();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

inline std::size_t schmidt_rank(const PureState& psi, const Labels& cut) {
  const auto s = schmidt_coefficients(psi, cut);
  return static_cast<std::size_t>((s.array() > tol::kRank).count());
}

// ---------------------------------------------------------------------------
// Fidelity and distances

// F(a,b) = || sqrt(a) sqrt(b) ||_1^2.
inline double fidelity(const Matrix& a, const Matrix& b) {
  const double n = trace_norm(psd_sqrt(a) * psd_sqrt(b));
  return n * n;
}

inline double fidelity(const PsdOperator& a, const PsdOperator& b) {
  if (!(a.layout().dims() == b.layout().dims())) throw Error("fidelity: layout mismatch");
  for (const auto* op : {&a, &b}) {
    if (hermitian_eigen(op->matrix()).values.minCoeff() < -tol::kNegativeEigen) {
      throw Error("fidelity: argument is not positive semidefinite");
    }
  }
  return fidelity(a.matrix(), b.matrix());
}

inline double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  return fidelity(a.as_operator(), b.as_operator());
}

// Inner-product form <psi, a psi>, valid when one argument is pure.
inline double fidelity(const Matrix& a, const Vector& psi) { return (psi.adjoint() * a * psi)(0, 0).real(); }

inline double trace_distance(const Matrix& a, const Matrix& b) { return trace_norm_hermitian(a - b); }
inline double trace_distance(const DensityMatrix& a, const DensityMatrix& b) {
  if (!(a.layout().dims() == b.layout().dims())) throw Error("trace_distance: layout mismatch");
  return trace_distance(a.matrix(), b.matrix());
}
inline double trace_distance(const PsdOperator& a, const PsdOperator& b) {
  if (!(a.layout().dims() == b.layout().dims())) throw Error("trace_distance: layout mismatch");
  return trace_distance(a.matrix(), b.matrix());
}

// ---------------------------------------------------------------------------
// Entropies

inline double von_neumann_entropy(const DensityMatrix& rho) { return matrix_entropy(rho.matrix()); }

inline double marginal_entropy(const DensityMatrix& rho, const Labels& keep) {
  if (keep.size() == rho.layout().size()) return von_neumann_entropy(rho);
  return matrix_entropy(partial_trace_matrix(rho.matrix(), rho.layout(), keep));
}

// S(X|Y) = S(rho) - S(rho_Y) for the full state rho on XY.
inline double conditional_entropy(const DensityMatrix& rho, const Labels& given) {
  return von_neumann_entropy(rho) - marginal_entropy(rho, given);
}

// I(X;Y) evaluated on the XY marginal.
inline double mutual_information(const DensityMatrix& rho, const Labels& x, const Labels& y) {
  Labels xy = x;
  xy.insert(xy.end(), y.begin(), y.end());
  return marginal_entropy(rho, x) + marginal_entropy(rho, y) - marginal_entropy(rho, xy);
}

// I_c(X>Y) = S(rho_Y) - S(rho_XY).
inline double coherent_information(const DensityMatrix& rho, const Labels& from, const Labels& to) {
  Labels xy = from;
  xy.insert(xy.end(), to.begin(), to.end());
  return marginal_entropy(rho, to) - marginal_entropy(rho, xy);
}

inline double shannon_entropy(const std::vector<double>& p) {
  double h = 0;
  for (double x : p) {
    if (x > tol::kEigenClip) h -= x * std::log2(x);
  }
  return h;
}

inline double binary_entropy(double x) { return shannon_entropy({x, 1.0 - x}); }

// D(p||q) in bits; +infinity unless p << q.
inline double relative_entropy(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw Error("relative_entropy: support size mismatch");
  double d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0) continue;
    if (q[i] <= 0) return std::numeric_limits<double>::infinity();
    d += p[i] * std::log2(p[i] / q[i]);
  }
  return std::max(d, 0.0);
}

// nu(x) = 4 x log dim + 2 h(x), continuity modulus for conditional entropies.
inline double nu(double x, std::size_t dim) {
  if (!(x > 0 && x <= 0.5)) throw Error("nu: argument outside (0, 1/2]");
  return 4.0 * x * std::log2(double(dim)) + 2.0 * binary_entropy(x);
}

// Local depolarization N_{A,g} (x) N_{B,g} on a bipartite state.
inline DensityMatrix depolarize_local(const DensityMatrix& rho, double gamma) {
  const auto& layout = rho.layout();
  if (layout.size() != 2) throw Error("depolarize_local: layout is not bipartite");
  if (gamma < 0 || gamma > 1) throw Error("depolarize_local: gamma outside [0,1]");
  const auto da = static_cast<Eigen::Index>(layout.dims()[0]);
  const auto db = static_cast<Eigen::Index>(layout.dims()[1]);
  const Matrix ra = partial_trace_indices(rho.matrix(), layout.dims(), {0});
  const Matrix rb = partial_trace_indices(rho.matrix(), layout.dims(), {1});
  const Matrix pa = Matrix::Identity(da, da) / double(da);
  const Matrix pb = Matrix::Identity(db, db) / double(db);
  const Matrix out = (1 - gamma) * (1 - gamma) * rho.matrix() +
                     gamma * (1 - gamma) * (kron(ra, pb) + kron(pa, rb)) + gamma * gamma * kron(pa, pb);
  return DensityMatrix::unchecked(layout, out);
}

}  // namespace avqslab
