// Young frames, symmetric-group characters and the isotypic projectors
// P_lambda on (C^d)^{(x) l}, used for spectrum estimation and for the
// entropy-band instrument.
//
// Projectors are built from the character formula
//
//   P_lambda = (dim_lambda / l!) sum_{sigma in S_l} chi_lambda(sigma) U_sigma,
//
// which costs l! * d^l and is meant for l <= 8.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numeric>
#include <utility>
#include <vector>

#include "avqslab/qcore.hpp"

namespace avqslab {

using Partition = std::vector<int>;

inline constexpr int kMaxExhaustiveBlocklength = 8;

inline std::int64_t factorial(int n) {
  std::int64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline Partition trimmed(Partition p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
  return p;
}

// All partitions of n into at most `max_parts` parts, decreasing lexicographic order.
inline std::vector<Partition> partitions(int n, int max_parts) {
  std::vector<Partition> out;
  Partition cur;
  auto rec = [&](auto&& self, int remaining, int max_part) -> void {
    if (remaining == 0) {
      out.push_back(cur);
      return;
    }
    if (static_cast<int>(cur.size()) == max_parts) return;
    for (int part = std::min(remaining, max_part); part >= 1; --part) {
      cur.push_back(part);
      self(self, remaining - part, part);
      cur.pop_back();
    }
  };
  rec(rec, n, n);
  return out;
}

class YoungFrame {
 public:
  YoungFrame() = default;
  explicit YoungFrame(Partition parts) : parts_(std::move(parts)) {
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (parts_[i] < 0) throw Error("YoungFrame: negative part");
      if (i > 0 && parts_[i] > parts_[i - 1]) throw Error("YoungFrame: parts must be non-increasing");
    }
    boxes_ = std::accumulate(parts_.begin(), parts_.end(), 0);
  }

  const Partition& parts() const { return parts_; }
  int boxes() const { return boxes_; }
  int rows() const { return static_cast<int>(trimmed(parts_).size()); }

  // Normalized box lengths lambda_i / l, padded to length d.
  std::vector<double> normalized(int d) const {
    std::vector<double> p(static_cast<std::size_t>(d), 0.0);
    for (std::size_t i = 0; i < parts_.size() && i < p.size(); ++i) p[i] = double(parts_[i]) / boxes_;
    return p;
  }

  double entropy() const { return shannon_entropy(normalized(static_cast<int>(parts_.size()))); }

  friend bool operator==(const YoungFrame& a, const YoungFrame& b) {
    return trimmed(a.parts_) == trimmed(b.parts_);
  }

 private:
  Partition parts_;
  int boxes_ = 0;
};

// Young frames with at most d rows and l boxes, each padded to d parts.
inline std::vector<YoungFrame> enumerate_frames(int d, int l) {
  if (d < 1 || l < 1) throw Error("enumerate_frames: d and l must be positive");
  std::vector<YoungFrame> frames;
  for (auto p : partitions(l, d)) {
    p.resize(static_cast<std::size_t>(d), 0);
    frames.emplace_back(std::move(p));
  }
  return frames;
}

// Hook-length formula.
inline std::int64_t irrep_dimension(const YoungFrame& frame) {
  const Partition p = trimmed(frame.parts());
  std::int64_t hooks = 1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (int j = 0; j < p[i]; ++j) {
      int below = 0;
      for (std::size_t k = i + 1; k < p.size() && p[k] > j; ++k) ++below;
      hooks *= (p[i] - j - 1) + below + 1;
    }
  }
  return factorial(frame.boxes()) / hooks;
}

namespace detail {

// Murnaghan-Nakayama on beta-sets: removing a rim hook of length r moves a
// bead from b to b - r; the sign counts the beads jumped over.
inline std::int64_t mn_character(const Partition& lambda, const Partition& mu, std::size_t from,
                                 std::map<std::pair<Partition, Partition>, std::int64_t>& memo) {
  if (from == mu.size()) return lambda.empty() ? 1 : 0;
  const Partition rest(mu.begin() + static_cast<std::ptrdiff_t>(from), mu.end());
  const auto key = std::make_pair(lambda, rest);
  if (auto it = memo.find(key); it != memo.end()) return it->second;

  const int r = mu[from];
  const int n = static_cast<int>(lambda.size());
  std::vector<int> beta(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) beta[static_cast<std::size_t>(i)] = lambda[static_cast<std::size_t>(i)] + (n - 1 - i);

  std::int64_t total = 0;
  for (int i = 0; i < n; ++i) {
    const int b = beta[static_cast<std::size_t>(i)];
    const int target = b - r;
    if (target < 0) continue;
    if (std::find(beta.begin(), beta.end(), target) != beta.end()) continue;
    int jumped = 0;
    for (int x : beta) {
      if (x > target && x < b) ++jumped;
    }
    std::vector<int> next = beta;
    next[static_cast<std::size_t>(i)] = target;
    std::sort(next.begin(), next.end(), std::greater<>());
    Partition smaller;
    for (int k = 0; k < n; ++k) smaller.push_back(next[static_cast<std::size_t>(k)] - (n - 1 - k));
    smaller = trimmed(smaller);
    const std::int64_t sub = mn_character(smaller, mu, from + 1, memo);
    total += (jumped % 2 == 0 ? 1 : -1) * sub;
  }
  memo.emplace(key, total);
  return total;
}

struct CharacterCache {
  std::mutex mutex;
  std::map<std::pair<Partition, Partition>, std::int64_t> memo;
};

inline CharacterCache& character_cache() {
  static CharacterCache cache;
  return cache;
}

}  // namespace detail

// Irreducible character chi_lambda evaluated on the class of cycle type mu.
inline std::int64_t character(const YoungFrame& frame, const Partition& cycle_type) {
  Partition mu = trimmed(cycle_type);
  std::sort(mu.begin(), mu.end(), std::greater<>());
  if (std::accumulate(mu.begin(), mu.end(), 0) != frame.boxes()) {
    throw Error("character: frame and cycle type have different sizes");
  }
  auto& cache = detail::character_cache();
  std::lock_guard<std::mutex> lock(cache.mutex);
  return detail::mn_character(trimmed(frame.parts()), mu, 0, cache.memo);
}

inline Partition cycle_type(const std::vector<std::size_t>& perm) {
  std::vector<bool> seen(perm.size(), false);
  Partition type;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (seen[i]) continue;
    int len = 0;
    for (std::size_t j = i; !seen[j]; j = perm[j]) {
      seen[j] = true;
      ++len;
    }
    type.push_back(len);
  }
  std::sort(type.begin(), type.end(), std::greater<>());
  return type;
}

// Number of permutations with cycle type mu: l! / prod_i i^{m_i} m_i!.
inline std::int64_t class_size(const Partition& mu) {
  const int l = std::accumulate(mu.begin(), mu.end(), 0);
  std::map<int, int> mult;
  for (int part : mu) ++mult[part];
  std::int64_t z = 1;
  for (auto [part, m] : mult) {
    for (int k = 0; k < m; ++k) z *= part;
    z *= factorial(m);
  }
  return factorial(l) / z;
}

struct IsotypicProjector {
  YoungFrame frame;
  int d = 0;
  Matrix matrix;

  double rank() const { return matrix.trace().real(); }
};

inline IsotypicProjector isotypic_projector(const YoungFrame& frame, int d) {
  const int l = frame.boxes();
  if (frame.rows() > d) throw Error("isotypic_projector: frame has more rows than the local dimension");
  if (l > kMaxExhaustiveBlocklength) throw Error("isotypic_projector: blocklength above exhaustive cap");

  std::size_t total = 1;
  for (int i = 0; i < l; ++i) total *= static_cast<std::size_t>(d);
  std::vector<std::size_t> stride(static_cast<std::size_t>(l), 1);
  for (int k = l - 1; k > 0; --k) stride[static_cast<std::size_t>(k - 1)] = stride[static_cast<std::size_t>(k)] * d;

  std::vector<std::vector<int>> digits(total, std::vector<int>(static_cast<std::size_t>(l)));
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t x = i;
    for (int k = l - 1; k >= 0; --k) {
      digits[i][static_cast<std::size_t>(k)] = static_cast<int>(x % static_cast<std::size_t>(d));
      x /= static_cast<std::size_t>(d);
    }
  }

  const double scale = double(irrep_dimension(frame)) / double(factorial(l));
  std::map<Partition, double> coef;
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(total));
  std::vector<std::size_t> sigma(static_cast<std::size_t>(l));
  std::iota(sigma.begin(), sigma.end(), 0);
  do {
    const auto type = cycle_type(sigma);
    auto it = coef.find(type);
    if (it == coef.end()) it = coef.emplace(type, scale * double(character(frame, type))).first;
    const double c = it->second;
    if (c == 0.0) continue;
    for (std::size_t i = 0; i < total; ++i) {
      std::size_t j = 0;
      for (int k = 0; k < l; ++k) {
        j += static_cast<std::size_t>(digits[i][sigma[static_cast<std::size_t>(k)]]) * stride[static_cast<std::size_t>(k)];
      }
      p(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) += c;
    }
  } while (std::next_permutation(sigma.begin(), sigma.end()));

  return {frame, d, p.cast<Complex>()};
}

// Spectrum sorted decreasingly, ties kept in input order.
inline std::vector<double> sorted_spectrum(const DensityMatrix& rho) {
  const auto e = hermitian_eigen(rho.matrix());
  std::vector<double> r(e.values.data(), e.values.data() + e.values.size());
  for (auto& x : r) x = std::max(x, 0.0);
  std::stable_sort(r.begin(), r.end(), std::greater<>());
  return r;
}

// tr(P_lambda rho^{(x) l}) for a precomputed projector.
inline double spectrum_probability(const IsotypicProjector& proj, const DensityMatrix& rho) {
  if (rho.layout().size() != 1 || rho.layout().dimension() != static_cast<std::size_t>(proj.d)) {
    throw Error("spectrum_probability: state must be a single system of the projector's dimension");
  }
  Matrix power = rho.matrix();
  for (int k = 1; k < proj.frame.boxes(); ++k) power = kron(power, rho.matrix());
  return (proj.matrix.cwiseProduct(power.transpose())).sum().real();
}

inline double spectrum_probability(const YoungFrame& frame, const DensityMatrix& rho, int l) {
  if (frame.boxes() != l) throw Error("spectrum_probability: frame does not have l boxes");
  return spectrum_probability(isotypic_projector(frame, static_cast<int>(rho.layout().dimension())), rho);
}

// (l+1)^{d(d-1)/2} 2^{-l D(lambda_bar || r)}; zero when D is infinite.
inline double keyl_werner_bound(const YoungFrame& frame, const std::vector<double>& spectrum) {
  const int d = static_cast<int>(spectrum.size());
  const int l = frame.boxes();
  const double div = relative_entropy(frame.normalized(d), spectrum);
  if (std::isinf(div)) return 0.0;
  return std::pow(double(l + 1), 0.5 * d * (d - 1)) * std::exp2(-l * div);
}

// ---------------------------------------------------------------------------
// Entropy-band instrument

struct EntropyBandInstrument {
  double eta = 0;
  int d = 0;
  int l = 0;
  std::vector<double> edges;                       // s_0 = 0 < s_1 < ... < s_N = log d
  std::vector<std::vector<std::size_t>> members;   // frame indices per band
  std::vector<YoungFrame> frames;
  std::vector<IsotypicProjector> frame_projectors;
  std::vector<Matrix> projectors;                  // p_i = sum of member P_lambda

  std::size_t band_count() const { return projectors.size(); }

  // Band index (0-based) for an entropy value: I_1 = [s_0, s_1], I_i = (s_{i-1}, s_i].
  std::size_t band_of(double h) const {
    constexpr double slack = 1e-12;
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (h <= edges[i] + slack) return i - 1;
    }
    return edges.size() - 2;
  }
};

inline std::vector<double> band_edges(double eta, int d) {
  const double top = std::log2(double(d));
  std::vector<double> edges{0.0};
  while (edges.back() + eta < top - 1e-12) edges.push_back(edges.back() + eta);
  edges.push_back(top);
  return edges;
}

inline EntropyBandInstrument entropy_band_instrument(int d, int l, double eta) {
  if (!(eta > 0 && eta <= 1)) throw Error("entropy_band_instrument: eta outside (0, 1]");
  if (d < 2) throw Error("entropy_band_instrument: need d >= 2");
  EntropyBandInstrument inst;
  inst.eta = eta;
  inst.d = d;
  inst.l = l;
  inst.edges = band_edges(eta, d);
  inst.frames = enumerate_frames(d, l);
  const std::size_t n = inst.edges.size() - 1;
  inst.members.assign(n, {});
  std::size_t total = 1;
  for (int i = 0; i < l; ++i) total *= static_cast<std::size_t>(d);
  const auto dim = static_cast<Eigen::Index>(total);
  inst.projectors.assign(n, Matrix::Zero(dim, dim));
  for (std::size_t f = 0; f < inst.frames.size(); ++f) {
    inst.frame_projectors.push_back(isotypic_projector(inst.frames[f], d));
    const std::size_t band = inst.band_of(inst.frames[f].entropy());
    inst.members[band].push_back(f);
    inst.projectors[band] += inst.frame_projectors.back().matrix;
  }
  return inst;
}

// tr(p_i rho^{(x) l}) for every band.
inline std::vector<double> band_masses(const EntropyBandInstrument& inst, const DensityMatrix& rho) {
  std::vector<double> frame_mass;
  for (const auto& p : inst.frame_projectors) frame_mass.push_back(spectrum_probability(p, rho));
  std::vector<double> masses(inst.band_count(), 0.0);
  for (std::size_t b = 0; b < inst.band_count(); ++b) {
    for (auto f : inst.members[b]) masses[b] += frame_mass[f];
  }
  return masses;
}

// sum over bands j with |j - i| > 1 of tr(p_j rho^{(x) l}).
inline double off_band_mass(const EntropyBandInstrument& inst, const DensityMatrix& rho, std::size_t band) {
  const auto masses = band_masses(inst, rho);
  double off = 0;
  for (std::size_t j = 0; j < masses.size(); ++j) {
    const auto gap = j > band ? j - band : band - j;
    if (gap > 1) off += masses[j];
  }
  return off;
}

// ---------------------------------------------------------------------------
// Continuity modulus and the Pinsker-derived exponent constant

// f(eps) = t log(d-1) + h(t), t = min(eps/2, 1 - 1/d): bounds |H(p) - H(q)|
// for ||p - q||_1 = eps on a d-letter alphabet.
inline double entropy_modulus(double eps, int d) {
  if (d < 2) throw Error("entropy_modulus: need d >= 2");
  const double t = std::min(eps / 2.0, 1.0 - 1.0 / d);
  return t * std::log2(double(d - 1)) + binary_entropy(t);
}

// Smallest eps with f(eps) = eta, by bisection on t in [0, 1 - 1/d].
inline double inverse_entropy_modulus(double eta, int d) {
  if (d < 2) throw Error("inverse_entropy_modulus: need d >= 2");
  if (!(eta > 0 && eta <= std::log2(double(d)) + 1e-12)) {
    throw Error("inverse_entropy_modulus: eta outside (0, log d]");
  }
  double lo = 0.0;
  double hi = 1.0 - 1.0 / d;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid * std::log2(double(d - 1)) + binary_entropy(mid) < eta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 2.0 * hi;
}

// c3(eta) with 2 c3 = f^{-1}(eta)^2 / (2 ln 2).
inline double appendix_constant(double eta, int d) {
  const double e = inverse_entropy_modulus(eta, d);
  return e * e / (4.0 * std::log(2.0));
}

}  // namespace avqslab
