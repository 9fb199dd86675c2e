// Generating sets, compound and arbitrarily varying sources, types,
// permutation robustification and seeded derandomization.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "avqslab/channels.hpp"
#include "avqslab/qcore.hpp"
#include "avqslab/random.hpp"

namespace avqslab {

using Sequence = std::vector<std::size_t>;

inline constexpr std::size_t kMaxExhaustivePermutations = 8;

// Finite labeled family {rho_s} on a common layout.
class StateSet {
 public:
  StateSet() = default;
  StateSet(std::vector<std::string> names, std::vector<DensityMatrix> states)
      : names_(std::move(names)), states_(std::move(states)) {
    if (states_.empty()) throw Error("StateSet: empty set");
    if (names_.size() != states_.size()) throw Error("StateSet: name count does not match state count");
    for (std::size_t i = 0; i < names_.size(); ++i) {
      for (std::size_t j = i + 1; j < names_.size(); ++j) {
        if (names_[i] == names_[j]) throw Error("StateSet: duplicate name " + names_[i]);
      }
    }
    for (const auto& s : states_) {
      if (!(s.layout() == states_.front().layout())) throw Error("StateSet: states have different layouts");
    }
  }

  // Names "0", "1", ...
  explicit StateSet(const std::vector<DensityMatrix>& states) : StateSet(default_names(states.size()), states) {}

  std::size_t size() const { return states_.size(); }
  const HilbertLayout& layout() const { return states_.front().layout(); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<DensityMatrix>& states() const { return states_; }
  const DensityMatrix& operator[](std::size_t i) const { return states_.at(i); }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i) {
      if (names_[i] == name) return i;
    }
    throw Error("StateSet: unknown label " + name);
  }

 private:
  static std::vector<std::string> default_names(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(std::to_string(i));
    return out;
  }

  std::vector<std::string> names_;
  std::vector<DensityMatrix> states_;
};

class MixtureWeights {
 public:
  MixtureWeights() = default;
  explicit MixtureWeights(std::vector<double> p) : p_(std::move(p)) {
    if (p_.empty()) throw Error("MixtureWeights: empty");
    double total = 0;
    for (double x : p_) {
      if (!(x >= 0)) throw Error("MixtureWeights: negative weight");
      total += x;
    }
    if (std::abs(total - 1.0) > 1e-12) throw Error("MixtureWeights: weights do not sum to one");
  }

  static MixtureWeights point(std::size_t n, std::size_t s) {
    std::vector<double> p(n, 0.0);
    p.at(s) = 1.0;
    return MixtureWeights(std::move(p));
  }

  static MixtureWeights uniform(std::size_t n) { return MixtureWeights(std::vector<double>(n, 1.0 / double(n))); }

  const std::vector<double>& values() const { return p_; }
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }

 private:
  std::vector<double> p_;
};

// All distributions on n points with entries in multiples of 1/steps.
inline std::vector<MixtureWeights> simplex_grid(std::size_t n, std::size_t steps) {
  if (n == 0 || steps == 0) throw Error("simplex_grid: n and steps must be positive");
  std::vector<MixtureWeights> out;
  std::vector<std::size_t> counts(n, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
    if (pos + 1 == n) {
      counts[pos] = left;
      std::vector<double> p;
      for (auto c : counts) p.push_back(double(c) / double(steps));
      p.back() = std::max(0.0, 1.0 - std::accumulate(p.begin(), p.end() - 1, 0.0));
      out.emplace_back(std::move(p));
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      counts[pos] = c;
      rec(pos + 1, left - c);
    }
  };
  rec(0, steps);
  return out;
}

// rho_p = sum_s p(s) rho_s
inline DensityMatrix mixture(const StateSet& set, const MixtureWeights& p) {
  if (p.size() != set.size()) throw Error("mixture: weight count does not match set size");
  Matrix m = Matrix::Zero(set[0].matrix().rows(), set[0].matrix().cols());
  for (std::size_t s = 0; s < set.size(); ++s) m += p[s] * set[s].matrix();
  return DensityMatrix::unchecked(set.layout(), m);
}

// rho_{s_1} (x) ... (x) rho_{s_l}, labels suffixed by position (A1,B1,A2,B2,...).
inline DensityMatrix avqs_state(const StateSet& set, const Sequence& seq, std::size_t cap = kDefaultDimensionCap) {
  if (seq.empty()) throw Error("avqs_state: empty sequence");
  auto copy = [&](std::size_t pos) {
    if (seq[pos] >= set.size()) throw Error("avqs_state: unknown label index " + std::to_string(seq[pos]));
    Labels labels;
    for (const auto& s : set.layout().labels()) labels.push_back(s + std::to_string(pos + 1));
    return set[seq[pos]].relabeled(labels);
  };
  DensityMatrix out = copy(0);
  for (std::size_t i = 1; i < seq.size(); ++i) out = tensor(out, copy(i), cap);
  return out;
}

inline Sequence parse_sequence(const StateSet& set, const std::vector<std::string>& names) {
  Sequence out;
  for (const auto& n : names) out.push_back(set.index_of(n));
  return out;
}

inline double hausdorff_distance(const StateSet& x, const StateSet& y) {
  if (!(x.layout().dims() == y.layout().dims())) throw Error("hausdorff_distance: layout mismatch");
  auto directed = [](const StateSet& from, const StateSet& to) {
    double worst = 0;
    for (const auto& a : from.states()) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : to.states()) best = std::min(best, trace_distance(a.matrix(), b.matrix()));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(x, y), directed(y, x));
}

// ---------------------------------------------------------------------------
// Sequences and types

inline std::size_t sequence_count(std::size_t alphabet, std::size_t l) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < l; ++i) {
    if (n > (std::size_t{1} << 40) / std::max<std::size_t>(alphabet, 1)) throw Error("sequence space too large");
    n *= alphabet;
  }
  return n;
}

// Index <-> sequence, first position most significant.
inline Sequence decode_sequence(std::size_t index, std::size_t alphabet, std::size_t l) {
  Sequence s(l);
  for (std::size_t i = l; i-- > 0;) {
    s[i] = index % alphabet;
    index /= alphabet;
  }
  return s;
}

inline std::size_t encode_sequence(const Sequence& s, std::size_t alphabet) {
  std::size_t index = 0;
  for (auto x : s) {
    if (x >= alphabet) throw Error("sequence symbol out of range");
    index = index * alphabet + x;
  }
  return index;
}

inline std::vector<Sequence> all_sequences(std::size_t alphabet, std::size_t l) {
  const std::size_t n = sequence_count(alphabet, l);
  std::vector<Sequence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(decode_sequence(i, alphabet, l));
  return out;
}

inline std::string format_sequence(const Sequence& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ' ';
    out += std::to_string(s[i]);
  }
  return out;
}

// Empirical distribution of a sequence, stored as symbol counts.
struct SequenceType {
  std::vector<std::size_t> counts;

  std::size_t length() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }
  std::vector<double> distribution() const {
    std::vector<double> q;
    const double l = double(length());
    for (auto c : counts) q.push_back(double(c) / l);
    return q;
  }
  bool operator==(const SequenceType&) const = default;
};

inline SequenceType type_of(const Sequence& s, std::size_t alphabet) {
  SequenceType t{std::vector<std::size_t>(alphabet, 0)};
  for (auto x : s) t.counts.at(x) += 1;
  return t;
}

// All types of length-l sequences over an alphabet of the given size; the
// first symbol's count runs from l down to 0.
inline std::vector<SequenceType> enumerate_types(std::size_t alphabet, std::size_t l) {
  if (alphabet == 0 || l == 0) throw Error("enumerate_types: alphabet and l must be positive");
  std::vector<SequenceType> out;
  std::vector<std::size_t> counts(alphabet, 0);
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t pos, std::size_t left) {
    if (pos + 1 == alphabet) {
      counts[pos] = left;
      out.push_back({counts});
      return;
    }
    for (std::size_t c = left + 1; c-- > 0;) {
      counts[pos] = c;
      rec(pos + 1, left - c);
    }
  };
  rec(0, l);
  return out;
}

// f: S^l -> [0,1] as a dense table.
class FidelityFunction {
 public:
  FidelityFunction() = default;
  FidelityFunction(std::size_t alphabet, std::size_t l, std::vector<double> table)
      : alphabet_(alphabet), l_(l), table_(std::move(table)) {
    if (alphabet_ == 0 || l_ == 0) throw Error("FidelityFunction: alphabet and l must be positive");
    if (table_.size() != sequence_count(alphabet_, l_)) throw Error("FidelityFunction: table size mismatch");
    for (auto& v : table_) v = std::clamp(v, 0.0, 1.0);
  }

  static FidelityFunction from(std::size_t alphabet, std::size_t l, const std::function<double(const Sequence&)>& f) {
    std::vector<double> t;
    for (std::size_t i = 0; i < sequence_count(alphabet, l); ++i) t.push_back(f(decode_sequence(i, alphabet, l)));
    return FidelityFunction(alphabet, l, std::move(t));
  }

  static FidelityFunction constant(std::size_t alphabet, std::size_t l, double value) {
    return FidelityFunction(alphabet, l, std::vector<double>(sequence_count(alphabet, l), value));
  }

  // 1 on constant sequences, 0 elsewhere.
  static FidelityFunction constant_indicator(std::size_t alphabet, std::size_t l) {
    return from(alphabet, l, [](const Sequence& s) {
      return std::all_of(s.begin(), s.end(), [&](std::size_t x) { return x == s.front(); }) ? 1.0 : 0.0;
    });
  }

  std::size_t alphabet() const { return alphabet_; }
  std::size_t length() const { return l_; }
  std::size_t size() const { return table_.size(); }
  const std::vector<double>& table() const { return table_; }
  double at(std::size_t index) const { return table_.at(index); }
  double operator()(const Sequence& s) const {
    if (s.size() != l_) throw Error("FidelityFunction: sequence has wrong length");
    return table_[encode_sequence(s, alphabet_)];
  }

 private:
  std::size_t alphabet_ = 0;
  std::size_t l_ = 0;
  std::vector<double> table_;
};

// sum_{s^l} f(s^l) q(s_1)...q(s_l)
inline double iid_average(const FidelityFunction& f, const std::vector<double>& q) {
  if (q.size() != f.alphabet()) throw Error("iid_average: distribution size mismatch");
  double total = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = f.at(i);
    if (v == 0) continue;
    double w = 1;
    std::size_t x = i;
    for (std::size_t k = 0; k < f.length(); ++k) {
      w *= q[x % f.alphabet()];
      x /= f.alphabet();
    }
    total += w * v;
  }
  return total;
}

struct IidCheck {
  std::vector<SequenceType> types;
  std::vector<double> averages;
  std::vector<bool> holds;   // averages[i] >= 1 - gamma
  double worst_slack = 0;    // max over types of 1 - average
  bool all_hold() const { return std::all_of(holds.begin(), holds.end(), [](bool b) { return b; }); }
};

inline IidCheck check_iid_condition(const FidelityFunction& f, double gamma) {
  IidCheck out;
  out.types = enumerate_types(f.alphabet(), f.length());
  for (const auto& t : out.types) {
    const double avg = iid_average(f, t.distribution());
    out.averages.push_back(avg);
    out.holds.push_back(avg >= 1 - gamma - 1e-12);
    out.worst_slack = std::max(out.worst_slack, 1 - avg);
  }
  return out;
}

inline std::int64_t permutation_count(std::size_t l) {
  std::int64_t n = 1;
  for (std::size_t i = 2; i <= l; ++i) n *= static_cast<std::int64_t>(i);
  return n;
}

inline void check_exhaustive_cap(std::size_t l) {
  if (l > kMaxExhaustivePermutations) {
    throw Error("blocklength " + std::to_string(l) + " exceeds exhaustive permutation cap " +
                std::to_string(kMaxExhaustivePermutations));
  }
}

// All permutations of [l] in lexicographic order.
inline std::vector<Permutation> all_permutations(std::size_t l) {
  check_exhaustive_cap(l);
  Permutation p(l);
  std::iota(p.begin(), p.end(), std::size_t{0});
  std::vector<Permutation> out;
  out.reserve(static_cast<std::size_t>(permutation_count(l)));
  do out.push_back(p);
  while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// sigma(s^l) = (s_{sigma(1)}, ..., s_{sigma(l)})
inline Sequence apply_permutation(const Permutation& sigma, const Sequence& s) {
  if (sigma.size() != s.size()) throw Error("apply_permutation: length mismatch");
  Sequence out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = s[sigma[i]];
  return out;
}

// (1/l!) sum_sigma f(sigma(s^l)), exhaustive.
inline double permutation_average(const FidelityFunction& f, const Sequence& s) {
  check_exhaustive_cap(f.length());
  if (s.size() != f.length()) throw Error("permutation_average: sequence has wrong length");
  Permutation p(s.size());
  std::iota(p.begin(), p.end(), std::size_t{0});
  double total = 0;
  std::int64_t n = 0;
  do {
    total += f(apply_permutation(p, s));
    ++n;
  } while (std::next_permutation(p.begin(), p.end()));
  return total / double(n);
}

// Sampled orbit average for blocklengths above the exhaustive cap.
inline double permutation_average_sampled(const FidelityFunction& f, const Sequence& s, std::size_t samples, Rng& rng) {
  if (samples == 0) throw Error("permutation_average_sampled: no samples");
  double total = 0;
  for (std::size_t k = 0; k < samples; ++k) total += f(apply_permutation(random_permutation(s.size(), rng), s));
  return total / double(samples);
}

// 1 - (l+1)^{|S|} gamma
inline double robustification_bound(std::size_t l, std::size_t alphabet, double gamma) {
  return 1 - std::pow(double(l + 1), double(alphabet)) * gamma;
}

struct RobustificationCheck {
  double gamma = 0;
  double bound = 0;
  double worst_average = 1;
  Sequence worst_sequence;
  std::size_t violations = 0;
};

// Asserts the orbit-average inequality for every s^l with gamma the exact
// worst type slack.
inline RobustificationCheck check_robustification(const FidelityFunction& f) {
  RobustificationCheck out;
  out.gamma = check_iid_condition(f, 0).worst_slack;
  out.bound = robustification_bound(f.length(), f.alphabet(), out.gamma);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto s = decode_sequence(i, f.alphabet(), f.length());
    const double avg = permutation_average(f, s);
    if (avg < out.worst_average || out.worst_sequence.empty()) {
      out.worst_average = avg;
      out.worst_sequence = s;
    }
    if (avg < out.bound - 1e-12) ++out.violations;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Protocol averaging

inline Labels positional_labels(const std::string& base, std::size_t l) {
  Labels out;
  for (std::size_t i = 1; i <= l; ++i) out.push_back(base + std::to_string(i));
  return out;
}

struct RobustifiedTable {
  FidelityFunction direct;            // F(D(rho_{s^l}), target)
  FidelityFunction averaged_channel;  // F of the permutation-averaged channel output
  FidelityFunction averaged_scalar;   // orbit average of the direct table
  double max_discrepancy = 0;         // between the two averaged tables
};

// Fidelity of protocol outputs against `target` before and after averaging
// the protocol over all joint permutations of the l AB blocks.
inline RobustifiedTable robustify(const OneWayLocc& protocol, const StateSet& set, std::size_t l,
                                  const PureState& target, const Labels& a_labels, const Labels& b_labels) {
  check_exhaustive_cap(l);
  const auto perms = all_permutations(l);
  const std::size_t n = sequence_count(set.size(), l);
  auto fidelity_of = [&](const Matrix& rho, const HilbertLayout& layout) {
    const auto out = apply(protocol, rho, layout, a_labels, b_labels);
    const auto aligned = reorder(out, target.layout().labels());
    return fidelity(aligned.matrix(), target.amplitudes());
  };
  std::vector<double> direct(n), channel(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto rho = avqs_state(set, decode_sequence(i, set.size(), l));
    direct[i] = fidelity_of(rho.matrix(), rho.layout());
    Matrix avg_out;
    HilbertLayout out_layout;
    for (const auto& p : perms) {
      const auto out = apply(protocol, permute_factors(rho.matrix(), rho.layout(), p), rho.layout(), a_labels, b_labels);
      if (avg_out.size() == 0) {
        avg_out = out.matrix();
        out_layout = out.layout();
      } else {
        avg_out += out.matrix();
      }
    }
    avg_out /= double(perms.size());
    const auto aligned = reorder(PsdOperator::unchecked(out_layout, avg_out), target.layout().labels());
    channel[i] = fidelity(aligned.matrix(), target.amplitudes());
  }
  RobustifiedTable out{FidelityFunction(set.size(), l, direct), FidelityFunction(set.size(), l, channel), {}, 0};
  std::vector<double> scalar(n);
  for (std::size_t i = 0; i < n; ++i) {
    scalar[i] = permutation_average(out.direct, decode_sequence(i, set.size(), l));
    out.max_discrepancy = std::max(out.max_discrepancy, std::abs(scalar[i] - out.averaged_channel.at(i)));
  }
  out.averaged_scalar = FidelityFunction(set.size(), l, scalar);
  return out;
}

// ---------------------------------------------------------------------------
// Derandomization

// Failure indicator g(sigma, s^l) in [0,1].
struct FailureFunction {
  std::size_t alphabet = 0;
  std::size_t l = 0;
  std::function<double(const Permutation&, const Sequence&)> g;
};

// g = 1 - f(sigma(s^l)) for a fidelity table f.
inline FailureFunction failure_from_fidelity(const FidelityFunction& f) {
  return {f.alphabet(), f.length(),
          [f](const Permutation& p, const Sequence& s) { return 1.0 - f(apply_permutation(p, s)); }};
}

// g(sigma, s^l) = 1 when sigma fixes the first two positions and s^l is not
// constant. Its orbit mean is (l-2)!/l! on non-constant sequences.
inline FailureFunction fixed_pair_failure(std::size_t alphabet, std::size_t l) {
  if (l < 2) throw Error("fixed_pair_failure: l must be at least 2");
  return {alphabet, l, [](const Permutation& p, const Sequence& s) {
            const bool constant = std::all_of(s.begin(), s.end(), [&](std::size_t x) { return x == s.front(); });
            return (!constant && p[0] == 0 && p[1] == 1) ? 1.0 : 0.0;
          }};
}

struct DerandomizationPlan {
  std::size_t K = 1;
  double nu = 0.5;
  std::uint64_t seed = 0;
  std::size_t max_retries = 0;
};

struct DerandomizationResult {
  std::vector<Permutation> permutations;
  double worst_mean = 0;
  Sequence worst_sequence;
  double epsilon = 0;         // max_{s^l} E g(X, s^l), exact orbit average
  double bound = 0;           // 1 - |S|^l 2^{-K(nu - 2 epsilon)}
  std::uint64_t seed_used = 0;
  std::size_t attempts = 0;
  bool success = false;       // worst_mean <= nu
  double communication_rate = 0;  // log2(K) / l
};

inline double derandomization_bound(std::size_t alphabet, std::size_t l, std::size_t K, double nu, double epsilon) {
  return 1 - std::pow(double(alphabet), double(l)) * std::exp2(-double(K) * (nu - 2 * epsilon));
}

// max_{s^l} (1/K) sum_k g(sigma_k, s^l) and its argmax (first found).
inline std::pair<double, Sequence> worst_empirical_mean(const FailureFunction& g, const std::vector<Permutation>& perms) {
  double worst = -1;
  Sequence arg;
  for (std::size_t i = 0; i < sequence_count(g.alphabet, g.l); ++i) {
    const auto s = decode_sequence(i, g.alphabet, g.l);
    double total = 0;
    for (const auto& p : perms) total += g.g(p, s);
    const double mean = total / double(perms.size());
    if (mean > worst) {
      worst = mean;
      arg = s;
    }
  }
  return {worst, arg};
}

inline double orbit_epsilon(const FailureFunction& g) {
  const auto perms = all_permutations(g.l);
  return worst_empirical_mean(g, perms).first;
}

inline std::vector<Permutation> draw_permutations(std::size_t l, std::size_t K, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Permutation> out;
  out.reserve(K);
  for (std::size_t k = 0; k < K; ++k) out.push_back(random_permutation(l, rng));
  return out;
}

// Draws K permutations; a draw whose worst mean exceeds nu is redrawn from
// derive_seed(seed, attempt) up to max_retries times.
inline DerandomizationResult derandomize(const FailureFunction& g, const DerandomizationPlan& plan) {
  if (plan.K == 0) throw Error("derandomize: K must be positive");
  if (!(plan.nu > 0 && plan.nu < 1)) throw Error("derandomize: nu must lie in (0,1)");
  DerandomizationResult out;
  out.epsilon = orbit_epsilon(g);
  out.bound = derandomization_bound(g.alphabet, g.l, plan.K, plan.nu, out.epsilon);
  out.communication_rate = std::log2(double(plan.K)) / double(g.l);
  for (std::size_t attempt = 0; attempt <= plan.max_retries; ++attempt) {
    out.seed_used = attempt == 0 ? plan.seed : derive_seed(plan.seed, attempt);
    out.permutations = draw_permutations(g.l, plan.K, out.seed_used);
    std::tie(out.worst_mean, out.worst_sequence) = worst_empirical_mean(g, out.permutations);
    out.attempts = attempt + 1;
    out.success = out.worst_mean <= plan.nu;
    if (out.success) break;
  }
  return out;
}

}  // namespace avqslab
