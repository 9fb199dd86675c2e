// Fixed-k minimax evaluation: sup over A-side instruments of the infimum over
// mixtures of the one-shot distillation rate.
#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "avqslab/avqs.hpp"
#include "avqslab/channels.hpp"
#include "avqslab/qcore.hpp"
#include "avqslab/random.hpp"

namespace avqslab {

namespace tol {
inline constexpr double kCertified = 1e-8;
}

inline constexpr std::size_t kMaxCopies = 2;
inline constexpr std::size_t kMaxGridAlphabet = 6;

// Worker count: hardware concurrency capped by AVQSLAB_THREADS when set.
inline std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("AVQSLAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = std::min(n, static_cast<std::size_t>(v));
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

// Runs body(i) for i in [0, jobs) on up to worker_count(jobs) threads.
template <typename Body>
void parallel_for(std::size_t jobs, Body body) {
  const std::size_t workers = worker_count(jobs);
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Labels of the A and B sides of rho^{(x)k} built by tensor_power.
struct CopyLabels {
  Labels a;
  Labels b;
};

inline CopyLabels copy_labels(const StateSet& set, std::size_t k) {
  const auto& labels = set.layout().labels();
  if (labels.size() != 2) throw Error("state set must be bipartite");
  return {positional_labels(labels[0], k), positional_labels(labels[1], k)};
}

inline HilbertLayout instrument_layout(const StateSet& set, std::size_t k) {
  const auto labels = copy_labels(set, k);
  return HilbertLayout(std::vector<std::size_t>(k, set.layout().dims()[0]), labels.a);
}

// D1(rho_p^{(x)k}, T)
inline double mixture_rate(const Instrument& t, const StateSet& set, const MixtureWeights& p, std::size_t k) {
  const auto labels = copy_labels(set, k);
  return one_shot_rate(t, tensor_power(mixture(set, p), k), labels.a, labels.b);
}

struct InnerOptions {
  std::size_t grid_steps = 20;
  double min_step = 1e-4;
};

struct InnerResult {
  MixtureWeights p;
  double value = 0;        // D1 (not divided by k)
  bool grid_phase = true;  // false when the multi-start fallback was used
  std::size_t evaluations = 0;
};

// Pairwise mass transfers with step halving from `start`.
inline InnerResult descend(const std::function<double(const MixtureWeights&)>& f, MixtureWeights start,
                           double value, double step, double min_step, std::size_t& evals) {
  std::vector<double> p = start.values();
  const std::size_t n = p.size();
  while (step >= min_step) {
    bool improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j || p[i] <= 0) continue;
        auto q = p;
        const double move = std::min(step, q[i]);
        q[i] -= move;
        q[j] += move;
        const double v = f(MixtureWeights(q));
        ++evals;
        if (v < value) {
          value = v;
          p = q;
          improved = true;
        }
      }
    }
    if (!improved) step /= 2;
  }
  return {MixtureWeights(p), value, true, evals};
}

// min_p D1(T, rho_p^{(x)k}): simplex grid then local descent; not a global
// certificate.
inline InnerResult inner_min(const Instrument& t, const StateSet& set, std::size_t k, const InnerOptions& opt = {}) {
  const std::size_t n = set.size();
  auto f = [&](const MixtureWeights& p) { return mixture_rate(t, set, p, k); };
  std::size_t evals = 0;
  if (n == 1) {
    const auto p = MixtureWeights::point(1, 0);
    return {p, f(p), true, 1};
  }
  std::vector<MixtureWeights> starts;
  bool grid = n <= kMaxGridAlphabet;
  if (grid) {
    starts = simplex_grid(n, opt.grid_steps);
  } else {
    for (std::size_t s = 0; s < n; ++s) starts.push_back(MixtureWeights::point(n, s));
    starts.push_back(MixtureWeights::uniform(n));
  }
  std::vector<double> values;
  for (const auto& p : starts) {
    values.push_back(f(p));
    ++evals;
  }
  const double step = 1.0 / double(opt.grid_steps);
  if (grid) {
    const auto best = std::size_t(std::min_element(values.begin(), values.end()) - values.begin());
    auto r = descend(f, starts[best], values[best], step / 2, opt.min_step, evals);
    r.grid_phase = true;
    return r;
  }
  InnerResult best{starts[0], std::numeric_limits<double>::infinity(), false, 0};
  for (std::size_t s = 0; s < starts.size(); ++s) {
    auto r = descend(f, starts[s], values[s], step, opt.min_step, evals);
    if (r.value < best.value) best = r;
  }
  best.grid_phase = false;
  best.evaluations = evals;
  return best;
}

// ---------------------------------------------------------------------------
// Outer maximization

struct MinimaxProblem {
  StateSet set;
  std::size_t k = 1;
  std::size_t J = 1;
  std::size_t restarts = 8;
  std::size_t iterations = 200;
  std::uint64_t seed = 1;
  InnerOptions inner;
};

struct MinimaxResult {
  double value = 0;  // D1 / k at the returned instrument and worst_p
  Instrument instrument;
  MixtureWeights worst_p;
  std::vector<double> trace;  // best value after each iteration of the winning restart
  std::vector<double> restart_values;
  std::size_t best_restart = 0;
  double hat_value = 0;       // I_c(A > B B', T^(rho_p^{(x)k})) / k
  bool certified = false;     // |value - hat_value| <= 1e-8
  bool inner_global = false;  // inner minimization carries no global guarantee
};

inline void check_problem(const MinimaxProblem& prob) {
  if (prob.k == 0 || prob.k > kMaxCopies) throw Error("k must lie in [1, " + std::to_string(kMaxCopies) + "]");
  if (prob.J == 0) throw Error("branch count J must be positive");
  const std::size_t da = prob.set.layout().dims().at(0);
  const std::size_t dab = prob.set.layout().dimension();
  std::size_t ambient = 1;
  std::size_t a_power = 1;
  for (std::size_t i = 0; i < prob.k; ++i) {
    ambient *= dab;
    a_power *= da * da;
  }
  if (ambient > kDefaultDimensionCap) throw Error("k-fold ambient dimension exceeds the cap");
  if (prob.J > a_power) throw Error("J exceeds dim(A)^(2k) = " + std::to_string(a_power));
  if (prob.restarts == 0) throw Error("restarts must be positive");
}

// Completes J operators G_j to K_j = G_j (sum G^dagger G)^{-1/2}; empty when
// the Gram matrix is numerically singular.
inline std::vector<Matrix> complete_kraus(const std::vector<Matrix>& g) {
  const auto n = g.front().cols();
  Matrix gram = Matrix::Zero(n, n);
  for (const auto& m : g) gram += m.adjoint() * m;
  const auto eig = hermitian_eigen(gram);
  if (eig.values.minCoeff() <= 1e-10 * std::max(1.0, eig.values.maxCoeff())) return {};
  Matrix inv = eig.vectors * eig.values.cwiseSqrt().cwiseInverse().asDiagonal() * eig.vectors.adjoint();
  std::vector<Matrix> out;
  for (const auto& m : g) out.push_back(m * inv);
  return out;
}

inline std::vector<double> pack(const std::vector<Matrix>& g) {
  std::vector<double> theta;
  for (const auto& m : g) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        theta.push_back(m(r, c).real());
        theta.push_back(m(r, c).imag());
      }
    }
  }
  return theta;
}

inline std::vector<Matrix> unpack(const std::vector<double>& theta, std::size_t J, Eigen::Index n) {
  std::vector<Matrix> g;
  std::size_t i = 0;
  for (std::size_t j = 0; j < J; ++j) {
    Matrix m(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      for (Eigen::Index r = 0; r < n; ++r) {
        m(r, c) = Complex(theta[i], theta[i + 1]);
        i += 2;
      }
    }
    g.push_back(std::move(m));
  }
  return g;
}

struct RestartOutcome {
  double value = -std::numeric_limits<double>::infinity();
  std::vector<Matrix> kraus;
  MixtureWeights p;
  std::vector<double> trace;
};

// Simultaneous-perturbation ascent on T -> inner_min(T); restart 0 starts at
// the identity-like instrument.
inline RestartOutcome run_restart(const MinimaxProblem& prob, std::size_t restart) {
  const auto layout = instrument_layout(prob.set, prob.k);
  const auto n = static_cast<Eigen::Index>(layout.dimension());
  Rng rng(derive_seed(prob.seed, restart));

  std::vector<Matrix> g;
  for (std::size_t j = 0; j < prob.J; ++j) {
    if (restart == 0) {
      g.push_back(j == 0 ? Matrix(Matrix::Identity(n, n)) : Matrix(0.1 * ginibre(n, n, rng)));
    } else {
      g.push_back(ginibre(n, n, rng));
    }
  }

  RestartOutcome best;
  auto evaluate = [&](const std::vector<Matrix>& kraus, RestartOutcome* record) {
    if (kraus.empty()) return -std::numeric_limits<double>::infinity();
    const auto t = Instrument::from_kraus(layout, layout, kraus);
    const auto r = inner_min(t, prob.set, prob.k, prob.inner);
    if (record && r.value > record->value) {
      record->value = r.value;
      record->kraus = kraus;
      record->p = r.p;
    }
    return r.value;
  };

  auto kraus = complete_kraus(g);
  while (kraus.empty()) {
    g.front() += Matrix::Identity(n, n);
    kraus = complete_kraus(g);
  }
  std::vector<double> theta = pack(kraus);
  evaluate(kraus, &best);

  const double a = 0.2, c = 0.05, big_a = 10.0;
  for (std::size_t it = 0; it < prob.iterations; ++it) {
    const double ak = a / std::pow(double(it + 1) + big_a, 0.602);
    const double ck = c / std::pow(double(it + 1), 0.101);
    std::vector<double> delta(theta.size());
    for (auto& d : delta) d = rng.below(2) ? 1.0 : -1.0;
    std::vector<double> plus = theta, minus = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      plus[i] += ck * delta[i];
      minus[i] -= ck * delta[i];
    }
    const double fp = evaluate(complete_kraus(unpack(plus, prob.J, n)), &best);
    const double fm = evaluate(complete_kraus(unpack(minus, prob.J, n)), &best);
    if (std::isfinite(fp) && std::isfinite(fm)) {
      const double slope = (fp - fm) / (2 * ck);
      std::vector<double> next = theta;
      for (std::size_t i = 0; i < theta.size(); ++i) next[i] += ak * slope * delta[i];
      const auto renormalized = complete_kraus(unpack(next, prob.J, n));
      if (!renormalized.empty()) {
        theta = pack(renormalized);
        evaluate(renormalized, &best);
      }
    }
    best.trace.push_back(best.value);
  }
  return best;
}

// I_c(A > B B', T^(rho_p^{(x)k})), the classical-flag form of D1.
inline double hat_rate(const Instrument& t, const StateSet& set, const MixtureWeights& p, std::size_t k) {
  const auto labels = copy_labels(set, k);
  const auto rho = tensor_power(mixture(set, p), k);
  const auto b_layout = rho.layout().select(labels.b);
  const auto hat = hat_channel(t, b_layout, "B'");
  const auto out = DensityMatrix::normalized(apply(hat, rho, labels.a, labels.b));
  Labels to = labels.b;
  to.push_back("B'");
  return coherent_information(out, labels.a, to);
}

inline MinimaxResult maximize_instrument(const MinimaxProblem& prob) {
  check_problem(prob);
  std::vector<RestartOutcome> outcomes(prob.restarts);
  parallel_for(prob.restarts, [&](std::size_t r) { outcomes[r] = run_restart(prob, r); });

  MinimaxResult res;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    res.restart_values.push_back(outcomes[r].value / double(prob.k));
    if (outcomes[r].value > outcomes[res.best_restart].value) res.best_restart = r;
  }
  const auto& win = outcomes[res.best_restart];
  const auto layout = instrument_layout(prob.set, prob.k);
  res.instrument = Instrument::from_kraus(layout, layout, win.kraus);
  res.worst_p = win.p;
  for (double v : win.trace) res.trace.push_back(v / double(prob.k));
  res.value = mixture_rate(res.instrument, prob.set, res.worst_p, prob.k) / double(prob.k);
  res.hat_value = hat_rate(res.instrument, prob.set, res.worst_p, prob.k) / double(prob.k);
  res.certified = std::abs(res.value - res.hat_value) <= tol::kCertified &&
                  std::abs(res.value - win.value / double(prob.k)) <= tol::kCertified;
  return res;
}

struct Budget {
  std::size_t J = 1;
  std::size_t restarts = 8;
  std::size_t iterations = 200;
  std::uint64_t seed = 1;
};

// Per-copy value of the fixed-k capacity function found within the budget.
inline double capacity_function(const StateSet& set, std::size_t k, const Budget& budget) {
  return maximize_instrument({set, k, budget.J, budget.restarts, budget.iterations, budget.seed, {}}).value;
}

}  // namespace avqslab
