// Named reference states on A (x) B.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "avqslab/qcore.hpp"

namespace avqslab::states {

inline DensityMatrix bell(std::size_t d = 2) { return PureState::maximally_entangled(d).density(); }

// |ij><ij|
inline DensityMatrix product_basis(std::size_t i, std::size_t j, std::size_t d = 2) {
  return PureState::basis(HilbertLayout::bipartite(d, d), i * d + j).density();
}

// (1/d) sum_i |ii><ii|
inline DensityMatrix classically_correlated(std::size_t d = 2) {
  std::vector<double> p(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) p[i * d + i] = 1.0 / double(d);
  return DensityMatrix::diagonal(HilbertLayout::bipartite(d, d), p);
}

inline DensityMatrix maximally_mixed(std::size_t da = 2, std::size_t db = 2) {
  return DensityMatrix::maximally_mixed(HilbertLayout::bipartite(da, db));
}

// sqrt(w)|00> + sqrt(1-w)|11>
inline PureState schmidt(double w) {
  Vector v = Vector::Zero(4);
  v(0) = std::sqrt(w);
  v(3) = std::sqrt(1 - w);
  return PureState(HilbertLayout::bipartite(2, 2), v);
}

// Resolves a state name used in scenario configs; throws on unknown names.
inline DensityMatrix by_name(const std::string& name) {
  if (name == "bell" || name == "Bell" || name == "phi+") return bell();
  if (name == "product" || name == "product00") return product_basis(0, 0);
  if (name == "classical") return classically_correlated();
  if (name == "mixed" || name == "maximally_mixed") return maximally_mixed();
  throw Error("unknown named state: " + name);
}

inline const std::vector<std::string>& known_names() {
  static const std::vector<std::string> names{"bell", "Bell", "phi+", "product", "product00",
                                              "classical", "mixed", "maximally_mixed"};
  return names;
}

}  // namespace avqslab::states
