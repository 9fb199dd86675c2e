// JSON serialization of matrices, states, state sets and instruments.
#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "avqslab/avqs.hpp"
#include "avqslab/channels.hpp"
#include "avqslab/qcore.hpp"
#include "avqslab/states.hpp"

namespace avqslab::io {

using Json = nlohmann::json;

// Reading or writing a file failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

// {"re": [[...]], "im": [[...]]}
inline Json matrix_to_json(const Matrix& m) {
  Json re = Json::array(), im = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json rr = Json::array(), ir = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      rr.push_back(m(r, c).real());
      ir.push_back(m(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ir));
  }
  return {{"re", re}, {"im", im}};
}

inline Matrix matrix_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("re")) throw Error("matrix: missing field 're'");
  const auto& re = j.at("re");
  if (!re.is_array() || re.empty() || !re[0].is_array()) throw Error("matrix: 're' must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(re.size());
  const auto cols = static_cast<Eigen::Index>(re[0].size());
  const bool has_im = j.contains("im");
  if (has_im && j.at("im").size() != re.size()) throw Error("matrix: 'im' shape differs from 're'");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& rr = re[std::size_t(r)];
    if (!rr.is_array() || static_cast<Eigen::Index>(rr.size()) != cols) throw Error("matrix: ragged rows");
    for (Eigen::Index c = 0; c < cols; ++c) {
      double imag = 0;
      if (has_im) {
        const auto& ir = j.at("im")[std::size_t(r)];
        if (static_cast<Eigen::Index>(ir.size()) != cols) throw Error("matrix: 'im' shape differs from 're'");
        imag = ir[std::size_t(c)].get<double>();
      }
      m(r, c) = Complex(rr[std::size_t(c)].get<double>(), imag);
    }
  }
  return m;
}

inline Json layout_to_json(const HilbertLayout& layout) {
  return {{"dims", layout.dims()}, {"labels", layout.labels()}};
}

inline HilbertLayout layout_from_json(const Json& j) {
  if (!j.contains("dims") || !j.contains("labels")) throw Error("layout: 'dims' and 'labels' are required");
  return HilbertLayout(j.at("dims").get<std::vector<std::size_t>>(), j.at("labels").get<Labels>());
}

inline Json state_to_json(const DensityMatrix& rho) {
  Json j = layout_to_json(rho.layout());
  j.update(matrix_to_json(rho.matrix()));
  return j;
}

// A state is a known name ("bell", ...), {"schmidt": w}, or
// {"dims", "labels", "re", "im"}.
inline DensityMatrix state_from_json(const Json& j) {
  if (j.is_string()) return states::by_name(j.get<std::string>());
  if (!j.is_object()) throw Error("state: expected a name or an object");
  if (j.contains("name")) return states::by_name(j.at("name").get<std::string>());
  if (j.contains("schmidt")) {
    const double w = j.at("schmidt").get<double>();
    if (!(w >= 0 && w <= 1)) throw Error("state: schmidt weight must lie in [0,1]");
    return states::schmidt(w).density();
  }
  return DensityMatrix(layout_from_json(j), matrix_from_json(j));
}

inline Json state_set_to_json(const StateSet& set) {
  Json states = Json::array();
  for (const auto& s : set.states()) states.push_back(state_to_json(s));
  return {{"names", set.names()}, {"states", states}};
}

// {"names": [...], "states": [...]} or a bare array of states.
inline StateSet state_set_from_json(const Json& j) {
  const Json& list = j.is_array() ? j : j.at("states");
  if (!list.is_array() || list.empty()) throw Error("state set: 'states' must be a nonempty array");
  std::vector<DensityMatrix> states;
  for (const auto& s : list) states.push_back(state_from_json(s));
  if (j.is_object() && j.contains("names")) return StateSet(j.at("names").get<std::vector<std::string>>(), states);
  return StateSet(states);
}

inline Json instrument_to_json(const Instrument& t) {
  Json branches = Json::array();
  for (const auto& b : t.branches()) {
    Json kraus = Json::array();
    for (const auto& k : b.kraus()) kraus.push_back(matrix_to_json(k));
    branches.push_back(std::move(kraus));
  }
  return {{"in", layout_to_json(t.in_layout())}, {"out", layout_to_json(t.out_layout())}, {"branches", branches}};
}

// Inline {"in", "out", "branches"} or {"kind": "identity" | "computational"}
// on `a_layout`.
inline Instrument instrument_from_json(const Json& j, const HilbertLayout& a_layout) {
  if (j.is_object() && j.contains("kind")) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "identity") return Instrument::identity(a_layout);
    if (kind == "computational") return Instrument::computational(a_layout);
    throw Error("instrument: unknown kind " + kind);
  }
  if (!j.is_object() || !j.contains("branches")) throw Error("instrument: missing field 'branches'");
  const auto in = j.contains("in") ? layout_from_json(j.at("in")) : a_layout;
  const auto out = j.contains("out") ? layout_from_json(j.at("out")) : in;
  std::vector<KrausMap> branches;
  for (const auto& b : j.at("branches")) {
    std::vector<Matrix> kraus;
    for (const auto& k : b) kraus.push_back(matrix_from_json(k));
    branches.emplace_back(in, out, std::move(kraus));
  }
  return Instrument(std::move(branches));
}

}  // namespace avqslab::io
