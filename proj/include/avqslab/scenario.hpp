// Declarative scenario runner: JSON config in, JSON report (and CSV table) out.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "avqslab/avqs.hpp"
#include "avqslab/channels.hpp"
#include "avqslab/io.hpp"
#include "avqslab/merging.hpp"
#include "avqslab/optimize.hpp"
#include "avqslab/qcore.hpp"
#include "avqslab/schur.hpp"
#include "avqslab/states.hpp"

namespace avqslab::scenario {

using io::Json;

inline constexpr const char* kToolName = "avqslab";
inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kAssertionFailed = 1,
  kSchemaViolation = 2,
  kIoFailure = 3,
};

struct Diagnostic {
  std::string field;
  std::string message;
  bool io = false;

  std::string str() const { return field.empty() ? message : field + ": " + message; }
};

inline int exit_code_for(const std::vector<Diagnostic>& diags) {
  if (diags.empty()) return kOk;
  for (const auto& d : diags) {
    if (!d.io) return kSchemaViolation;
  }
  return kIoFailure;
}

// ---------------------------------------------------------------------------
// Command table

enum class Kind { Integer, Number, Labels, Numbers, Choice };

struct Field {
  std::string name;
  Kind kind = Kind::Number;
  double lo = -HUGE_VAL;
  double hi = HUGE_VAL;
  Json fallback;  // null: required
  std::vector<std::string> choices;
  bool open_lo = false;
  bool open_hi = false;
};

struct CommandSpec {
  std::string name;
  std::vector<std::string> required_inputs;
  std::vector<std::string> optional_inputs;
  std::vector<Field> params;
  std::vector<std::string> tolerances;
};

inline Field integer(std::string name, double lo, double hi, Json fallback = nullptr) {
  return {std::move(name), Kind::Integer, lo, hi, std::move(fallback), {}, false, false};
}

inline Field number(std::string name, double lo, double hi, Json fallback = nullptr, bool open_lo = false,
                    bool open_hi = false) {
  return {std::move(name), Kind::Number, lo, hi, std::move(fallback), {}, open_lo, open_hi};
}

inline Field labels(std::string name, Json fallback) {
  return {std::move(name), Kind::Labels, 0, 0, std::move(fallback), {}, false, false};
}

inline Field choice(std::string name, std::vector<std::string> choices, std::string fallback) {
  return {std::move(name), Kind::Choice, 0, 0, Json(std::move(fallback)), std::move(choices), false, false};
}

inline const std::vector<CommandSpec>& commands() {
  static const std::vector<CommandSpec> table{
      {"entropy", {"state"}, {}, {labels("a", {"A"}), labels("b", {"B"})}, {}},
      {"distill-rate",
       {"state"},
       {"instrument"},
       {labels("a", {"A"}), labels("b", {"B"})},
       {"completeness", "hat"}},
      {"optimize",
       {"set"},
       {},
       {integer("k", 1, double(kMaxCopies), 1), integer("branches", 1, 64, 1), integer("restarts", 1, 1024, 8),
        integer("iterations", 1, 1e6, 200), integer("grid_steps", 1, 1000, 20),
        number("min_step", 0, 1, 1e-4, true)},
       {"certified", "completeness"}},
      {"schur",
       {},
       {},
       {integer("d", 2, 4), integer("l", 1, kMaxExhaustiveBlocklength), number("eta", 0, 1, 0.25, true),
        {"spectrum", Kind::Numbers, 0, 1, Json(), {}, false, false}},
       {"projector", "keyl_werner"}},
      {"robustify",
       {},
       {"table"},
       {integer("alphabet", 1, 6, 2), integer("l", 1, double(kMaxExhaustivePermutations), 3),
        choice("family", {"random", "constant_indicator", "constant", "table"}, "random"),
        number("value", 0, 1, 1.0)},
       {"robustification"}},
      {"derandomize",
       {},
       {"table"},
       {integer("alphabet", 1, 6, 2), integer("l", 2, double(kMaxExhaustivePermutations), 4),
        integer("K", 1, 1e6, 64), number("nu", 0, 1, 0.3, true, true), integer("max_retries", 0, 1000, 0),
        choice("family", {"fixed_pair", "table"}, "fixed_pair")},
       {"oracle"}},
      {"counterexample",
       {},
       {"base"},
       {integer("N", 1, 16, 2), integer("grid_steps", 1, 1000, 20)},
       {"gap", "identity", "detection"}},
  };
  return table;
}

inline const CommandSpec* find_command(const std::string& name) {
  for (const auto& c : commands()) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

inline const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> t{
      {"expect", 1e-9},         {"completeness", tol::kCompleteness}, {"hat", 1e-9},
      {"certified", tol::kCertified}, {"projector", 1e-9},           {"keyl_werner", 1e-12},
      {"robustification", 1e-12}, {"oracle", 1e-12},                {"gap", 1e-6},
      {"identity", 1e-8},       {"detection", 1e-9},
  };
  return t;
}

inline Json kernel_tolerances() {
  return {{"eigen_clip", tol::kEigenClip}, {"negative_eigen", tol::kNegativeEigen}, {"rank", tol::kRank},
          {"trace", tol::kTrace},          {"hermitian", tol::kHermitian},          {"branch_weight", tol::kBranchWeight},
          {"dimension_cap", kDefaultDimensionCap}};
}

// ---------------------------------------------------------------------------
// Validation and normalization

inline const std::set<std::string>& reserved_keys() {
  static const std::set<std::string> k{"command", "seed", "inputs", "params", "tolerances", "expect"};
  return k;
}

inline std::string format_value(const Json& v) { return v.dump(); }

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string range_text(const Field& f) {
  return std::string(f.open_lo ? "(" : "[") + format_number(f.lo) + ", " + format_number(f.hi) + (f.open_hi ? ")" : "]");
}

inline void check_field(const Field& f, const Json& v, const std::string& path, std::vector<Diagnostic>& out) {
  auto in_range = [&](double x) {
    return (f.open_lo ? x > f.lo : x >= f.lo) && (f.open_hi ? x < f.hi : x <= f.hi);
  };
  switch (f.kind) {
    case Kind::Integer:
      if (!v.is_number_integer()) {
        out.push_back({path, "expected an integer, got " + format_value(v)});
      } else if (!in_range(v.get<double>())) {
        out.push_back({path, "value " + format_value(v) + " out of range " + range_text(f)});
      }
      break;
    case Kind::Number:
      if (!v.is_number()) {
        out.push_back({path, "expected a number, got " + format_value(v)});
      } else if (!in_range(v.get<double>())) {
        out.push_back({path, "value " + format_value(v) + " out of range " + range_text(f)});
      }
      break;
    case Kind::Labels:
      if (!v.is_array() || v.empty() || !std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_string(); })) {
        out.push_back({path, "expected a nonempty array of labels, got " + format_value(v)});
      }
      break;
    case Kind::Numbers:
      if (!v.is_array() || v.empty()) {
        out.push_back({path, "expected a nonempty array of numbers, got " + format_value(v)});
        break;
      }
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number() || !in_range(v[i].get<double>())) {
          out.push_back({path + "[" + std::to_string(i) + "]", "value " + format_value(v[i]) + " out of range " +
                                                                   range_text(f)});
        }
      }
      break;
    case Kind::Choice:
      if (!v.is_string() || std::find(f.choices.begin(), f.choices.end(), v.get<std::string>()) == f.choices.end()) {
        std::string list;
        for (const auto& c : f.choices) list += (list.empty() ? "" : ", ") + c;
        out.push_back({path, "value " + format_value(v) + " is not one of {" + list + "}"});
      }
      break;
  }
}

inline bool is_state_name(const std::string& s) {
  const auto& names = states::known_names();
  return std::find(names.begin(), names.end(), s) != names.end();
}

inline std::string resolve_path(const std::string& path, const std::string& base_dir) {
  const std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

inline std::uint64_t combinations(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  long double r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (long double)(n - k + i) / (long double)i;
  return static_cast<std::uint64_t>(std::llround(r));
}

inline void cross_checks(const CommandSpec& spec, const Json& cfg, std::vector<Diagnostic>& out) {
  const Json& p = cfg.at("params");
  const Json& in = cfg.at("inputs");
  if (spec.name == "schur") {
    const auto d = p.at("d").get<int>();
    const auto l = p.at("l").get<int>();
    if (std::pow(double(d), double(l)) > double(kDefaultDimensionCap)) {
      out.push_back({"params.l", "value " + std::to_string(l) + " gives dimension d^l = " +
                                     format_number(std::pow(double(d), double(l))) + " above the cap " +
                                     std::to_string(kDefaultDimensionCap)});
    }
    if (p.contains("spectrum") && p.at("spectrum").is_array()) {
      const auto& s = p.at("spectrum");
      if (s.size() != static_cast<std::size_t>(d)) {
        out.push_back({"params.spectrum", "length " + std::to_string(s.size()) + " differs from d = " +
                                              std::to_string(d)});
      }
      double total = 0;
      for (const auto& x : s) total += x.is_number() ? x.get<double>() : 0.0;
      if (std::abs(total - 1) > 1e-9) out.push_back({"params.spectrum", "sums to " + format_number(total)});
    }
  }
  if (spec.name == "robustify" || spec.name == "derandomize") {
    const auto family = p.at("family").get<std::string>();
    if (family == "table" && !in.contains("table")) {
      out.push_back({"inputs.table", "missing required field (family is 'table')"});
    }
    if (in.contains("table")) {
      const auto& t = in.at("table");
      if (!t.is_object() || !t.contains("values") || !t.at("values").is_array()) {
        out.push_back({"inputs.table.values", "missing required field"});
      } else {
        const auto need = sequence_count(p.at("alphabet").get<std::size_t>(), p.at("l").get<std::size_t>());
        if (t.at("values").size() != need) {
          out.push_back({"inputs.table.values", "has " + std::to_string(t.at("values").size()) +
                                                    " entries, expected alphabet^l = " + std::to_string(need)});
        }
        for (std::size_t i = 0; i < t.at("values").size(); ++i) {
          const auto& v = t.at("values")[i];
          if (!v.is_number() || v.get<double>() < 0 || v.get<double>() > 1) {
            out.push_back({"inputs.table.values[" + std::to_string(i) + "]",
                           "value " + format_value(v) + " out of range [0, 1]"});
          }
        }
      }
    }
    const double work = double(sequence_count(p.at("alphabet").get<std::size_t>(), p.at("l").get<std::size_t>())) *
                        double(permutation_count(p.at("l").get<std::size_t>()));
    if (work > 5e7) {
      out.push_back({"params.l", "value " + format_value(p.at("l")) + " gives alphabet^l * l! = " +
                                     format_number(work) + " orbit terms, above the limit 5e7"});
    }
  }
  if (spec.name == "counterexample") {
    const auto n = p.at("N").get<std::uint64_t>();
    const auto steps = p.at("grid_steps").get<std::uint64_t>();
    const auto points = combinations(steps + n - 1, n - 1);
    if (points > 200000) {
      out.push_back({"params.grid_steps", "value " + std::to_string(steps) + " gives " + std::to_string(points) +
                                              " grid points for N = " + std::to_string(n) + ", above 200000"});
    }
  }
}

inline void check_inputs(const CommandSpec& spec, const Json& in, const std::string& base_dir,
                         std::vector<Diagnostic>& out) {
  for (const auto& name : spec.required_inputs) {
    if (!in.contains(name)) out.push_back({"inputs." + name, "missing required field"});
  }
  for (auto it = in.begin(); it != in.end(); ++it) {
    const auto& key = it.key();
    const bool known = std::count(spec.required_inputs.begin(), spec.required_inputs.end(), key) ||
                       std::count(spec.optional_inputs.begin(), spec.optional_inputs.end(), key);
    if (!known) {
      out.push_back({"inputs." + key, "unknown field"});
      continue;
    }
    const Json& v = it.value();
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if ((key == "state" || key == "base") && is_state_name(s)) continue;
      if (!std::filesystem::exists(resolve_path(s, base_dir))) {
        out.push_back({"inputs." + key, "file not found: " + s, true});
      }
    } else if (!v.is_object() && !v.is_array()) {
      out.push_back({"inputs." + key, "expected a name, a file path or an inline object, got " + format_value(v)});
    }
  }
}

// Folds shorthand top-level keys into inputs/params and fills defaults.
// Returns the normalized config; diagnostics are appended to `out`.
inline Json normalize(const Json& config, const std::string& base_dir, std::vector<Diagnostic>& out) {
  if (!config.is_object()) {
    out.push_back({"", "config must be a JSON object"});
    return nullptr;
  }
  if (!config.contains("command")) {
    out.push_back({"command", "missing required field"});
    return nullptr;
  }
  if (!config.at("command").is_string() || !find_command(config.at("command").get<std::string>())) {
    std::string list;
    for (const auto& c : commands()) list += (list.empty() ? "" : ", ") + c.name;
    out.push_back({"command", "value " + format_value(config.at("command")) + " is not one of {" + list + "}"});
    return nullptr;
  }
  const auto& spec = *find_command(config.at("command").get<std::string>());

  Json cfg = {{"command", spec.name}, {"seed", 1}, {"inputs", Json::object()}, {"params", Json::object()},
              {"tolerances", Json::object()}, {"expect", Json::array()}};
  for (const char* key : {"inputs", "params", "tolerances"}) {
    if (!config.contains(key)) continue;
    if (!config.at(key).is_object()) {
      out.push_back({key, "expected an object, got " + format_value(config.at(key))});
    } else {
      cfg[key] = config.at(key);
    }
  }
  if (config.contains("seed")) {
    const auto& s = config.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      out.push_back({"seed", "expected a non-negative 64-bit integer, got " + format_value(s)});
    } else {
      cfg["seed"] = s.get<std::uint64_t>();
    }
  }
  if (config.contains("expect")) {
    if (!config.at("expect").is_array()) {
      out.push_back({"expect", "expected an array, got " + format_value(config.at("expect"))});
    } else {
      cfg["expect"] = config.at("expect");
    }
  }

  for (auto it = config.begin(); it != config.end(); ++it) {
    const auto& key = it.key();
    if (reserved_keys().count(key)) continue;
    const bool is_input = std::count(spec.required_inputs.begin(), spec.required_inputs.end(), key) ||
                          std::count(spec.optional_inputs.begin(), spec.optional_inputs.end(), key);
    const char* section = is_input ? "inputs" : "params";
    if (cfg[section].contains(key)) {
      out.push_back({key, std::string("given both at top level and in ") + section});
    } else {
      cfg[section][key] = it.value();
    }
  }

  auto& params = cfg["params"];
  for (auto it = params.begin(); it != params.end(); ++it) {
    const bool known = std::any_of(spec.params.begin(), spec.params.end(),
                                   [&](const Field& f) { return f.name == it.key(); });
    if (!known) out.push_back({"params." + it.key(), "unknown field"});
  }
  bool params_ok = true;
  for (const auto& f : spec.params) {
    const std::string path = "params." + f.name;
    if (!params.contains(f.name)) {
      if (f.fallback.is_null()) {
        if (f.name != "spectrum") {
          out.push_back({path, "missing required field"});
          params_ok = false;
        }
        continue;
      }
      params[f.name] = f.fallback;
    }
    const auto before = out.size();
    check_field(f, params[f.name], path, out);
    if (out.size() != before) params_ok = false;
  }

  auto& tols = cfg["tolerances"];
  for (auto it = tols.begin(); it != tols.end(); ++it) {
    const bool used = it.key() == "expect" ||
                      std::count(spec.tolerances.begin(), spec.tolerances.end(), it.key());
    if (!used) {
      out.push_back({"tolerances." + it.key(), "unknown tolerance for command " + spec.name});
    } else if (!it.value().is_number() || !(it.value().get<double>() > 0)) {
      out.push_back({"tolerances." + it.key(), "value " + format_value(it.value()) + " must be a positive number"});
    }
  }
  Json effective = Json::object();
  effective["expect"] = default_tolerances().at("expect");
  for (const auto& name : spec.tolerances) effective[name] = default_tolerances().at(name);
  for (auto it = tols.begin(); it != tols.end(); ++it) {
    if (effective.contains(it.key()) && it.value().is_number()) effective[it.key()] = it.value();
  }
  tols = effective;

  for (std::size_t i = 0; i < cfg["expect"].size(); ++i) {
    const auto& e = cfg["expect"][i];
    const std::string path = "expect[" + std::to_string(i) + "]";
    if (!e.is_object() || !e.contains("path") || !e.at("path").is_string()) {
      out.push_back({path + ".path", "missing required field"});
      continue;
    }
    try {
      Json::json_pointer ptr(e.at("path").get<std::string>());
    } catch (const Json::exception&) {
      out.push_back({path + ".path", "invalid JSON pointer " + format_value(e.at("path"))});
    }
    const bool has_bound = e.contains("value") || e.contains("min") || e.contains("max");
    if (!has_bound) out.push_back({path, "needs one of 'value', 'min', 'max'"});
    for (const char* k : {"value", "min", "max", "tol"}) {
      if (e.contains(k) && !e.at(k).is_number() && !e.at(k).is_boolean()) {
        out.push_back({path + "." + k, "expected a number, got " + format_value(e.at(k))});
      }
    }
  }

  if (cfg["inputs"].is_object()) check_inputs(spec, cfg["inputs"], base_dir, out);
  if (params_ok) cross_checks(spec, cfg, out);
  return cfg;
}

inline std::vector<Diagnostic> validate(const Json& config, const std::string& base_dir = ".") {
  std::vector<Diagnostic> out;
  normalize(config, base_dir, out);
  return out;
}

// ---------------------------------------------------------------------------
// Input loading

inline Json load_input_json(const Json& v, const std::string& base_dir) {
  if (v.is_string()) return io::read_json_file(resolve_path(v.get<std::string>(), base_dir));
  return v;
}

inline DensityMatrix load_state(const Json& v, const std::string& base_dir) {
  if (v.is_string() && is_state_name(v.get<std::string>())) return states::by_name(v.get<std::string>());
  return io::state_from_json(load_input_json(v, base_dir));
}

// ---------------------------------------------------------------------------
// Commands

struct Context {
  Json config;
  std::string base_dir;
  std::uint64_t seed = 0;

  const Json& params() const { return config.at("params"); }
  const Json& inputs() const { return config.at("inputs"); }
  double tol(const std::string& name) const { return config.at("tolerances").at(name).get<double>(); }
};

struct Computed {
  Json results = Json::object();
  Json assertions = Json::array();
  std::string csv;
};

inline void assert_at_most(Computed& c, const std::string& name, double value, double tolerance) {
  c.assertions.push_back({{"name", name}, {"passed", value <= tolerance}, {"value", value}, {"tolerance", tolerance}});
}

inline void assert_true(Computed& c, const std::string& name, bool ok) {
  c.assertions.push_back({{"name", name}, {"passed", ok}});
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : cols_(header.size()) { row(header); }

  void row(const std::vector<std::string>& cells) {
    if (cells.size() != cols_) throw Error("CsvTable: row has the wrong number of cells");
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + cells[i];
    text_ += "\n";
  }

  const std::string& text() const { return text_; }

 private:
  std::size_t cols_;
  std::string text_;
};

inline std::string join(const std::vector<int>& parts, const char* sep) {
  std::string s;
  for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? sep : "") + std::to_string(parts[i]);
  return s;
}

inline Labels labels_param(const Context& ctx, const char* name, const DensityMatrix& rho) {
  const auto out = ctx.params().at(name).get<Labels>();
  for (const auto& l : out) {
    if (!rho.layout().contains(l)) throw Error("params." + std::string(name) + ": label " + l + " not in the state");
  }
  return out;
}

inline Computed run_entropy(const Context& ctx) {
  const auto rho = load_state(ctx.inputs().at("state"), ctx.base_dir);
  const auto a = labels_param(ctx, "a", rho);
  const auto b = labels_param(ctx, "b", rho);
  Computed c;
  Labels ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  const auto rho_ab = partial_trace(rho, ab);
  c.results = {{"dims", rho.layout().dims()},
               {"labels", rho.layout().labels()},
               {"entropy", von_neumann_entropy(rho_ab)},
               {"entropy_a", marginal_entropy(rho, a)},
               {"entropy_b", marginal_entropy(rho, b)},
               {"conditional_entropy", conditional_entropy(rho_ab, b)},
               {"mutual_information", mutual_information(rho_ab, a, b)},
               {"coherent_information", coherent_information(rho_ab, a, b)}};
  return c;
}

inline Computed run_distill_rate(const Context& ctx) {
  const auto rho = load_state(ctx.inputs().at("state"), ctx.base_dir);
  const auto a = labels_param(ctx, "a", rho);
  const auto b = labels_param(ctx, "b", rho);
  const auto a_layout = rho.layout().select(a);
  const Json spec = ctx.inputs().contains("instrument") ? load_input_json(ctx.inputs().at("instrument"), ctx.base_dir)
                                                        : Json{{"kind", "identity"}};
  const auto t = io::instrument_from_json(spec, a_layout);
  if (t.in_layout() != a_layout) throw Error("inputs.instrument: input layout does not match the A systems");

  Computed c;
  Matrix sum = Matrix::Zero(t.in_layout().dimension(), t.in_layout().dimension());
  for (const auto& br : t.branches()) sum += br.gram();
  const double completeness = (sum - Matrix::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff();

  const double rate = one_shot_rate(t, rho, a, b);
  const auto hat = hat_channel(t, rho.layout().select(b), "B'");
  const auto out = DensityMatrix::normalized(apply(hat, rho, a, b));
  Labels to = b;
  to.push_back("B'");
  const double hat_rate = coherent_information(out, a, to);

  Json branches = Json::array();
  CsvTable table({"branch", "weight", "coherent_information"});
  for (const auto& o : instrument_outcomes(t, rho, a)) {
    const double ic = marginal_entropy(o.state, b) - von_neumann_entropy(o.state);
    branches.push_back({{"branch", o.branch}, {"weight", o.weight}, {"coherent_information", ic}});
    table.row({std::to_string(o.branch), format_number(o.weight), format_number(ic)});
  }
  c.results = {{"one_shot_rate", rate},
               {"hat_rate", hat_rate},
               {"hat_defect", std::abs(rate - hat_rate)},
               {"branch_count", t.size()},
               {"completeness_defect", completeness},
               {"branches", branches}};
  assert_at_most(c, "instrument_complete", completeness, ctx.tol("completeness"));
  assert_at_most(c, "hat_identity", std::abs(rate - hat_rate), ctx.tol("hat"));
  c.csv = table.text();
  return c;
}

inline Computed run_optimize(const Context& ctx) {
  const auto set = io::state_set_from_json(load_input_json(ctx.inputs().at("set"), ctx.base_dir));
  const auto& p = ctx.params();
  MinimaxProblem prob{set,
                      p.at("k").get<std::size_t>(),
                      p.at("branches").get<std::size_t>(),
                      p.at("restarts").get<std::size_t>(),
                      p.at("iterations").get<std::size_t>(),
                      ctx.seed,
                      {p.at("grid_steps").get<std::size_t>(), p.at("min_step").get<double>()}};
  const auto res = maximize_instrument(prob);

  Computed c;
  const auto& layout = res.instrument.in_layout();
  Matrix sum = Matrix::Zero(layout.dimension(), layout.dimension());
  for (const auto& br : res.instrument.branches()) sum += br.gram();
  const double completeness = (sum - Matrix::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff();

  CsvTable table({"iteration", "value"});
  for (std::size_t i = 0; i < res.trace.size(); ++i) table.row({std::to_string(i + 1), format_number(res.trace[i])});
  c.results = {{"value", res.value},
               {"hat_value", res.hat_value},
               {"certified", res.certified},
               {"k", prob.k},
               {"branches", prob.J},
               {"value_is_per_copy", true},
               {"worst_p", res.worst_p.values()},
               {"worst_p_names", set.names()},
               {"restart_values", res.restart_values},
               {"best_restart", res.best_restart},
               {"trace", res.trace},
               {"inner_global", res.inner_global},
               {"completeness_defect", completeness},
               {"instrument", io::instrument_to_json(res.instrument)}};
  assert_at_most(c, "certified", std::abs(res.value - res.hat_value), ctx.tol("certified"));
  assert_at_most(c, "instrument_complete", completeness, ctx.tol("completeness"));
  c.csv = table.text();
  return c;
}

inline Computed run_schur(const Context& ctx) {
  const auto& p = ctx.params();
  const int d = p.at("d").get<int>();
  const int l = p.at("l").get<int>();
  const double eta = p.at("eta").get<double>();
  const auto inst = entropy_band_instrument(d, l, eta);
  const auto n = static_cast<Eigen::Index>(std::pow(double(d), double(l)));

  Computed c;
  Matrix sum = Matrix::Zero(n, n);
  double total_rank = 0;
  double orthogonality = 0;
  for (std::size_t i = 0; i < inst.frame_projectors.size(); ++i) {
    sum += inst.frame_projectors[i].matrix;
    total_rank += inst.frame_projectors[i].rank();
    for (std::size_t j = i + 1; j < inst.frame_projectors.size(); ++j) {
      const Matrix prod = inst.frame_projectors[i].matrix * inst.frame_projectors[j].matrix;
      orthogonality = std::max(orthogonality, prod.cwiseAbs().maxCoeff());
    }
  }
  const double completeness = (sum - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
  const double frame_bound = std::pow(double(l + 1), double(d));

  std::optional<DensityMatrix> rho;
  std::vector<double> spectrum;
  if (p.contains("spectrum")) {
    spectrum = p.at("spectrum").get<std::vector<double>>();
    Matrix m = Matrix::Zero(d, d);
    for (int i = 0; i < d; ++i) m(i, i) = spectrum[std::size_t(i)];
    rho = DensityMatrix(HilbertLayout::single(std::size_t(d), "A"), m);
  }

  Json frames = Json::array();
  std::vector<std::string> header{"frame", "irrep_dimension", "rank", "entropy", "band"};
  if (rho) {
    header.push_back("probability");
    header.push_back("keyl_werner_bound");
  }
  CsvTable table(header);
  std::size_t kw_violations = 0;
  double kw_worst = -HUGE_VAL;
  std::vector<std::size_t> band_of_frame(inst.frames.size());
  for (std::size_t b = 0; b < inst.members.size(); ++b) {
    for (auto f : inst.members[b]) band_of_frame[f] = b;
  }
  const auto sorted = rho ? sorted_spectrum(*rho) : std::vector<double>{};
  for (std::size_t i = 0; i < inst.frames.size(); ++i) {
    const auto& fr = inst.frames[i];
    Json row = {{"parts", fr.parts()},
                {"irrep_dimension", irrep_dimension(fr)},
                {"rank", inst.frame_projectors[i].rank()},
                {"entropy", fr.entropy()},
                {"band", band_of_frame[i]}};
    std::vector<std::string> cells{join(fr.parts(), " "), std::to_string(irrep_dimension(fr)),
                                   format_number(inst.frame_projectors[i].rank()), format_number(fr.entropy()),
                                   std::to_string(band_of_frame[i])};
    if (rho) {
      const double prob = spectrum_probability(inst.frame_projectors[i], *rho);
      const double bound = keyl_werner_bound(fr, sorted);
      row["probability"] = prob;
      row["keyl_werner_bound"] = bound;
      cells.push_back(format_number(prob));
      cells.push_back(format_number(bound));
      kw_worst = std::max(kw_worst, prob - bound);
      if (prob > bound + ctx.tol("keyl_werner")) ++kw_violations;
    }
    frames.push_back(row);
    table.row(cells);
  }

  c.results = {{"d", d},
               {"l", l},
               {"eta", eta},
               {"frame_count", inst.frames.size()},
               {"frame_bound", frame_bound},
               {"total_rank", total_rank},
               {"completeness_defect", completeness},
               {"orthogonality_defect", orthogonality},
               {"band_edges", inst.edges},
               {"appendix_constant", appendix_constant(eta, d)},
               {"frames", frames}};
  assert_at_most(c, "projectors_complete", completeness, ctx.tol("projector"));
  assert_at_most(c, "projectors_orthogonal", orthogonality, ctx.tol("projector"));
  assert_true(c, "frame_count_bound", double(inst.frames.size()) <= frame_bound);
  assert_at_most(c, "rank_sum", std::abs(total_rank - double(n)), ctx.tol("projector"));
  if (rho) {
    const double s = von_neumann_entropy(*rho);
    const auto band = inst.band_of(s);
    c.results["spectrum"] = spectrum;
    c.results["state_entropy"] = s;
    c.results["state_band"] = band;
    c.results["band_masses"] = band_masses(inst, *rho);
    c.results["off_band_mass"] = off_band_mass(inst, *rho, band);
    c.results["keyl_werner_violations"] = kw_violations;
    c.results["keyl_werner_worst_excess"] = kw_worst;
    assert_true(c, "keyl_werner", kw_violations == 0);
  }
  c.csv = table.text();
  return c;
}

inline FidelityFunction table_from_inputs(const Context& ctx, std::size_t alphabet, std::size_t l) {
  const Json t = load_input_json(ctx.inputs().at("table"), ctx.base_dir);
  return FidelityFunction(alphabet, l, t.at("values").get<std::vector<double>>());
}

inline Computed run_robustify(const Context& ctx) {
  const auto& p = ctx.params();
  const auto alphabet = p.at("alphabet").get<std::size_t>();
  const auto l = p.at("l").get<std::size_t>();
  const auto family = p.at("family").get<std::string>();
  FidelityFunction f;
  if (family == "table") {
    f = table_from_inputs(ctx, alphabet, l);
  } else if (family == "constant_indicator") {
    f = FidelityFunction::constant_indicator(alphabet, l);
  } else if (family == "constant") {
    f = FidelityFunction::constant(alphabet, l, p.at("value").get<double>());
  } else {
    Rng rng(ctx.seed);
    std::vector<double> values(sequence_count(alphabet, l));
    for (auto& v : values) v = rng.uniform();
    f = FidelityFunction(alphabet, l, std::move(values));
  }

  const auto check = check_robustification(f);
  Computed c;
  CsvTable table({"s_sequence", "value", "average"});
  double worst_excess = -HUGE_VAL;
  std::size_t violations = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto s = decode_sequence(i, alphabet, l);
    const double avg = permutation_average(f, s);
    worst_excess = std::max(worst_excess, check.bound - avg);
    if (avg < check.bound - ctx.tol("robustification")) ++violations;
    table.row({format_sequence(s), format_number(f.at(i)), format_number(avg)});
  }
  c.results = {{"alphabet", alphabet},
               {"l", l},
               {"family", family},
               {"gamma", check.gamma},
               {"bound", check.bound},
               {"worst_average", check.worst_average},
               {"worst_sequence", format_sequence(check.worst_sequence)},
               {"type_count", enumerate_types(alphabet, l).size()},
               {"sequence_count", f.size()},
               {"permutations", permutation_count(l)},
               {"exhaustive", true},
               {"violations", violations},
               {"worst_excess", worst_excess}};
  assert_true(c, "robustification", violations == 0);
  c.csv = table.text();
  return c;
}

inline Computed run_derandomize(const Context& ctx) {
  const auto& p = ctx.params();
  const auto alphabet = p.at("alphabet").get<std::size_t>();
  const auto l = p.at("l").get<std::size_t>();
  const auto family = p.at("family").get<std::string>();
  const auto g = family == "table" ? failure_from_fidelity(table_from_inputs(ctx, alphabet, l))
                                   : fixed_pair_failure(alphabet, l);
  const DerandomizationPlan plan{p.at("K").get<std::size_t>(), p.at("nu").get<double>(), ctx.seed,
                                 p.at("max_retries").get<std::size_t>()};
  const auto res = derandomize(g, plan);

  // per-sequence empirical means, recomputed as an independent table
  Computed c;
  CsvTable table({"s_sequence", "value"});
  double worst = -1;
  for (std::size_t i = 0; i < sequence_count(alphabet, l); ++i) {
    const auto s = decode_sequence(i, alphabet, l);
    double total = 0;
    for (const auto& perm : res.permutations) total += g.g(perm, s);
    const double mean = total / double(res.permutations.size());
    worst = std::max(worst, mean);
    table.row({format_sequence(s), format_number(mean)});
  }
  Json perms = Json::array();
  for (const auto& perm : res.permutations) perms.push_back(perm);
  const bool bound_positive = res.bound > 0;
  c.results = {{"alphabet", alphabet},
               {"l", l},
               {"family", family},
               {"K", plan.K},
               {"nu", plan.nu},
               {"epsilon", res.epsilon},
               {"bound", res.bound},
               {"bound_positive", bound_positive},
               {"worst_mean", res.worst_mean},
               {"worst_sequence", format_sequence(res.worst_sequence)},
               {"success", res.success},
               {"seed_used", res.seed_used},
               {"attempts", res.attempts},
               {"communication_rate", res.communication_rate},
               {"permutations", perms}};
  assert_at_most(c, "worst_mean_table", std::abs(worst - res.worst_mean), ctx.tol("oracle"));
  if (bound_positive) assert_true(c, "success", res.success);
  c.csv = table.text();
  return c;
}

inline Computed run_counterexample(const Context& ctx) {
  const auto base = ctx.inputs().contains("base") ? load_state(ctx.inputs().at("base"), ctx.base_dir) : states::bell();
  const auto& p = ctx.params();
  const auto fam = build_counterexample(base, p.at("N").get<std::size_t>());
  const auto gap = counterexample_gap(fam, p.at("grid_steps").get<std::size_t>(), ctx.tol("gap"));
  const auto diag = check_family(fam);

  // K_s rho_t K_s^dagger = delta_{st} rho_1
  const auto det = detection_instrument(fam);
  const auto& a = fam.base.layout().labels()[0];
  double detection = 0;
  for (std::size_t s = 0; s < fam.N; ++s) {
    for (std::size_t t = 0; t < fam.N; ++t) {
      const auto out = apply(det.branches()[s], fam.states.states()[t], {a});
      const Matrix want = s == t ? fam.states.states()[0].matrix() : Matrix::Zero(out.matrix().rows(), out.matrix().cols());
      detection = std::max(detection, (out.matrix() - want).cwiseAbs().maxCoeff());
    }
  }

  Computed c;
  const double log_n = std::log2(double(fam.N));
  c.results = {{"N", fam.N},
               {"support_rank", fam.support_rank},
               {"avqs_cost", gap.avqs_cost},
               {"compound_cost", gap.compound_cost},
               {"gap", gap.gap},
               {"classical_compound", gap.classical_compound},
               {"classical_bound", gap.classical_avqs_bound},
               {"classical_bound_is_upper_bound", true},
               {"grid_points", gap.grid_points},
               {"grid_max_conditional", gap.grid_max_conditional},
               {"grid_max_classical", gap.grid_max_classical},
               {"max_conditional_residual", gap.max_conditional_residual},
               {"max_classical_residual", gap.max_classical_residual},
               {"max_support_overlap", diag.max_support_overlap},
               {"max_b_marginal_defect", diag.max_b_marginal_defect},
               {"detection_defect", detection}};
  assert_at_most(c, "gap_is_log_N", std::abs(gap.gap - log_n), ctx.tol("gap"));
  assert_at_most(c, "conditional_identity", gap.max_conditional_residual, ctx.tol("identity"));
  assert_at_most(c, "classical_identity", gap.max_classical_residual, ctx.tol("identity"));
  assert_at_most(c, "detection", detection, ctx.tol("detection"));
  assert_true(c, "grid_below_compound", gap.consistent);
  return c;
}

inline Computed dispatch(const Context& ctx) {
  const auto cmd = ctx.config.at("command").get<std::string>();
  if (cmd == "entropy") return run_entropy(ctx);
  if (cmd == "distill-rate") return run_distill_rate(ctx);
  if (cmd == "optimize") return run_optimize(ctx);
  if (cmd == "schur") return run_schur(ctx);
  if (cmd == "robustify") return run_robustify(ctx);
  if (cmd == "derandomize") return run_derandomize(ctx);
  if (cmd == "counterexample") return run_counterexample(ctx);
  throw Error("unknown command " + cmd);
}

// ---------------------------------------------------------------------------
// Reports

inline std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void apply_expectations(const Json& expect, const Json& results, double default_tol, Json& assertions) {
  for (const auto& e : expect) {
    const auto path = e.at("path").get<std::string>();
    Json a = {{"name", "expect " + path}};
    const Json::json_pointer ptr(path);
    if (!results.contains(ptr)) {
      a["passed"] = false;
      a["detail"] = "no such result";
      assertions.push_back(a);
      continue;
    }
    const Json& got = results.at(ptr);
    bool ok = true;
    if (got.is_boolean()) {
      ok = e.contains("value") && e.at("value").is_boolean() && got == e.at("value");
    } else if (got.is_number()) {
      const double x = got.get<double>();
      const double t = e.value("tol", default_tol);
      if (e.contains("value")) ok = ok && std::abs(x - e.at("value").get<double>()) <= t;
      if (e.contains("min")) ok = ok && x >= e.at("min").get<double>() - t;
      if (e.contains("max")) ok = ok && x <= e.at("max").get<double>() + t;
      a["tolerance"] = t;
    } else {
      ok = false;
      a["detail"] = "result is not a number or boolean";
    }
    a["value"] = got;
    a["passed"] = ok;
    assertions.push_back(a);
  }
}

struct RunOutcome {
  Json report;  // null when the config was rejected
  std::string csv;
  std::vector<Diagnostic> diagnostics;
  int exit_code = kOk;
};

// Report payload with the wall-time field removed, for byte comparisons.
inline std::string deterministic_payload(const Json& report) {
  Json copy = report;
  if (copy.contains("provenance")) copy["provenance"].erase("wall_time_s");
  return copy.dump();
}

inline RunOutcome run(const Json& config, const std::string& base_dir = ".") {
  const auto start = std::chrono::steady_clock::now();
  RunOutcome out;
  const Json cfg = normalize(config, base_dir, out.diagnostics);
  if (!out.diagnostics.empty()) {
    out.exit_code = exit_code_for(out.diagnostics);
    return out;
  }

  Context ctx{cfg, base_dir, cfg.at("seed").get<std::uint64_t>()};
  Computed computed;
  try {
    computed = dispatch(ctx);
  } catch (const io::IoError& e) {
    out.diagnostics.push_back({"inputs", e.what(), true});
  } catch (const Error& e) {
    out.diagnostics.push_back({cfg.at("command").get<std::string>(), e.what()});
  } catch (const Json::exception& e) {
    out.diagnostics.push_back({"inputs", e.what()});
  }
  if (!out.diagnostics.empty()) {
    out.exit_code = exit_code_for(out.diagnostics);
    return out;
  }

  apply_expectations(cfg.at("expect"), computed.results, ctx.tol("expect"), computed.assertions);
  bool passed = true;
  for (const auto& a : computed.assertions) passed = passed && a.at("passed").get<bool>();

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  Json tolerances = {{"kernel", kernel_tolerances()}, {"assertions", cfg.at("tolerances")}};
  out.report = {{"config", cfg},
                {"results", computed.results},
                {"assertions", computed.assertions},
                {"passed", passed},
                {"seed", ctx.seed},
                {"tolerances", tolerances},
                {"provenance",
                 {{"tool", kToolName},
                  {"version", kVersion},
                  {"seed", ctx.seed},
                  {"inputs_hash", fnv1a_hex(Json{cfg.at("inputs"), cfg.at("params")}.dump())},
                  {"wall_time_s", wall}}}};
  out.csv = computed.csv;
  out.exit_code = passed ? kOk : kAssertionFailed;
  return out;
}

inline RunOutcome run_file(const std::string& path) {
  RunOutcome out;
  Json config;
  try {
    config = io::read_json_file(path);
  } catch (const io::IoError& e) {
    out.diagnostics.push_back({"", e.what(), true});
    out.exit_code = kIoFailure;
    return out;
  } catch (const Error& e) {
    out.diagnostics.push_back({"", e.what()});
    out.exit_code = kSchemaViolation;
    return out;
  }
  const auto dir = std::filesystem::path(path).parent_path().string();
  return run(config, dir.empty() ? "." : dir);
}

}  // namespace avqslab::scenario
