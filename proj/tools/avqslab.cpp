/*
 * avqslab: scenario runner for the arbitrarily varying quantum source toolkit.
 *
 *   avqslab run CONFIG.json [--out REPORT.json] [--csv TABLE.csv]
 *   avqslab validate CONFIG.json
 *   avqslab entropy --state bell
 *   avqslab distill-rate --state bell --instrument inst.json
 *   avqslab optimize --set set.json --k 1 --branches 2 --restarts 8 --iters 200 --seed 1
 *   avqslab schur --d 2 --l 4 [--eta 0.25] [--spectrum 0.9 0.1]
 *   avqslab robustify --alphabet 2 --l 3 [--family random|constant_indicator|constant|table] [--table t.json]
 *   avqslab derandomize --K 64 --nu 0.3 --seed 7 [--family fixed_pair|table] [--table t.json]
 *   avqslab counterexample --base bell --N 2
 *
 * Exit codes:
 *   0  all assertions passed
 *   1  a numerical assertion failed
 *   2  schema violation or invalid input
 *   3  I/O failure
 *
 * AVQSLAB_THREADS caps the number of worker threads.
 */

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "avqslab/scenario.hpp"

namespace {

using avqslab::io::Json;
namespace sc = avqslab::scenario;

struct Outputs {
  std::string out;
  std::string csv;
};

void print_diagnostics(const std::vector<sc::Diagnostic>& diags, std::ostream& os) {
  for (const auto& d : diags) os << "error: " << d.str() << "\n";
}

int emit(const sc::RunOutcome& r, const Outputs& o) {
  if (r.report.is_null()) {
    print_diagnostics(r.diagnostics, std::cerr);
    return r.exit_code;
  }
  try {
    const auto text = r.report.dump(2) + "\n";
    if (o.out.empty()) {
      std::cout << text;
    } else {
      avqslab::io::write_text_file(o.out, text);
    }
    if (!o.csv.empty()) avqslab::io::write_text_file(o.csv, r.csv);
  } catch (const avqslab::io::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sc::kIoFailure;
  }
  for (const auto& a : r.report.at("assertions")) {
    if (!a.at("passed").get<bool>()) std::cerr << "assertion failed: " << a.at("name").get<std::string>() << "\n";
  }
  return r.exit_code;
}

void add_outputs(CLI::App* app, Outputs& o) {
  app->add_option("--out", o.out, "write the JSON report here instead of stdout");
  app->add_option("--csv", o.csv, "write the command's table as CSV");
}

// Flags left unset fall through to the command defaults.
template <typename T>
void put(Json& section, const std::string& key, const std::optional<T>& v) {
  if (v) section[key] = *v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"avqslab scenario runner"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(sc::kVersion));

  Outputs outputs;
  std::string config_path;
  Json built;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run a scenario config");
  run->add_option("config", config_path, "scenario config (JSON)")->required();
  add_outputs(run, outputs);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a config against the schema without computing");
  validate->add_option("config", validate_path, "scenario config (JSON)")->required();

  // entropy / distill-rate
  std::string state, instrument;
  std::optional<std::vector<std::string>> a_labels, b_labels;
  auto* entropy = app.add_subcommand("entropy", "entropies of a bipartite state");
  auto* distill = app.add_subcommand("distill-rate", "one-shot distillation rate of an instrument");
  for (auto* sub : {entropy, distill}) {
    sub->add_option("--state", state, "state name or JSON file")->required();
    sub->add_option("--a", a_labels, "A-side labels");
    sub->add_option("--b", b_labels, "B-side labels");
    add_outputs(sub, outputs);
  }
  distill->add_option("--instrument", instrument, "instrument JSON file");

  // optimize
  std::string set_path;
  std::optional<int> k, branches, restarts, iters, grid_steps;
  auto* optimize = app.add_subcommand("optimize", "maximize the worst-case one-shot rate over instruments");
  optimize->add_option("--set", set_path, "state set JSON file")->required();
  optimize->add_option("--k", k, "copies per block");
  optimize->add_option("--branches", branches, "instrument outcomes");
  optimize->add_option("--restarts", restarts, "optimizer restarts");
  optimize->add_option("--iters", iters, "iterations per restart");
  optimize->add_option("--grid-steps", grid_steps, "simplex grid resolution");
  optimize->add_option("--seed", seed, "master seed");
  add_outputs(optimize, outputs);

  // schur
  std::optional<int> d, l;
  std::optional<double> eta;
  std::optional<std::vector<double>> spectrum;
  auto* schur = app.add_subcommand("schur", "Young frames, isotypic projectors and entropy bands");
  schur->add_option("--d", d, "local dimension")->required();
  schur->add_option("--l", l, "blocklength")->required();
  schur->add_option("--eta", eta, "band width");
  schur->add_option("--spectrum", spectrum, "diagonal test state");
  add_outputs(schur, outputs);

  // robustify / derandomize
  std::optional<int> alphabet, seq_l, big_k, retries;
  std::optional<double> nu, value;
  std::optional<std::string> family;
  std::string table;
  auto* robustify = app.add_subcommand("robustify", "check the permutation-averaging bound on a fidelity table");
  auto* derandomize = app.add_subcommand("derandomize", "draw K permutations and check the empirical worst mean");
  for (auto* sub : {robustify, derandomize}) {
    sub->add_option("--alphabet", alphabet, "size of the state set");
    sub->add_option("--l", seq_l, "sequence length");
    sub->add_option("--family", family, "table family");
    sub->add_option("--table", table, "fidelity table JSON file");
    sub->add_option("--seed", seed, "seed");
    add_outputs(sub, outputs);
  }
  robustify->add_option("--value", value, "value of the constant family");
  derandomize->add_option("--K", big_k, "number of permutations");
  derandomize->add_option("--nu", nu, "threshold");
  derandomize->add_option("--retries", retries, "redraws when the worst mean exceeds nu");

  // counterexample
  std::string base;
  std::optional<int> n_states, cx_grid;
  auto* counter = app.add_subcommand("counterexample", "compound versus AVQS merging cost");
  counter->add_option("--base", base, "base state name or JSON file");
  counter->add_option("--N", n_states, "number of states");
  counter->add_option("--grid-steps", cx_grid, "simplex grid resolution");
  add_outputs(counter, outputs);

  CLI11_PARSE(app, argc, argv);

  if (validate->parsed()) {
    Json config;
    try {
      config = avqslab::io::read_json_file(validate_path);
    } catch (const avqslab::io::IoError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return sc::kIoFailure;
    } catch (const avqslab::Error& e) {
      std::cout << "error: " << e.what() << "\n";
      return sc::kSchemaViolation;
    }
    const auto dir = std::filesystem::path(validate_path).parent_path().string();
    const auto diags = sc::validate(config, dir.empty() ? "." : dir);
    print_diagnostics(diags, std::cout);
    return sc::exit_code_for(diags);
  }
  if (run->parsed()) return emit(sc::run_file(config_path), outputs);

  Json inputs = Json::object(), params = Json::object();
  std::string command;
  if (entropy->parsed() || distill->parsed()) {
    command = entropy->parsed() ? "entropy" : "distill-rate";
    inputs["state"] = state;
    if (!instrument.empty()) inputs["instrument"] = instrument;
    put(params, "a", a_labels);
    put(params, "b", b_labels);
  } else if (optimize->parsed()) {
    command = "optimize";
    inputs["set"] = set_path;
    put(params, "k", k);
    put(params, "branches", branches);
    put(params, "restarts", restarts);
    put(params, "iterations", iters);
    put(params, "grid_steps", grid_steps);
  } else if (schur->parsed()) {
    command = "schur";
    put(params, "d", d);
    put(params, "l", l);
    put(params, "eta", eta);
    put(params, "spectrum", spectrum);
  } else if (robustify->parsed() || derandomize->parsed()) {
    command = robustify->parsed() ? "robustify" : "derandomize";
    if (!table.empty()) inputs["table"] = table;
    put(params, "alphabet", alphabet);
    put(params, "l", seq_l);
    put(params, "family", family);
    put(params, "value", value);
    put(params, "K", big_k);
    put(params, "nu", nu);
    put(params, "max_retries", retries);
  } else if (counter->parsed()) {
    command = "counterexample";
    if (!base.empty()) inputs["base"] = base;
    put(params, "N", n_states);
    put(params, "grid_steps", cx_grid);
  }
  built = {{"command", command}, {"inputs", inputs}, {"params", params}};
  if (seed) built["seed"] = *seed;
  return emit(sc::run(built, "."), outputs);
}
