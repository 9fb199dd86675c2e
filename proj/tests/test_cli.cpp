#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "avqslab/scenario.hpp"

using namespace avqslab;
using scenario::Json;

namespace {

std::filesystem::path scratch_dir() {
  auto dir = std::filesystem::temp_directory_path() / ("avqslab_cli_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  return dir;
}

std::string write_json(const std::string& name, const Json& j) {
  const auto path = scratch_dir() / name;
  std::ofstream(path) << j.dump();
  return path.string();
}

bool has_diagnostic(const std::vector<scenario::Diagnostic>& diags, const std::string& field, const std::string& text) {
  for (const auto& d : diags) {
    if (d.field == field && d.message.find(text) != std::string::npos) return true;
  }
  return false;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(AVQSLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Scenario, EntropyOfBell) {
  const auto r = scenario::run({{"command", "entropy"}, {"state", "Bell"}});
  ASSERT_EQ(r.exit_code, scenario::kOk);
  EXPECT_NEAR(r.report["results"]["conditional_entropy"].get<double>(), -1.0, 1e-10);
  EXPECT_NEAR(r.report["results"]["coherent_information"].get<double>(), 1.0, 1e-10);
  EXPECT_EQ(r.report["config"]["inputs"]["state"], "Bell");
}

TEST(Scenario, CounterexampleBellTwo) {
  const auto r = scenario::run({{"command", "counterexample"}, {"base", "Bell"}, {"N", 2}});
  ASSERT_EQ(r.exit_code, scenario::kOk);
  EXPECT_NEAR(r.report["results"]["gap"].get<double>(), 1.0, 1e-6);
  for (const char* key : {"N", "avqs_cost", "compound_cost", "gap", "classical_bound"}) {
    EXPECT_TRUE(r.report["results"].contains(key)) << key;
  }
  EXPECT_TRUE(r.report["tolerances"]["assertions"].contains("gap"));
}

TEST(Scenario, SchurFrameTable) {
  const auto r = scenario::run({{"command", "schur"}, {"d", 2}, {"l", 4}});
  ASSERT_EQ(r.exit_code, scenario::kOk);
  const auto& frames = r.report["results"]["frames"];
  ASSERT_EQ(frames.size(), 3u);
  double ranks = 0;
  for (const auto& f : frames) ranks += f["rank"].get<double>();
  EXPECT_NEAR(ranks, 16.0, 1e-9);
  EXPECT_EQ(std::count(r.csv.begin(), r.csv.end(), '\n'), 4);
  EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "frame,irrep_dimension,rank,entropy,band");
}

TEST(Scenario, FidelityTablesUseSequenceColumns) {
  const auto r = scenario::run({{"command", "derandomize"}, {"seed", 7}});
  ASSERT_EQ(r.exit_code, scenario::kOk);
  EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "s_sequence,value");
  EXPECT_EQ(std::count(r.csv.begin(), r.csv.end(), '\n'), 17);
  EXPECT_EQ(r.report["results"]["seed_used"].get<std::uint64_t>(), 7u);
  EXPECT_EQ(r.report["provenance"]["seed"].get<std::uint64_t>(), 7u);
}

TEST(Validate, ValidConfigHasNoDiagnostics) {
  EXPECT_TRUE(scenario::validate({{"command", "schur"}, {"d", 2}, {"l", 4}}).empty());
  EXPECT_TRUE(scenario::validate({{"command", "entropy"}, {"inputs", {{"state", "bell"}}}}).empty());
  EXPECT_TRUE(scenario::validate({{"command", "robustify"}, {"seed", 18446744073709551615ULL}}).empty());
}

TEST(Validate, MissingFieldIsNamed) {
  const auto diags = scenario::validate({{"command", "schur"}, {"l", 4}});
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].field, "params.d");
  EXPECT_NE(diags[0].message.find("missing required field"), std::string::npos);
  EXPECT_TRUE(has_diagnostic(scenario::validate({{"command", "entropy"}}), "inputs.state", "missing"));
  EXPECT_TRUE(has_diagnostic(scenario::validate(Json::object()), "command", "missing"));
}

TEST(Validate, RangeErrorQuotesValue) {
  const auto diags = scenario::validate({{"command", "schur"}, {"d", 9}, {"l", 4}});
  ASSERT_EQ(diags.size(), 1u);
  EXPECT_EQ(diags[0].field, "params.d");
  EXPECT_NE(diags[0].message.find("value 9 out of range"), std::string::npos);
  EXPECT_TRUE(has_diagnostic(scenario::validate({{"command", "schur"}, {"d", 3}, {"l", 8}}), "params.l", "6561"));
  EXPECT_TRUE(has_diagnostic(scenario::validate({{"command", "derandomize"}, {"nu", 1.0}}), "params.nu", "1"));
  EXPECT_TRUE(has_diagnostic(scenario::validate({{"command", "optimize"}, {"set", "x"}, {"k", 3}}), "params.k", "3"));
}

TEST(Validate, RejectsUnknownAndMalformed) {
  EXPECT_TRUE(has_diagnostic(scenario::validate({{"command", "schur"}, {"d", 2}, {"l", 2}, {"dd", 1}}), "params.dd",
                             "unknown"));
  EXPECT_TRUE(has_diagnostic(scenario::validate({{"command", "fly"}}), "command", "not one of"));
  EXPECT_TRUE(has_diagnostic(scenario::validate({{"command", "entropy"}, {"state", "bell"}, {"tolerances", {{"gap", 1}}}}),
                             "tolerances.gap", "unknown"));
  EXPECT_TRUE(has_diagnostic(scenario::validate({{"command", "robustify"}, {"family", "table"}}), "inputs.table", "missing"));
  EXPECT_TRUE(has_diagnostic(scenario::validate({{"command", "robustify"}, {"seed", -1}}), "seed", "non-negative"));
  EXPECT_TRUE(has_diagnostic(
      scenario::validate({{"command", "entropy"}, {"state", "bell"}, {"expect", {{{"path", "x"}, {"value", 1}}}}}),
      "expect[0].path", "pointer"));
}

TEST(Validate, MissingFileIsAnIoFailure) {
  const auto r = scenario::run({{"command", "optimize"}, {"set", "/nonexistent/set.json"}});
  EXPECT_EQ(r.exit_code, scenario::kIoFailure);
  EXPECT_TRUE(r.report.is_null());
}

TEST(Scenario, InvalidInputIsSchemaViolation) {
  const auto r = scenario::run({{"command", "entropy"}, {"state", "bell"}, {"a", {"Q"}}});
  EXPECT_EQ(r.exit_code, scenario::kSchemaViolation);
  EXPECT_EQ(scenario::run({{"command", "schur"}, {"d", 9}, {"l", 2}}).exit_code, scenario::kSchemaViolation);
}

TEST(Scenario, ExpectationsDriveExitStatus) {
  Json cfg = {{"command", "entropy"}, {"state", "bell"}, {"expect", {{{"path", "/conditional_entropy"}, {"value", -1}}}}};
  EXPECT_EQ(scenario::run(cfg).exit_code, scenario::kOk);
  cfg["expect"] = {{{"path", "/conditional_entropy"}, {"min", 0}}};
  const auto r = scenario::run(cfg);
  EXPECT_EQ(r.exit_code, scenario::kAssertionFailed);
  EXPECT_FALSE(r.report["passed"].get<bool>());
  cfg["expect"] = {{{"path", "/no_such_key"}, {"value", 0}}};
  EXPECT_EQ(scenario::run(cfg).exit_code, scenario::kAssertionFailed);
}

TEST(Scenario, ToleranceOverridesAreReported) {
  const auto r = scenario::run({{"command", "counterexample"}, {"N", 3}, {"tolerances", {{"gap", 1e-7}}}});
  ASSERT_EQ(r.exit_code, scenario::kOk);
  EXPECT_EQ(r.report["tolerances"]["assertions"]["gap"].get<double>(), 1e-7);
  EXPECT_EQ(r.report["tolerances"]["assertions"]["identity"].get<double>(), 1e-8);
  EXPECT_EQ(r.report["tolerances"]["kernel"]["eigen_clip"].get<double>(), 1e-12);
}

TEST(Scenario, FileInputsResolveAgainstConfigDirectory) {
  const Json set = {{"names", {"bell", "schmidt"}}, {"states", {"bell", {{"schmidt", 0.75}}}}};
  write_json("set.json", set);
  const auto cfg = write_json("opt.json", {{"command", "optimize"},
                                           {"inputs", {{"set", "set.json"}}},
                                           {"params", {{"branches", 2}, {"restarts", 2}, {"iterations", 20}}},
                                           {"seed", 5}});
  const auto r = scenario::run_file(cfg);
  ASSERT_EQ(r.exit_code, scenario::kOk);
  EXPECT_EQ(r.report["results"]["instrument"]["branches"].size(), 2u);
  EXPECT_EQ(r.report["results"]["worst_p_names"], Json({"bell", "schmidt"}));
}

TEST(Determinism, RerunIsByteIdentical) {
  const std::vector<Json> configs = {
      {{"command", "entropy"}, {"state", {{"schmidt", 0.3}}}},
      {{"command", "distill-rate"}, {"state", "bell"}, {"instrument", {{"kind", "computational"}}}},
      {{"command", "optimize"},
       {"set", Json::array({"bell", {{"schmidt", 0.8}}})},
       {"branches", 2},
       {"restarts", 3},
       {"iterations", 25},
       {"seed", 11}},
      {{"command", "schur"}, {"d", 3}, {"l", 3}, {"spectrum", {0.5, 0.3, 0.2}}},
      {{"command", "robustify"}, {"alphabet", 3}, {"l", 3}, {"seed", 4}},
      {{"command", "derandomize"}, {"K", 16}, {"nu", 0.2}, {"max_retries", 3}, {"seed", 2}},
      {{"command", "counterexample"}, {"N", 3}},
  };
  for (const auto& cfg : configs) {
    const auto a = scenario::run(cfg);
    const auto b = scenario::run(cfg);
    ASSERT_FALSE(a.report.is_null()) << cfg.dump();
    EXPECT_EQ(scenario::deterministic_payload(a.report), scenario::deterministic_payload(b.report)) << cfg.dump();
    EXPECT_EQ(a.csv, b.csv);
    EXPECT_NE(a.report.dump(), scenario::deterministic_payload(a.report));
  }
}

TEST(Determinism, ConfigEchoRoundTrips) {
  const Json cfg = {{"command", "optimize"}, {"set", Json::array({"bell", "mixed"})}, {"branches", 2},
                    {"restarts", 2},          {"iterations", 15},                     {"seed", 9}};
  const auto first = scenario::run(cfg);
  ASSERT_FALSE(first.report.is_null());
  const auto second = scenario::run(first.report["config"]);
  EXPECT_EQ(second.report["config"], first.report["config"]);
  EXPECT_EQ(second.report["results"].dump(), first.report["results"].dump());
  EXPECT_EQ(scenario::deterministic_payload(second.report), scenario::deterministic_payload(first.report));
}

TEST(Determinism, ThreadCountDoesNotChangeResults) {
  const Json cfg = {{"command", "optimize"}, {"set", Json::array({"bell", {{"schmidt", 0.7}}})},
                    {"branches", 2},         {"restarts", 4},
                    {"iterations", 15},      {"seed", 3}};
  ::setenv("AVQSLAB_THREADS", "1", 1);
  const auto serial = scenario::run(cfg);
  ::setenv("AVQSLAB_THREADS", "4", 1);
  const auto parallel = scenario::run(cfg);
  ::unsetenv("AVQSLAB_THREADS");
  EXPECT_EQ(scenario::deterministic_payload(serial.report), scenario::deterministic_payload(parallel.report));
}

TEST(Schema, MatchesCommandTable) {
  const auto schema = io::read_json_file(std::string(AVQSLAB_SCHEMA_DIR) + "/scenario.schema.json");
  std::set<std::string> listed;
  for (const auto& c : schema["properties"]["command"]["enum"]) listed.insert(c.get<std::string>());
  std::set<std::string> table;
  for (const auto& c : scenario::commands()) table.insert(c.name);
  EXPECT_EQ(listed, table);

  for (const auto& branch : schema["allOf"]) {
    const auto name = branch["if"]["properties"]["command"]["const"].get<std::string>();
    const auto* spec = scenario::find_command(name);
    ASSERT_NE(spec, nullptr) << name;
    std::set<std::string> schema_params, spec_params;
    const auto& then = branch["then"]["properties"];
    if (then.contains("params")) {
      for (auto it = then["params"]["properties"].begin(); it != then["params"]["properties"].end(); ++it) {
        schema_params.insert(it.key());
      }
    }
    for (const auto& f : spec->params) spec_params.insert(f.name);
    EXPECT_EQ(schema_params, spec_params) << name;
    for (const auto& f : spec->params) {
      if (!schema_params.count(f.name)) continue;
      const auto& prop = then["params"]["properties"][f.name];
      if (!f.fallback.is_null()) EXPECT_EQ(prop.value("default", Json()), f.fallback) << name << "." << f.name;
      if (prop.contains("minimum")) EXPECT_EQ(prop["minimum"].get<double>(), f.lo) << name << "." << f.name;
      if (prop.contains("maximum")) EXPECT_EQ(prop["maximum"].get<double>(), f.hi) << name << "." << f.name;
    }
  }
}

TEST(Binary, ExitCodes) {
  const auto ok = write_json("ok.json", {{"command", "entropy"}, {"state", "bell"}});
  const auto fail = write_json("fail.json", {{"command", "entropy"},
                                             {"state", "bell"},
                                             {"expect", {{{"path", "/conditional_entropy"}, {"value", 0}}}}});
  const auto bad = write_json("bad.json", {{"command", "schur"}, {"d", 9}, {"l", 2}});
  EXPECT_EQ(run_binary("run " + ok), 0);
  EXPECT_EQ(run_binary("run " + fail), 1);
  EXPECT_EQ(run_binary("run " + bad), 2);
  EXPECT_EQ(run_binary("validate " + bad), 2);
  EXPECT_EQ(run_binary("validate " + ok), 0);
  EXPECT_EQ(run_binary("run /nonexistent/config.json"), 3);
  EXPECT_EQ(run_binary("run " + ok + " --out /nonexistent/dir/report.json"), 3);
  EXPECT_EQ(run_binary("counterexample --base bell --N 2"), 0);
  EXPECT_EQ(run_binary("schur --d 2 --l 4"), 0);
}

TEST(Binary, WritesReportAndCsv) {
  const auto dir = scratch_dir();
  const auto out = (dir / "report.json").string();
  const auto csv = (dir / "frames.csv").string();
  ASSERT_EQ(run_binary("schur --d 2 --l 3 --out " + out + " --csv " + csv), 0);
  const auto report = io::read_json_file(out);
  EXPECT_EQ(report["results"]["frames"].size(), 2u);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "frame,irrep_dimension,rank,entropy,band");
}
