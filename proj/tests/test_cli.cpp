#include "tptkit/config.hpp"
#include "tptkit/error.hpp"
#include "tptkit/pipeline.hpp"
#include "tptkit/report.hpp"

#include <doctest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace tptkit;
namespace fs = std::filesystem;

namespace {

std::string bundled(const std::string& name) {
  return std::string(TPTKIT_SOURCE_DIR) + "/configs/" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

const std::string minimal =
    "[model]\nfamily = brownian1d\nbox = -3 4\n"
    "[regions]\nA = interval -2 0\nB = interval 1 3\n"
    "[grid]\nnodes = 256\n";

fs::path scratch(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("tptkit_test_" + std::to_string(::getpid()) + "_" + tag);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TPTKIT_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("bundled configs parse") {
  for (const char* name : {"brownian1d.cfg", "doublewell1d.cfg", "doublewell2d.cfg", "shear2d.cfg"}) {
    CAPTURE(name);
    const ExperimentConfig c = load_config(bundled(name));
    CHECK_FALSE(c.model.family.empty());
    CHECK(c.hash == fnv1a(slurp(bundled(name))));
  }
  const auto dw = load_config(bundled("doublewell1d.cfg"));
  CHECK(dw.simulate.enabled);
  CHECK(dw.simulate.refine);
  CHECK(dw.analyze.mc_dt.size() == 2);
  CHECK(dw.dim() == 1);
  const auto sh = load_config(bundled("shear2d.cfg"));
  CHECK_FALSE(sh.simulate.enabled);
  CHECK_FALSE(sh.tpp.enabled);
  CHECK(sh.dim() == 2);
}

TEST_CASE("defaults of a minimal config") {
  const auto c = parse(minimal);
  CHECK(c.nodes == std::vector<int>{256});
  CHECK(c.histogram_nodes == std::vector<int>{65});
  CHECK(c.analyze.sigma == 3.0);
  CHECK(c.output.format == "csv");
  CHECK_FALSE(c.simulate.enabled);
}

TEST_CASE("config errors name the line") {
  CHECK_THROWS_WITH_AS(parse(minimal + "[nosuch]\n"), doctest::Contains("line 9: unknown section"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse(minimal + "frobnicate = 1\n"), doctest::Contains("unknown key 'frobnicate'"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse(minimal + "nodes = 128\n"), doctest::Contains("line 9: duplicate key"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse(minimal + "[simulate]\ndt = fast\n"), doctest::Contains("not a number"),
                       ConfigError);
  CHECK_THROWS_AS(parse(minimal + "[output]\nformat = xml\n"), ConfigError);
  CHECK_THROWS_AS(parse("[model]\nfamily = brownian1d\n[grid]\nnodes = 64\n"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse("[model]\nfamily = brownian1d\n[regions]\nA = interval -1 0.5\nB = interval 0.5 1\n"
            "[grid]\nnodes = 64\n"),
      doctest::Contains("closures not disjoint"), ConfigError);
  CHECK_THROWS_AS(parse(minimal + "[tpp]\nn_paths = 10\n"), ConfigError);
  CHECK_THROWS_WITH_AS(parse("[model]\nfamily = doublewell2d\n[regions]\nA = ball -1 0 0.3\n"
                             "B = ball 1 0 0.3\n[grid]\nnodes = 256 256\n[analyze]\nmc_probes = 0.5\n"),
                       doctest::Contains("whole points"), ConfigError);
}

TEST_CASE("report rows are self-consistent") {
  CHECK(relative_row("r", "s", 1.01, 0.0, 1.0, 0.02).pass);
  CHECK_FALSE(relative_row("r", "s", 1.0, 0.0, 0.0, 0.02).pass);  // undefined relative error
  CHECK(sigma_row("m", "s", 0.5, 0.01, 0.52, 3.0, 0.0).pass);
  CHECK_FALSE(sigma_row("m", "s", 0.5, 0.01, 0.54, 3.0, 0.0).pass);
  CHECK(sigma_row("m", "s", 0.5, 0.01, 0.54, 3.0, 0.02).pass);
  CHECK(at_most_row("a", "s", 1e-4, 1e-3).pass);
  CHECK(exceeds_row("e", "s", 0.2, 0.01).pass);
  CHECK(equal_row("q", "s", 0.0, 0.0).pass);
  for (const auto& r : {relative_row("r", "s", 2.0, 0.0, 1.0, 0.5), sigma_row("m", "s", 0.5, 0.01, 0.6, 3.0, 0.0)}) {
    CHECK(row_consistent(r));
  }
}

TEST_CASE("Brownian pipeline reproduces the Bessel hitting time") {
  const auto cfg = load_config(bundled("brownian1d.cfg"));
  PipelineOptions opt;
  opt.command = "all";
  opt.write = false;
  const Report rep = run_pipeline(cfg, opt);
  const ReportRow* bessel = rep.find("tpp_mean_hitting_from_start");
  REQUIRE(bessel);
  CHECK(bessel->pass);
  CHECK(bessel->analytic == doctest::Approx(1.0 / 3.0).epsilon(0.01));
  CHECK(rep.all_pass());
  for (const auto& r : rep.identities) CHECK(row_consistent(r));
  for (const auto& r : rep.rows) CHECK(row_consistent(r));

  std::ostringstream a, b;
  write_report_json(a, rep);
  write_report_json(b, run_pipeline(cfg, opt));
  CHECK(a.str() == b.str());
  CHECK(a.str().find("\"schema\": \"tptkit-report/1\"") != std::string::npos);
}

TEST_CASE("reduced double-well run carries the simulation rows") {
  std::string text = slurp(bundled("doublewell1d.cfg"));
  auto replace = [&text](const std::string& from, const std::string& to) {
    const auto p = text.find(from);
    REQUIRE(p != std::string::npos);
    text.replace(p, from.size(), to);
  };
  replace("time = 30000", "time = 3000");
  replace("mc_samples = 2000", "mc_samples = 100");
  replace("n_paths = 1000", "n_paths = 200");
  const auto cfg = parse(text);
  PipelineOptions opt;
  opt.write = false;
  const Report rep = run_pipeline(cfg, opt);
  for (const char* name : {"nu_R", "T_AB", "T_BA", "C_AB", "C_BA", "segments_vs_automaton_mismatches",
                           "nu_R_half_dt", "tpp_crossover_mean", "current_divergence",
                           "T_AB_vs_hitting_time", "exit_mass_far_endpoint"}) {
    CAPTURE(name);
    CHECK(rep.find(name) != nullptr);
  }
  CHECK(rep.find("segments_vs_automaton_mismatches")->empirical == 0.0);
  for (const auto& r : rep.rows) CHECK(row_consistent(r));
}

TEST_CASE("stage errors keep their type and name the stage") {
  const auto cfg = parse(minimal + "[tpp]\nstart = -1\n");
  PipelineOptions opt;
  opt.command = "tpp";
  opt.write = false;
  CHECK_THROWS_WITH_AS(run_pipeline(cfg, opt), doctest::Contains("stage tpp"), NumericalError);
  opt.command = "launch";
  CHECK_THROWS_AS(run_pipeline(cfg, opt), ConfigError);
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("cli");
  auto write = [&dir](const std::string& name, const std::string& text) {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p.string();
  };
  const std::string out = " --out " + (dir / "out").string();

  CHECK(run_cli("solve --config " + write("ok.cfg", minimal) + out) == 0);
  CHECK(fs::exists(dir / "out" / "report.json"));
  CHECK(fs::exists(dir / "out" / "report.csv"));

  const std::string dw = slurp(bundled("doublewell1d.cfg"));
  const std::string strict = dw.substr(0, dw.find("[simulate]")) + "[analyze]\nidentity_tolerance = 1e-14\n";
  CHECK(run_cli("solve --config " + write("strict.cfg", strict) + out) == 1);

  CHECK(run_cli("solve --config " + write("bad.cfg", minimal + "[grid]\nspacing = 2\n") + out) == 2);
  CHECK(run_cli("solve --config " + (dir / "missing.cfg").string() + out) == 2);
  CHECK(run_cli("solve" + out) == 2);
  CHECK(run_cli("solve --config " + write("fmt.cfg", minimal) + " --format xml" + out) == 2);

  CHECK(run_cli("tpp --config " + write("deep.cfg", minimal + "[tpp]\nstart = -1\n") + out) == 3);
  fs::remove_all(dir);
}

}
