#include "tptkit/config.hpp"
#include "tptkit/error.hpp"
#include "tptkit/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdio>
#include <utility>

namespace {

void print_summary(const tptkit::Report& rep) {
  auto show = [](const char* block, const std::vector<tptkit::ReportRow>& rows) {
    for (const auto& r : rows) {
      fmt::print("{:8} {:4} {:44} {:>14.7g}  {:>14.7g}  {}\n", block, r.pass ? "ok" : "FAIL", r.name,
                 r.empirical, r.check == tptkit::ReportRow::Check::AtMost ||
                                      r.check == tptkit::ReportRow::Check::Exceeds
                                  ? r.tolerance
                                  : r.analytic,
                 tptkit::to_string(r.check));
    }
  };
  show("identity", rep.identities);
  show("row", rep.rows);
  fmt::print("{} identities, {} rows, {} failures\n", rep.identities.size(), rep.rows.size(),
             rep.failures());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transition path theory toolkit"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir, format;
  int threads = 1;
  const std::pair<const char*, const char*> commands[] = {
      {"solve", "grid fields q, q~, rho, hitting times, measures and identities"},
      {"simulate", "Euler-Maruyama streams (writes trajectories)"},
      {"segment", "simulate, cut reactive segments, compare with quadratures"},
      {"tpp", "transition path sampling"},
      {"analyze", "current, fluxes, streamlines"},
      {"report", "every enabled stage plus Monte Carlo committor checks"},
      {"all", "same as report, writing every artifact"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--seed", seed, "master seed (overrides [simulate] seed)");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--format", format, "csv, json or binary")
        ->check(CLI::IsMember({"csv", "json", "binary"}));
    sub->add_option("--threads", threads, "worker cap (stages run sequentially)")
        ->check(CLI::PositiveNumber);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const auto* sub = app.get_subcommands().front();

  try {
    const tptkit::ExperimentConfig cfg = tptkit::load_config(config_path);
    tptkit::PipelineOptions opt;
    opt.command = sub->get_name();
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--out")) opt.out_dir = out_dir;
    if (sub->count("--format")) opt.format = format;
    opt.threads = threads;
    const tptkit::Report rep = tptkit::run_pipeline(cfg, opt);
    print_summary(rep);
    return rep.all_pass() ? 0 : 1;
  } catch (const tptkit::ConfigError& e) {
    fmt::print(stderr, "configuration error: {}\n", e.what());
    return 2;
  } catch (const tptkit::NumericalError& e) {
    fmt::print(stderr, "numerical failure: {}\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  }
}
