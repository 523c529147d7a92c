#pragma once

#include "tptkit/config.hpp"
#include "tptkit/report.hpp"

#include <optional>
#include <string>

namespace tptkit {

struct Stages {
  bool solve = false;
  bool analyze = false;
  bool simulate = false;
  bool segment = false;
  bool tpp = false;
  bool mc = false;
  bool fields = false;        // write field dumps
  bool trajectories = false;  // write trajectory dumps
  bool samples = false;       // write segments / measures / tpp samples
};

/// solve | simulate | segment | tpp | analyze | report | all. Throws ConfigError otherwise.
Stages stages_for(const std::string& command);

struct PipelineOptions {
  std::string command = "all";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> format;
  int threads = 1;
  bool write = true;  // false: compute the report only, touch no files
};

/// Runs the selected stages in order solve, simulate, segment, tpp, analyze,
/// compare. Errors are rethrown with the stage name prefixed and their type
/// kept. Writes report.json (and report.csv for the csv format) plus the
/// artifacts the command asks for.
Report run_pipeline(const ExperimentConfig& config, const PipelineOptions& options);

}  // namespace tptkit
