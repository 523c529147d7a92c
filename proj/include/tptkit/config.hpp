#pragma once

#include "tptkit/model.hpp"
#include "tptkit/region.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tptkit {

/// Region as written in the config: `interval lo hi` or `ball cx cy r [n_atoms]`.
struct RegionSpec {
  std::string text;
  Region build() const;
};

struct ExperimentConfig {
  std::string source;  // text the hash is taken over
  std::uint64_t hash = 0;

  ModelDescriptor model;
  RegionSpec a, b;

  std::vector<int> nodes;
  std::vector<int> histogram_nodes;

  struct Simulate {
    bool enabled = false;
    double dt = 1e-3;
    double time = 0.0;  // total model time over all streams
    int n_streams = 10;
    std::uint64_t seed = 1;
    std::optional<std::vector<double>> x0;
    bool refine = false;  // repeat at dt/2
  } simulate;

  struct Tpp {
    bool enabled = false;
    double dt_max = 1e-3;
    std::size_t n_paths = 1000;
    double c_safe = 0.1;
    std::optional<std::vector<double>> start;  // fixed start instead of eta_A^- draws
  } tpp;

  struct Analyze {
    std::vector<double> surfaces;   // circle radii about A (2D) or points (1D)
    std::vector<double> mc_probes;  // flattened points
    std::size_t mc_samples = 2000;
    std::vector<double> mc_dt{1e-3};
    double rate_tolerance = 0.15;
    double identity_tolerance = 0.01;
    double time_tolerance = 0.02;
    double density_tolerance = 0.1;
    double weak_tolerance = 0.05;
    double flux_tolerance = 0.02;
    double flux_rate_tolerance = 0.05;
    double pointwise_tolerance = 1e-3;
    double divergence_tolerance = 1e-2;
    double sigma = 3.0;
    double ks_alpha = 0.01;
    double reciprocal_tolerance = 0.1;
  } analyze;

  struct Output {
    std::string directory = "out";
    std::string format = "csv";  // csv | json | binary
    bool trajectories = false;
  } output;

  int dim() const;
};

/// Parses the section/key grammar (see README). Throws ConfigError with the
/// line number on unknown sections or keys, duplicates, malformed values,
/// missing required keys, and unresolved cross references (dimensions,
/// overlapping regions).
ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);

}  // namespace tptkit
