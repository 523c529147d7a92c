#pragma once

#include "tptkit/model.hpp"
#include "tptkit/region.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

namespace tptkit {

/// Uniformly sampled path X_0, X_dt, X_2dt, ...
struct Trajectory {
  double dt = 0.0;
  int dim = 1;
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t model_hash = 0;
  std::vector<double> data;  // row-major, `dim` values per state

  std::size_t size() const { return data.size() / static_cast<std::size_t>(dim); }
  double duration() const { return dt * static_cast<double>(size() > 0 ? size() - 1 : 0); }
  Vec state(std::size_t i) const;
  /// First coordinate of state i, the hot path for 1D scans.
  double x(std::size_t i) const { return data[i * static_cast<std::size_t>(dim)]; }
};

/// Euler-Maruyama: X_{k+1} = X_k + b(X_k) dt + sqrt(2 dt) sigma(X_k) xi_k with
/// xi_k drawn from RandomStream(seed, stream_id). Throws BoxExitError naming the
/// step at which the path left the bounding box.
Trajectory simulate(const DiffusionModel& model, const Vec& x0, double dt, std::size_t n_steps,
                    std::uint64_t seed, std::uint64_t stream_id);

struct StoppedTrajectory {
  Trajectory trajectory;
  std::optional<std::size_t> hit_index;
};

using StopPredicate = std::function<bool(const Vec&)>;

/// Runs until the first sampled state satisfying `stop` (checked at x0 too)
/// or until `max_steps` steps have been taken.
StoppedTrajectory simulate_until(const DiffusionModel& model, const Vec& x0, double dt,
                                 const StopPredicate& stop, std::size_t max_steps,
                                 std::uint64_t seed, std::uint64_t stream_id);
StoppedTrajectory simulate_until(const DiffusionModel& model, const Vec& x0, double dt,
                                 const Region& stop, std::size_t max_steps, std::uint64_t seed,
                                 std::uint64_t stream_id);

/// Trajectory dumps. CSV: comment header with model hash, dt, seed and stream id,
/// then `t,x1[,x2]` rows at 17 significant digits. Binary: magic "TPTTRAJ1",
/// little-endian u64 model_hash, f64 dt, u64 seed, u64 stream_id, u32 dim,
/// u64 n_states, then n_states*dim f64 values.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_trajectory_binary(std::ostream& os, const Trajectory& traj);
Trajectory read_trajectory_binary(std::istream& is);

}  // namespace tptkit
