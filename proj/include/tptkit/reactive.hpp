#pragma once

#include "tptkit/grid.hpp"
#include "tptkit/integrate.hpp"
#include "tptkit/measure.hpp"
#include "tptkit/region.hpp"
#include "tptkit/stats.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace tptkit {

/// One A -> B transition of a sampled path, in sample indices:
/// idx_A_plus <= idx_A_minus < idx_B_plus <= idx_B_minus.
/// idx_B_minus (last visit to closure(B) before the next entrance to A) is
/// absent when the path ends before that entrance.
struct ReactiveSegment {
  std::size_t k = 0;
  std::uint64_t stream_id = 0;
  std::size_t idx_A_plus = 0;
  std::size_t idx_A_minus = 0;
  std::size_t idx_B_plus = 0;
  std::optional<std::size_t> idx_B_minus;
  std::optional<std::size_t> idx_next_A_plus;
  // states at the four stopping indices, kept so the trajectory can be dropped
  Vec x_A_plus, x_A_minus, x_B_plus;
  std::optional<Vec> x_B_minus, x_next_A_plus;
};

std::vector<ReactiveSegment> segment_reactive(const Trajectory& traj, const Region& a,
                                              const Region& b);
/// States X at idx_A_minus..idx_B_plus.
std::vector<Vec> segment_path(const Trajectory& traj, const ReactiveSegment& seg);

/// Number of A -> B switches of the last-visited region, counted sample by sample.
std::size_t count_transitions(const Trajectory& traj, const Region& a, const Region& b);

enum class BoundaryEvent { AExit, AEntrance, BExit, BEntrance };

/// Empirical exit or entrance distribution: one atom of weight 1/N per segment
/// at the nearest boundary atom of the state at the matching stopping index,
/// merged per boundary atom. Throws NumericalError when a state lies farther
/// than `max_distance` from the boundary (dt too large for the grid).
BoundaryMeasure empirical_boundary_distribution(const std::vector<ReactiveSegment>& segments,
                                                BoundaryEvent which,
                                                std::shared_ptr<const Region> region,
                                                double max_distance);

/// Segments of one path together with its length, for pooling several streams.
struct SegmentedRun {
  std::vector<ReactiveSegment> segments;
  double dt = 0.0;
  double duration = 0.0;
};

struct ReactionStatistics {
  Estimate nu_R, T_AB, T_BA, C_AB, C_BA;
  std::size_t n_transitions = 0;
  double total_time = 0.0;
  // per-segment samples in model time, chronological
  std::vector<double> t_ab, t_ba, c_ab, c_ba;
};

/// nu_R = N/T pooled over runs. Times are means over complete segments with
/// 10-batch batch-means errors; the nu_R error follows from the cycle-length
/// error by the delta method. Throws NumericalError if some C_AB >= T_AB.
ReactionStatistics reaction_statistics(const std::vector<SegmentedRun>& runs);

/// Time density of reactive samples (strictly between idx_A_minus and
/// idx_B_plus), binned at the nearest grid node; weight dt/T over node volume.
class ReactiveDensityHistogram {
 public:
  explicit ReactiveDensityHistogram(std::shared_ptr<const Grid> grid);
  void add(const Trajectory& traj, const std::vector<ReactiveSegment>& segments);
  ScalarField field() const;
  double total_time() const { return total_time_; }

 private:
  std::shared_ptr<const Grid> grid_;
  std::vector<double> time_;
  double total_time_ = 0.0;
};

ScalarField empirical_reactive_density(const Trajectory& traj,
                                       const std::vector<ReactiveSegment>& segments,
                                       std::shared_ptr<const Grid> grid);

/// Chronological entrance points into closure(A) that follow a B -> A
/// transition (the first segment of each run starts from x0 and is skipped).
std::vector<Vec> entrance_chain(const std::vector<SegmentedRun>& runs);

/// First half vs second half of the chain's boundary coordinates.
KsResult chain_stationarity(const std::vector<Vec>& chain, const Region& a, const Region& b,
                            double alpha = 0.01);

/// Segments CSV: k, t_A_plus, t_A_minus, t_B_plus, t_B_minus (empty when absent).
void write_segments_csv(std::ostream& os, const std::vector<ReactiveSegment>& segments, double dt);

}  // namespace tptkit
