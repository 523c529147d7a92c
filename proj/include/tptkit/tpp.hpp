#pragma once

#include "tptkit/grid.hpp"
#include "tptkit/measure.hpp"
#include "tptkit/model.hpp"
#include "tptkit/region.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

namespace tptkit {

/// q and grad q prepared for the transition path process. Values at nodes of
/// closure(A) and closure(B) next to Theta are continued linearly from the
/// boundary so that bilinear interpolation in cut cells sees the Theta-side
/// profile rather than the flat Dirichlet values.
class TppField {
 public:
  TppField(const DiffusionModel& model, const ScalarField& q, const Region& a, const Region& b);

  const DiffusionModel& model() const { return *model_; }
  const Region& a() const { return a_; }
  const Region& b() const { return b_; }
  const Grid& grid() const { return *grid_; }
  double q(const Vec& y) const { return q_.interpolate(y); }
  Vec grad_q(const Vec& y) const { return grad_.interpolate(y); }

 private:
  const DiffusionModel* model_;
  Region a_, b_;
  std::shared_ptr<const Grid> grid_;
  ScalarField q_;
  VectorField grad_;
};

/// K(y) = b(y) + 2 a(y) grad q(y) / q(y). Throws NumericalError if q(y) <= 0.
Vec tpp_drift(const TppField& field, const Vec& y);

struct TppOptions {
  double dt_max = 1e-3;
  std::size_t max_steps = 10'000'000;
  double c_safe = 0.1;
  double eps_factor = 1e-2;  // boundary micro-step eps = eps_factor dt_max
  /// Near closure(B) the step is further limited to 0.1 d_B^2 / (2 Lambda)
  /// (d_B the distance to B), floored at dt_min_factor dt_max, which keeps the
  /// sampled-hitting overshoot at B below statistical resolution.
  double dt_min_factor = 1e-4;
  bool record_path = true;
};

struct TppPath {
  int dim = 1;
  std::vector<double> t;
  std::vector<double> states;  // dim per record
  std::vector<double> q;
  std::vector<double> dt_eff;  // step taken from this record (0 at the terminal record)
  bool reached_b = false;
  double hitting_time = 0.0;
  Vec terminal;
  double min_q = 0.0;                  // over records after the first
  std::size_t steps = 0;
  std::size_t rejected_steps = 0;
  std::size_t a_reentries = 0;         // records after the first inside closure(A)
  double max_safety_ratio = 0.0;       // max |K| dt / (q/|grad q|) over accepted steps
};

/// Euler-Maruyama for dY = K(Y) dt + sqrt(2) sigma dW with
/// dt = min(dt_max, c_safe (q/|g|)^2, 0.5 q/(|grad q| |K|)), g = sqrt(2) sigma^T grad q.
/// A start on closure(A) (or up to one cell inside it, projected to the
/// boundary) first moves to y0 + 2 sqrt(eps) a grad q / sqrt(grad q . a grad q).
/// Proposals in closure(A) or with interpolated q <= 0 are redrawn with half
/// the step, at most 30 times. The path stops at the first record in closure(B).
/// `occupation` (optional, one entry per node of `occupation_grid`) accumulates
/// the step length at the nearest node of the state the step starts from.
TppPath sample_tpp(const TppField& field, const Vec& y0, const TppOptions& options,
                   std::uint64_t seed, std::uint64_t stream_id,
                   const Grid* occupation_grid = nullptr, std::vector<double>* occupation = nullptr);

/// Inverse-CDF draws from a normalised measure; on circles the point is then
/// spread uniformly over the atom's arc. Throws NumericalError unless the mass is
/// 1 within 1e-10 and no weight is below -1e-10.
std::vector<Vec> sample_exit_distribution(const BoundaryMeasure& eta, std::size_t n,
                                          std::uint64_t seed, std::uint64_t stream_id = 0);

struct TppEnsemble {
  std::vector<double> crossover_times;
  std::vector<Vec> hit_points;         // projections of the terminal states onto dB
  ScalarField occupation;              // sum of dt at nearest node / node volume / n_paths
  std::size_t rejected_steps = 0;
  std::size_t a_reentries = 0;
  std::size_t total_steps = 0;
  double min_q = 0.0;
  double max_safety_ratio = 0.0;
};

/// n_paths paths started from draws of eta (stream 0 for the draws, path i on
/// stream i + 1).
TppEnsemble tpp_ensemble(const TppField& field, const BoundaryMeasure& eta, std::size_t n_paths,
                         std::shared_ptr<const Grid> occupation_grid, const TppOptions& options,
                         std::uint64_t seed);

/// Path dump: t, x1[, x2], q, dt_eff.
void write_tpp_path_csv(std::ostream& os, const TppPath& path);

}  // namespace tptkit
