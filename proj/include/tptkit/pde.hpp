#pragma once

#include "tptkit/grid.hpp"
#include "tptkit/integrate.hpp"
#include "tptkit/model.hpp"
#include "tptkit/region.hpp"

#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace tptkit {

enum class GeneratorKind { Forward, Backward };

/// Gibbs density exp(-beta V)/Z on the grid, Z by trapezoid quadrature over the
/// box (uniform density for reflecting-box models). Throws ConfigError when the
/// normaliser on the box and on the 1.5x box differ by 1e-6 relative or more.
ScalarField invariant_density(const DiffusionModel& model, std::shared_ptr<const Grid> grid);
/// Occupation histogram of sampled states (nearest node), normalised to unit mass.
ScalarField empirical_density(const std::vector<const Trajectory*>& trajectories,
                              std::shared_ptr<const Grid> grid);

/// Discrete generator on the free nodes plus identity rows on Dirichlet nodes.
/// For a field u with the Dirichlet values g: (L_h u)_i = (matrix u)_i + boundary_term_i
/// at every free node i.
struct DiscreteOperator {
  Eigen::SparseMatrix<double, Eigen::RowMajor> matrix;
  Eigen::VectorXd boundary_term;
  std::vector<int> piece_of;  // Dirichlet piece index per node, -1 when free
  std::vector<DirichletPiece> pieces;
  int upwind_rows = 0;        // (node, axis) pairs that fell back to upwinding
};

/// Builds L u = tr(a D^2 u) + b . grad u (Forward) or the time-reversed
/// generator -b . grad u + (2/rho) div(a rho) . grad u + tr(a D^2 u) (Backward).
///
/// Diffusion uses three-point differences. Near a Dirichlet region the stencil
/// arm is cut at the boundary crossing and the boundary value enters
/// `boundary_term` (Shortley-Weller). Drift uses central differences where the
/// cell Peclet number |c| h / (2 a) is at most one, first-order upwinding by
/// drift sign otherwise; both keep the matrix an M-matrix. The box faces carry
/// homogeneous Neumann conditions through mirrored neighbours.
///
/// The backward operator takes div(a rho)/rho from the model's closed-form
/// density when available, otherwise from central differences of the `rho` field.
DiscreteOperator discretize_generator(const DiffusionModel& model, const Grid& grid,
                                      GeneratorKind which,
                                      const std::vector<DirichletPiece>& dirichlet,
                                      const ScalarField* rho = nullptr);

/// Returns L_h u at free nodes (0 at Dirichlet nodes).
std::vector<double> apply_operator(const DiscreteOperator& op, const std::vector<double>& u);

struct SolverStats {
  std::string method = "bicgstab+ilut";
  long iterations = 0;
  double relative_residual = 0.0;
};

struct SolverOptions {
  double tolerance = 1e-10;
  long max_iterations = 100000;
};

/// Solves L_h u = source at free nodes with the operator's Dirichlet values.
/// Throws NumericalError when the Krylov solver does not converge.
std::vector<double> solve_operator(const DiscreteOperator& op, const std::vector<double>& source,
                                   SolverStats* stats = nullptr, SolverOptions options = {});

/// Forward committor: L q = 0 in Theta, q = 0 on closure(A), q = 1 on closure(B).
/// Throws NumericalError if the discrete maximum principle 0 <= q <= 1 fails.
ScalarField solve_committor(const DiffusionModel& model, std::shared_ptr<const Grid> grid,
                            const Region& a, const Region& b, SolverStats* stats = nullptr);

/// Backward committor: L~ q~ = 0, q~ = 1 on closure(A), 0 on closure(B).
ScalarField solve_backward_committor(const DiffusionModel& model, std::shared_ptr<const Grid> grid,
                                     const Region& a, const Region& b, const ScalarField& rho,
                                     SolverStats* stats = nullptr);

/// Mean first hitting time of closure(target): L u = -1, u = 0 on the target.
ScalarField solve_mean_hitting_time(const DiffusionModel& model, std::shared_ptr<const Grid> grid,
                                    const Region& target, SolverStats* stats = nullptr);

/// Mean hitting time v_B of closure(B) for the transition path process, via
/// w = q v_B with L w = -q, w = 0 on closure(A) and closure(B).
struct TppMeanHitting {
  ScalarField w;
  ScalarField v;                      // v_B; on closure(A) nodes the nearest atom's limit
  std::vector<double> boundary_a;     // v_B at each atom of A: (n.a grad w)/(n.a grad q)
  std::size_t unreachable_nodes = 0;  // Theta nodes with q = w = 0 (no path to B)
};
/// Throws NumericalError if q < 1e-14 at a Theta node where w does not vanish.
TppMeanHitting solve_tpp_mean_hitting(const DiffusionModel& model, const ScalarField& q,
                                      const Region& a, const Region& b,
                                      SolverStats* stats = nullptr);

/// Second-order central differences; at a Dirichlet piece the arm is cut at the
/// boundary crossing (non-uniform three-point formula), one-sided at box faces.
/// Zero inside Dirichlet pieces, where the field is constant.
VectorField gradient(const ScalarField& field);

/// Trapezoid quadrature over the nodes accepted by `mask` (all when empty).
double quadrature(const ScalarField& field, const std::function<bool(std::size_t)>& mask = {});
/// Trapezoid quadrature of an arbitrary nodal integrand.
double quadrature(const Grid& grid, const std::function<double(std::size_t)>& integrand);

/// Sum over grid edges of weight(edge midpoint, axis) (du)^2 / length, times the
/// transverse cell width. Edges into a Dirichlet piece of `u` are cut at the
/// boundary crossing and use the boundary value. With u = q and weight
/// rho a_kk this is the integral of rho grad q . a grad q over Theta.
double edge_energy(const ScalarField& u, const std::function<double(const Vec&, int)>& weight);

/// n.a grad f at every boundary atom of `region` (n pointing into the region).
/// grad f is interpolated from `grad` at two points along -n inside Theta whose
/// cells avoid closure(A) and closure(B), then linearly extrapolated to the atom.
/// Throws NumericalError for atoms more than one cell outside the box or with
/// no clear sampling cells.
std::vector<double> boundary_normal_flux(const DiffusionModel& model, const VectorField& grad,
                                         const Region& region);
/// Sampling points used by boundary_normal_flux, exposed for tests.
double boundary_sampling_offset(const Grid& grid, const BoundaryAtom& atom);

struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

/// Fraction of `n_samples` runs of simulate_until from x that reach closure(B)
/// before closure(A); stderr = sqrt(p(1-p)/n). Run i uses stream id
/// `stream_offset + i`. Throws NumericalError if a run exhausts `max_steps`.
McEstimate committor_mc_estimate(const DiffusionModel& model, const Region& a, const Region& b,
                                 const Vec& x, double dt, std::size_t n_samples,
                                 std::uint64_t seed, std::size_t max_steps = 50'000'000,
                                 std::uint64_t stream_offset = 0);

/// Bound on the sampled-hitting bias of a hitting probability or mean hitting
/// functional: 0.5826 sqrt(2 Lambda dt) times the summed boundary slopes.
/// 0.5826 = -zeta(1/2)/sqrt(2 pi) is the expected overshoot of a discretely
/// monitored Brownian path in units of its step standard deviation.
double sampled_hitting_bias_bound(double Lambda, double dt, double boundary_slope_sum);

}  // namespace tptkit
