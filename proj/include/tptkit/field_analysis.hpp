#pragma once

#include "tptkit/grid.hpp"
#include "tptkit/measure.hpp"
#include "tptkit/model.hpp"
#include "tptkit/region.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tptkit {

/// rho, q, q~ on one grid with their nodal gradients.
struct TptFields {
  ScalarField rho, q, qt;
  VectorField grad_q, grad_qt;
};
TptFields make_tpt_fields(ScalarField rho, ScalarField q, ScalarField qt);

struct ExitEntranceMeasures {
  BoundaryMeasure eta_A_minus, eta_A_plus, eta_B_minus, eta_B_plus;  // normalised by nu
  double nu = 0.0;  // raw mass of eta_A^-
  double raw_A_minus = 0.0, raw_A_plus = 0.0, raw_B_minus = 0.0, raw_B_plus = 0.0;
};

/// Atom weights -rho n.a grad q dsigma on dA, +rho n.a grad q on dB,
/// -rho n.a grad q~ on dB, +rho n.a grad q~ on dA (n into the region), all
/// divided by nu. Throws NumericalError if a normalised weight is below -1e-10.
ExitEntranceMeasures exit_entrance_measures(const DiffusionModel& model, const TptFields& f,
                                            std::shared_ptr<const Region> a,
                                            std::shared_ptr<const Region> b);

/// Integral of rho grad q . a grad q over the box.
double rate_quadrature(const DiffusionModel& model, const TptFields& f);

struct TimeQuadratures {
  double T_AB = 0.0, T_BA = 0.0, C_AB = 0.0, C_BA = 0.0;
};
/// T_AB = int rho q~ / nu_R, T_BA = int rho (1-q~) / nu_R,
/// C_AB = int rho q q~ / nu_R, C_BA = int rho (1-q)(1-q~) / nu_R.
TimeQuadratures time_quadratures(const TptFields& f, double nu_R);

/// rho q q~ on Theta nodes, zero on closure(A) and closure(B).
ScalarField reactive_density_field(const TptFields& f);

/// J_R = (b rho - div(a rho)) q q~ + rho a (q~ grad q - q grad q~), div(a rho)
/// by central differences of the nodal products a_kk rho.
VectorField current_field(const DiffusionModel& model, const TptFields& f);
/// rho a grad q, the current of a reversible model.
VectorField reversible_current(const DiffusionModel& model, const TptFields& f);

/// max over nodes whose +-2 neighbourhood lies in Theta of
/// |central divergence| h / max|J| (h the largest spacing).
double divergence_check(const VectorField& j);
/// Scales each node by 1 +- `fraction`, signs pseudo-random per node.
VectorField perturb(const VectorField& j, double fraction, std::uint64_t seed);

struct SeparatingSurface {
  enum class Kind { Point, Circle } kind = Kind::Circle;
  Vec centre;          // point (1D) or circle centre
  double radius = 0.0;
  int n_points = 1024;
};
/// Flux of J through the surface with the normal pointing away from the
/// enclosed side (towards +x for a point). Throws ConfigError if the surface
/// comes within one cell of closure(A) or closure(B).
double surface_flux(const VectorField& j, const SeparatingSurface& s, const Region& a,
                    const Region& b);

struct Streamline {
  Vec start, end;
  std::size_t steps = 0;
  std::vector<Vec> points;  // kept when requested
};
/// RK4 on J/|J| with arc-length step h/2 until closure(B) is entered.
/// Throws NumericalError on stagnation (|J| below 1e-12 max|J|) or after `max_steps`.
Streamline trace_streamline(const VectorField& j, const Vec& start, const Region& b,
                            std::size_t max_steps = 0, bool keep_points = false);

struct StreamlineMap {
  BoundaryMeasure pushforward;  // eta transported to dB atoms
  double omitted_mass = 0.0;    // atoms below 1e-6 max weight
  double stagnated_mass = 0.0;  // atoms whose streamline stalls (separatrix starts)
  std::vector<std::string> stagnation_messages;
  std::size_t n_streamlines = 0;
};
/// Streamlines that stagnate are dropped with their mass recorded; more than
/// 1% stagnated mass throws NumericalError.
StreamlineMap streamline_map(const VectorField& j, const BoundaryMeasure& eta,
                             std::shared_ptr<const Region> b);

/// Unnormalised L1 distance sum_i w_i |f_i - g_i| divided by sum_i w_i |g_i|,
/// where g is the cell average of `reference` over each node's control volume
/// (excluding closure(A) and closure(B)).
double relative_l1(const ScalarField& field, const ScalarField& reference, const Region& a,
                   const Region& b);
/// As relative_l1 after scaling both fields to unit mass.
double normalized_l1(const ScalarField& field, const ScalarField& reference, const Region& a,
                     const Region& b);
/// Control-volume averages of `fine` on the nodes of `coarse` (zero in closure(A), closure(B)).
std::vector<double> cell_averages(const Grid& coarse, const ScalarField& fine, const Region& a,
                                  const Region& b);

/// Identity row: lhs vs rhs with a relative tolerance.
struct IdentityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};
IdentityCheck check_identity(std::string name, double lhs, double rhs, double tolerance);

/// Hopf signs: n.a grad q < 0 on dA and > 0 on dB at every atom inside the
/// box. Returns the number of violating atoms.
std::size_t hopf_violations(const DiffusionModel& model, const TptFields& f, const Region& a,
                            const Region& b);

}  // namespace tptkit
