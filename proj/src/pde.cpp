#include "tptkit/pde.hpp"

#include "tptkit/error.hpp"
#include "tptkit/integrate.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tptkit {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

std::vector<int> pieces_of_nodes(const Grid& g, const std::vector<DirichletPiece>& pieces) {
  std::vector<int> piece_of(g.size(), -1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    Vec x = g.point(i);
    for (std::size_t p = 0; p < pieces.size(); ++p) {
      if (pieces[p].region.inside_closure(x)) {
        piece_of[i] = static_cast<int>(p);
        break;
      }
    }
  }
  return piece_of;
}

/// One arm of a three-point stencil along an axis.
struct Arm {
  enum Type { Node, Boundary, None } type = None;
  std::size_t node = 0;
  double dist = 0.0;
  double value = 0.0;  // Dirichlet value for Boundary arms
};

Arm stencil_arm(const Grid& g, std::size_t i, int axis, int dir, const std::vector<int>& piece_of,
                const std::vector<DirichletPiece>& pieces, bool mirror) {
  const int j = g.index_along(i, axis) + dir;
  if (j < 0 || j >= g.nodes(axis)) {
    // homogeneous Neumann: the ghost node mirrors the opposite neighbour
    if (!mirror) return Arm{};
    return stencil_arm(g, i, axis, -dir, piece_of, pieces, false);
  }
  const std::size_t s = g.stride(axis);
  const std::size_t nb = dir > 0 ? i + s : i - s;
  const double h = g.spacing(axis);
  const int p = piece_of[nb];
  if (p < 0) return Arm{Arm::Node, nb, h, 0.0};

  const Region& r = pieces[p].region;
  const Vec xi = g.point(i), xj = g.point(nb);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (r.signed_distance(Vec(xi + mid * (xj - xi))) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return Arm{Arm::Boundary, nb, std::max(hi, 1e-6) * h, pieces[p].value};
}

void check_resolution(const Grid& g, const std::vector<DirichletPiece>& pieces) {
  for (const auto& p : pieces) {
    if (g.max_spacing() > p.region.radius() / 8.0 + 1e-15) {
      throw ConfigError(fmt::format(
          "grid spacing {:.4g} does not resolve region {} (radius {:.4g}); need h <= radius/8",
          g.max_spacing(), p.region.label(), p.region.radius()));
    }
  }
}

// (2/rho) d_k (a_kk rho) by central differences of the product field.
std::vector<double> density_correction_from_field(const DiffusionModel& model, const Grid& g,
                                                  const ScalarField& rho) {
  const int d = g.dim();
  std::vector<double> out(g.size() * d, 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int k = 0; k < d; ++k) {
      const int j = g.index_along(i, k);
      const std::size_t s = g.stride(k);
      auto prod = [&](std::size_t n) { return model.diffusion(g.point(n))(k, k) * rho[n]; };
      double deriv;
      if (j == 0) {
        deriv = (prod(i + s) - prod(i)) / g.spacing(k);
      } else if (j == g.nodes(k) - 1) {
        deriv = (prod(i) - prod(i - s)) / g.spacing(k);
      } else {
        deriv = (prod(i + s) - prod(i - s)) / (2 * g.spacing(k));
      }
      out[i * d + k] = 2.0 * deriv / rho[i];
    }
  }
  return out;
}

}  // namespace

ScalarField invariant_density(const DiffusionModel& model, std::shared_ptr<const Grid> grid) {
  const Grid& g = *grid;
  std::vector<double> rho(g.size(), 1.0);
  if (!model.reflecting_box()) {
    if (!model.potential()) {
      throw ConfigError("model has no closed-form density; use the empirical branch");
    }
    const auto& pot = *model.potential();
    double vmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) vmin = std::min(vmin, pot.value(g.point(i)));
    auto boltzmann = [&](const Vec& x) { return std::exp(-pot.beta * (pot.value(x) - vmin)); };
    for (std::size_t i = 0; i < g.size(); ++i) rho[i] = boltzmann(g.point(i));

    // same spacing on the enlarged box
    std::vector<int> nodes;
    for (int k = 0; k < g.dim(); ++k) {
      nodes.push_back(static_cast<int>(std::lround(1.5 * (g.nodes(k) - 1))) + 1);
    }
    const Grid wide(g.box().scaled(1.5), nodes);
    const double z_box = quadrature(g, [&](std::size_t i) { return rho[i]; });
    const double z_wide = quadrature(wide, [&](std::size_t i) { return boltzmann(wide.point(i)); });
    const double rel = std::abs(z_wide - z_box) / z_wide;
    if (!(rel < 1e-6)) {
      throw ConfigError(fmt::format(
          "bounding box too small: normaliser changes by {:.3g} relative on the 1.5x box", rel));
    }
  }
  const double z = quadrature(g, [&](std::size_t i) { return rho[i]; });
  for (double& r : rho) r /= z;
  ScalarField f(std::move(grid), std::move(rho));
  f.name = "rho";
  return f;
}

ScalarField empirical_density(const std::vector<const Trajectory*>& trajectories,
                              std::shared_ptr<const Grid> grid) {
  const Grid& g = *grid;
  std::vector<double> counts(g.size(), 0.0);
  double total = 0.0;
  for (const Trajectory* t : trajectories) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      counts[g.nearest_node(t->state(i))] += 1.0;
      total += 1.0;
    }
  }
  if (total == 0.0) throw Error("empirical density needs at least one sample");
  for (std::size_t i = 0; i < g.size(); ++i) counts[i] /= total * g.weight(i);
  ScalarField f(std::move(grid), std::move(counts));
  f.name = "rho_empirical";
  return f;
}

DiscreteOperator discretize_generator(const DiffusionModel& model, const Grid& grid,
                                      GeneratorKind which,
                                      const std::vector<DirichletPiece>& dirichlet,
                                      const ScalarField* rho) {
  if (grid.dim() != model.dim()) throw ConfigError("grid and model dimensions differ");
  check_resolution(grid, dirichlet);
  const bool backward = which == GeneratorKind::Backward;
  if (backward && !model.potential() && rho == nullptr) {
    throw ConfigError("backward generator needs the invariant density");
  }
  std::vector<double> field_correction;
  if (backward && !model.potential()) {
    field_correction = density_correction_from_field(model, grid, *rho);
  }

  DiscreteOperator op;
  op.pieces = dirichlet;
  op.piece_of = pieces_of_nodes(grid, dirichlet);
  op.boundary_term = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));

  const int d = grid.dim();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(grid.size() * (2 * d + 1));

  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    if (op.piece_of[i] >= 0) {
      triplets.emplace_back(row, row, 1.0);
      continue;
    }
    const Vec x = grid.point(i);
    const Mat a = model.diffusion(x);
    if (d == 2 && std::abs(a(0, 1)) > 1e-12 * (a(0, 0) + a(1, 1))) {
      throw ConfigError("grid discretization supports diagonal diffusion matrices only");
    }
    Vec c = model.drift(x);
    if (backward) {
      Vec corr(d);
      if (model.potential()) {
        corr = 2.0 * (model.diffusion_divergence(x) + a * (*model.log_density_gradient(x)));
      } else {
        for (int k = 0; k < d; ++k) corr[k] = field_correction[i * d + k];
      }
      c = -c + corr;
    }

    double diag = 0.0;
    auto add = [&](const Arm& arm, double coef) {
      if (arm.type == Arm::Node) {
        triplets.emplace_back(row, static_cast<Eigen::Index>(arm.node), coef);
      } else {
        op.boundary_term[row] += coef * arm.value;
      }
    };
    for (int k = 0; k < d; ++k) {
      const Arm left = stencil_arm(grid, i, k, -1, op.piece_of, op.pieces, true);
      const Arm right = stencil_arm(grid, i, k, +1, op.piece_of, op.pieces, true);
      const double hl = left.dist, hr = right.dist;
      const double akk = a(k, k);
      double cl = 2.0 * akk / (hl * (hl + hr));
      double cr = 2.0 * akk / (hr * (hl + hr));
      double dg = -(cl + cr);
      const double ck = c[k];
      if (std::abs(ck) * std::max(hl, hr) <= 2.0 * akk) {
        cr += ck * hl / (hr * (hl + hr));
        cl -= ck * hr / (hl * (hl + hr));
        dg += ck * (hr - hl) / (hl * hr);
      } else {
        ++op.upwind_rows;
        if (ck > 0) {
          cr += ck / hr;
          dg -= ck / hr;
        } else {
          cl -= ck / hl;
          dg += ck / hl;
        }
      }
      add(left, cl);
      add(right, cr);
      diag += dg;
    }
    triplets.emplace_back(row, row, diag);
  }
  const auto n = static_cast<Eigen::Index>(grid.size());
  op.matrix.resize(n, n);
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return op;
}

std::vector<double> apply_operator(const DiscreteOperator& op, const std::vector<double>& u) {
  Eigen::Map<const Eigen::VectorXd> uv(u.data(), static_cast<Eigen::Index>(u.size()));
  Eigen::VectorXd r = op.matrix * uv + op.boundary_term;
  std::vector<double> out(u.size(), 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (op.piece_of[i] < 0) out[i] = r[static_cast<Eigen::Index>(i)];
  }
  return out;
}

std::vector<double> solve_operator(const DiscreteOperator& op, const std::vector<double>& source,
                                   SolverStats* stats, SolverOptions options) {
  const std::size_t n = op.piece_of.size();
  // Dirichlet nodes are eliminated: free rows only couple to free nodes.
  std::vector<Eigen::Index> slot(n, -1);
  Eigen::Index m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (op.piece_of[i] < 0) slot[i] = m++;
  }
  std::vector<double> u(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (op.piece_of[i] >= 0) u[i] = op.pieces[op.piece_of[i]].value;
  }
  if (m == 0) return u;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(op.matrix.nonZeros());
  Eigen::VectorXd rhs(m);
  for (std::size_t i = 0; i < n; ++i) {
    if (slot[i] < 0) continue;
    const auto row = static_cast<Eigen::Index>(i);
    for (SpMat::InnerIterator it(op.matrix, row); it; ++it) {
      triplets.emplace_back(slot[i], slot[it.col()], it.value());
    }
    rhs[slot[i]] = source[i] - op.boundary_term[row];
  }
  SpMat reduced(m, m);
  reduced.setFromTriplets(triplets.begin(), triplets.end());

  Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> solver;
  solver.preconditioner().setDroptol(1e-6);
  solver.preconditioner().setFillfactor(10);
  solver.setTolerance(options.tolerance);
  solver.setMaxIterations(options.max_iterations);
  solver.compute(reduced);
  if (solver.info() != Eigen::Success) throw NumericalError("preconditioner setup failed");
  Eigen::VectorXd sol = solver.solve(rhs);
  const double rhs_norm = std::max(rhs.norm(), std::numeric_limits<double>::min());
  const double residual = (reduced * sol - rhs).norm() / rhs_norm;
  if (solver.info() != Eigen::Success || !(residual <= 100 * options.tolerance)) {
    throw NumericalError(fmt::format(
        "linear solve did not converge: {} iterations, relative residual {:.3g}",
        solver.iterations(), residual));
  }
  if (stats) {
    stats->iterations = solver.iterations();
    stats->relative_residual = residual;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (slot[i] >= 0) u[i] = sol[slot[i]];
  }
  return u;
}

namespace {

std::vector<DirichletPiece> committor_pieces(const Region& a, double va, const Region& b, double vb) {
  return {DirichletPiece{a, va}, DirichletPiece{b, vb}};
}

void check_unit_range(const std::vector<double>& q, const char* what) {
  const auto [lo, hi] = std::minmax_element(q.begin(), q.end());
  if (*lo < -1e-8 || *hi > 1.0 + 1e-8) {
    throw NumericalError(fmt::format("{} violates the discrete maximum principle: range [{:.3g}, {:.3g}]",
                                     what, *lo, *hi));
  }
}

}  // namespace

ScalarField solve_committor(const DiffusionModel& model, std::shared_ptr<const Grid> grid,
                            const Region& a, const Region& b, SolverStats* stats) {
  auto pieces = committor_pieces(a, 0.0, b, 1.0);
  DiscreteOperator op = discretize_generator(model, *grid, GeneratorKind::Forward, pieces);
  std::vector<double> q = solve_operator(op, std::vector<double>(grid->size(), 0.0), stats);
  check_unit_range(q, "forward committor");
  ScalarField f(std::move(grid), std::move(q), std::move(pieces));
  f.name = "q";
  return f;
}

ScalarField solve_backward_committor(const DiffusionModel& model, std::shared_ptr<const Grid> grid,
                                     const Region& a, const Region& b, const ScalarField& rho,
                                     SolverStats* stats) {
  auto pieces = committor_pieces(a, 1.0, b, 0.0);
  DiscreteOperator op = discretize_generator(model, *grid, GeneratorKind::Backward, pieces, &rho);
  std::vector<double> q = solve_operator(op, std::vector<double>(grid->size(), 0.0), stats);
  check_unit_range(q, "backward committor");
  ScalarField f(std::move(grid), std::move(q), std::move(pieces));
  f.name = "qtilde";
  return f;
}

ScalarField solve_mean_hitting_time(const DiffusionModel& model, std::shared_ptr<const Grid> grid,
                                    const Region& target, SolverStats* stats) {
  std::vector<DirichletPiece> pieces{DirichletPiece{target, 0.0}};
  DiscreteOperator op = discretize_generator(model, *grid, GeneratorKind::Forward, pieces);
  std::vector<double> u = solve_operator(op, std::vector<double>(grid->size(), -1.0), stats);
  const double lo = *std::min_element(u.begin(), u.end());
  if (lo < -1e-8) throw NumericalError(fmt::format("mean hitting time is negative ({:.3g})", lo));
  ScalarField f(std::move(grid), std::move(u), std::move(pieces));
  f.name = "u_" + target.label();
  return f;
}

TppMeanHitting solve_tpp_mean_hitting(const DiffusionModel& model, const ScalarField& q,
                                      const Region& a, const Region& b, SolverStats* stats) {
  auto grid = q.grid_ptr();
  auto pieces = committor_pieces(a, 0.0, b, 0.0);
  DiscreteOperator op = discretize_generator(model, *grid, GeneratorKind::Forward, pieces);
  std::vector<double> source(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i) source[i] = -q[i];
  std::vector<double> w = solve_operator(op, source, stats);

  TppMeanHitting out;
  out.w = ScalarField(grid, w, pieces);
  out.w.name = "w";

  const VectorField grad_w = gradient(out.w);
  const VectorField grad_q = gradient(q);
  const auto flux_w = boundary_normal_flux(model, grad_w, a);
  const auto flux_q = boundary_normal_flux(model, grad_q, a);
  out.boundary_a.resize(a.atoms().size(), 0.0);
  const double flux_scale =
      std::abs(*std::max_element(flux_q.begin(), flux_q.end(),
                                 [](double x, double y) { return std::abs(x) < std::abs(y); }));
  for (std::size_t k = 0; k < flux_q.size(); ++k) {
    if (std::abs(flux_q[k]) > 1e-10 * flux_scale) out.boundary_a[k] = flux_w[k] / flux_q[k];
  }

  std::vector<double> v(grid->size(), 0.0);
  for (std::size_t i = 0; i < grid->size(); ++i) {
    const Vec x = grid->point(i);
    if (b.inside_closure(x)) continue;
    if (a.inside_closure(x)) {
      v[i] = out.boundary_a[a.nearest_atom(x)];
      continue;
    }
    if (q[i] >= 1e-14) {
      v[i] = w[i] / q[i];
    } else if (std::abs(w[i]) < 1e-14) {
      ++out.unreachable_nodes;
    } else {
      throw NumericalError(fmt::format(
          "committor {:.3g} below 1e-14 at a Theta node near x = {:.6g}: grid too coarse near A",
          q[i], x[0]));
    }
  }
  out.v = ScalarField(grid, std::move(v), {DirichletPiece{b, 0.0}});
  out.v.name = "v_B";
  return out;
}

VectorField gradient(const ScalarField& field) {
  const Grid& g = field.grid();
  const auto& pieces = field.pieces();
  const std::vector<int> piece_of = pieces_of_nodes(g, pieces);
  VectorField grad(field.grid_ptr());
  const int d = g.dim();
  auto value = [&](const Arm& arm) { return arm.type == Arm::Node ? field[arm.node] : arm.value; };

  for (std::size_t i = 0; i < g.size(); ++i) {
    if (piece_of[i] >= 0) continue;
    Vec gr(d);
    for (int k = 0; k < d; ++k) {
      const Arm left = stencil_arm(g, i, k, -1, piece_of, pieces, false);
      const Arm right = stencil_arm(g, i, k, +1, piece_of, pieces, false);
      const double fi = field[i];
      if (left.type != Arm::None && right.type != Arm::None) {
        const double hl = left.dist, hr = right.dist;
        gr[k] = (hl * hl * (value(right) - fi) + hr * hr * (fi - value(left))) /
                (hl * hr * (hl + hr));
        continue;
      }
      // box face: one-sided from the interior
      const int dir = left.type == Arm::None ? +1 : -1;
      const Arm& near = left.type == Arm::None ? right : left;
      double slope;
      if (near.type == Arm::Node) {
        const Arm far = stencil_arm(g, near.node, k, dir, piece_of, pieces, false);
        if (far.type == Arm::Node) {
          slope = (-3.0 * fi + 4.0 * field[near.node] - field[far.node]) / (2.0 * near.dist);
        } else {
          slope = (field[near.node] - fi) / near.dist;
        }
      } else {
        slope = (near.value - fi) / near.dist;
      }
      gr[k] = dir * slope;
    }
    grad.set(i, gr);
  }
  grad.name = "grad_" + field.name;
  return grad;
}

double quadrature(const ScalarField& field, const std::function<bool(std::size_t)>& mask) {
  const Grid& g = field.grid();
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!mask || mask(i)) sum += g.weight(i) * field[i];
  }
  return sum;
}

double quadrature(const Grid& grid, const std::function<double(std::size_t)>& integrand) {
  double sum = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) sum += grid.weight(i) * integrand(i);
  return sum;
}

double edge_energy(const ScalarField& u, const std::function<double(const Vec&, int)>& weight) {
  const Grid& g = u.grid();
  const auto& pieces = u.pieces();
  const std::vector<int> piece_of = pieces_of_nodes(g, pieces);
  const int d = g.dim();
  double sum = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (piece_of[i] >= 0) continue;
    const Vec xi = g.point(i);
    for (int k = 0; k < d; ++k) {
      double perp = 1.0;
      if (d == 2) {
        const int o = 1 - k;
        const int io = g.index_along(i, o);
        perp = (io == 0 || io == g.nodes(o) - 1) ? 0.5 * g.spacing(o) : g.spacing(o);
      }
      for (int dir : {-1, 1}) {
        const Arm arm = stencil_arm(g, i, k, dir, piece_of, pieces, false);
        if (arm.type == Arm::None || (arm.type == Arm::Node && dir < 0)) continue;
        const double other = arm.type == Arm::Node ? u[arm.node] : arm.value;
        Vec mid = xi;
        mid[k] += 0.5 * dir * arm.dist;
        const double du = other - u[i];
        sum += weight(mid, k) * du * du / arm.dist * perp;
      }
    }
  }
  return sum;
}

double boundary_sampling_offset(const Grid& grid, const BoundaryAtom& atom) {
  if (!grid.classified()) throw Error("boundary flux needs a classified grid");
  const double h = grid.max_spacing();
  const Box& box = grid.box();
  for (int k = 0; k < grid.dim(); ++k) {
    if (atom.point[k] < box.lo[k] - grid.spacing(k) || atom.point[k] > box.hi[k] + grid.spacing(k)) {
      throw NumericalError("boundary atom lies more than one cell outside the grid");
    }
  }
  auto clear = [&](const Vec& p) {
    if (!box.contains(p)) return false;
    Grid::Cell c = grid.locate(p);
    for (int j = 0; j < c.count; ++j) {
      if (!grid.in_theta(c.corners[j])) return false;
    }
    return true;
  };
  for (double f : {1.0, 1.5, 2.0, 2.5, 3.0, 4.0}) {
    const double delta = f * h;
    if (clear(Vec(atom.point - delta * atom.normal)) && clear(Vec(atom.point - 2 * delta * atom.normal))) {
      return delta;
    }
  }
  throw NumericalError("no grid cells clear of A and B next to a boundary atom");
}

std::vector<double> boundary_normal_flux(const DiffusionModel& model, const VectorField& grad,
                                         const Region& region) {
  const Grid& g = grad.grid();
  std::vector<double> out;
  out.reserve(region.atoms().size());
  for (const auto& atom : region.atoms()) {
    double delta;
    try {
      delta = boundary_sampling_offset(g, atom);
    } catch (const NumericalError&) {
      // Outward-facing atoms outside the box carry no flux (the field is flat there).
      if (!g.box().contains(atom.point)) {
        out.push_back(0.0);
        continue;
      }
      throw;
    }
    const Vec g1 = grad.interpolate(Vec(atom.point - delta * atom.normal));
    const Vec g2 = grad.interpolate(Vec(atom.point - 2 * delta * atom.normal));
    const Vec gp = 2.0 * g1 - g2;
    out.push_back(atom.normal.dot(model.diffusion(atom.point) * gp));
  }
  return out;
}

McEstimate committor_mc_estimate(const DiffusionModel& model, const Region& a, const Region& b,
                                 const Vec& x, double dt, std::size_t n_samples,
                                 std::uint64_t seed, std::size_t max_steps,
                                 std::uint64_t stream_offset) {
  if (n_samples == 0) throw ConfigError("committor estimate needs at least one sample");
  McEstimate est;
  est.n = n_samples;
  if (b.inside_closure(x)) {
    est.mean = 1.0;
    return est;
  }
  if (a.inside_closure(x)) return est;
  auto stop = [&](const Vec& y) { return a.inside_closure(y) || b.inside_closure(y); };
  std::size_t hits_b = 0;
  for (std::size_t i = 0; i < n_samples; ++i) {
    StoppedTrajectory run = simulate_until(model, x, dt, stop, max_steps, seed, stream_offset + i);
    if (!run.hit_index) {
      throw NumericalError(fmt::format("committor run {} exhausted {} steps", i, max_steps));
    }
    if (b.inside_closure(run.trajectory.state(*run.hit_index))) ++hits_b;
  }
  const double p = static_cast<double>(hits_b) / static_cast<double>(n_samples);
  est.mean = p;
  est.stderr_ = std::sqrt(p * (1.0 - p) / static_cast<double>(n_samples));
  return est;
}

double sampled_hitting_bias_bound(double Lambda, double dt, double boundary_slope_sum) {
  return 0.5826 * std::sqrt(2.0 * Lambda * dt) * boundary_slope_sum;
}

}  // namespace tptkit
