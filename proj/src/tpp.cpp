#include "tptkit/tpp.hpp"

#include "tptkit/error.hpp"
#include "tptkit/pde.hpp"
#include "tptkit/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace tptkit {

namespace {

Vec inward_normal(const Region& r, const Vec& p) {
  const double eps = 1e-6;
  Vec n(p.size());
  for (int k = 0; k < p.size(); ++k) {
    Vec e = Vec::Zero(p.size());
    e[k] = eps;
    n[k] = -(r.signed_distance(Vec(p + e)) - r.signed_distance(Vec(p - e))) / (2 * eps);
  }
  return n / n.norm();
}

bool touches_theta(const Grid& g, std::size_t i, const Region& a, const Region& b) {
  const int d = g.dim();
  const int i0 = g.index_along(i, 0);
  const int i1 = d == 2 ? g.index_along(i, 1) : 0;
  for (int dj = (d == 2 ? -1 : 0); dj <= (d == 2 ? 1 : 0); ++dj) {
    for (int di = -1; di <= 1; ++di) {
      const int j0 = i0 + di, j1 = i1 + dj;
      if (j0 < 0 || j0 >= g.nodes(0)) continue;
      if (d == 2 && (j1 < 0 || j1 >= g.nodes(1))) continue;
      const std::size_t nb = static_cast<std::size_t>(j0) + g.stride(1) * static_cast<std::size_t>(j1);
      const Vec x = g.point(d == 2 ? nb : static_cast<std::size_t>(j0));
      if (!a.inside_closure(x) && !b.inside_closure(x)) return true;
    }
  }
  return false;
}

}  // namespace

TppField::TppField(const DiffusionModel& model, const ScalarField& q, const Region& a,
                   const Region& b)
    : model_(&model), a_(a), b_(b), grid_(q.grid_ptr()), q_(q), grad_(gradient(q)) {
  if (!grid_->classified()) throw Error("transition path sampling needs a classified grid");
  const VectorField raw = grad_;
  for (std::size_t i = 0; i < grid_->size(); ++i) {
    const Vec x = grid_->point(i);
    const Region* r = a_.inside_closure(x) ? &a_ : (b_.inside_closure(x) ? &b_ : nullptr);
    if (!r || !touches_theta(*grid_, i, a_, b_)) continue;
    const Vec p = r->project(x);
    BoundaryAtom probe{p, 0.0, inward_normal(*r, p), 0.0, 0.0};
    double delta;
    try {
      delta = boundary_sampling_offset(*grid_, probe);
    } catch (const NumericalError&) {
      continue;
    }
    const Vec g = 2.0 * raw.interpolate(Vec(p - delta * probe.normal)) -
                  raw.interpolate(Vec(p - 2 * delta * probe.normal));
    const double base = r == &a_ ? 0.0 : 1.0;
    q_[i] = base + g.dot(x - p);
    grad_.set(i, g);
  }
}

Vec tpp_drift(const TppField& field, const Vec& y) {
  const double q = field.q(y);
  if (!(q > 0.0)) {
    throw NumericalError(fmt::format("interpolated committor {:.3g} is not positive at the drift point", q));
  }
  const auto& m = field.model();
  return m.drift(y) + 2.0 * (m.diffusion(y) * field.grad_q(y)) / q;
}

TppPath sample_tpp(const TppField& field, const Vec& y0, const TppOptions& opt,
                   std::uint64_t seed, std::uint64_t stream_id, const Grid* occupation_grid,
                   std::vector<double>* occupation) {
  const DiffusionModel& m = field.model();
  const Region& A = field.a();
  const Region& B = field.b();
  const int d = m.dim();
  RandomStream rng(seed, stream_id);

  TppPath path;
  path.dim = d;
  path.min_q = std::numeric_limits<double>::infinity();
  auto occupy = [&](const Vec& y, double dt) {
    if (occupation) (*occupation)[occupation_grid->nearest_node(y)] += dt;
  };
  auto record = [&](double t, const Vec& y, double q, double dt) {
    if (!opt.record_path) return;
    path.t.push_back(t);
    for (int k = 0; k < d; ++k) path.states.push_back(y[k]);
    path.q.push_back(q);
    path.dt_eff.push_back(dt);
  };

  Vec y = y0;
  double t = 0.0;
  // points drawn on a curved boundary may land a rounding error outside it
  const bool boundary_start = A.signed_distance(y0) <= 1e-9 * field.grid().max_spacing();
  if (boundary_start) {
    if (-A.signed_distance(y0) > field.grid().max_spacing()) {
      throw NumericalError("transition path start lies more than one cell inside A");
    }
    const Vec p = A.project(y0);
    const Vec g = field.grad_q(p);
    const Vec ag = m.diffusion(p) * g;
    const double norm = std::sqrt(g.dot(ag));
    if (!(norm > 0.0)) throw NumericalError("committor gradient vanishes at the boundary start");
    double eps = opt.eps_factor * opt.dt_max;
    for (int tries = 0;; ++tries) {
      y = p + 2.0 * std::sqrt(eps) * ag / norm;
      if (!A.inside_closure(y) && field.q(y) > 0.0) break;
      if (tries == 40) throw NumericalError("boundary start could not leave closure(A)");
      eps *= 2.0;
    }
    record(0.0, p, 0.0, eps);
    occupy(p, eps);
    t = eps;
  }

  const double dt_floor = opt.dt_min_factor * opt.dt_max;
  const double noise_scale = std::sqrt(2.0);
  Vec xi(d);
  bool first = true;
  for (;;) {
    const double qy = field.q(y);
    if (!first || boundary_start) {
      path.min_q = std::min(path.min_q, qy);
      if (A.inside_closure(y)) ++path.a_reentries;
    }
    first = false;
    if (B.inside_closure(y)) {
      record(t, y, qy, 0.0);
      path.reached_b = true;
      break;
    }
    if (path.steps >= opt.max_steps) {
      throw NumericalError(fmt::format("transition path hit the step limit {} at t = {:.6g}",
                                       opt.max_steps, t));
    }
    if (!(qy > 0.0)) throw NumericalError("transition path reached a point with q <= 0");
    const Vec gq = field.grad_q(y);
    const Mat a = m.diffusion(y);
    const Mat sig = m.sigma(y);
    const Vec K = m.drift(y) + 2.0 * (a * gq) / qy;
    const double gnorm = (noise_scale * (sig.transpose() * gq)).norm();
    double dt = opt.dt_max;
    if (gnorm > 0.0) dt = std::min(dt, opt.c_safe * (qy / gnorm) * (qy / gnorm));
    const double kg = gq.norm() * K.norm();
    if (kg > 0.0) dt = std::min(dt, 0.5 * qy / kg);
    const double d_b = B.signed_distance(y);
    dt = std::min(dt, std::max(dt_floor, 0.1 * d_b * d_b / (2.0 * m.Lambda())));

    Vec prop;
    int halvings = 0;
    for (;;) {
      for (int k = 0; k < d; ++k) xi[k] = rng.normal();
      prop = y + K * dt + std::sqrt(2.0 * dt) * (sig * xi);
      if (!m.box().contains(prop)) {
        throw BoxExitError(path.steps + 1, "transition path left the bounding box");
      }
      if (!A.inside_closure(prop) && field.q(prop) > 0.0) break;
      ++path.rejected_steps;
      if (halvings == 30) {
        std::string where;
        for (int k = 0; k < d; ++k) where += fmt::format("{}{:.6g}", k ? ", " : "", y[k]);
        throw NumericalError(fmt::format(
            "30 rejected steps at ({}): committor under-resolved near dA", where));
      }
      ++halvings;
      dt *= 0.5;
    }
    if (gq.norm() > 0.0) {
      path.max_safety_ratio = std::max(path.max_safety_ratio, K.norm() * dt / (qy / gq.norm()));
    }
    record(t, y, qy, dt);
    occupy(y, dt);
    y = prop;
    t += dt;
    ++path.steps;
  }
  path.hitting_time = t;
  path.terminal = y;
  return path;
}

std::vector<Vec> sample_exit_distribution(const BoundaryMeasure& eta, std::size_t n,
                                          std::uint64_t seed, std::uint64_t stream_id) {
  if (eta.atoms.empty()) throw NumericalError("cannot sample an empty measure");
  std::vector<double> cdf;
  double acc = 0.0;
  for (const auto& a : eta.atoms) {
    if (a.weight < -1e-10) throw NumericalError("measure has a negative atom: " + eta.name);
    acc += std::max(a.weight, 0.0);
    cdf.push_back(acc);
  }
  if (std::abs(eta.total_mass() - 1.0) > 1e-10) {
    throw NumericalError("sampling needs a normalised measure: " + eta.name);
  }
  RandomStream rng(seed, stream_id);
  const Region& region = *eta.region;
  std::vector<Vec> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * acc;
    std::size_t k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    k = std::min(k, cdf.size() - 1);
    const MeasureAtom& atom = eta.atoms[k];
    if (region.kind() == Region::Kind::Ball) {
      const BoundaryAtom& ba = region.atoms()[atom.atom];
      const double theta = ba.param + (2.0 * rng.uniform() - 1.0) * ba.half_width;
      const Vec c = region.centre();
      out.push_back(make_vec(c[0] + region.radius() * std::cos(theta),
                             c[1] + region.radius() * std::sin(theta)));
    } else {
      out.push_back(atom.point);
    }
  }
  return out;
}

TppEnsemble tpp_ensemble(const TppField& field, const BoundaryMeasure& eta, std::size_t n_paths,
                         std::shared_ptr<const Grid> occupation_grid, const TppOptions& options,
                         std::uint64_t seed) {
  if (n_paths < 100) throw ConfigError("a transition path ensemble needs at least 100 paths");
  const std::vector<Vec> starts = sample_exit_distribution(eta, n_paths, seed, 0);
  TppOptions opt = options;
  opt.record_path = false;
  std::vector<double> occ(occupation_grid->size(), 0.0);
  TppEnsemble out;
  out.min_q = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_paths; ++i) {
    TppPath p = sample_tpp(field, starts[i], opt, seed, i + 1, occupation_grid.get(), &occ);
    out.crossover_times.push_back(p.hitting_time);
    out.hit_points.push_back(field.b().project(p.terminal));
    out.rejected_steps += p.rejected_steps;
    out.a_reentries += p.a_reentries;
    out.total_steps += p.steps;
    out.min_q = std::min(out.min_q, p.min_q);
    out.max_safety_ratio = std::max(out.max_safety_ratio, p.max_safety_ratio);
  }
  for (std::size_t i = 0; i < occ.size(); ++i) {
    occ[i] /= static_cast<double>(n_paths) * occupation_grid->weight(i);
  }
  out.occupation = ScalarField(std::move(occupation_grid), std::move(occ));
  out.occupation.name = "tpp_occupation";
  return out;
}

void write_tpp_path_csv(std::ostream& os, const TppPath& path) {
  os << "t";
  for (int k = 0; k < path.dim; ++k) os << ",x" << (k + 1);
  os << ",q,dt_eff\n";
  for (std::size_t i = 0; i < path.t.size(); ++i) {
    os << fmt::format("{:.17g}", path.t[i]);
    for (int k = 0; k < path.dim; ++k) {
      os << fmt::format(",{:.17g}", path.states[i * static_cast<std::size_t>(path.dim) + k]);
    }
    os << fmt::format(",{:.17g},{:.17g}\n", path.q[i], path.dt_eff[i]);
  }
}

}  // namespace tptkit
