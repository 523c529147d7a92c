#include "tptkit/field_analysis.hpp"

#include "tptkit/error.hpp"
#include "tptkit/pde.hpp"
#include "tptkit/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace tptkit {

TptFields make_tpt_fields(ScalarField rho, ScalarField q, ScalarField qt) {
  TptFields f{std::move(rho), std::move(q), std::move(qt), {}, {}};
  f.grad_q = gradient(f.q);
  f.grad_qt = gradient(f.qt);
  return f;
}

ExitEntranceMeasures exit_entrance_measures(const DiffusionModel& model, const TptFields& f,
                                            std::shared_ptr<const Region> a,
                                            std::shared_ptr<const Region> b) {
  const auto fq_a = boundary_normal_flux(model, f.grad_q, *a);
  const auto fq_b = boundary_normal_flux(model, f.grad_q, *b);
  const auto fqt_a = boundary_normal_flux(model, f.grad_qt, *a);
  const auto fqt_b = boundary_normal_flux(model, f.grad_qt, *b);

  auto build = [&](const char* name, std::shared_ptr<const Region> r, const std::vector<double>& flux,
                   double sign, double& raw) {
    BoundaryMeasure m;
    m.name = name;
    m.region = r;
    raw = 0.0;
    for (std::size_t k = 0; k < r->atoms().size(); ++k) {
      const BoundaryAtom& at = r->atoms()[k];
      const double rho = r->dim() == 1 || f.rho.grid().box().contains(at.point)
                             ? f.rho.interpolate(at.point)
                             : 0.0;
      const double w = sign * rho * flux[k] * at.weight;
      m.atoms.push_back(MeasureAtom{at.point, w, k});
      raw += w;
    }
    return m;
  };

  ExitEntranceMeasures out;
  out.eta_A_minus = build("eta_A^-", a, fq_a, -1.0, out.raw_A_minus);
  out.eta_B_minus = build("eta_B^-", b, fq_b, +1.0, out.raw_B_minus);
  out.eta_B_plus = build("eta_B^+", b, fqt_b, -1.0, out.raw_B_plus);
  out.eta_A_plus = build("eta_A^+", a, fqt_a, +1.0, out.raw_A_plus);
  out.nu = out.raw_A_minus;
  if (!(out.nu > 0.0)) throw NumericalError("reactive exit measure has no mass");
  for (BoundaryMeasure* m : {&out.eta_A_minus, &out.eta_A_plus, &out.eta_B_minus, &out.eta_B_plus}) {
    for (auto& at : m->atoms) {
      at.weight /= out.nu;
      if (at.weight < -1e-10) {
        throw NumericalError(fmt::format(
            "{} has a negative atom ({:.3g}) at ({:.6g}): boundary flux has the wrong sign",
            m->name, at.weight, at.point[0]));
      }
    }
  }
  return out;
}

double rate_quadrature(const DiffusionModel& model, const TptFields& f) {
  return edge_energy(f.q, [&](const Vec& x, int k) {
    return f.rho.interpolate(x) * model.diffusion(x)(k, k);
  });
}

TimeQuadratures time_quadratures(const TptFields& f, double nu_R) {
  const Grid& g = f.q.grid();
  TimeQuadratures t;
  t.T_AB = quadrature(g, [&](std::size_t i) { return f.rho[i] * f.qt[i]; }) / nu_R;
  t.T_BA = quadrature(g, [&](std::size_t i) { return f.rho[i] * (1.0 - f.qt[i]); }) / nu_R;
  t.C_AB = quadrature(g, [&](std::size_t i) { return f.rho[i] * f.q[i] * f.qt[i]; }) / nu_R;
  t.C_BA = quadrature(g, [&](std::size_t i) {
             return f.rho[i] * (1.0 - f.q[i]) * (1.0 - f.qt[i]);
           }) / nu_R;
  return t;
}

ScalarField reactive_density_field(const TptFields& f) {
  const Grid& g = f.q.grid();
  std::vector<double> v(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.in_theta(i)) v[i] = f.rho[i] * f.q[i] * f.qt[i];
  }
  ScalarField out(f.q.grid_ptr(), std::move(v));
  out.name = "rho_R";
  return out;
}

namespace {

// d/dx_k of a nodal field, central inside, one-sided at the box faces
double axis_derivative(const Grid& g, const std::vector<double>& v, std::size_t i, int k) {
  const int j = g.index_along(i, k);
  const std::size_t s = g.stride(k);
  const double h = g.spacing(k);
  if (j == 0) return (-3 * v[i] + 4 * v[i + s] - v[i + 2 * s]) / (2 * h);
  if (j == g.nodes(k) - 1) return (3 * v[i] - 4 * v[i - s] + v[i - 2 * s]) / (2 * h);
  return (v[i + s] - v[i - s]) / (2 * h);
}

}  // namespace

VectorField current_field(const DiffusionModel& model, const TptFields& f) {
  const Grid& g = f.q.grid();
  const int d = g.dim();
  // products a_ij rho per (i, j)
  std::vector<std::vector<double>> prod(d * d, std::vector<double>(g.size()));
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Mat a = model.diffusion(g.point(n));
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) prod[r * d + c][n] = a(r, c) * f.rho[n];
    }
  }
  VectorField j(f.q.grid_ptr());
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Vec x = g.point(n);
    Vec div_arho = Vec::Zero(d);
    for (int r = 0; r < d; ++r) {
      for (int c = 0; c < d; ++c) div_arho[r] += axis_derivative(g, prod[r * d + c], n, c);
    }
    const Mat a = model.diffusion(x);
    const Vec jn = (model.drift(x) * f.rho[n] - div_arho) * f.q[n] * f.qt[n] +
                   f.rho[n] * (a * (f.qt[n] * f.grad_q.at(n) - f.q[n] * f.grad_qt.at(n)));
    j.set(n, jn);
  }
  j.name = "J_R";
  return j;
}

VectorField reversible_current(const DiffusionModel& model, const TptFields& f) {
  const Grid& g = f.q.grid();
  VectorField j(f.q.grid_ptr());
  for (std::size_t n = 0; n < g.size(); ++n) {
    j.set(n, f.rho[n] * (model.diffusion(g.point(n)) * f.grad_q.at(n)));
  }
  j.name = "rho_a_grad_q";
  return j;
}

double divergence_check(const VectorField& j) {
  const Grid& g = j.grid();
  const int d = g.dim();
  double jmax = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (g.in_theta(n)) jmax = std::max(jmax, j.at(n).norm());
  }
  if (jmax == 0.0) return 0.0;
  auto clear = [&](std::size_t n) {
    const int i0 = g.index_along(n, 0);
    const int i1 = d == 2 ? g.index_along(n, 1) : 0;
    for (int b = (d == 2 ? -2 : 0); b <= (d == 2 ? 2 : 0); ++b) {
      for (int a = -2; a <= 2; ++a) {
        const int j0 = i0 + a, j1 = i1 + b;
        if (j0 < 0 || j0 >= g.nodes(0) || (d == 2 && (j1 < 0 || j1 >= g.nodes(1)))) return false;
        const std::size_t m = static_cast<std::size_t>(j0) + g.stride(1) * static_cast<std::size_t>(j1);
        if (g.kind(d == 2 ? m : static_cast<std::size_t>(j0)) != NodeKind::Theta) return false;
      }
    }
    return true;
  };
  double worst = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!clear(n)) continue;
    double div = 0.0;
    for (int k = 0; k < d; ++k) {
      const std::size_t s = g.stride(k);
      div += (j.component(n + s, k) - j.component(n - s, k)) / (2 * g.spacing(k));
    }
    worst = std::max(worst, std::abs(div));
  }
  return worst * g.max_spacing() / jmax;
}

VectorField perturb(const VectorField& j, double fraction, std::uint64_t seed) {
  VectorField out = j;
  RandomStream rng(seed, 0);
  for (std::size_t n = 0; n < j.grid().size(); ++n) {
    const double s = rng.uniform() < 0.5 ? 1.0 - fraction : 1.0 + fraction;
    out.set(n, j.at(n) * s);
  }
  out.name = j.name + "_perturbed";
  return out;
}

double surface_flux(const VectorField& j, const SeparatingSurface& s, const Region& a,
                    const Region& b) {
  const Grid& g = j.grid();
  const double h = g.max_spacing();
  auto check = [&](const Vec& x) {
    if (!g.box().contains(x) || a.signed_distance(x) < h || b.signed_distance(x) < h) {
      throw ConfigError("separating surface comes within one cell of closure(A u B) or the box");
    }
  };
  if (s.kind == SeparatingSurface::Kind::Point) {
    check(s.centre);
    return j.interpolate(s.centre)[0];
  }
  if (g.dim() != 2) throw ConfigError("circular separating surfaces need a 2D grid");
  const double dth = 2.0 * std::numbers::pi / s.n_points;
  double flux = 0.0;
  for (int k = 0; k < s.n_points; ++k) {
    const double th = (k + 0.5) * dth;
    const Vec e = make_vec(std::cos(th), std::sin(th));
    const Vec x = s.centre + s.radius * e;
    check(x);
    flux += j.interpolate(x).dot(e) * s.radius * dth;
  }
  return flux;
}

Streamline trace_streamline(const VectorField& j, const Vec& start, const Region& b,
                            std::size_t max_steps, bool keep_points) {
  const Grid& g = j.grid();
  const double step = 0.5 * g.min_spacing();
  if (max_steps == 0) max_steps = static_cast<std::size_t>(50.0 * g.box().diameter() / step);
  double jmax = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) jmax = std::max(jmax, j.at(n).norm());
  // RK4 stages may probe inside closure(B), where J vanishes; keep the last direction there
  Vec last;
  auto dir = [&](const Vec& x) {
    const Vec v = j.interpolate(x);
    const double nv = v.norm();
    if (!(nv > 1e-12 * jmax) && last.size() > 0 && b.inside_closure(x)) return last;
    if (!(nv > 1e-12 * jmax)) {
      std::string where;
      for (int k = 0; k < x.size(); ++k) where += fmt::format("{}{:.6g}", k ? ", " : "", x[k]);
      throw NumericalError(fmt::format("streamline stagnates at ({})", where));
    }
    return Vec(v / nv);
  };
  Streamline s;
  s.start = start;
  Vec x = start;
  if (keep_points) s.points.push_back(x);
  while (!b.inside_closure(x)) {
    if (s.steps >= max_steps) {
      throw NumericalError(fmt::format("streamline exceeded {} steps (stagnation)", max_steps));
    }
    const Vec k1 = dir(x);
    last = k1;
    const Vec k2 = dir(Vec(x + 0.5 * step * k1));
    const Vec k3 = dir(Vec(x + 0.5 * step * k2));
    const Vec k4 = dir(Vec(x + step * k3));
    x += step / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    ++s.steps;
    if (keep_points) s.points.push_back(x);
  }
  s.end = x;
  return s;
}

StreamlineMap streamline_map(const VectorField& j, const BoundaryMeasure& eta,
                             std::shared_ptr<const Region> b) {
  StreamlineMap out;
  out.pushforward.name = "Phi_J(" + eta.name + ")";
  out.pushforward.region = b;
  double wmax = 0.0;
  for (const auto& at : eta.atoms) wmax = std::max(wmax, at.weight);
  const double nudge = 1e-6 * j.grid().min_spacing();
  std::map<std::size_t, double> mass;
  for (const auto& at : eta.atoms) {
    if (!(at.weight > 1e-6 * wmax)) {
      out.omitted_mass += std::max(at.weight, 0.0);
      continue;
    }
    const Vec n = eta.region->atoms()[at.atom].normal;
    try {
      const Streamline s = trace_streamline(j, Vec(at.point - nudge * n), *b);
      mass[b->nearest_atom(s.end)] += at.weight;
      ++out.n_streamlines;
    } catch (const NumericalError& e) {
      out.stagnated_mass += at.weight;
      out.stagnation_messages.push_back(e.what());
    }
  }
  const double total = eta.total_mass();
  if (out.stagnated_mass > 0.01 * total) {
    throw NumericalError(fmt::format("{:.3g} of the transported mass stagnates; first: {}",
                                     out.stagnated_mass / total, out.stagnation_messages.front()));
  }
  for (const auto& [k, w] : mass) out.pushforward.atoms.push_back(MeasureAtom{b->atoms()[k].point, w, k});
  return out;
}

std::vector<double> cell_averages(const Grid& coarse, const ScalarField& fine, const Region& a,
                                  const Region& b) {
  const int d = coarse.dim();
  const int sub = d == 1 ? 32 : 8;
  std::vector<double> out(coarse.size(), 0.0);
  const Box& box = coarse.box();
  for (std::size_t i = 0; i < coarse.size(); ++i) {
    const Vec c = coarse.point(i);
    Vec lo(d), hi(d);
    for (int k = 0; k < d; ++k) {
      lo[k] = std::max(c[k] - 0.5 * coarse.spacing(k), box.lo[k]);
      hi[k] = std::min(c[k] + 0.5 * coarse.spacing(k), box.hi[k]);
    }
    double sum = 0.0;
    int count = 0;
    for (int s1 = 0; s1 < (d == 2 ? sub : 1); ++s1) {
      for (int s0 = 0; s0 < sub; ++s0) {
        Vec x(d);
        x[0] = lo[0] + (s0 + 0.5) / sub * (hi[0] - lo[0]);
        if (d == 2) x[1] = lo[1] + (s1 + 0.5) / sub * (hi[1] - lo[1]);
        if (!a.inside_closure(x) && !b.inside_closure(x)) sum += fine.interpolate(x);
        ++count;
      }
    }
    out[i] = sum / count;
  }
  return out;
}

namespace {

double l1(const ScalarField& field, const ScalarField& reference, const Region& a, const Region& b,
          bool normalize) {
  const Grid& g = field.grid();
  const std::vector<double> ref = cell_averages(g, reference, a, b);
  double mf = 1.0, mg = 1.0;
  if (normalize) {
    mf = quadrature(g, [&](std::size_t i) { return field[i]; });
    mg = quadrature(g, [&](std::size_t i) { return ref[i]; });
    if (!(mf > 0.0) || !(mg > 0.0)) throw NumericalError("L1 distance of a massless field");
  }
  const double num = quadrature(g, [&](std::size_t i) { return std::abs(field[i] / mf - ref[i] / mg); });
  const double den = quadrature(g, [&](std::size_t i) { return std::abs(ref[i] / mg); });
  return num / den;
}

}  // namespace

double relative_l1(const ScalarField& field, const ScalarField& reference, const Region& a,
                   const Region& b) {
  return l1(field, reference, a, b, false);
}

double normalized_l1(const ScalarField& field, const ScalarField& reference, const Region& a,
                     const Region& b) {
  return l1(field, reference, a, b, true);
}

IdentityCheck check_identity(std::string name, double lhs, double rhs, double tolerance) {
  IdentityCheck c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.rel_error = rhs != 0.0 ? std::abs(lhs - rhs) / std::abs(rhs) : std::abs(lhs);
  c.tolerance = tolerance;
  c.pass = c.rel_error <= tolerance;
  return c;
}

std::size_t hopf_violations(const DiffusionModel& model, const TptFields& f, const Region& a,
                            const Region& b) {
  std::size_t bad = 0;
  for (int side = 0; side < 2; ++side) {
    const Region& r = side == 0 ? a : b;
    const auto flux = boundary_normal_flux(model, f.grad_q, r);
    double fmax = 0.0;
    for (double v : flux) fmax = std::max(fmax, std::abs(v));
    for (double v : flux) {
      // zero flux marks atoms facing a component of Theta cut off from the channel
      if ((side == 0 ? v : -v) > 1e-10 * fmax) ++bad;
    }
  }
  return bad;
}

}  // namespace tptkit
