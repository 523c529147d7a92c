#include "oracles.hpp"

#include "tptkit/error.hpp"
#include "tptkit/field_analysis.hpp"
#include "tptkit/pde.hpp"

#include <doctest.h>

#include <cmath>

using namespace tptkit;

namespace {

struct Setup {
  DiffusionModel m;
  std::shared_ptr<const Region> a, b;
  std::shared_ptr<Grid> g;
  TptFields f;
  Setup(ModelDescriptor d, Region ra, Region rb, std::vector<int> nodes)
      : m(build_model(std::move(d))),
        a(std::make_shared<const Region>(std::move(ra))),
        b(std::make_shared<const Region>(std::move(rb))) {
    g = std::make_shared<Grid>(m.box(), std::move(nodes));
    g->classify(*a, *b);
    ScalarField rho = invariant_density(m, g);
    ScalarField q = solve_committor(m, g, *a, *b);
    ScalarField qt = solve_backward_committor(m, g, *a, *b, rho);
    f = make_tpt_fields(std::move(rho), std::move(q), std::move(qt));
  }
  double nu_R() const { return rate_quadrature(m, f); }
};

Setup brownian(int n = 512) {
  return Setup({"brownian1d", {}, Box{make_vec(-3.0), make_vec(4.0)}}, Region::interval(-2.0, 0.0),
               Region::interval(1.0, 3.0), {n});
}
Setup dw1(int n = 1024) {
  return Setup({"doublewell1d", {{"beta", 3.0}}, {}}, Region::interval(-1.2, -0.8),
               Region::interval(0.8, 1.2), {n});
}
Setup dw2(int n) {
  return Setup({"doublewell2d", {}, {}}, Region::ball(make_vec(-1.0, 0.0), 0.3),
               Region::ball(make_vec(1.0, 0.0), 0.3), {n, n});
}

double max_norm(const VectorField& j) {
  double m = 0.0;
  for (std::size_t i = 0; i < j.grid().size(); ++i) m = std::max(m, j.at(i).norm());
  return m;
}

}  // namespace

TEST_SUITE("field_analysis") {

TEST_CASE("1D rate against the closed form") {
  Setup s = dw1();
  // nu_R = 1 / (beta Z int_{-0.8}^{0.8} e^{beta V})
  const double z = oracle::dw_partition(3.0, -2.5, 2.5);
  const double i = oracle::integrate([](double x) { return std::exp(3.0 * oracle::dw_potential(x)); },
                                     -0.8, 0.8);
  const double nu = 1.0 / (3.0 * z * i);
  CHECK(s.nu_R() == doctest::Approx(nu).epsilon(1e-3));

  Setup br = brownian();
  // uniform density 1/7 on the box, q' = 1, a = 1/2
  CHECK(br.nu_R() == doctest::Approx(1.0 / 14.0).epsilon(1e-10));
}

TEST_CASE("exit and entrance measures") {
  Setup s = dw1();
  const auto meas = exit_entrance_measures(s.m, s.f, s.a, s.b);
  CHECK(meas.nu == doctest::Approx(s.nu_R()).epsilon(1e-3));
  CHECK(meas.raw_A_minus == doctest::Approx(meas.raw_B_plus).epsilon(1e-3));
  CHECK(meas.raw_A_plus == doctest::Approx(meas.raw_B_minus).epsilon(1e-3));
  CHECK(meas.eta_A_minus.total_mass() == doctest::Approx(1.0));
  double on_endpoint = 0.0;
  for (const auto& at : meas.eta_A_minus.atoms) {
    CHECK(at.weight >= -1e-10);
    if (std::abs(at.point[0] + 0.8) < 1e-12) on_endpoint += at.weight;
  }
  CHECK(on_endpoint == doctest::Approx(1.0).epsilon(1e-10));

  Setup t = dw2(256);
  const auto m2 = exit_entrance_measures(t.m, t.f, t.a, t.b);
  CHECK(m2.raw_A_minus == doctest::Approx(m2.raw_B_plus).epsilon(0.01));
  // reversible: exit and entrance distributions of A coincide
  const auto wm = m2.eta_A_minus.weights_per_atom();
  const auto wp = m2.eta_A_plus.weights_per_atom();
  double diff = 0.0;
  for (std::size_t k = 0; k < wm.size(); ++k) diff += std::abs(wm[k] - wp[k]);
  CHECK(diff < 0.01);
  for (const auto& at : m2.eta_B_plus.atoms) CHECK(at.weight >= -1e-10);
  CHECK(m2.nu == doctest::Approx(t.nu_R()).epsilon(0.01));
}

TEST_CASE("time quadratures and the reactive density") {
  Setup s = dw1();
  const double nu = s.nu_R();
  const TimeQuadratures tq = time_quadratures(s.f, nu);
  CHECK(tq.T_AB + tq.T_BA == doctest::Approx(1.0 / nu).epsilon(1e-8));
  CHECK(tq.T_AB == doctest::Approx(tq.T_BA).epsilon(1e-6));  // symmetric wells
  CHECK(tq.C_AB == doctest::Approx(tq.C_BA).epsilon(1e-6));
  CHECK(tq.C_AB > 0.0);
  CHECK(tq.C_AB < tq.T_AB);

  const ScalarField rr = reactive_density_field(s.f);
  for (std::size_t i = 0; i < s.g->size(); ++i) {
    if (!s.g->in_theta(i)) CHECK(rr[i] == 0.0);
    CHECK(rr[i] >= 0.0);
  }
  CHECK(quadrature(rr) == doctest::Approx(nu * tq.C_AB).epsilon(1e-10));
}

TEST_CASE("1D current is constant between A and B") {
  Setup s = dw1();
  const double nu = s.nu_R();
  const VectorField j = current_field(s.m, s.f);
  for (double x : {-0.6, -0.2, 0.0, 0.3, 0.7}) {
    CHECK(j.interpolate(make_vec(x))[0] == doctest::Approx(nu).epsilon(1e-3));
  }
  const VectorField jr = reversible_current(s.m, s.f);
  CHECK(jr.interpolate(make_vec(0.0))[0] == doctest::Approx(nu).epsilon(1e-3));
  const SeparatingSurface p{SeparatingSurface::Kind::Point, make_vec(0.25), 0.0, 1};
  CHECK(surface_flux(j, p, *s.a, *s.b) == doctest::Approx(nu).epsilon(1e-3));
}

TEST_CASE("divergence check") {
  Setup br = brownian();
  CHECK(divergence_check(current_field(br.m, br.f)) < 1e-10);

  Setup c = dw2(128), f = dw2(256);
  const VectorField jc = current_field(c.m, c.f);
  const VectorField jf = current_field(f.m, f.f);
  const double dc = divergence_check(jc), df = divergence_check(jf);
  CHECK(df <= 0.5 * dc);
  CHECK(df < 1e-2);
  CHECK(divergence_check(perturb(jf, 0.01, 1)) > 10.0 * df);

  // reversible shortcut rho a grad q agrees with the full current
  const VectorField jr = reversible_current(f.m, f.f);
  double worst = 0.0;
  for (std::size_t i = 0; i < f.g->size(); ++i) {
    if (f.g->kind(i) == NodeKind::Theta) worst = std::max(worst, (jf.at(i) - jr.at(i)).norm());
  }
  CHECK(worst / max_norm(jf) < 0.01);
}

TEST_CASE("surface fluxes equal the rate") {
  Setup s = dw2(256);
  const double nu = s.nu_R();
  const VectorField j = current_field(s.m, s.f);
  std::vector<double> fl;
  for (double r : {0.5, 0.8, 1.1}) {
    const SeparatingSurface c{SeparatingSurface::Kind::Circle, make_vec(-1.0, 0.0), r, 1024};
    fl.push_back(surface_flux(j, c, *s.a, *s.b));
    CHECK(fl.back() == doctest::Approx(nu).epsilon(0.05));
  }
  CHECK(fl[0] == doctest::Approx(fl[2]).epsilon(0.02));
  // a circle through B is rejected
  const SeparatingSurface bad{SeparatingSurface::Kind::Circle, make_vec(-1.0, 0.0), 2.0, 256};
  CHECK_THROWS_AS(surface_flux(j, bad, *s.a, *s.b), ConfigError);
}

TEST_CASE("streamlines") {
  Setup s = dw1();
  const VectorField j1 = current_field(s.m, s.f);
  const Streamline l1 = trace_streamline(j1, make_vec(-0.8), *s.b);
  CHECK(l1.end[0] == doctest::Approx(0.8).epsilon(1e-2));

  Setup t = dw2(256);
  const VectorField j2 = current_field(t.m, t.f);
  const Streamline ax = trace_streamline(j2, make_vec(-0.7, 0.0), *t.b, 0, true);
  CHECK(ax.end[0] == doctest::Approx(0.7).epsilon(1e-2));
  CHECK(std::abs(ax.end[1]) < 1e-2);
  CHECK(ax.points.size() > 10);

  const auto meas = exit_entrance_measures(t.m, t.f, t.a, t.b);
  const StreamlineMap sm = streamline_map(j2, meas.eta_A_minus, t.b);
  CHECK(sm.stagnated_mass <= 0.01);
  const auto w = weak_distance(sm.pushforward, meas.eta_B_plus, *t.a);
  for (double d : w) CHECK(d <= 0.05);
}

TEST_CASE("relative L1 distances") {
  Setup s = dw1(257);
  const ScalarField rr = reactive_density_field(s.f);
  CHECK(relative_l1(rr, rr, *s.a, *s.b) < 1e-2);
  ScalarField doubled = rr;
  for (auto& v : doubled.values()) v *= 2.0;
  CHECK(normalized_l1(doubled, rr, *s.a, *s.b) < 1e-2);
  CHECK(relative_l1(doubled, rr, *s.a, *s.b) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("identity rows") {
  const auto ok = check_identity("x", 1.001, 1.0, 0.01);
  CHECK(ok.pass);
  CHECK(ok.rel_error == doctest::Approx(1e-3));
  CHECK_FALSE(check_identity("y", 1.1, 1.0, 0.01).pass);
}

}
