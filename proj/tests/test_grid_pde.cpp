#include "oracles.hpp"

#include "tptkit/error.hpp"
#include "tptkit/field_analysis.hpp"
#include "tptkit/pde.hpp"
#include "tptkit/rng.hpp"
#include "tptkit/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace tptkit;

namespace {

struct Brownian {
  DiffusionModel m = build_model({"brownian1d", {}, Box{make_vec(-3.0), make_vec(4.0)}});
  Region a = Region::interval(-2.0, 0.0);
  Region b = Region::interval(1.0, 3.0);
  std::shared_ptr<Grid> grid(int n) {
    auto g = std::make_shared<Grid>(m.box(), std::vector<int>{n});
    g->classify(a, b);
    return g;
  }
};

struct DoubleWell1 {
  DiffusionModel m = build_model({"doublewell1d", {{"beta", 3.0}}, {}});
  Region a = Region::interval(-1.2, -0.8);
  Region b = Region::interval(0.8, 1.2);
  std::shared_ptr<Grid> grid(int n) {
    auto g = std::make_shared<Grid>(m.box(), std::vector<int>{n});
    g->classify(a, b);
    return g;
  }
};

double coef(const DiscreteOperator& op, std::size_t r, std::size_t c) {
  return op.matrix.coeff(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
}

}  // namespace

TEST_SUITE("grid_pde") {

TEST_CASE("interior stencil of a/2 u'' is 1/(2h^2) [1 -2 1]") {
  Brownian s;
  auto g = std::make_shared<Grid>(s.m.box(), std::vector<int>{71});
  const DiscreteOperator op = discretize_generator(s.m, *g, GeneratorKind::Forward, {});
  const double h = g->spacing(0);
  for (std::size_t i : {5u, 30u, 60u}) {
    CHECK(coef(op, i, i - 1) == doctest::Approx(1.0 / (2 * h * h)));
    CHECK(coef(op, i, i) == doctest::Approx(-2.0 / (2 * h * h)));
    CHECK(coef(op, i, i + 1) == doctest::Approx(1.0 / (2 * h * h)));
  }
}

TEST_CASE("generator annihilates constants") {
  for (const char* fam : {"doublewell1d", "doublewell2d", "shear2d"}) {
    const auto m = build_model({fam, {}, {}});
    std::vector<int> n(static_cast<std::size_t>(m.dim()), 65);
    Grid g(m.box(), n);
    const DiscreteOperator op = discretize_generator(m, g, GeneratorKind::Forward, {});
    const auto lu = apply_operator(op, std::vector<double>(g.size(), 1.0));
    double worst = 0.0;
    for (double v : lu) worst = std::max(worst, std::abs(v));
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("backward operator equals forward operator for reversible models") {
  for (const char* fam : {"doublewell1d", "doublewell2d"}) {
    const auto m = build_model({fam, {}, {}});
    std::vector<int> n(static_cast<std::size_t>(m.dim()), m.dim() == 1 ? 257 : 65);
    auto g = std::make_shared<Grid>(m.box(), n);
    const ScalarField rho = invariant_density(m, g);
    const auto fwd = discretize_generator(m, *g, GeneratorKind::Forward, {});
    const auto bwd = discretize_generator(m, *g, GeneratorKind::Backward, {}, &rho);
    RandomStream rng(1, 0);
    for (int trial = 0; trial < 3; ++trial) {
      std::vector<double> u(g->size());
      for (auto& v : u) v = rng.uniform();
      const auto a = apply_operator(fwd, u);
      const auto b = apply_operator(bwd, u);
      double worst = 0.0, scale = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) {
        worst = std::max(worst, std::abs(a[i] - b[i]));
        scale = std::max(scale, std::abs(a[i]));
      }
      CHECK(worst <= 1e-10 * scale);
    }
  }
}

TEST_CASE("linear committor of Brownian motion") {
  Brownian s;
  auto g = s.grid(512);
  const ScalarField q = solve_committor(s.m, g, s.a, s.b);
  double worst = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double x = g->point(i)[0];
    if (x >= 0.0 && x <= 1.0) worst = std::max(worst, std::abs(q[i] - x));
  }
  CHECK(worst <= 1e-3);
  // interpolation between nodes as well
  CHECK(q.interpolate(make_vec(0.4321)) == doctest::Approx(0.4321).epsilon(1e-9));
}

TEST_CASE("committor error is at roundoff for Brownian and second order for the double well") {
  Brownian s;
  for (int n : {128, 256, 512, 1024}) {
    auto g = s.grid(n);
    const ScalarField q = solve_committor(s.m, g, s.a, s.b);
    double worst = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double x = g->point(i)[0];
      if (x > 0.0 && x < 1.0) worst = std::max(worst, std::abs(q[i] - x));
    }
    CHECK(worst < 1e-12);
  }
  DoubleWell1 d;
  std::vector<double> err;
  for (int n : {257, 513, 1025}) {
    auto g = d.grid(n);
    const ScalarField q = solve_committor(d.m, g, d.a, d.b);
    double worst = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double x = g->point(i)[0];
      if (x > -0.8 && x < 0.8) worst = std::max(worst, std::abs(q[i] - oracle::dw_committor(x, 3.0, -0.8, 0.8)));
    }
    err.push_back(worst);
  }
  CHECK(err.back() < 1e-3);
  CHECK(std::log2(err[0] / err[1]) >= 1.9);
  CHECK(std::log2(err[1] / err[2]) >= 1.9);
}

TEST_CASE("symmetric double well committor") {
  DoubleWell1 d;
  auto g = d.grid(1025);
  const ScalarField q = solve_committor(d.m, g, d.a, d.b);
  CHECK(q.interpolate(make_vec(0.0)) == doctest::Approx(0.5).epsilon(1e-6));
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(q[i] >= -1e-12);
    CHECK(q[i] <= 1.0 + 1e-12);
  }
}

TEST_CASE("backward committor") {
  DoubleWell1 d;
  auto g = d.grid(1024);
  const ScalarField rho = invariant_density(d.m, g);
  const ScalarField q = solve_committor(d.m, g, d.a, d.b);
  const ScalarField qt = solve_backward_committor(d.m, g, d.a, d.b, rho);
  double worst = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    worst = std::max(worst, std::abs(qt[i] - (1.0 - q[i])));
    if (g->kind(i) == NodeKind::A) CHECK(qt[i] == 1.0);
    if (g->kind(i) == NodeKind::B) CHECK(qt[i] == 0.0);
  }
  CHECK(worst <= 1e-3);
}

TEST_CASE("shear model breaks q~ = 1 - q") {
  const auto m = build_model({"shear2d", {{"shear", 0.5}}, {}});
  const Region a = Region::ball(make_vec(-1.0, 0.0), 0.3);
  const Region b = Region::ball(make_vec(1.0, 0.0), 0.3);
  auto g = std::make_shared<Grid>(m.box(), std::vector<int>{128, 128});
  g->classify(a, b);
  const ScalarField rho = invariant_density(m, g);
  const ScalarField q = solve_committor(m, g, a, b);
  const ScalarField qt = solve_backward_committor(m, g, a, b, rho);
  double worst = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    worst = std::max(worst, std::abs(qt[i] - (1.0 - q[i])));
    CHECK(q[i] >= -1e-12);
    CHECK(q[i] <= 1.0 + 1e-12);
  }
  CHECK(worst > 0.01);
  const TptFields f = make_tpt_fields(rho, q, qt);
  CHECK(hopf_violations(m, f, a, b) == 0);
}

TEST_CASE("mean hitting time vanishes on the target and is positive elsewhere") {
  Brownian s;
  auto g = s.grid(256);
  const ScalarField u = solve_mean_hitting_time(s.m, g, s.b);
  for (std::size_t i = 0; i < g->size(); ++i) {
    if (s.b.inside_closure(g->point(i))) {
      CHECK(u[i] == 0.0);
    } else {
      CHECK(u[i] > 0.0);
    }
  }
}

TEST_CASE("OU mean hitting time matches Monte Carlo") {
  const auto m = build_model({"ou1d", {}, {}});
  const Region target = Region::interval(1.0, m.box().hi[0] + 1.0);
  auto g = std::make_shared<Grid>(m.box(), std::vector<int>{2001});
  const ScalarField u = solve_mean_hitting_time(m, g, target);
  const double dt = 2.5e-4;
  RunningStats s;
  for (std::size_t k = 0; k < 2000; ++k) {
    const auto r = simulate_until(m, make_vec(0.0), dt, target, 100'000'000, 23, k);
    REQUIRE(r.hit_index);
    s.add(dt * static_cast<double>(*r.hit_index));
  }
  // sampled hitting overshoot times the slope of u at the target
  const double slope = std::abs(u.interpolate(make_vec(0.99)) - u.interpolate(make_vec(0.98))) / 0.01;
  const double bias = sampled_hitting_bias_bound(m.Lambda(), dt, slope);
  CHECK(std::abs(s.mean() - u.interpolate(make_vec(0.0))) < 3 * s.stderr_of_mean() + bias);
}

TEST_CASE("transition path mean hitting time of Brownian motion") {
  Brownian s;
  auto g = s.grid(1024);
  const ScalarField q = solve_committor(s.m, g, s.a, s.b);
  const TppMeanHitting v = solve_tpp_mean_hitting(s.m, q, s.a, s.b);
  // v_B(x) = (1 - x^2)/3 on [0, 1]
  double worst = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double x = g->point(i)[0];
    if (x > 0.05 && x < 1.0) worst = std::max(worst, std::abs(v.v[i] - (1 - x * x) / 3));
    if (s.b.inside_closure(g->point(i))) CHECK(v.v[i] == 0.0);
  }
  CHECK(worst < 1e-3);
  // atom x = 0 of A
  std::size_t k = s.a.nearest_atom(make_vec(0.0));
  CHECK(v.boundary_a[k] == doctest::Approx(1.0 / 3.0).epsilon(0.01));
  CHECK(v.unreachable_nodes > 0);  // the stretch behind A never reaches B
}

TEST_CASE("gradient is exact for linear fields; quadrature of the density is one") {
  const auto m = build_model({"doublewell2d", {}, {}});
  auto g = std::make_shared<Grid>(m.box(), std::vector<int>{33, 29});
  std::vector<double> v(g->size());
  for (std::size_t i = 0; i < g->size(); ++i) v[i] = 2.0 * g->point(i)[0] - 0.5 * g->point(i)[1];
  const VectorField grad = gradient(ScalarField(g, v));
  for (std::size_t i = 0; i < g->size(); ++i) {
    CHECK(grad.at(i)[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(grad.at(i)[1] == doctest::Approx(-0.5).epsilon(1e-10));
  }
  auto g2 = std::make_shared<Grid>(m.box(), std::vector<int>{129, 129});
  CHECK(quadrature(invariant_density(m, g2)) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("boundary normal flux of the Brownian committor") {
  Brownian s;
  auto g = s.grid(512);
  const ScalarField q = solve_committor(s.m, g, s.a, s.b);
  const auto fa = boundary_normal_flux(s.m, gradient(q), s.a);
  const auto fb = boundary_normal_flux(s.m, gradient(q), s.b);
  const std::size_t ka = s.a.nearest_atom(make_vec(0.0));
  const std::size_t kb = s.b.nearest_atom(make_vec(1.0));
  CHECK(fa[ka] == doctest::Approx(-0.5).epsilon(1e-3));
  CHECK(fb[kb] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("committor Monte Carlo estimates") {
  Brownian s;
  const auto in_b = committor_mc_estimate(s.m, s.a, s.b, make_vec(1.5), 1e-3, 10, 1);
  CHECK(in_b.mean == 1.0);
  const double dt = 1e-4;
  const auto e = committor_mc_estimate(s.m, s.a, s.b, make_vec(0.25), dt, 4000, 2);
  const double bias = sampled_hitting_bias_bound(s.m.Lambda(), dt, 2.0);
  CHECK(std::abs(e.mean - 0.25) < 3 * e.stderr_ + bias);
  CHECK(e.stderr_ == doctest::Approx(std::sqrt(e.mean * (1 - e.mean) / 4000)));

  DoubleWell1 d;
  auto g = d.grid(1024);
  const ScalarField q = solve_committor(d.m, g, d.a, d.b);
  const auto e0 = committor_mc_estimate(d.m, d.a, d.b, make_vec(0.0), 1e-3, 2000, 3);
  CHECK(std::abs(e0.mean - q.interpolate(make_vec(0.0))) < 3 * e0.stderr_);
}

TEST_CASE("coarse grids near a disc are rejected") {
  const auto m = build_model({"doublewell2d", {}, {}});
  const Region a = Region::ball(make_vec(-1.0, 0.0), 0.3);
  const Region b = Region::ball(make_vec(1.0, 0.0), 0.3);
  auto g = std::make_shared<Grid>(m.box(), std::vector<int>{64, 64});
  g->classify(a, b);
  CHECK_THROWS_AS(solve_committor(m, g, a, b), ConfigError);
}

TEST_CASE("field dump round trip") {
  Brownian s;
  auto g = s.grid(64);
  ScalarField q = solve_committor(s.m, g, s.a, s.b);
  q.name = "q";
  std::stringstream ss;
  write_field(ss, q);
  const FieldDump d = read_field(ss);
  CHECK(d.name == "q");
  CHECK(d.nodes == std::vector<int>{64});
  REQUIRE(d.values.size() == q.values().size());
  for (std::size_t i = 0; i < d.values.size(); ++i) CHECK(d.values[i] == q[i]);
  CHECK(d.kinds[g->nearest_node(make_vec(-1.0))] == NodeKind::A);
}

}
