#include "oracles.hpp"

#include "tptkit/error.hpp"
#include "tptkit/model.hpp"
#include "tptkit/pde.hpp"
#include "tptkit/region.hpp"
#include "tptkit/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace tptkit;

TEST_SUITE("model") {

TEST_CASE("brownian1d has constant diffusion 1/2") {
  const auto m = build_model({"brownian1d", {}, {}});
  for (double x : {-2.0, 0.0, 0.7, 3.5}) {
    CHECK(m.diffusion(make_vec(x))(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.drift(make_vec(x))[0] == 0.0);
  }
}

TEST_CASE("doublewell drifts vanish at critical points") {
  const auto m1 = build_model({"doublewell1d", {{"beta", 3.0}}, {}});
  CHECK(m1.drift(make_vec(0.0))[0] == doctest::Approx(0.0));
  CHECK(m1.drift(make_vec(1.0))[0] == doctest::Approx(0.0));
  CHECK(m1.drift(make_vec(-1.0))[0] == doctest::Approx(0.0));
  // b = -4x(x^2-1)
  CHECK(m1.drift(make_vec(0.5))[0] == doctest::Approx(1.5));
  CHECK(m1.diffusion(make_vec(0.3))(0, 0) == doctest::Approx(1.0 / 3.0));

  const auto m2 = build_model({"doublewell2d", {{"beta", 2.0}}, {}});
  const Vec b = m2.drift(make_vec(1.0, 0.0));
  CHECK(b.norm() == doctest::Approx(0.0));
  // V = (x^2-1)^2 + 2y^2
  const Vec b2 = m2.drift(make_vec(0.5, 0.25));
  CHECK(b2[0] == doctest::Approx(1.5));
  CHECK(b2[1] == doctest::Approx(-1.0));
}

TEST_CASE("shear model keeps the Gibbs density but is not reversible") {
  const auto m = build_model({"shear2d", {{"beta", 2.0}, {"shear", 0.5}}, {}});
  CHECK_FALSE(m.reversible());
  REQUIRE(m.potential());
  // the shear term is tangent to level sets of V: b + grad V is orthogonal to grad V
  for (const Vec& x : {make_vec(0.3, 0.4), make_vec(-1.2, 0.5), make_vec(0.9, -0.7)}) {
    const Vec gv = m.potential()->gradient(x);
    CHECK(std::abs((m.drift(x) + gv).dot(gv)) < 1e-12);
  }
}

TEST_CASE("unknown family and bad parameters are rejected") {
  CHECK_THROWS_AS(build_model({"nosuch", {}, {}}), ConfigError);
  CHECK_THROWS_AS(build_model({"doublewell1d", {{"beta", -1.0}}, {}}), ConfigError);
  CHECK_THROWS_AS(build_model({"doublewell1d", {{"shear", 1.0}}, {}}), ConfigError);
}

TEST_CASE("uniform density on a reflecting box") {
  const auto m = build_model({"brownian1d", {}, Box{make_vec(-3.0), make_vec(3.0)}});
  auto g = std::make_shared<Grid>(m.box(), std::vector<int>{121});
  const ScalarField rho = invariant_density(m, g);
  for (double v : rho.values()) CHECK(v == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("Gibbs density: Boltzmann ratio, unit mass, partition function") {
  const auto m = build_model({"doublewell1d", {{"beta", 3.0}}, {}});
  auto g = std::make_shared<Grid>(m.box(), std::vector<int>{1001});  // nodes at 0 and 1
  const ScalarField rho = invariant_density(m, g);
  const std::size_t i0 = g->nearest_node(make_vec(0.0));
  const std::size_t i1 = g->nearest_node(make_vec(1.0));
  REQUIRE(g->point(i0)[0] == doctest::Approx(0.0));
  REQUIRE(g->point(i1)[0] == doctest::Approx(1.0));
  CHECK(rho[i0] / rho[i1] == doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
  CHECK(quadrature(rho) == doctest::Approx(1.0).epsilon(1e-8));
  for (double v : rho.values()) CHECK(v > 0.0);

  auto g2 = std::make_shared<Grid>(m.box(), std::vector<int>{1024});
  const ScalarField rho2 = invariant_density(m, g2);
  const double z_oracle = oracle::dw_partition(3.0, -2.5, 2.5);
  const std::size_t k = g2->nearest_node(make_vec(0.3));
  const double z = std::exp(-3.0 * oracle::dw_potential(g2->point(k)[0])) / rho2[k];
  CHECK(z == doctest::Approx(z_oracle).epsilon(1e-8));
}

TEST_CASE("box too small for the density tail is rejected") {
  const auto m = build_model({"doublewell1d", {{"beta", 3.0}}, Box{make_vec(-1.3), make_vec(1.3)}});
  auto g = std::make_shared<Grid>(m.box(), std::vector<int>{257});
  CHECK_THROWS_AS(invariant_density(m, g), Error);
}

TEST_CASE("discrete stationarity residual converges at second order") {
  const auto m = build_model({"doublewell1d", {{"beta", 3.0}}, {}});
  std::vector<double> res;
  for (int n : {257, 513, 1025}) {
    auto g = std::make_shared<Grid>(m.box(), std::vector<int>{n});
    const ScalarField rho = invariant_density(m, g);
    const DiscreteOperator op = discretize_generator(m, *g, GeneratorKind::Forward, {});
    // adjoint in the weighted inner product: W^-1 L^T W rho
    Eigen::VectorXd wr(static_cast<Eigen::Index>(g->size()));
    for (std::size_t i = 0; i < g->size(); ++i) wr[static_cast<Eigen::Index>(i)] = g->weight(i) * rho[i];
    const Eigen::VectorXd r = op.matrix.transpose() * wr;
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
      scale = std::max(scale, rho[i]);
      if (std::abs(g->point(i)[0]) < 2.0) {
        worst = std::max(worst, std::abs(r[static_cast<Eigen::Index>(i)]) / g->weight(i));
      }
    }
    res.push_back(worst / scale);
  }
  const double o1 = std::log2(res[0] / res[1]);
  const double o2 = std::log2(res[1] / res[2]);
  CHECK(o1 > 1.8);
  CHECK(o2 > 1.8);
}

TEST_CASE("region predicate agrees with the signed distance") {
  const Region ball = Region::ball(make_vec(0.2, -0.1), 0.4);
  const Region iv = Region::interval(-1.0, 0.5);
  RandomStream rng(3, 0);
  for (int i = 0; i < 10000; ++i) {
    const Vec x2 = make_vec(-1.0 + 2.0 * rng.uniform(), -1.0 + 2.0 * rng.uniform());
    CHECK((ball.inside(x2) == (ball.signed_distance(x2) < 0.0)));
    const Vec x1 = make_vec(-2.0 + 4.0 * rng.uniform());
    CHECK((iv.inside(x1) == (iv.signed_distance(x1) < 0.0)));
    CHECK((iv.inside(x1) == (x1[0] > -1.0 && x1[0] < 0.5)));
    CHECK((ball.inside(x2) == ((x2 - make_vec(0.2, -0.1)).norm() < 0.4)));
  }
}

TEST_CASE("ball atoms: outward-into-region normals and the circumference") {
  const Region b = Region::ball(make_vec(1.0, 0.0), 0.3, 128);
  double total = 0.0;
  for (const auto& a : b.atoms()) {
    total += a.weight;
    CHECK(b.signed_distance(a.point) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(b.inside(Vec(a.point + 1e-6 * a.normal)));
  }
  CHECK(total == doctest::Approx(2.0 * M_PI * 0.3).epsilon(1e-12));
  CHECK_NOTHROW(b.validate(1));
}

TEST_CASE("overlapping closures are rejected") {
  CHECK_THROWS_WITH_AS(check_disjoint(Region::interval(-1, 0), Region::interval(0, 1)),
                       doctest::Contains("closures not disjoint"), ConfigError);
  CHECK_THROWS_AS(check_disjoint(Region::ball(make_vec(0, 0), 0.5), Region::ball(make_vec(0.8, 0), 0.4)),
                  ConfigError);
  CHECK_NOTHROW(check_disjoint(Region::interval(-1, -0.1), Region::interval(0.1, 1)));
}

TEST_CASE("model hash is stable across instances") {
  const auto a = build_model({"doublewell2d", {}, {}});
  const auto b = build_model({"doublewell2d", {}, {}});
  const auto c = build_model({"doublewell2d", {{"beta", 3.0}}, {}});
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() != c.hash());
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

}
