#include "tptkit/error.hpp"
#include "tptkit/integrate.hpp"
#include "tptkit/pde.hpp"
#include "tptkit/rng.hpp"
#include "tptkit/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace tptkit;

namespace {

DiffusionModel constant_drift(double c, double s) {
  DiffusionModel::Spec spec;
  spec.name = "constant";
  spec.dim = 1;
  spec.drift = [c](const Vec&) { return make_vec(c); };
  spec.sigma = [s](const Vec&) {
    Mat m(1, 1);
    m(0, 0) = s;
    return m;
  };
  spec.lambda = spec.Lambda = s * s;
  spec.box = Box{make_vec(-100.0), make_vec(100.0)};
  spec.descriptor = "constant";
  return DiffusionModel(spec);
}

}  // namespace

TEST_SUITE("integrate") {

TEST_CASE("splitmix64 reference values") {
  // first outputs of the splitmix64 generator seeded with 0
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(stream_seed(1, 0) != stream_seed(1, 1));
  CHECK(stream_seed(1, 0) != stream_seed(2, 0));
}

TEST_CASE("deterministic Euler with constant drift") {
  const auto m = constant_drift(0.7, 0.0);
  const Trajectory t = simulate(m, make_vec(0.0), 0.1, 10, 1, 0);
  REQUIRE(t.size() == 11);
  CHECK(t.x(10) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(t.duration() == doctest::Approx(1.0));
}

TEST_CASE("Brownian moments at t = 1") {
  const auto m = build_model({"brownian1d", {}, Box{make_vec(-10.0), make_vec(10.0)}});
  const std::size_t n = 10000;
  RunningStats s, sq;
  for (std::size_t k = 0; k < n; ++k) {
    const Trajectory t = simulate(m, make_vec(0.0), 0.01, 100, 5, k);
    const double x = t.x(100);
    s.add(x);
    sq.add(x * x);
  }
  CHECK(std::abs(s.mean()) < 3.0 * s.stderr_of_mean());
  CHECK(std::abs(sq.mean() - 1.0) < 3.0 * sq.stderr_of_mean());
}

TEST_CASE("long double-well run samples the Gibbs density") {
  // beta = 1 so that the run crosses the barrier often enough to equilibrate
  const auto m = build_model({"doublewell1d", {{"beta", 1.0}}, {}});
  const Trajectory t = simulate(m, make_vec(-1.0), 1e-4, 10'000'000, 2, 0);
  auto g = std::make_shared<Grid>(m.box(), std::vector<int>{101});
  const ScalarField emp = empirical_density({&t}, g);
  const ScalarField rho = invariant_density(m, g);
  double l1 = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) l1 += g->weight(i) * std::abs(emp[i] - rho[i]);
  CHECK(l1 < 0.05);
}

TEST_CASE("simulate_until") {
  const auto m = build_model({"brownian1d", {}, Box{make_vec(-3.0), make_vec(4.0)}});
  const Region target = Region::interval(-1.0, 1.0);
  const auto r = simulate_until(m, make_vec(0.2), 1e-3, target, 100, 1, 0);
  REQUIRE(r.hit_index);
  CHECK(*r.hit_index == 0);

  const auto none = simulate_until(m, make_vec(2.0), 1e-3, Region::interval(3.9, 5.0), 5, 1, 0);
  CHECK_FALSE(none.hit_index);
  CHECK(none.trajectory.size() == 6);
}

TEST_CASE("exit side of the unit interval") {
  const auto m = build_model({"brownian1d", {}, Box{make_vec(-3.0), make_vec(4.0)}});
  auto outside = [](const Vec& y) { return y[0] <= 0.0 || y[0] >= 1.0; };
  const double dt = 1e-3;
  const std::size_t n = 10000;
  // q' = 1 at both ends
  const double bias = sampled_hitting_bias_bound(m.Lambda(), dt, 2.0);
  for (double x0 : {0.5, 0.3}) {
    std::size_t right = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto r = simulate_until(m, make_vec(x0), dt, outside, 1'000'000, 17, k);
      REQUIRE(r.hit_index);
      right += r.trajectory.x(*r.hit_index) >= 1.0;
    }
    const double p = static_cast<double>(right) / n;
    const double se = std::sqrt(p * (1 - p) / n);
    if (x0 == 0.5) {
      CHECK(std::abs(p - 0.5) < 3 * se);
    } else {
      CHECK(std::abs(p - 0.3) < 3 * se + bias);
    }
  }
}

TEST_CASE("leaving the box raises BoxExitError with the step") {
  const auto m = build_model({"brownian1d", {}, Box{make_vec(-0.1), make_vec(0.1)}});
  try {
    simulate(m, make_vec(0.0), 0.01, 100000, 1, 0);
    FAIL("expected a box exit");
  } catch (const BoxExitError& e) {
    CHECK(e.step() > 0);
  }
}

TEST_CASE("weak order one on the OU mean") {
  // E[X_1 | X_0 = 1] = e^-1. The noise contribution is removed with its exact
  // zero-mean control variate sum_k (1-dt)^(N-1-k) dW_k, reconstructed from the path.
  const auto m = build_model({"ou1d", {}, {}});
  std::vector<double> err;
  const std::vector<double> dts{1e-2, 5e-3, 2.5e-3};
  for (double dt : dts) {
    const auto n = static_cast<std::size_t>(std::lround(1.0 / dt));
    RunningStats s;
    for (std::size_t p = 0; p < 200; ++p) {
      const Trajectory t = simulate(m, make_vec(1.0), dt, n, 9, p);
      double cv = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double inc = t.x(k + 1) - t.x(k) - m.drift(make_vec(t.x(k)))[0] * dt;
        cv += std::pow(1.0 - dt, static_cast<double>(n - 1 - k)) * inc;
      }
      s.add(t.x(n) - cv);
    }
    err.push_back(std::abs(s.mean() - std::exp(-1.0)));
  }
  const double slope = std::log(err.front() / err.back()) / std::log(dts.front() / dts.back());
  CHECK(slope == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("OU sample mean matches the Euler mean") {
  const auto m = build_model({"ou1d", {}, {}});
  RunningStats s;
  for (std::size_t p = 0; p < 20000; ++p) s.add(simulate(m, make_vec(1.0), 0.01, 100, 4, p).x(100));
  CHECK(std::abs(s.mean() - std::pow(0.99, 100)) < 3 * s.stderr_of_mean());
}

TEST_CASE("distinct streams have uncorrelated increments") {
  const auto m = build_model({"brownian1d", {}, Box{make_vec(-1000.0), make_vec(1000.0)}});
  const std::size_t n = 10000;
  const Trajectory a = simulate(m, make_vec(0.0), 1.0, n, 42, 0);
  const Trajectory b = simulate(m, make_vec(0.0), 1.0, n, 42, 1);
  double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a.x(i + 1) - a.x(i), db = b.x(i + 1) - b.x(i);
    sa += da;
    sb += db;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  const double N = static_cast<double>(n);
  const double r = (sab - sa * sb / N) / std::sqrt((saa - sa * sa / N) * (sbb - sb * sb / N));
  CHECK(std::abs(r) < 3.0 / std::sqrt(N));
}

TEST_CASE("identical seed and stream reproduce the path; dumps round-trip") {
  const auto m = build_model({"doublewell2d", {}, {}});
  const Trajectory a = simulate(m, make_vec(-1.0, 0.0), 1e-3, 1000, 8, 3);
  const Trajectory b = simulate(m, make_vec(-1.0, 0.0), 1e-3, 1000, 8, 3);
  CHECK(a.data == b.data);
  std::stringstream ss;
  write_trajectory_binary(ss, a);
  const Trajectory c = read_trajectory_binary(ss);
  CHECK(c.data == a.data);
  CHECK(c.stream_id == 3);
  CHECK(c.seed == 8);
  CHECK(c.model_hash == m.hash());
  std::ostringstream csv;
  write_trajectory_csv(csv, a);
  CHECK(csv.str().find("stream_id") != std::string::npos);
}

}
