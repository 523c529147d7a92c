#include "tptkit/integrate.hpp"

#include "tptkit/error.hpp"
#include "tptkit/rng.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace tptkit {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream_id) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream_id + 0x632BE59BD9B4E019ULL));
}

Vec Trajectory::state(std::size_t i) const {
  Vec v(dim);
  for (int k = 0; k < dim; ++k) v[k] = data[i * static_cast<std::size_t>(dim) + k];
  return v;
}

namespace {

void check_start(const DiffusionModel& model, const Vec& x0, double dt) {
  if (x0.size() != model.dim()) throw ConfigError("initial state has the wrong dimension");
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (!model.box().contains(x0)) throw ConfigError("initial state lies outside the bounding box");
  if (dt * model.drift(x0).norm() > 0.1 * model.box().diameter()) {
    log_warning(fmt::format("dt*|b(x0)| = {:.3g} exceeds 0.1 x box diameter",
                            dt * model.drift(x0).norm()));
  }
}

struct Stepper {
  const DiffusionModel& model;
  double dt;
  double noise;
  RandomStream rng;

  Stepper(const DiffusionModel& m, double dt_, std::uint64_t seed, std::uint64_t stream)
      : model(m), dt(dt_), noise(std::sqrt(2.0 * dt_)), rng(seed, stream) {}

  void step(Vec& x) {
    const int d = model.dim();
    Vec xi(d);
    for (int k = 0; k < d; ++k) xi[k] = rng.normal();
    x += model.drift(x) * dt + noise * (model.sigma(x) * xi);
  }
};

void box_exit(std::size_t step, const Vec& x) {
  std::string coords;
  for (int i = 0; i < x.size(); ++i) coords += fmt::format("{}{:.6g}", i ? ", " : "", x[i]);
  throw BoxExitError(step, fmt::format("trajectory left the bounding box at step {} (x = ({}))",
                                       step, coords));
}

Trajectory empty_trajectory(const DiffusionModel& model, double dt, std::uint64_t seed,
                            std::uint64_t stream_id) {
  Trajectory t;
  t.dt = dt;
  t.dim = model.dim();
  t.seed = seed;
  t.stream_id = stream_id;
  t.model_hash = model.hash();
  return t;
}

void push(Trajectory& t, const Vec& x) {
  for (int k = 0; k < t.dim; ++k) t.data.push_back(x[k]);
}

}  // namespace

Trajectory simulate(const DiffusionModel& model, const Vec& x0, double dt, std::size_t n_steps,
                    std::uint64_t seed, std::uint64_t stream_id) {
  check_start(model, x0, dt);
  Trajectory traj = empty_trajectory(model, dt, seed, stream_id);
  traj.data.reserve((n_steps + 1) * static_cast<std::size_t>(model.dim()));
  push(traj, x0);
  Stepper stepper(model, dt, seed, stream_id);
  const Box& box = model.box();
  Vec x = x0;
  for (std::size_t n = 1; n <= n_steps; ++n) {
    stepper.step(x);
    if (!box.contains(x)) box_exit(n, x);
    push(traj, x);
  }
  return traj;
}

StoppedTrajectory simulate_until(const DiffusionModel& model, const Vec& x0, double dt,
                                 const StopPredicate& stop, std::size_t max_steps,
                                 std::uint64_t seed, std::uint64_t stream_id) {
  check_start(model, x0, dt);
  StoppedTrajectory out{empty_trajectory(model, dt, seed, stream_id), std::nullopt};
  push(out.trajectory, x0);
  if (stop(x0)) {
    out.hit_index = 0;
    return out;
  }
  Stepper stepper(model, dt, seed, stream_id);
  const Box& box = model.box();
  Vec x = x0;
  for (std::size_t n = 1; n <= max_steps; ++n) {
    stepper.step(x);
    if (!box.contains(x)) box_exit(n, x);
    push(out.trajectory, x);
    if (stop(x)) {
      out.hit_index = n;
      break;
    }
  }
  return out;
}

StoppedTrajectory simulate_until(const DiffusionModel& model, const Vec& x0, double dt,
                                 const Region& stop, std::size_t max_steps, std::uint64_t seed,
                                 std::uint64_t stream_id) {
  return simulate_until(
      model, x0, dt, [&stop](const Vec& x) { return stop.inside_closure(x); }, max_steps, seed,
      stream_id);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "# tptkit trajectory v1\n";
  os << fmt::format("# model_hash={:016x} dt={:.17g} seed={} stream_id={} dim={}\n",
                    traj.model_hash, traj.dt, traj.seed, traj.stream_id, traj.dim);
  os << "t";
  for (int k = 0; k < traj.dim; ++k) os << ",x" << (k + 1);
  os << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    os << fmt::format("{:.17g}", traj.dt * static_cast<double>(i));
    for (int k = 0; k < traj.dim; ++k) {
      os << fmt::format(",{:.17g}", traj.data[i * static_cast<std::size_t>(traj.dim) + k]);
    }
    os << '\n';
  }
}

namespace {

template <typename T>
void put(std::ostream& os, T value) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) throw Error("truncated trajectory file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(buf, buf + sizeof(T));
  T value;
  std::memcpy(&value, buf, sizeof(T));
  return value;
}

constexpr char kMagic[8] = {'T', 'P', 'T', 'T', 'R', 'A', 'J', '1'};

}  // namespace

void write_trajectory_binary(std::ostream& os, const Trajectory& traj) {
  os.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(os, traj.model_hash);
  put<double>(os, traj.dt);
  put<std::uint64_t>(os, traj.seed);
  put<std::uint64_t>(os, traj.stream_id);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(traj.dim));
  put<std::uint64_t>(os, traj.size());
  for (double v : traj.data) put<double>(os, v);
}

Trajectory read_trajectory_binary(std::istream& is) {
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error("not a tptkit binary trajectory");
  }
  Trajectory t;
  t.model_hash = get<std::uint64_t>(is);
  t.dt = get<double>(is);
  t.seed = get<std::uint64_t>(is);
  t.stream_id = get<std::uint64_t>(is);
  t.dim = static_cast<int>(get<std::uint32_t>(is));
  const auto n = get<std::uint64_t>(is);
  t.data.resize(n * static_cast<std::size_t>(t.dim));
  for (double& v : t.data) v = get<double>(is);
  return t;
}

}  // namespace tptkit
