#include "tptkit/region.hpp"

#include "tptkit/error.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace tptkit {

Region Region::interval(double lo, double hi) {
  if (!(hi > lo)) throw ConfigError("interval region needs lo < hi");
  Region r;
  r.kind_ = Kind::Interval;
  r.dim_ = 1;
  r.centre_ = make_vec(0.5 * (lo + hi));
  r.radius_ = 0.5 * (hi - lo);
  r.atoms_ = {BoundaryAtom{make_vec(lo), 1.0, make_vec(1.0), lo, 0.0},
              BoundaryAtom{make_vec(hi), 1.0, make_vec(-1.0), hi, 0.0}};
  r.bbox_ = Box{make_vec(lo), make_vec(hi)};
  r.surface_measure_ = 2.0;
  return r;
}

Region Region::ball(const Vec& centre, double radius, int n_atoms) {
  if (centre.size() != 2) throw ConfigError("ball regions are two-dimensional");
  if (!(radius > 0.0)) throw ConfigError("ball radius must be positive");
  if (n_atoms < 8) throw ConfigError("ball needs at least 8 boundary atoms");
  Region r;
  r.kind_ = Kind::Ball;
  r.dim_ = 2;
  r.centre_ = centre;
  r.radius_ = radius;
  const double dtheta = 2.0 * std::numbers::pi / n_atoms;
  r.atoms_.reserve(n_atoms);
  for (int k = 0; k < n_atoms; ++k) {
    const double theta = (k + 0.5) * dtheta;
    Vec dir = make_vec(std::cos(theta), std::sin(theta));
    r.atoms_.push_back(
        BoundaryAtom{Vec(centre + radius * dir), radius * dtheta, Vec(-dir), theta, 0.5 * dtheta});
  }
  Vec ext = make_vec(radius, radius);
  r.bbox_ = Box{centre - ext, centre + ext};
  r.surface_measure_ = 2.0 * std::numbers::pi * radius;
  return r;
}

Region Region::level_set(int dim, std::function<double(const Vec&)> signed_distance,
                         std::vector<BoundaryAtom> atoms, Box bounding_box,
                         double surface_measure, double quadrature_tolerance) {
  if (!signed_distance) throw ConfigError("level-set region needs a signed distance");
  if (atoms.empty()) throw ConfigError("level-set region needs boundary atoms");
  Region r;
  r.kind_ = Kind::LevelSet;
  r.dim_ = dim;
  r.custom_sd_ = std::move(signed_distance);
  r.atoms_ = std::move(atoms);
  r.bbox_ = std::move(bounding_box);
  r.surface_measure_ = surface_measure;
  r.quadrature_tolerance_ = quadrature_tolerance;
  r.radius_ = 0.5 * r.bbox_.diameter();
  Vec c = Vec::Zero(dim);
  for (const auto& a : r.atoms_) c += a.point;
  r.centre_ = c / static_cast<double>(r.atoms_.size());
  for (auto& a : r.atoms_) {
    if (dim == 2) {
      Vec d = a.point - r.centre_;
      a.param = std::atan2(d[1], d[0]);
    } else {
      a.param = a.point[0];
    }
  }
  r.validate();
  return r;
}

double Region::signed_distance(const Vec& x) const {
  switch (kind_) {
    case Kind::Interval:
      return std::abs(x[0] - centre_[0]) - radius_;
    case Kind::Ball:
      return (x - centre_).norm() - radius_;
    case Kind::LevelSet:
      return custom_sd_(x);
  }
  return 0.0;
}

std::size_t Region::nearest_atom(const Vec& x) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    double d = (atoms_[i].point - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

Vec Region::project(const Vec& x) const {
  switch (kind_) {
    case Kind::Interval:
      return make_vec(x[0] < centre_[0] ? centre_[0] - radius_ : centre_[0] + radius_);
    case Kind::Ball: {
      Vec d = x - centre_;
      double n = d.norm();
      if (n == 0.0) d = make_vec(1.0, 0.0), n = 1.0;
      return centre_ + radius_ * d / n;
    }
    case Kind::LevelSet:
      return atoms_[nearest_atom(x)].point;
  }
  return x;
}

Vec Region::centre() const { return centre_; }

double Region::boundary_coordinate(const Vec& point, const Region& other) const {
  if (dim_ == 1) return point[0];
  Vec away = centre_ - other.centre();
  const double ref = std::atan2(away[1], away[0]);
  Vec d = point - centre_;
  double theta = std::atan2(d[1], d[0]) - ref;
  const double two_pi = 2.0 * std::numbers::pi;
  theta = std::fmod(theta, two_pi);
  if (theta < 0.0) theta += two_pi;
  return theta;
}

void Region::validate(std::uint64_t seed) const {
  double sum = 0.0;
  for (const auto& a : atoms_) {
    if (!(a.weight >= 0.0) || !std::isfinite(a.weight)) {
      throw ConfigError("boundary atom weights must be finite and non-negative");
    }
    sum += a.weight;
  }
  if (std::abs(sum - surface_measure_) > quadrature_tolerance_ * std::max(1.0, surface_measure_)) {
    std::ostringstream os;
    os << "boundary atom weights sum to " << sum << ", surface measure is " << surface_measure_;
    throw ConfigError(os.str());
  }
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Vec mid = 0.5 * (bbox_.lo + bbox_.hi);
  const Vec half = 0.5 * (bbox_.hi - bbox_.lo);
  for (int k = 0; k < 200; ++k) {
    // points on a shell between 1.01x and 3x the bounding box
    Vec dir(dim_);
    for (int i = 0; i < dim_; ++i) dir[i] = unit(gen);
    const double m = dir.cwiseAbs().cwiseQuotient(half.cwiseMax(1e-12)).maxCoeff();
    if (m == 0.0) continue;
    const double scale = (1.01 + (unit(gen) + 1.0)) / m;
    Vec x = mid + scale * dir;
    if (!(signed_distance(x) > 0.0)) throw ConfigError("region is not contained in its bounding box");
  }
}

void check_disjoint(const Region& a, const Region& b) {
  if (a.dim() != b.dim()) throw ConfigError("regions have different dimensions");
  for (const auto& atom : a.atoms()) {
    if (b.signed_distance(atom.point) <= 0.0) throw ConfigError("closures not disjoint");
  }
  for (const auto& atom : b.atoms()) {
    if (a.signed_distance(atom.point) <= 0.0) throw ConfigError("closures not disjoint");
  }
  double min_gap = std::numeric_limits<double>::infinity();
  for (const auto& x : a.atoms()) {
    for (const auto& y : b.atoms()) min_gap = std::min(min_gap, (x.point - y.point).norm());
  }
  if (!(min_gap > 0.0)) throw ConfigError("closures not disjoint");
}

}  // namespace tptkit
