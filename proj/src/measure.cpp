#include "tptkit/measure.hpp"

#include "tptkit/error.hpp"

#include <cmath>

namespace tptkit {

double BoundaryMeasure::total_mass() const {
  double m = 0.0;
  for (const auto& a : atoms) m += a.weight;
  return m;
}

BoundaryMeasure BoundaryMeasure::normalized() const {
  const double m = total_mass();
  if (!(m > 0.0)) throw NumericalError("cannot normalise a measure without mass: " + name);
  BoundaryMeasure out = *this;
  for (auto& a : out.atoms) a.weight /= m;
  return out;
}

double BoundaryMeasure::integrate(const std::function<double(const MeasureAtom&)>& f) const {
  double s = 0.0;
  for (const auto& a : atoms) s += a.weight * f(a);
  return s;
}

std::vector<double> BoundaryMeasure::weights_per_atom() const {
  std::vector<double> w(region ? region->atoms().size() : 0, 0.0);
  for (const auto& a : atoms) {
    if (a.atom >= w.size()) w.resize(a.atom + 1, 0.0);
    w[a.atom] += a.weight;
  }
  return w;
}

std::array<double, 3> weak_distance(const BoundaryMeasure& mu, const BoundaryMeasure& nu,
                                    const Region& other) {
  std::array<double, 3> out{};
  for (int p = 0; p < 3; ++p) {
    auto f = [&](const BoundaryMeasure& m) {
      return m.integrate([&](const MeasureAtom& a) {
        return std::pow(m.region->boundary_coordinate(a.point, other), p);
      });
    };
    const double ref = f(nu);
    out[p] = std::abs(f(mu) - ref) / std::abs(ref);
  }
  return out;
}

}  // namespace tptkit
