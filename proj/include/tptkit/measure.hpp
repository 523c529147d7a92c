#pragma once

#include "tptkit/region.hpp"

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace tptkit {

struct MeasureAtom {
  Vec point;
  double weight = 0.0;
  std::size_t atom = 0;  // index into region->atoms()
};

/// Weighted atoms on a region boundary (exit/entrance distributions and their
/// empirical counterparts).
struct BoundaryMeasure {
  std::string name;
  std::shared_ptr<const Region> region;
  std::vector<MeasureAtom> atoms;

  double total_mass() const;
  /// Copy scaled to unit mass. Throws NumericalError for a massless measure.
  BoundaryMeasure normalized() const;
  double integrate(const std::function<double(const MeasureAtom&)>& f) const;
  /// Sum of weights per region atom.
  std::vector<double> weights_per_atom() const;
};

/// Relative differences |mu(f) - nu(f)| / |nu(f)| for the test functions
/// f = 1, s, s^2 with s the boundary coordinate of the atom relative to `other`.
std::array<double, 3> weak_distance(const BoundaryMeasure& mu, const BoundaryMeasure& nu,
                                    const Region& other);

}  // namespace tptkit
