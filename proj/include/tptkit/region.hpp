#pragma once

#include "tptkit/model.hpp"

#include <functional>
#include <string>
#include <vector>

namespace tptkit {

/// Quadrature node on a region boundary.
struct BoundaryAtom {
  Vec point;
  double weight = 0.0;  // local surface measure d sigma
  Vec normal;           // unit normal pointing into the region (exterior to Theta)
  double param = 0.0;   // polar angle about the centre for balls; x for intervals
  double half_width = 0.0;  // angular half-width of the atom's arc (balls only)
};

/// Bounded open set A or B: interval in 1D, disc in 2D, or a user level set
/// with explicitly supplied boundary atoms.
class Region {
 public:
  enum class Kind { Interval, Ball, LevelSet };

  static Region interval(double lo, double hi);
  static Region ball(const Vec& centre, double radius, int n_atoms = 256);
  /// `signed_distance` must be negative inside. `atoms` must carry unit
  /// normals pointing into the region.
  static Region level_set(int dim, std::function<double(const Vec&)> signed_distance,
                          std::vector<BoundaryAtom> atoms, Box bounding_box,
                          double surface_measure, double quadrature_tolerance = 1e-6);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const std::string& label() const { return label_; }
  void set_label(std::string label) { label_ = std::move(label); }

  double signed_distance(const Vec& x) const;
  bool inside(const Vec& x) const { return signed_distance(x) < 0.0; }
  bool inside_closure(const Vec& x) const { return signed_distance(x) <= 0.0; }

  const std::vector<BoundaryAtom>& atoms() const { return atoms_; }
  std::size_t nearest_atom(const Vec& x) const;
  /// Nearest boundary point: exact for intervals and balls, nearest atom otherwise.
  Vec project(const Vec& x) const;
  double surface_measure() const { return surface_measure_; }
  const Box& bounding_box() const { return bbox_; }
  /// Centroid of the boundary atoms.
  Vec centre() const;
  double radius() const { return radius_; }  // balls and half-length for intervals

  /// Coordinate used by boundary test functions and K-S comparisons: in 1D the
  /// position; in 2D the polar angle in [0, 2 pi) measured counter-clockwise from
  /// the direction pointing away from `other`, so the side facing `other` sits at pi.
  double boundary_coordinate(const Vec& point, const Region& other) const;

  /// Checks boundedness (positive signed distance at random points outside the
  /// bounding box) and the atom weight sum. Throws ConfigError.
  void validate(std::uint64_t seed = 0) const;

 private:
  Region() = default;

  Kind kind_ = Kind::Interval;
  int dim_ = 1;
  std::string label_;
  Vec centre_;
  double radius_ = 0.0;
  std::function<double(const Vec&)> custom_sd_;
  std::vector<BoundaryAtom> atoms_;
  Box bbox_;
  double surface_measure_ = 0.0;
  double quadrature_tolerance_ = 1e-12;
};

/// Throws ConfigError("closures not disjoint ...") unless the closures of A
/// and B are disjoint.
void check_disjoint(const Region& a, const Region& b);

}  // namespace tptkit
