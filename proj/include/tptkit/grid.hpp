#pragma once

#include "tptkit/model.hpp"
#include "tptkit/region.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace tptkit {

enum class NodeKind : std::uint8_t { Theta = 0, A = 1, B = 2, BoxEdge = 3 };

/// Uniform rectangular grid over the model box, nodes on the box faces.
/// Node index = i0 + n0 * i1 (first axis fastest).
class Grid {
 public:
  Grid(Box box, std::vector<int> nodes_per_axis);

  int dim() const { return box_.dim(); }
  const Box& box() const { return box_; }
  int nodes(int axis) const { return n_[axis]; }
  double spacing(int axis) const { return h_[axis]; }
  double max_spacing() const;
  double min_spacing() const;
  std::size_t size() const { return size_; }
  std::size_t stride(int axis) const { return axis == 0 ? 1 : static_cast<std::size_t>(n_[0]); }
  int index_along(std::size_t node, int axis) const {
    return axis == 0 ? static_cast<int>(node % n_[0]) : static_cast<int>(node / n_[0]);
  }
  double coord(int axis, int i) const { return box_.lo[axis] + i * h_[axis]; }
  Vec point(std::size_t node) const;
  /// Trapezoid weight of the node (cell volume, halved on each box face).
  double weight(std::size_t node) const;

  /// Tags nodes in closure(A), closure(B), on the box faces, or in Theta, and
  /// checks that every axis line crossing both regions has at least three
  /// Theta nodes between them. Throws ConfigError.
  void classify(const Region& a, const Region& b);
  bool classified() const { return !kind_.empty(); }
  NodeKind kind(std::size_t node) const { return kind_.empty() ? NodeKind::Theta : kind_[node]; }
  /// Theta or box-face node (the free nodes of the committor problems).
  bool in_theta(std::size_t node) const {
    NodeKind k = kind(node);
    return k == NodeKind::Theta || k == NodeKind::BoxEdge;
  }

  struct Cell {
    std::array<std::size_t, 4> corners{};  // (0,0) (1,0) (0,1) (1,1); 2 used in 1D
    std::array<double, 4> weights{};
    int count = 2;
  };
  /// Multilinear interpolation cell for x (clamped to the box).
  Cell locate(const Vec& x) const;
  std::size_t nearest_node(const Vec& x) const;

 private:
  Box box_;
  std::array<int, 2> n_{1, 1};
  std::array<double, 2> h_{0.0, 0.0};
  std::size_t size_ = 0;
  std::vector<NodeKind> kind_;
};

/// Region on which a field carries a fixed Dirichlet value.
struct DirichletPiece {
  Region region;
  double value = 0.0;
};

/// Nodal scalar field. Fields solved with Dirichlet data remember the pieces
/// so derivatives can treat the region boundaries one-sidedly.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(std::shared_ptr<const Grid> grid, std::vector<double> values = {},
              std::vector<DirichletPiece> pieces = {});

  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  const std::vector<DirichletPiece>& pieces() const { return pieces_; }
  double interpolate(const Vec& x) const;

  std::string name;

 private:
  std::shared_ptr<const Grid> grid_;
  std::vector<double> values_;
  std::vector<DirichletPiece> pieces_;
};

/// Nodal vector field, `dim` components per node.
class VectorField {
 public:
  VectorField() = default;
  explicit VectorField(std::shared_ptr<const Grid> grid);

  const Grid& grid() const { return *grid_; }
  const std::shared_ptr<const Grid>& grid_ptr() const { return grid_; }
  int dim() const { return grid_->dim(); }
  Vec at(std::size_t node) const;
  void set(std::size_t node, const Vec& v);
  double component(std::size_t node, int k) const { return data_[node * dim() + k]; }
  Vec interpolate(const Vec& x) const;
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  std::string name;

 private:
  std::shared_ptr<const Grid> grid_;
  std::vector<double> data_;
};

/// Field dump: text header (format tag, name, axes, classification legend,
/// component count) followed by one line per node in row-major order (rows
/// are the second axis, the first axis runs fastest along a row):
/// `<class> <v1> [<v2>]` with the class code from the legend.
void write_field(std::ostream& os, const ScalarField& field);
void write_field(std::ostream& os, const VectorField& field);
struct FieldDump {
  std::string name;
  Box box;
  std::vector<int> nodes;
  int components = 1;
  std::vector<NodeKind> kinds;
  std::vector<double> values;  // `components` per node
};
FieldDump read_field(std::istream& is);

}  // namespace tptkit
