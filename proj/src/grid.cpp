#include "tptkit/grid.hpp"

#include "tptkit/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace tptkit {

Grid::Grid(Box box, std::vector<int> nodes_per_axis) : box_(std::move(box)) {
  if (static_cast<int>(nodes_per_axis.size()) != box_.dim()) {
    throw ConfigError("grid resolution does not match the box dimension");
  }
  size_ = 1;
  for (int k = 0; k < box_.dim(); ++k) {
    if (nodes_per_axis[k] < 5) throw ConfigError("grid needs at least 5 nodes per axis");
    n_[k] = nodes_per_axis[k];
    h_[k] = (box_.hi[k] - box_.lo[k]) / (n_[k] - 1);
    size_ *= static_cast<std::size_t>(n_[k]);
  }
}

double Grid::max_spacing() const { return dim() == 1 ? h_[0] : std::max(h_[0], h_[1]); }
double Grid::min_spacing() const { return dim() == 1 ? h_[0] : std::min(h_[0], h_[1]); }

Vec Grid::point(std::size_t node) const {
  if (dim() == 1) return make_vec(coord(0, static_cast<int>(node)));
  return make_vec(coord(0, index_along(node, 0)), coord(1, index_along(node, 1)));
}

double Grid::weight(std::size_t node) const {
  double w = 1.0;
  for (int k = 0; k < dim(); ++k) {
    int i = index_along(node, k);
    w *= (i == 0 || i == n_[k] - 1) ? 0.5 * h_[k] : h_[k];
  }
  return w;
}

void Grid::classify(const Region& a, const Region& b) {
  if (a.dim() != dim() || b.dim() != dim()) throw ConfigError("region dimension does not match grid");
  kind_.assign(size_, NodeKind::Theta);
  for (std::size_t i = 0; i < size_; ++i) {
    Vec x = point(i);
    if (a.inside_closure(x)) {
      kind_[i] = NodeKind::A;
    } else if (b.inside_closure(x)) {
      kind_[i] = NodeKind::B;
    } else {
      for (int k = 0; k < dim(); ++k) {
        int j = index_along(i, k);
        if (j == 0 || j == n_[k] - 1) kind_[i] = NodeKind::BoxEdge;
      }
    }
  }
  // At least three Theta nodes between A and B along every axis line.
  for (int axis = 0; axis < dim(); ++axis) {
    const int other = dim() == 1 ? 1 : n_[1 - axis];
    for (int line = 0; line < other; ++line) {
      NodeKind last = NodeKind::Theta;
      int gap = 0;
      for (int j = 0; j < n_[axis]; ++j) {
        std::size_t node = axis == 0 ? static_cast<std::size_t>(j) + stride(1) * line
                                     : static_cast<std::size_t>(line) + stride(1) * j;
        if (dim() == 1) node = static_cast<std::size_t>(j);
        NodeKind k = kind_[node];
        if (k == NodeKind::A || k == NodeKind::B) {
          if ((last == NodeKind::A || last == NodeKind::B) && k != last && gap < 3) {
            throw ConfigError(fmt::format(
                "grid too coarse: only {} Theta nodes between A and B along axis {}", gap, axis));
          }
          last = k;
          gap = 0;
        } else {
          ++gap;
        }
      }
    }
  }
}

Grid::Cell Grid::locate(const Vec& x) const {
  Cell c;
  std::array<int, 2> i0{0, 0};
  std::array<double, 2> t{0.0, 0.0};
  for (int k = 0; k < dim(); ++k) {
    double s = (x[k] - box_.lo[k]) / h_[k];
    s = std::clamp(s, 0.0, static_cast<double>(n_[k] - 1));
    int i = std::min(static_cast<int>(s), n_[k] - 2);
    i0[k] = i;
    t[k] = s - i;
  }
  if (dim() == 1) {
    c.count = 2;
    c.corners[0] = static_cast<std::size_t>(i0[0]);
    c.corners[1] = c.corners[0] + 1;
    c.weights[0] = 1.0 - t[0];
    c.weights[1] = t[0];
    return c;
  }
  c.count = 4;
  std::size_t base = static_cast<std::size_t>(i0[0]) + stride(1) * i0[1];
  c.corners = {base, base + 1, base + stride(1), base + stride(1) + 1};
  c.weights = {(1 - t[0]) * (1 - t[1]), t[0] * (1 - t[1]), (1 - t[0]) * t[1], t[0] * t[1]};
  return c;
}

std::size_t Grid::nearest_node(const Vec& x) const {
  std::size_t node = 0;
  for (int k = 0; k < dim(); ++k) {
    double s = std::round((x[k] - box_.lo[k]) / h_[k]);
    int i = static_cast<int>(std::clamp(s, 0.0, static_cast<double>(n_[k] - 1)));
    node += stride(k) * static_cast<std::size_t>(i);
  }
  return node;
}

ScalarField::ScalarField(std::shared_ptr<const Grid> grid, std::vector<double> values,
                         std::vector<DirichletPiece> pieces)
    : grid_(std::move(grid)), values_(std::move(values)), pieces_(std::move(pieces)) {
  if (values_.empty()) values_.assign(grid_->size(), 0.0);
  if (values_.size() != grid_->size()) throw Error("field size does not match grid");
}

double ScalarField::interpolate(const Vec& x) const {
  Grid::Cell c = grid_->locate(x);
  double v = 0.0;
  for (int k = 0; k < c.count; ++k) v += c.weights[k] * values_[c.corners[k]];
  return v;
}

VectorField::VectorField(std::shared_ptr<const Grid> grid) : grid_(std::move(grid)) {
  data_.assign(grid_->size() * static_cast<std::size_t>(grid_->dim()), 0.0);
}

Vec VectorField::at(std::size_t node) const {
  Vec v(dim());
  for (int k = 0; k < dim(); ++k) v[k] = data_[node * dim() + k];
  return v;
}

void VectorField::set(std::size_t node, const Vec& v) {
  for (int k = 0; k < dim(); ++k) data_[node * dim() + k] = v[k];
}

Vec VectorField::interpolate(const Vec& x) const {
  Grid::Cell c = grid_->locate(x);
  Vec v = Vec::Zero(dim());
  for (int j = 0; j < c.count; ++j) {
    for (int k = 0; k < dim(); ++k) v[k] += c.weights[j] * data_[c.corners[j] * dim() + k];
  }
  return v;
}

namespace {

void write_header(std::ostream& os, const Grid& g, const std::string& name, int components) {
  os << "# tptkit field v1\n";
  os << "name " << (name.empty() ? "field" : name) << '\n';
  os << "dim " << g.dim() << '\n';
  for (int k = 0; k < g.dim(); ++k) {
    os << fmt::format("axis {} {:.17g} {:.17g} {}\n", k, g.box().lo[k], g.box().hi[k], g.nodes(k));
  }
  os << "legend 0=theta 1=A 2=B 3=box\n";
  os << "components " << components << '\n';
  os << "data\n";
}

}  // namespace

void write_field(std::ostream& os, const ScalarField& field) {
  const Grid& g = field.grid();
  write_header(os, g, field.name, 1);
  for (std::size_t i = 0; i < g.size(); ++i) {
    os << fmt::format("{} {:.17g}\n", static_cast<int>(g.kind(i)), field[i]);
  }
}

void write_field(std::ostream& os, const VectorField& field) {
  const Grid& g = field.grid();
  write_header(os, g, field.name, g.dim());
  for (std::size_t i = 0; i < g.size(); ++i) {
    os << static_cast<int>(g.kind(i));
    for (int k = 0; k < g.dim(); ++k) os << fmt::format(" {:.17g}", field.component(i, k));
    os << '\n';
  }
}

FieldDump read_field(std::istream& is) {
  FieldDump d;
  std::string line;
  if (!std::getline(is, line) || line != "# tptkit field v1") throw Error("not a tptkit field dump");
  int dim = 0;
  std::vector<double> lo, hi;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "name") {
      ls >> d.name;
    } else if (key == "dim") {
      ls >> dim;
    } else if (key == "axis") {
      int k, n;
      double a, b;
      ls >> k >> a >> b >> n;
      lo.push_back(a);
      hi.push_back(b);
      d.nodes.push_back(n);
    } else if (key == "components") {
      ls >> d.components;
    } else if (key == "data") {
      break;
    }
  }
  if (dim < 1 || static_cast<int>(lo.size()) != dim) throw Error("malformed field header");
  d.box.lo = Vec(dim);
  d.box.hi = Vec(dim);
  std::size_t n = 1;
  for (int k = 0; k < dim; ++k) {
    d.box.lo[k] = lo[k];
    d.box.hi[k] = hi[k];
    n *= static_cast<std::size_t>(d.nodes[k]);
  }
  d.kinds.reserve(n);
  d.values.reserve(n * d.components);
  for (std::size_t i = 0; i < n; ++i) {
    int kind;
    if (!(is >> kind)) throw Error("truncated field dump");
    d.kinds.push_back(static_cast<NodeKind>(kind));
    for (int c = 0; c < d.components; ++c) {
      double v;
      if (!(is >> v)) throw Error("truncated field dump");
      d.values.push_back(v);
    }
  }
  return d;
}

}  // namespace tptkit
