#include "tptkit/model.hpp"

#include "tptkit/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iostream>
#include <random>
#include <sstream>

namespace tptkit {

void log_warning(const std::string& message) { std::clog << "warning: " << message << '\n'; }

Vec make_vec(double x) {
  Vec v(1);
  v << x;
  return v;
}

Vec make_vec(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

bool Box::contains(const Vec& x) const {
  for (int i = 0; i < dim(); ++i) {
    if (!(x[i] >= lo[i] && x[i] <= hi[i])) return false;
  }
  return true;
}

double Box::volume() const {
  double v = 1.0;
  for (int i = 0; i < dim(); ++i) v *= hi[i] - lo[i];
  return v;
}

Box Box::scaled(double factor) const {
  Vec centre = 0.5 * (lo + hi);
  Vec half = 0.5 * factor * (hi - lo);
  return Box{centre - half, centre + half};
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

DiffusionModel::DiffusionModel(Spec spec) : spec_(std::move(spec)) {
  if (spec_.dim != 1 && spec_.dim != 2) throw ConfigError("model dimension must be 1 or 2");
  if (!spec_.drift || !spec_.sigma) throw ConfigError("model needs drift and sigma evaluators");
  if (spec_.box.dim() != spec_.dim) throw ConfigError("bounding box dimension does not match model");
}

std::uint64_t DiffusionModel::hash() const { return fnv1a(spec_.descriptor); }

Mat DiffusionModel::diffusion(const Vec& x) const {
  Mat s = spec_.sigma(x);
  return s * s.transpose();
}

std::optional<Vec> DiffusionModel::log_density_gradient(const Vec& x) const {
  if (!spec_.potential) return std::nullopt;
  return Vec(-spec_.potential->beta * spec_.potential->gradient(x));
}

Vec DiffusionModel::diffusion_divergence(const Vec& x) const {
  Vec div = Vec::Zero(dim());
  if (spec_.constant_diffusion) return div;
  constexpr double step = 1e-5;
  for (int j = 0; j < dim(); ++j) {
    Vec xp = x, xm = x;
    xp[j] += step;
    xm[j] -= step;
    Mat dp = diffusion(xp), dm = diffusion(xm);
    for (int i = 0; i < dim(); ++i) div[i] += (dp(i, j) - dm(i, j)) / (2 * step);
  }
  return div;
}

void DiffusionModel::validate(std::uint64_t seed, int n_probes) const {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Box& box = spec_.box;
  for (int k = 0; k < n_probes; ++k) {
    Vec x(dim());
    for (int i = 0; i < dim(); ++i) x[i] = box.lo[i] + unit(gen) * (box.hi[i] - box.lo[i]);

    Mat a = diffusion(x);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig{Eigen::MatrixXd(a)};
    double lo = eig.eigenvalues().minCoeff();
    double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0)) {
      std::ostringstream os;
      os << "diffusion matrix is not positive definite at probe point " << x.transpose();
      throw ConfigError(os.str());
    }
    const double slack = 1e-12 * (1.0 + spec_.Lambda);
    if (lo < spec_.lambda - slack || hi > spec_.Lambda + slack) {
      std::ostringstream os;
      os << "ellipticity bounds [" << spec_.lambda << ", " << spec_.Lambda
         << "] violated at probe point " << x.transpose();
      throw ConfigError(os.str());
    }

    if (spec_.reversible) {
      const auto& pot = *spec_.potential;
      Vec b = drift(x);
      constexpr double step = 1e-5;
      for (int i = 0; i < dim(); ++i) {
        Vec xp = x, xm = x;
        xp[i] += step;
        xm[i] -= step;
        double dV = (pot.value(xp) - pot.value(xm)) / (2 * step);
        if (std::abs(b[i] + dV) > 1e-5 * (1.0 + std::abs(dV))) {
          std::ostringstream os;
          os << "reversible model drift differs from -grad V at " << x.transpose();
          throw ConfigError(os.str());
        }
      }
      Mat expected = Mat::Identity(dim(), dim()) / pot.beta;
      if ((a - expected).norm() > 1e-12 * expected.norm()) {
        throw ConfigError("reversible model requires sigma = beta^{-1/2} I");
      }
    }
  }
}

namespace {

double param(const ModelDescriptor& d, const std::string& key, double fallback) {
  auto it = d.params.find(key);
  return it == d.params.end() ? fallback : it->second;
}

Box box_or(const ModelDescriptor& d, Box fallback) { return d.box ? *d.box : fallback; }

std::string describe(const ModelDescriptor& d, const Box& box) {
  std::ostringstream os;
  os.precision(17);
  os << "family=" << d.family;
  for (const auto& [k, v] : d.params) os << ';' << k << '=' << v;
  os << ";box=";
  for (int i = 0; i < box.dim(); ++i) os << box.lo[i] << ',' << box.hi[i] << ',';
  return os.str();
}

DiffusionModel::Spec isotropic(std::string name, int dim, double beta, Box box) {
  DiffusionModel::Spec s;
  s.name = std::move(name);
  s.dim = dim;
  const double amp = std::sqrt(1.0 / beta);
  s.sigma = [dim, amp](const Vec&) { return Mat(Mat::Identity(dim, dim) * amp); };
  s.lambda = s.Lambda = 1.0 / beta;
  s.box = std::move(box);
  return s;
}

// V(x, y) = (x^2 - 1)^2 + 2 y^2
double dw2_value(const Vec& x) { return std::pow(x[0] * x[0] - 1.0, 2) + 2.0 * x[1] * x[1]; }
Vec dw2_gradient(const Vec& x) { return make_vec(4.0 * x[0] * (x[0] * x[0] - 1.0), 4.0 * x[1]); }

}  // namespace

DiffusionModel build_model(const ModelDescriptor& d) {
  const std::string& f = d.family;
  DiffusionModel::Spec spec;

  if (f == "brownian1d") {
    // b = 0, sigma = 1/sqrt(2): the flat potential at beta = 2.
    spec = isotropic(f, 1, 2.0, box_or(d, Box{make_vec(-3.0), make_vec(3.0)}));
    spec.drift = [](const Vec&) { return make_vec(0.0); };
    spec.potential = GibbsPotential{[](const Vec&) { return 0.0; },
                                    [](const Vec&) { return make_vec(0.0); }, 2.0};
    spec.reversible = true;
    spec.reflecting_box = true;
  } else if (f == "ou1d") {
    // b = -x, sigma = 1/sqrt(2); V = x^2 / 2 at beta = 2.
    spec = isotropic(f, 1, 2.0, box_or(d, Box{make_vec(-4.0), make_vec(4.0)}));
    spec.drift = [](const Vec& x) { return make_vec(-x[0]); };
    spec.potential = GibbsPotential{[](const Vec& x) { return 0.5 * x[0] * x[0]; },
                                    [](const Vec& x) { return make_vec(x[0]); }, 2.0};
    spec.reversible = true;
  } else if (f == "doublewell1d" || f == "doublewell2d" || f == "shear2d") {
    const double beta = param(d, "beta", f == "doublewell1d" ? 3.0 : 2.0);
    if (!(beta > 0.0)) throw ConfigError("beta must be positive");
    if (f == "doublewell1d") {
      spec = isotropic(f, 1, beta, box_or(d, Box{make_vec(-2.5), make_vec(2.5)}));
      auto grad = [](const Vec& x) { return make_vec(4.0 * x[0] * (x[0] * x[0] - 1.0)); };
      spec.drift = [grad](const Vec& x) { return Vec(-grad(x)); };
      spec.potential = GibbsPotential{
          [](const Vec& x) { return std::pow(x[0] * x[0] - 1.0, 2); }, grad, beta};
      spec.reversible = true;
    } else {
      spec = isotropic(f, 2, beta, box_or(d, Box{make_vec(-2.2, -2.0), make_vec(2.2, 2.0)}));
      spec.potential = GibbsPotential{dw2_value, dw2_gradient, beta};
      if (f == "doublewell2d") {
        spec.drift = [](const Vec& x) { return Vec(-dw2_gradient(x)); };
        spec.reversible = true;
      } else {
        // b = -grad V + c J grad V with J the quarter-turn rotation; J grad V
        // is divergence free and tangent to level sets, so rho stays Gibbs.
        const double c = param(d, "shear", 0.5);
        spec.drift = [c](const Vec& x) {
          Vec g = dw2_gradient(x);
          return make_vec(-g[0] - c * g[1], -g[1] + c * g[0]);
        };
        spec.reversible = false;
      }
    }
  } else {
    throw ConfigError("unknown model family '" + f + "'");
  }

  for (const auto& [key, value] : d.params) {
    const bool known = key == "beta" || (key == "shear" && f == "shear2d");
    if (!known) throw ConfigError("parameter '" + key + "' is not used by family " + f);
  }
  if (spec.box.dim() != spec.dim) throw ConfigError("box dimension does not match family " + f);
  for (int i = 0; i < spec.dim; ++i) {
    if (!(spec.box.hi[i] > spec.box.lo[i])) throw ConfigError("empty bounding box");
  }
  spec.descriptor = describe(d, spec.box);

  DiffusionModel model(std::move(spec));
  model.validate();
  return model;
}

}  // namespace tptkit
