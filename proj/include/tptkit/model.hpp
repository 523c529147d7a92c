#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>

namespace tptkit {

// States live in R^1 or R^2; the fixed upper bound keeps these off the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 2, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 2, 2>;

Vec make_vec(double x);
Vec make_vec(double x, double y);

/// Axis-aligned computational box standing in for R^d.
struct Box {
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Vec& x) const;
  double diameter() const { return (hi - lo).norm(); }
  double volume() const;
  /// Box with the same centre and every side scaled by `factor`.
  Box scaled(double factor) const;
};

/// Potential V and inverse temperature for models whose invariant density
/// is the Gibbs measure exp(-beta V) / Z.
struct GibbsPotential {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;
  double beta = 1.0;
};

/// dX = b(X) dt + sqrt(2) sigma(X) dW on a bounding box.
class DiffusionModel {
 public:
  struct Spec {
    std::string name;
    int dim = 1;
    std::function<Vec(const Vec&)> drift;
    std::function<Mat(const Vec&)> sigma;
    /// Known Gibbs density. `reversible` additionally asserts b = -grad V and
    /// sigma = beta^{-1/2} I.
    std::optional<GibbsPotential> potential;
    bool reversible = false;
    bool constant_diffusion = true;
    double lambda = 0.0;  // declared ellipticity bounds of a = sigma sigma^T
    double Lambda = 0.0;
    Box box;
    /// Flat-potential families on a reflecting box: the invariant density is
    /// uniform on the box and the tail check does not apply.
    bool reflecting_box = false;
    /// Canonical text of the parameters, hashed into dumps and reports.
    std::string descriptor;
  };

  explicit DiffusionModel(Spec spec);

  int dim() const { return spec_.dim; }
  const std::string& name() const { return spec_.name; }
  const Box& box() const { return spec_.box; }
  double lambda() const { return spec_.lambda; }
  double Lambda() const { return spec_.Lambda; }
  bool reversible() const { return spec_.reversible; }
  bool reflecting_box() const { return spec_.reflecting_box; }
  bool constant_diffusion() const { return spec_.constant_diffusion; }
  const std::optional<GibbsPotential>& potential() const { return spec_.potential; }
  const std::string& descriptor() const { return spec_.descriptor; }
  std::uint64_t hash() const;

  Vec drift(const Vec& x) const { return spec_.drift(x); }
  Mat sigma(const Vec& x) const { return spec_.sigma(x); }
  Mat diffusion(const Vec& x) const;

  /// grad log rho when the density is known in closed form.
  std::optional<Vec> log_density_gradient(const Vec& x) const;
  /// Divergence of the matrix field a, row-wise: (div a)_i = sum_j d_j a_ij.
  Vec diffusion_divergence(const Vec& x) const;

  /// Probes ellipticity bounds (and b = -grad V for reversible models) at
  /// `n_probes` uniform points in the box. Throws ConfigError on failure.
  void validate(std::uint64_t seed = 0, int n_probes = 100) const;

 private:
  Spec spec_;
};

/// Parameters of one of the built-in model families.
struct ModelDescriptor {
  std::string family;  // brownian1d | ou1d | doublewell1d | doublewell2d | shear2d
  std::map<std::string, double> params;  // beta, shear
  std::optional<Box> box;                // default box per family when absent
};

/// Builds and validates a built-in model. Throws ConfigError on unknown
/// family, non-positive beta or a failed invariant probe.
DiffusionModel build_model(const ModelDescriptor& descriptor);

/// 64-bit FNV-1a, used for model and config hashes.
std::uint64_t fnv1a(const std::string& text);

}  // namespace tptkit
