#pragma once

#include <cstddef>
#include <vector>

namespace tptkit {

/// Running mean and variance (Welford); `merge` combines disjoint samples.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& other);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased
  double stderr_of_mean() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Estimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

/// Mean with a batch-means standard error: the chronological sample is cut
/// into `n_batches` contiguous batches of equal size (remainder dropped from
/// the error estimate only). Fewer samples than batches fall back to the
/// i.i.d. standard error.
Estimate batch_means(const std::vector<double>& samples, int n_batches = 10);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double critical_value = 0.0;  // at the level passed to ks_two_sample
  bool rejected = false;
};

/// Two-sample Kolmogorov-Smirnov test. The p-value uses the asymptotic
/// Kolmogorov distribution with the small-sample correction
/// lambda = (sqrt(ne) + 0.12 + 0.11/sqrt(ne)) D, ne = nm/(n+m).
KsResult ks_two_sample(std::vector<double> x, std::vector<double> y, double alpha = 0.01);
/// c(alpha) sqrt((n+m)/(nm)) with c(alpha) = sqrt(-ln(alpha/2)/2).
double ks_critical_value(std::size_t n, std::size_t m, double alpha = 0.01);
/// Q_KS(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_survival(double lambda);

struct ChiSquaredResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness of fit of `counts` against cell probabilities. Cells with
/// expected count below 5 are pooled with their neighbours first.
ChiSquaredResult chi_squared_gof(const std::vector<double>& counts,
                                 const std::vector<double>& probabilities);

}  // namespace tptkit
