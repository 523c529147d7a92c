#include "tptkit/stats.hpp"

#include "tptkit/error.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tptkit {

void RunningStats::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

void RunningStats::merge(const RunningStats& o) {
  if (o.n_ == 0) return;
  if (n_ == 0) {
    *this = o;
    return;
  }
  const double n = static_cast<double>(n_ + o.n_);
  const double delta = o.mean_ - mean_;
  mean_ += delta * static_cast<double>(o.n_) / n;
  m2_ += o.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
  n_ += o.n_;
}

double RunningStats::variance() const {
  return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double RunningStats::stderr_of_mean() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

Estimate batch_means(const std::vector<double>& samples, int n_batches) {
  Estimate e;
  e.n = samples.size();
  if (samples.empty()) return e;
  e.value = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(e.n);
  const std::size_t per = samples.size() / static_cast<std::size_t>(n_batches);
  if (per < 1 || n_batches < 2) {
    RunningStats s;
    for (double x : samples) s.add(x);
    e.stderr_ = s.stderr_of_mean();
    return e;
  }
  RunningStats batches;
  for (int b = 0; b < n_batches; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < per; ++i) sum += samples[b * per + i];
    batches.add(sum / static_cast<double>(per));
  }
  e.stderr_ = batches.stderr_of_mean();
  return e;
}

double kolmogorov_survival(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0, sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-16 * std::abs(sum)) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_critical_value(std::size_t n, std::size_t m, double alpha) {
  const double c = std::sqrt(-std::log(alpha / 2.0) / 2.0);
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

KsResult ks_two_sample(std::vector<double> x, std::vector<double> y, double alpha) {
  if (x.empty() || y.empty()) throw Error("K-S test needs two non-empty samples");
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  KsResult r;
  r.statistic = d;
  const double ne = std::sqrt(n * m / (n + m));
  r.p_value = kolmogorov_survival((ne + 0.12 + 0.11 / ne) * d);
  r.critical_value = ks_critical_value(x.size(), y.size(), alpha);
  r.rejected = d > r.critical_value;
  return r;
}

ChiSquaredResult chi_squared_gof(const std::vector<double>& counts,
                                 const std::vector<double>& probabilities) {
  if (counts.size() != probabilities.size() || counts.empty()) {
    throw Error("chi-squared test: counts and probabilities differ in length");
  }
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  std::vector<double> obs, expct;
  double o = 0.0, e = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    o += counts[k];
    e += probabilities[k] * total;
    if (e >= 5.0) {
      obs.push_back(o);
      expct.push_back(e);
      o = e = 0.0;
    }
  }
  if (e > 0.0 || o > 0.0) {
    if (expct.empty()) {
      obs.push_back(o);
      expct.push_back(e);
    } else {
      obs.back() += o;
      expct.back() += e;
    }
  }
  ChiSquaredResult r;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (expct[k] > 0.0) r.statistic += (obs[k] - expct[k]) * (obs[k] - expct[k]) / expct[k];
  }
  r.dof = static_cast<int>(obs.size()) - 1;
  if (r.dof < 1) return r;
  boost::math::chi_squared dist(r.dof);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  return r;
}

}  // namespace tptkit
