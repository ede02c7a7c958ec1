#include "mmvae/gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmvae {
namespace {

constexpr double kLn2Pi = 1.8378770664093454836;

void require_same_dim(int a, int b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                                " vs " + std::to_string(b) + ")");
  }
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

DiagGaussian::DiagGaussian(std::vector<double> mean_in, std::vector<double> log_var_in)
    : mean(std::move(mean_in)), log_var(std::move(log_var_in)) {
  require_same_dim(static_cast<int>(mean.size()), static_cast<int>(log_var.size()), "DiagGaussian");
  for (double m : mean) {
    if (!std::isfinite(m)) throw std::invalid_argument("DiagGaussian: non-finite mean");
  }
  for (double& lv : log_var) {
    if (std::isnan(lv)) throw std::invalid_argument("DiagGaussian: NaN log_var");
    lv = std::clamp(lv, -kLogVarClamp, kLogVarClamp);
  }
}

DiagGaussian DiagGaussian::standard(int dim) {
  return DiagGaussian(std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0));
}

double kl_gaussian(const DiagGaussian& q, const DiagGaussian& p) {
  require_same_dim(q.dim(), p.dim(), "kl_gaussian");
  double total = 0.0;
  for (int d = 0; d < q.dim(); ++d) {
    const double lq = q.log_var[d];
    const double lp = p.log_var[d];
    const double dm = q.mean[d] - p.mean[d];
    total += 0.5 * (lp - lq + std::exp(lq - lp) + dm * dm * std::exp(-lp) - 1.0);
  }
  return total;
}

double kl_gaussian(const DiagGaussian& q, const StandardPrior& p) {
  require_same_dim(q.dim(), p.dim, "kl_gaussian");
  return kl_to_standard(q);
}

double kl_to_standard(const DiagGaussian& q) {
  double total = 0.0;
  for (int d = 0; d < q.dim(); ++d) {
    const double lv = q.log_var[d];
    const double m = q.mean[d];
    total += 0.5 * (std::exp(lv) + m * m - 1.0 - lv);
  }
  return total;
}

std::vector<double> reparam_sample(const DiagGaussian& q, RngStream& rng) {
  std::vector<double> z(q.dim());
  for (int d = 0; d < q.dim(); ++d) {
    z[d] = q.mean[d] + std::exp(0.5 * q.log_var[d]) * rng.normal();
  }
  return z;
}

double log_prob_gaussian(std::span<const double> x, const DiagGaussian& p) {
  require_same_dim(static_cast<int>(x.size()), p.dim(), "log_prob_gaussian");
  double total = 0.0;
  for (int d = 0; d < p.dim(); ++d) {
    const double lv = p.log_var[d];
    const double dx = x[d] - p.mean[d];
    total += -0.5 * kLn2Pi - 0.5 * lv - 0.5 * dx * dx * std::exp(-lv);
  }
  return total;
}

double log_prob_bernoulli(std::span<const double> x, std::span<const double> logits) {
  require_same_dim(static_cast<int>(x.size()), static_cast<int>(logits.size()),
                   "log_prob_bernoulli");
  double total = 0.0;
  for (size_t d = 0; d < x.size(); ++d) {
    if (x[d] != 0.0 && x[d] != 1.0) {
      throw std::invalid_argument("log_prob_bernoulli: observations must be 0 or 1");
    }
    total += x[d] * logits[d] - softplus(logits[d]);
  }
  return total;
}

McEstimate mc_kl(const DiagGaussian& q, const DiagGaussian& p, int n, RngStream& rng) {
  require_same_dim(q.dim(), p.dim(), "mc_kl");
  if (n < 100) throw std::invalid_argument("mc_kl: need at least 100 samples");
  // Welford running moments
  double mean = 0.0;
  double m2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const std::vector<double> z = reparam_sample(q, rng);
    const double w = log_prob_gaussian(z, q) - log_prob_gaussian(z, p);
    const double delta = w - mean;
    mean += delta / (i + 1);
    m2 += delta * (w - mean);
  }
  const double variance = m2 / (n - 1);
  return {mean, std::sqrt(variance / n)};
}

}  // namespace mmvae
