#pragma once

#include <span>
#include <vector>

#include "mmvae/rng.hpp"

namespace mmvae {

inline constexpr double kLogVarClamp = 20.0;

// Diagonal Gaussian in log-variance parameterization. log_var entries are
// clamped to [-kLogVarClamp, kLogVarClamp] on construction so exp() stays
// finite in every downstream formula.
struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> log_var;

  DiagGaussian(std::vector<double> mean, std::vector<double> log_var);
  int dim() const { return static_cast<int>(mean.size()); }
  static DiagGaussian standard(int dim);
};

// N(0, I) marker; never materialized as parameters.
struct StandardPrior {
  int dim = 0;
};

// Closed-form KL(q || p) summed over dimensions. Nonnegative up to roundoff.
double kl_gaussian(const DiagGaussian& q, const DiagGaussian& p);
double kl_gaussian(const DiagGaussian& q, const StandardPrior& p);

// KL(q || N(0, I)), specialized.
double kl_to_standard(const DiagGaussian& q);

// z = mean + exp(log_var / 2) * eps, eps ~ N(0, I).
std::vector<double> reparam_sample(const DiagGaussian& q, RngStream& rng);

double log_prob_gaussian(std::span<const double> x, const DiagGaussian& p);

// Stable Bernoulli log-likelihood from logits; x entries must be exactly 0 or 1.
double log_prob_bernoulli(std::span<const double> x, std::span<const double> logits);

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Monte Carlo KL(q || p) = mean of log q(z) - log p(z) over z ~ q, with the
// standard error of the mean. n >= 100.
McEstimate mc_kl(const DiagGaussian& q, const DiagGaussian& p, int n, RngStream& rng);

}  // namespace mmvae
