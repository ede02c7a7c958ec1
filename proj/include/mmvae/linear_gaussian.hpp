#pragma once

#include <vector>

#include "mmvae/gaussian.hpp"
#include "mmvae/modality.hpp"
#include "mmvae/nets.hpp"
#include "mmvae/tensor.hpp"

namespace mmvae {

// Ground-truth generative model: z ~ N(0, I_latent) and each modality is
// observed as x_m = W_m z + b_m + sigma_m * noise. The stacked observation is
// exactly Gaussian with mean (b_a || b_b || ...) and covariance
// W W^T + diag(sigma^2), which makes the marginal likelihood computable in
// closed form.
struct LinearGaussianModel {
  ModalitySet set;                      // all modalities Gaussian
  std::vector<Tensor> weights;          // per modality, [data_dim x latent]
  std::vector<std::vector<double>> biases;
  std::vector<double> noise_var;        // per modality, > 0

  int latent_dim() const { return set.latent_dim(); }
  int observation_dim() const;
  void validate() const;
};

using Observation = std::vector<std::vector<double>>;  // per modality, canonical order

// Log density of the stacked observation under the exact marginal.
double exact_log_likelihood(const LinearGaussianModel& model, const Observation& x);

// Exact posterior p(z|x): precision I + W^T diag(1/sigma^2) W.
struct FullGaussian {
  std::vector<double> mean;
  Tensor covariance;
};
FullGaussian true_posterior(const LinearGaussianModel& model, const Observation& x);

// Diagonal reduction of the true posterior; requires the off-diagonal
// covariance entries to be negligible (always holds for latent_dim == 1).
DiagGaussian true_posterior_diag(const LinearGaussianModel& model, const Observation& x);

struct ElboEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

// Monte Carlo bound estimate under encoder q with the model's exact
// emission densities: E_q[sum_m log p(x_m|z)] - KL(q || N(0, I)).
ElboEstimate elbo_mc(const LinearGaussianModel& model, const DiagGaussian& q, const Observation& x,
                     int samples, RngStream& rng);

// The same bound in closed form (the expected quadratic under q is exact).
double elbo_closed_form(const LinearGaussianModel& model, const DiagGaussian& q,
                        const Observation& x);

struct ElboGap {
  double elbo = 0.0;
  double std_error = 0.0;
  double exact = 0.0;
  double gap = 0.0;  // exact - elbo = KL(q || p(z|x)) up to MC noise
};

ElboGap elbo_gap(const LinearGaussianModel& model, const DiagGaussian& q, const Observation& x,
                 int samples, RngStream& rng);

// Convenience overload reading q from the bundle's full-set encoder.
ElboGap elbo_gap(const LinearGaussianModel& model, const ModelBundle& bundle, const Observation& x,
                 int samples, RngStream& rng);

// Dense symmetric positive-definite helpers (dimensions stay small).
namespace linalg {
Tensor cholesky(const Tensor& a);                       // lower factor; throws if not PD
std::vector<double> solve_cholesky(const Tensor& lower, std::vector<double> rhs);
double log_det_from_cholesky(const Tensor& lower);
}  // namespace linalg

}  // namespace mmvae
