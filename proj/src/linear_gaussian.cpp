#include "mmvae/linear_gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace mmvae {
namespace {

constexpr double kLn2Pi = 1.8378770664093454836;

std::vector<double> stack_observation(const LinearGaussianModel& model, const Observation& x) {
  if (x.size() != static_cast<size_t>(model.set.size())) {
    throw std::invalid_argument("observation must cover every modality");
  }
  std::vector<double> stacked;
  for (int m = 0; m < model.set.size(); ++m) {
    if (static_cast<int>(x[m].size()) != model.set.modality(m).data_dim) {
      throw std::invalid_argument("observation width mismatch for modality " +
                                  model.set.modality(m).name);
    }
    stacked.insert(stacked.end(), x[m].begin(), x[m].end());
  }
  return stacked;
}

}  // namespace

namespace linalg {

Tensor cholesky(const Tensor& a) {
  if (a.rows != a.cols) throw std::invalid_argument("cholesky: matrix must be square");
  const int n = a.rows;
  Tensor lower(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double sum = a.at(i, j);
      for (int k = 0; k < j; ++k) sum -= lower.at(i, k) * lower.at(j, k);
      if (i == j) {
        if (sum <= 0.0) throw std::invalid_argument("cholesky: matrix is not positive definite");
        lower.at(i, i) = std::sqrt(sum);
      } else {
        lower.at(i, j) = sum / lower.at(j, j);
      }
    }
  }
  return lower;
}

std::vector<double> solve_cholesky(const Tensor& lower, std::vector<double> rhs) {
  const int n = lower.rows;
  // forward: L y = rhs
  for (int i = 0; i < n; ++i) {
    double sum = rhs[i];
    for (int k = 0; k < i; ++k) sum -= lower.at(i, k) * rhs[k];
    rhs[i] = sum / lower.at(i, i);
  }
  // backward: L^T x = y
  for (int i = n - 1; i >= 0; --i) {
    double sum = rhs[i];
    for (int k = i + 1; k < n; ++k) sum -= lower.at(k, i) * rhs[k];
    rhs[i] = sum / lower.at(i, i);
  }
  return rhs;
}

double log_det_from_cholesky(const Tensor& lower) {
  double log_det = 0.0;
  for (int i = 0; i < lower.rows; ++i) log_det += 2.0 * std::log(lower.at(i, i));
  return log_det;
}

}  // namespace linalg

int LinearGaussianModel::observation_dim() const {
  int total = 0;
  for (const Modality& m : set.modalities()) total += m.data_dim;
  return total;
}

void LinearGaussianModel::validate() const {
  const size_t n = static_cast<size_t>(set.size());
  if (weights.size() != n || biases.size() != n || noise_var.size() != n) {
    throw std::invalid_argument("linear gaussian model: per-modality arrays must match the set");
  }
  for (int m = 0; m < set.size(); ++m) {
    if (weights[m].rows != set.modality(m).data_dim || weights[m].cols != latent_dim()) {
      throw std::invalid_argument("linear gaussian model: weight shape mismatch");
    }
    if (static_cast<int>(biases[m].size()) != set.modality(m).data_dim) {
      throw std::invalid_argument("linear gaussian model: bias shape mismatch");
    }
    if (!(noise_var[m] > 0.0)) {
      throw std::invalid_argument("linear gaussian model: noise variance must be positive");
    }
  }
}

double exact_log_likelihood(const LinearGaussianModel& model, const Observation& x) {
  model.validate();
  const std::vector<double> stacked = stack_observation(model, x);
  const int dim = model.observation_dim();
  const int latent = model.latent_dim();

  // centered observation
  std::vector<double> centered = stacked;
  {
    int offset = 0;
    for (int m = 0; m < model.set.size(); ++m) {
      for (size_t j = 0; j < model.biases[m].size(); ++j) centered[offset + j] -= model.biases[m][j];
      offset += static_cast<int>(model.biases[m].size());
    }
  }

  // covariance W W^T + diag(sigma^2), assembled from per-modality blocks
  Tensor cov(dim, dim);
  {
    Tensor stacked_w(dim, latent);
    int offset = 0;
    for (int m = 0; m < model.set.size(); ++m) {
      for (int i = 0; i < model.weights[m].rows; ++i) {
        for (int j = 0; j < latent; ++j) stacked_w.at(offset + i, j) = model.weights[m].at(i, j);
      }
      offset += model.weights[m].rows;
    }
    cov = matmul(stacked_w, transpose(stacked_w));
    offset = 0;
    for (int m = 0; m < model.set.size(); ++m) {
      for (int i = 0; i < model.set.modality(m).data_dim; ++i) {
        cov.at(offset + i, offset + i) += model.noise_var[m];
      }
      offset += model.set.modality(m).data_dim;
    }
  }

  const Tensor lower = linalg::cholesky(cov);
  const std::vector<double> solved = linalg::solve_cholesky(lower, centered);
  double quad = 0.0;
  for (int i = 0; i < dim; ++i) quad += centered[i] * solved[i];
  return -0.5 * (dim * kLn2Pi + linalg::log_det_from_cholesky(lower) + quad);
}

FullGaussian true_posterior(const LinearGaussianModel& model, const Observation& x) {
  model.validate();
  const int latent = model.latent_dim();

  Tensor precision(latent, latent);
  for (int i = 0; i < latent; ++i) precision.at(i, i) = 1.0;
  std::vector<double> info(latent, 0.0);
  for (int m = 0; m < model.set.size(); ++m) {
    const Tensor& w = model.weights[m];
    const double inv_var = 1.0 / model.noise_var[m];
    for (int r = 0; r < w.rows; ++r) {
      const double centered = x[m][r] - model.biases[m][r];
      for (int i = 0; i < latent; ++i) {
        info[i] += w.at(r, i) * centered * inv_var;
        for (int j = 0; j < latent; ++j) {
          precision.at(i, j) += w.at(r, i) * w.at(r, j) * inv_var;
        }
      }
    }
  }

  const Tensor lower = linalg::cholesky(precision);
  FullGaussian post;
  post.mean = linalg::solve_cholesky(lower, info);
  post.covariance = Tensor(latent, latent);
  for (int col = 0; col < latent; ++col) {
    std::vector<double> e(latent, 0.0);
    e[col] = 1.0;
    const std::vector<double> column = linalg::solve_cholesky(lower, std::move(e));
    for (int row = 0; row < latent; ++row) post.covariance.at(row, col) = column[row];
  }
  return post;
}

DiagGaussian true_posterior_diag(const LinearGaussianModel& model, const Observation& x) {
  const FullGaussian post = true_posterior(model, x);
  const int latent = model.latent_dim();
  double max_diag = 0.0;
  for (int i = 0; i < latent; ++i) max_diag = std::max(max_diag, post.covariance.at(i, i));
  for (int i = 0; i < latent; ++i) {
    for (int j = 0; j < latent; ++j) {
      if (i != j && std::abs(post.covariance.at(i, j)) > 1e-9 * max_diag) {
        throw std::invalid_argument("true posterior is not diagonal for this model");
      }
    }
  }
  std::vector<double> log_var(latent);
  for (int i = 0; i < latent; ++i) log_var[i] = std::log(post.covariance.at(i, i));
  return DiagGaussian(post.mean, std::move(log_var));
}

namespace {

double emission_log_prob(const LinearGaussianModel& model, const Observation& x,
                         const std::vector<double>& z) {
  double total = 0.0;
  for (int m = 0; m < model.set.size(); ++m) {
    const Tensor& w = model.weights[m];
    const double var = model.noise_var[m];
    for (int r = 0; r < w.rows; ++r) {
      double mean = model.biases[m][r];
      for (int j = 0; j < w.cols; ++j) mean += w.at(r, j) * z[j];
      const double dx = x[m][r] - mean;
      total += -0.5 * (kLn2Pi + std::log(var)) - 0.5 * dx * dx / var;
    }
  }
  return total;
}

}  // namespace

ElboEstimate elbo_mc(const LinearGaussianModel& model, const DiagGaussian& q, const Observation& x,
                     int samples, RngStream& rng) {
  model.validate();
  if (samples < 2) throw std::invalid_argument("elbo_mc: need at least 2 samples");
  double mean = 0.0;
  double m2 = 0.0;
  for (int i = 0; i < samples; ++i) {
    const std::vector<double> z = reparam_sample(q, rng);
    const double s = emission_log_prob(model, x, z);
    const double delta = s - mean;
    mean += delta / (i + 1);
    m2 += delta * (s - mean);
  }
  const double std_error = std::sqrt(m2 / (samples - 1) / samples);
  return {mean - kl_to_standard(q), std_error};
}

double elbo_closed_form(const LinearGaussianModel& model, const DiagGaussian& q,
                        const Observation& x) {
  model.validate();
  double expected = 0.0;
  for (int m = 0; m < model.set.size(); ++m) {
    const Tensor& w = model.weights[m];
    const double var = model.noise_var[m];
    for (int r = 0; r < w.rows; ++r) {
      double mean = model.biases[m][r];
      double quad_var = 0.0;
      for (int j = 0; j < w.cols; ++j) {
        mean += w.at(r, j) * q.mean[j];
        quad_var += w.at(r, j) * w.at(r, j) * std::exp(q.log_var[j]);
      }
      const double dx = x[m][r] - mean;
      expected += -0.5 * (kLn2Pi + std::log(var)) - 0.5 * (dx * dx + quad_var) / var;
    }
  }
  return expected - kl_to_standard(q);
}

ElboGap elbo_gap(const LinearGaussianModel& model, const DiagGaussian& q, const Observation& x,
                 int samples, RngStream& rng) {
  const ElboEstimate est = elbo_mc(model, q, x, samples, rng);
  const double exact = exact_log_likelihood(model, x);
  return {est.value, est.std_error, exact, exact - est.value};
}

ElboGap elbo_gap(const LinearGaussianModel& model, const ModelBundle& bundle, const Observation& x,
                 int samples, RngStream& rng) {
  std::vector<Tensor> batch;
  for (int m = 0; m < model.set.size(); ++m) batch.push_back(Tensor::row(x[m]));
  const auto [mean, log_var] = encode_batch(bundle, bundle.expression.set.full_mask(), batch);
  return elbo_gap(model, row_gaussian(mean, log_var, 0), x, samples, rng);
}

}  // namespace mmvae
