#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmvae/discrete_info.hpp"
#include "mmvae/linear_gaussian.hpp"

using namespace mmvae;

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;

LinearGaussianModel scalar_model(double w, double sigma2, double b = 0.0) {
  LinearGaussianModel model;
  model.set = ModalitySet({{"a", 1, Likelihood::Gaussian}}, 1);
  model.weights = {Tensor::from(1, 1, {w})};
  model.biases = {{b}};
  model.noise_var = {sigma2};
  return model;
}

LinearGaussianModel two_modality_model(RngStream& rng, int da = 2, int db = 3, int latent = 1) {
  LinearGaussianModel model;
  model.set = ModalitySet({{"a", da, Likelihood::Gaussian}, {"b", db, Likelihood::Gaussian}},
                          latent);
  for (int dim : {da, db}) {
    Tensor w(dim, latent);
    for (double& v : w.data) v = rng.normal();
    model.weights.push_back(std::move(w));
    std::vector<double> bias(dim);
    for (double& v : bias) v = 0.3 * rng.normal();
    model.biases.push_back(std::move(bias));
    model.noise_var.push_back(0.5 + rng.uniform());
  }
  return model;
}

Observation random_observation(const LinearGaussianModel& model, RngStream& rng) {
  Observation x;
  for (const Modality& m : model.set.modalities()) {
    std::vector<double> row(m.data_dim);
    for (double& v : row) v = rng.normal();
    x.push_back(std::move(row));
  }
  return x;
}

}  // namespace

TEST_CASE("scalar exact log likelihood closed form") {
  // w=1, sigma^2=1, b=0, x=0: marginal is N(0, 2)
  const auto model = scalar_model(1.0, 1.0);
  CHECK(exact_log_likelihood(model, {{0.0}}) ==
        doctest::Approx(-0.5 * std::log(4.0 * 3.14159265358979323846)).epsilon(1e-12));
}

TEST_CASE("zero weights decouple the modalities") {
  LinearGaussianModel model;
  model.set = ModalitySet({{"a", 2, Likelihood::Gaussian}, {"b", 1, Likelihood::Gaussian}}, 2);
  model.weights = {Tensor(2, 2), Tensor(1, 2)};
  model.biases = {{0.5, -0.5}, {1.0}};
  model.noise_var = {2.0, 0.7};
  const Observation x = {{1.0, 0.0}, {0.2}};

  double expected = 0.0;
  const std::vector<double> flat = {1.0, 0.0, 0.2};
  const std::vector<double> mean = {0.5, -0.5, 1.0};
  const std::vector<double> var = {2.0, 2.0, 0.7};
  for (int i = 0; i < 3; ++i) {
    const double dx = flat[i] - mean[i];
    expected += -0.5 * (kLn2Pi + std::log(var[i])) - 0.5 * dx * dx / var[i];
  }
  CHECK(exact_log_likelihood(model, x) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("exact likelihood matches a prior-sampling Monte Carlo estimate") {
  RngStream rng(101);
  const auto model = two_modality_model(rng);
  const Observation x = random_observation(model, rng);

  const int n = 100000;
  // log of the prior-sample average of p(x|z), with a delta-method error bar
  double mean_p = 0.0, m2 = 0.0;
  RngStream zrng(55);
  const DiagGaussian prior = DiagGaussian::standard(model.latent_dim());
  for (int i = 0; i < n; ++i) {
    const std::vector<double> z = reparam_sample(prior, zrng);
    double log_p = 0.0;
    for (int m = 0; m < model.set.size(); ++m) {
      const Tensor& w = model.weights[m];
      for (int r = 0; r < w.rows; ++r) {
        double mu = model.biases[m][r];
        for (int j = 0; j < w.cols; ++j) mu += w.at(r, j) * z[j];
        const double dx = x[m][r] - mu;
        log_p += -0.5 * (kLn2Pi + std::log(model.noise_var[m])) -
                 0.5 * dx * dx / model.noise_var[m];
      }
    }
    const double p = std::exp(log_p);
    const double delta = p - mean_p;
    mean_p += delta / (i + 1);
    m2 += delta * (p - mean_p);
  }
  const double se_p = std::sqrt(m2 / (n - 1) / n);
  const double log_estimate = std::log(mean_p);
  const double se_log = se_p / mean_p;
  CHECK(std::abs(exact_log_likelihood(model, x) - log_estimate) < 3.0 * se_log);
}

TEST_CASE("non-positive noise variance is rejected") {
  auto model = scalar_model(1.0, 0.0);
  CHECK_THROWS_AS(exact_log_likelihood(model, {{0.0}}), std::invalid_argument);
}

TEST_CASE("true posterior closes the bound gap") {
  RngStream rng(103);
  const auto model = two_modality_model(rng);
  for (int rep = 0; rep < 5; ++rep) {
    const Observation x = random_observation(model, rng);
    const DiagGaussian post = true_posterior_diag(model, x);
    RngStream mc(200 + rep);
    const ElboGap gap = elbo_gap(model, post, x, 20000, mc);
    CHECK(std::abs(gap.gap) < 3.0 * gap.std_error);
    // closed-form route: the gap vanishes to numerical precision
    CHECK(elbo_closed_form(model, post, x) == doctest::Approx(gap.exact).epsilon(1e-9));
  }
}

TEST_CASE("random encoders never beat the exact likelihood") {
  RngStream rng(104);
  const auto model = two_modality_model(rng);
  const Observation x = random_observation(model, rng);
  const double exact = exact_log_likelihood(model, x);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> mean(model.latent_dim()), lv(model.latent_dim());
    for (int j = 0; j < model.latent_dim(); ++j) {
      mean[j] = rng.uniform(-2.0, 2.0);
      lv[j] = rng.uniform(-2.0, 1.0);
    }
    const DiagGaussian q(mean, lv);
    RngStream mc(300 + rep);
    const ElboEstimate est = elbo_mc(model, q, x, 5000, mc);
    CHECK(est.value <= exact + 3.0 * est.std_error);
    CHECK(elbo_closed_form(model, q, x) <= exact + 1e-9);
    CHECK(std::abs(est.value - elbo_closed_form(model, q, x)) < 4.0 * est.std_error);
  }
}

TEST_CASE("bound gap shrinks monotonically under encoder-only ascent") {
  RngStream rng(105);
  const auto model = two_modality_model(rng);
  const Observation x = random_observation(model, rng);
  const double exact = exact_log_likelihood(model, x);

  std::vector<double> mean = {1.5};
  std::vector<double> lv = {1.0};
  const double lr = 0.05;
  const double h = 1e-6;
  std::vector<double> gaps;
  for (int step = 0; step < 300; ++step) {
    gaps.push_back(exact - elbo_closed_form(model, DiagGaussian(mean, lv), x));
    // finite-difference ascent on the closed-form bound
    for (int j = 0; j < 1; ++j) {
      auto at = [&](double m, double l) { return elbo_closed_form(model, DiagGaussian({m}, {l}), x); };
      const double gm = (at(mean[j] + h, lv[j]) - at(mean[j] - h, lv[j])) / (2 * h);
      const double gl = (at(mean[j], lv[j] + h) - at(mean[j], lv[j] - h)) / (2 * h);
      mean[j] += lr * gm;
      lv[j] += lr * gl;
    }
  }
  // 50-step window means strictly decrease
  for (int w = 1; w < 6; ++w) {
    double prev = 0.0, cur = 0.0;
    for (int i = 0; i < 50; ++i) {
      prev += gaps[(w - 1) * 50 + i];
      cur += gaps[w * 50 + i];
    }
    CHECK(cur < prev);
  }
  CHECK(gaps.back() >= -1e-9);
  CHECK(gaps.back() < 0.1 * gaps.front());
}

TEST_CASE("cholesky helpers recover known factors") {
  Tensor a = Tensor::from(2, 2, {4.0, 2.0, 2.0, 3.0});
  const Tensor lower = linalg::cholesky(a);
  CHECK(lower.at(0, 0) == doctest::Approx(2.0));
  CHECK(lower.at(1, 0) == doctest::Approx(1.0));
  CHECK(lower.at(1, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(linalg::log_det_from_cholesky(lower) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
  const auto solved = linalg::solve_cholesky(lower, {1.0, 1.0});
  CHECK(4.0 * solved[0] + 2.0 * solved[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(2.0 * solved[0] + 3.0 * solved[1] == doctest::Approx(1.0).epsilon(1e-12));

  Tensor not_pd = Tensor::from(2, 2, {1.0, 2.0, 2.0, 1.0});
  CHECK_THROWS_AS(linalg::cholesky(not_pd), std::invalid_argument);
}

TEST_CASE("entropy of simple tables") {
  // uniform binary marginal: ln 2; deterministic variable: 0
  const DiscreteJoint joint({2, 2}, {0.5, 0.0, 0.0, 0.5});
  CHECK(entropy(joint, {0}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(entropy(joint, {0, 1}) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const DiscreteJoint fixed({2, 3}, {0.0, 1.0, 0.0, 0.0, 0.0, 0.0});
  CHECK(entropy(fixed, {0}) == 0.0);
  CHECK(entropy(fixed, {1}) == 0.0);
}

TEST_CASE("entropy matches a direct-summation oracle on random tables") {
  RngStream rng(107);
  for (int rep = 0; rep < 20; ++rep) {
    const DiscreteJoint joint = DiscreteJoint::random({4, 4}, rng);
    double direct = 0.0;
    for (double p : joint.table()) {
      if (p > 0.0) direct -= p * std::log(p);
    }
    CHECK(entropy(joint, {0, 1}) == doctest::Approx(direct).epsilon(1e-12));
  }
}

TEST_CASE("mutual information endpoints") {
  // independent: I = 0
  const DiscreteJoint indep({2, 2}, {0.25, 0.25, 0.25, 0.25});
  CHECK(mutual_information(indep, 0, 1) == doctest::Approx(0.0).epsilon(1e-12));
  // identical uniform bits: I = ln 2, H(A|B) = 0
  const DiscreteJoint equal({2, 2}, {0.5, 0.0, 0.0, 0.5});
  CHECK(mutual_information(equal, 0, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(conditional_entropy(equal, {0}, {1}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("information identities on random joints") {
  RngStream rng(109);
  for (int rep = 0; rep < 100; ++rep) {
    const DiscreteJoint joint = DiscreteJoint::random({3, 4}, rng);
    // chain rule
    CHECK(entropy(joint, {0, 1}) ==
          doctest::Approx(entropy(joint, {1}) + conditional_entropy(joint, {0}, {1}))
              .epsilon(1e-12));
    CHECK(mutual_information(joint, 0, 1) >= -1e-12);
    CHECK(conditional_entropy(joint, {0}, {1}) <= entropy(joint, {0}) + 1e-12);
  }
  for (int rep = 0; rep < 20; ++rep) {
    const DiscreteJoint joint = DiscreteJoint::random({2, 3, 2}, rng);
    CHECK(conditional_mutual_information(joint, 0, 1, 2) >= -1e-12);
  }
}

TEST_CASE("variation of information: both published forms agree") {
  RngStream rng(111);
  for (int rep = 0; rep < 100; ++rep) {
    const DiscreteJoint joint = DiscreteJoint::random({3, 3}, rng);
    const double entropy_form =
        entropy(joint, {0}) + entropy(joint, {1}) - 2.0 * mutual_information(joint, 0, 1);
    const double conditional_form =
        conditional_entropy(joint, {0}, {1}) + conditional_entropy(joint, {1}, {0});
    CHECK(entropy_form == doctest::Approx(conditional_form).epsilon(1e-12));
    CHECK(variation_of_information(joint) == doctest::Approx(entropy_form).epsilon(1e-12));
  }
}

TEST_CASE("variation of information endpoints") {
  const DiscreteJoint equal({2, 2}, {0.5, 0.0, 0.0, 0.5});
  CHECK(variation_of_information(equal) == doctest::Approx(0.0).epsilon(1e-12));

  const DiscreteJoint indep({2, 2}, {0.25, 0.25, 0.25, 0.25});
  CHECK(variation_of_information(indep) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

  const DiscreteJoint bits3({2, 2, 2}, std::vector<double>(8, 0.125));
  CHECK(variation_of_information(bits3) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("joint table validation") {
  CHECK_THROWS_AS(DiscreteJoint({2, 2}, {0.5, 0.5, 0.1, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteJoint({2, 2}, {0.5, 0.5, -0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(DiscreteJoint({2}, {0.5, 0.5}), std::invalid_argument);
}
