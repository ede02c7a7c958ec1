#include "mmvae/checks.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mmvae/compiler.hpp"
#include "mmvae/discrete_info.hpp"
#include "mmvae/errors.hpp"
#include "mmvae/linear_gaussian.hpp"
#include "mmvae/serialize.hpp"
#include "mmvae/trainer.hpp"

namespace mmvae::checks {
namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

ModalitySet letter_set(int n, int dim = 2, Likelihood lik = Likelihood::Gaussian,
                       int latent = 2) {
  std::vector<Modality> mods;
  for (int i = 0; i < n; ++i) mods.push_back({std::string(1, char('a' + i)), dim, lik});
  return ModalitySet(std::move(mods), latent);
}

const Rational* find_coeff(const LossExpression& e, TermKind kind, SubsetMask subset,
                           int modality = -1) {
  for (const LossTerm& t : e.terms) {
    if (t.kind == kind && t.subset == subset && t.modality == modality) return &t.coeff;
  }
  return nullptr;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<CheckResult> compiler_suite() {
  std::vector<CheckResult> out;

  {
    const LossExpression e = expand_m2vae(letter_set(2));
    bool ok = e.terms.size() == 9;
    for (const LossTerm& t : e.terms) ok &= t.coeff == Rational(1, 2);
    ok &= find_coeff(e, TermKind::PriorKL, 0b01) && find_coeff(e, TermKind::PriorKL, 0b10) &&
          find_coeff(e, TermKind::PriorKL, 0b11) && find_coeff(e, TermKind::Recon, 0b01, 0) &&
          find_coeff(e, TermKind::Recon, 0b10, 1) && find_coeff(e, TermKind::Recon, 0b11, 0) &&
          find_coeff(e, TermKind::Recon, 0b11, 1) && find_coeff(e, TermKind::CrossKL, 0b11, 0) &&
          find_coeff(e, TermKind::CrossKL, 0b11, 1);
    out.push_back({"m2vae bimodal expansion: 9 terms at exactly 1/2", ok,
                   std::to_string(e.terms.size()) + " terms"});
  }
  {
    const LossExpression e = expand_m2vae(letter_set(3));
    bool ok = true;
    for (const LossTerm& t : e.terms) {
      const Rational want = subset_size(t.subset) == 2 ? Rational(1, 6) : Rational(1, 3);
      ok &= t.coeff == want;
    }
    ok &= e.terms.size() == 28;
    out.push_back({"m2vae trimodal expansion: 1/3 full, 1/6 pairwise, 1/3 singleton", ok,
                   std::to_string(e.terms.size()) + " terms"});
  }
  {
    const LossExpression e = expand_jmvae(letter_set(2));
    bool ok = e.terms.size() == 5;
    for (const LossTerm& t : e.terms) ok &= t.coeff == Rational(1);
    ok &= find_coeff(e, TermKind::CrossKL, 0b11, 0) && find_coeff(e, TermKind::CrossKL, 0b11, 1);
    ok &= encoder_inventory(e) == std::vector<SubsetMask>{0b01, 0b10, 0b11};
    out.push_back({"jmvae bimodal structure: joint terms plus two unit cross terms", ok, ""});
  }
  {
    const LossExpression e = expand_jmvae3_style(letter_set(3));
    const auto inventory = encoder_inventory(e);
    bool ok = inventory == std::vector<SubsetMask>{0b011, 0b101, 0b110, 0b111};
    out.push_back({"jmvae3 inventory: pairwise encoders only, no singletons", ok,
                   std::to_string(inventory.size()) + " encoders"});
  }
  {
    bool ok = true;
    for (int n = 1; n <= 6 && ok; ++n) {
      const ModalitySet set = letter_set(n);
      ok &= expand_m2vae(set).terms == expand_m2vae_bruteforce(set).terms;
    }
    out.push_back({"recursion oracle: closed form equals brute force for N = 1..6", ok, ""});
  }
  {
    bool ok = true;
    const auto factorial = [](int v) {
      std::int64_t f = 1;
      for (int i = 2; i <= v; ++i) f *= i;
      return f;
    };
    for (int n = 1; n <= 6; ++n) {
      for (int k = 1; k <= n; ++k) {
        ok &= coefficient(k, n) == Rational(factorial(n - k) * factorial(k - 1), factorial(n));
      }
    }
    out.push_back({"coefficient law (N-k)!(k-1)!/N! for all k <= N <= 6", ok, ""});
  }
  {
    bool ok = true;
    const ModalitySet pair({{"a", 4, Likelihood::Gaussian}, {"b", 8, Likelihood::Bernoulli}}, 2);
    for (const LossExpression& e :
         {expand_vanilla(letter_set(1)), expand_joint(pair), expand_jmvae(pair),
          expand_jmvae3_style(letter_set(3)), expand_m2vae(pair)}) {
      const std::string once = render(e, RenderFormat::Json);
      ok &= parse_expression(once) == e;
      ok &= render(parse_expression(once), RenderFormat::Json) == once;
    }
    out.push_back({"json render/parse round trip is byte-stable", ok, ""});
  }
  return out;
}

std::vector<CheckResult> kl_suite(int pairs, int samples, double se_multiple, std::uint64_t seed) {
  std::vector<CheckResult> out;

  const double point = kl_gaussian(DiagGaussian({1.0}, {0.0}), DiagGaussian({0.0}, {0.0}));
  out.push_back({"KL(N(1,1) || N(0,1)) = 1/2 exactly", std::abs(point - 0.5) <= 1e-12,
                 "|err| = " + fmt(std::abs(point - 0.5))});

  RngStream rng(seed);
  double worst_z = 0.0;
  bool ok = true;
  for (int rep = 0; rep < pairs; ++rep) {
    const int dim = 1 + static_cast<int>(rng.next_u64() % 6);
    std::vector<double> mq(dim), lq(dim), mp(dim), lp(dim);
    for (int d = 0; d < dim; ++d) {
      mq[d] = rng.uniform(-3.0, 3.0);
      lq[d] = rng.uniform(-2.0, 1.5);
      mp[d] = rng.uniform(-3.0, 3.0);
      lp[d] = rng.uniform(-2.0, 1.5);
    }
    const DiagGaussian q(mq, lq), p(mp, lp);
    const double exact = kl_gaussian(q, p);
    const McEstimate est = mc_kl(q, p, samples, rng);
    const double z = std::abs(est.estimate - exact) / est.std_error;
    worst_z = std::max(worst_z, z);
    ok &= z <= se_multiple;
  }
  out.push_back({"closed form within " + fmt(se_multiple) + " standard errors of Monte Carlo on " +
                     std::to_string(pairs) + " random pairs",
                 ok, "worst z-score " + fmt(worst_z)});
  return out;
}

std::vector<CheckResult> gradient_suite(int coords, std::uint64_t seed) {
  std::vector<CheckResult> out;
  RngStream data_rng(derive_seed(seed, 1));

  {
    const ModalitySet set({{"a", 3, Likelihood::Gaussian}, {"b", 2, Likelihood::Bernoulli}}, 2);
    ModelBundle bundle = make_bundle(expand_m2vae(set), {{64, 64}, Activation::Tanh});
    init_params(bundle, derive_seed(seed, 2));
    std::vector<Tensor> batch;
    for (const Modality& m : set.modalities()) {
      Tensor t(8, m.data_dim);
      for (double& v : t.data) {
        v = m.likelihood == Likelihood::Bernoulli ? (data_rng.uniform() < 0.5 ? 0.0 : 1.0)
                                                  : data_rng.normal();
      }
      batch.push_back(std::move(t));
    }
    const GradCheckReport report = grad_check(bundle, batch, coords, 1e-5, seed, 1e-4);
    out.push_back({"tanh m2vae bundle: max relative error < 1e-4 over " +
                       std::to_string(coords) + " coordinates",
                   report.max_rel_err < 1e-4 && report.failures.empty(),
                   "max rel err " + fmt(report.max_rel_err)});
  }
  {
    const ModalitySet set({{"a", 3, Likelihood::Gaussian}, {"b", 2, Likelihood::Gaussian}}, 2);
    ModelBundle bundle = make_bundle(expand_m2vae(set), {{}, Activation::Identity});
    init_params(bundle, derive_seed(seed, 3));
    std::vector<Tensor> batch;
    for (const Modality& m : set.modalities()) {
      Tensor t(8, m.data_dim);
      for (double& v : t.data) v = data_rng.normal();
      batch.push_back(std::move(t));
    }
    const GradCheckReport report = grad_check(bundle, batch, coords, 1e-5, seed + 1, 1e-6);
    out.push_back({"linear-gaussian smooth case: max relative error < 1e-6",
                   report.max_rel_err < 1e-6,
                   "max rel err " + fmt(report.max_rel_err)});
  }
  return out;
}

std::vector<CheckResult> bound_suite(int encoders, int samples, std::uint64_t seed) {
  std::vector<CheckResult> out;
  RngStream rng(seed);

  LinearGaussianModel model;
  model.set = ModalitySet({{"a", 2, Likelihood::Gaussian}, {"b", 3, Likelihood::Gaussian}}, 1);
  for (int dim : {2, 3}) {
    Tensor w(dim, 1);
    for (double& v : w.data) v = rng.normal();
    model.weights.push_back(std::move(w));
    std::vector<double> bias(dim);
    for (double& v : bias) v = 0.3 * rng.normal();
    model.biases.push_back(std::move(bias));
    model.noise_var.push_back(0.4 + rng.uniform());
  }
  Observation x;
  for (int dim : {2, 3}) {
    std::vector<double> row(dim);
    for (double& v : row) v = rng.normal();
    x.push_back(std::move(row));
  }
  const double exact = exact_log_likelihood(model, x);

  bool ok = true;
  double worst_excess = -1e300;
  for (int rep = 0; rep < encoders; ++rep) {
    const DiagGaussian q({rng.uniform(-2.0, 2.0)}, {rng.uniform(-2.0, 1.0)});
    RngStream mc(derive_seed(seed, 100 + static_cast<std::uint64_t>(rep)));
    const ElboEstimate est = elbo_mc(model, q, x, samples, mc);
    const double excess = est.value - exact - 3.0 * est.std_error;
    worst_excess = std::max(worst_excess, excess);
    ok &= excess <= 0.0;
    ok &= elbo_closed_form(model, q, x) <= exact + 1e-9;
  }
  out.push_back({"bound witness: " + std::to_string(encoders) +
                     " random encoders never beat the exact log-likelihood",
                 ok, "worst excess above 3 SE " + fmt(worst_excess)});

  const DiagGaussian posterior = true_posterior_diag(model, x);
  RngStream mc(derive_seed(seed, 7));
  const ElboGap gap = elbo_gap(model, posterior, x, samples, mc);
  const bool tight = std::abs(gap.gap) <= 3.0 * gap.std_error;
  const double closed_gap = exact - elbo_closed_form(model, posterior, x);
  out.push_back({"true-posterior encoder closes the gap (|gap| within 3 SE of 0)",
                 tight && std::abs(closed_gap) <= 1e-9,
                 "mc gap " + fmt(gap.gap) + " (se " + fmt(gap.std_error) + "), closed-form gap " +
                     fmt(closed_gap)});
  return out;
}

std::vector<CheckResult> vi_suite(int joints, std::uint64_t seed) {
  std::vector<CheckResult> out;
  RngStream rng(seed);

  bool ok = true;
  double worst = 0.0;
  for (int rep = 0; rep < joints; ++rep) {
    const DiscreteJoint joint = DiscreteJoint::random({3, 4}, rng);
    const double entropy_form =
        entropy(joint, {0}) + entropy(joint, {1}) - 2.0 * mutual_information(joint, 0, 1);
    const double conditional_form =
        conditional_entropy(joint, {0}, {1}) + conditional_entropy(joint, {1}, {0});
    const double diff = std::abs(entropy_form - conditional_form);
    worst = std::max(worst, diff);
    ok &= diff <= 1e-12;
    ok &= variation_of_information(joint) >= -1e-12;
  }
  out.push_back({"VI(A,B): entropy form equals conditional form on " + std::to_string(joints) +
                     " random joints",
                 ok, "worst |diff| " + fmt(worst)});

  const DiscreteJoint bits3({2, 2, 2}, std::vector<double>(8, 0.125));
  const double vi3 = variation_of_information(bits3);
  const double want = 3.0 * std::log(2.0);
  out.push_back({"VI of three independent uniform bits = 3 ln 2", std::abs(vi3 - want) <= 1e-12,
                 "|err| = " + fmt(std::abs(vi3 - want))});

  bool identities = true;
  for (int rep = 0; rep < joints; ++rep) {
    const DiscreteJoint joint = DiscreteJoint::random({3, 3}, rng);
    identities &= std::abs(entropy(joint, {0, 1}) - entropy(joint, {1}) -
                           conditional_entropy(joint, {0}, {1})) <= 1e-12;
    identities &= mutual_information(joint, 0, 1) >= -1e-12;
    identities &= conditional_entropy(joint, {0}, {1}) <= entropy(joint, {0}) + 1e-12;
  }
  out.push_back({"chain rule, nonnegative MI and conditioning-reduces-entropy on random joints",
                 identities, ""});
  return out;
}

std::vector<CheckResult> training_sanity_check(int samples, int steps, std::uint64_t seed) {
  std::vector<CheckResult> out;

  SyntheticSpec spec;
  spec.generator = "shared_latent_linear";
  spec.set = ModalitySet({{"a", 6, Likelihood::Gaussian}, {"b", 4, Likelihood::Gaussian}}, 2);
  spec.samples = samples;
  spec.noise = {0.1};
  spec.seed = derive_seed(seed, 1);
  const Dataset dataset = generate(spec);

  TrainConfig cfg;
  cfg.dataset_path = "(in-memory)";
  cfg.variant = Variant::M2VAE;
  cfg.batch_size = 128;
  const int steps_per_epoch = (samples + cfg.batch_size - 1) / cfg.batch_size;
  cfg.epochs = steps / steps_per_epoch;
  cfg.seed = derive_seed(seed, 2);

  // untrained baseline on held-out data from the same ground truth
  Dataset heldout;
  heldout.set = dataset.set;
  heldout.generator = dataset.generator;
  heldout.seed = derive_seed(seed, 3);
  heldout.data = sample_linear(*dataset.linear_truth, 500, heldout.seed);

  ModelBundle untrained =
      make_bundle(compile_variant(cfg.variant, dataset.set), cfg.arch);
  init_params(untrained, cfg.seed);
  const double base_err = evaluate_cross_modal(untrained, heldout, 0b01, 1).value;

  const TrainResult result = train(cfg, dataset);
  const auto& h = result.objective_history;

  double early = 0.0, late = 0.0;
  for (int i = 0; i < 50; ++i) {
    early += h[i];
    late += h[h.size() - 50 + i];
  }
  early /= 50.0;
  late /= 50.0;
  out.push_back({"50-step smoothed bound improves from start to end (" + std::to_string(h.size()) +
                     " steps)",
                 late > early, fmt(early) + " -> " + fmt(late)});

  const double trained_err = evaluate_cross_modal(result.bundle, heldout, 0b01, 1).value;
  const double reduction = base_err / trained_err;
  out.push_back({"cross-modal a->b error beats the untrained baseline by >= 2x on held-out data",
                 reduction >= 2.0,
                 "untrained " + fmt(base_err) + ", trained " + fmt(trained_err) + " (" +
                     fmt(reduction) + "x)"});
  return out;
}

std::vector<CheckResult> determinism_check(std::uint64_t seed) {
  std::vector<CheckResult> out;

  SyntheticSpec spec;
  spec.generator = "shared_latent_linear";
  spec.set = ModalitySet({{"a", 3, Likelihood::Gaussian}, {"b", 2, Likelihood::Gaussian}}, 2);
  spec.samples = 128;
  spec.noise = {0.2};
  spec.seed = derive_seed(seed, 4);
  const Dataset dataset = generate(spec);

  TrainConfig cfg;
  cfg.dataset_path = "(in-memory)";
  cfg.arch = {{16}, Activation::Tanh};
  cfg.batch_size = 32;
  cfg.epochs = 4;
  cfg.seed = derive_seed(seed, 5);
  cfg.metrics_path = "determinism_a.csv";
  cfg.checkpoint_path = "determinism_a.ckpt";
  train(cfg, dataset);

  TrainConfig cfg2 = cfg;
  cfg2.metrics_path = "determinism_b.csv";
  cfg2.checkpoint_path = "determinism_b.ckpt";
  train(cfg2, dataset);

  const bool metrics_equal = file_bytes("determinism_a.csv") == file_bytes("determinism_b.csv");
  const bool ckpt_equal = file_bytes("determinism_a.ckpt") == file_bytes("determinism_b.ckpt");
  for (const char* f : {"determinism_a.csv", "determinism_b.csv", "determinism_a.ckpt",
                        "determinism_b.ckpt"}) {
    std::remove(f);
  }
  out.push_back({"repeated training is byte-identical (metrics)", metrics_equal, ""});
  out.push_back({"repeated training is byte-identical (checkpoints)", ckpt_equal, ""});
  return out;
}

std::vector<CheckResult> run_suite(const std::string& name) {
  constexpr std::uint64_t kDefaultSeed = 20240611;
  std::vector<CheckResult> out;
  const auto append = [&out](std::vector<CheckResult> more) {
    out.insert(out.end(), more.begin(), more.end());
  };
  const bool all = name == "all";
  if (all || name == "compiler") append(compiler_suite());
  if (all || name == "kl") append(kl_suite(200, 100000, 4.0, kDefaultSeed));
  if (all || name == "grad") append(gradient_suite(1000, kDefaultSeed));
  if (all || name == "bound") append(bound_suite(100, 20000, kDefaultSeed));
  if (all || name == "vi") append(vi_suite(100, kDefaultSeed));
  if (out.empty()) throw std::invalid_argument("unknown check suite: " + name);
  return out;
}

}  // namespace mmvae::checks
