#include "mmvae/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "mmvae/compiler.hpp"
#include "mmvae/errors.hpp"
#include "mmvae/rng.hpp"

namespace mmvae {
namespace {

constexpr std::uint64_t kShuffleTag = 0x73687566;  // "shuf"
constexpr std::uint64_t kStepTag = 0x73746570;     // "step"

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<int> shuffled_indices(int n, RngStream rng) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (int i = n - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
    std::swap(idx[i], idx[j]);
  }
  return idx;
}

std::vector<Tensor> take_rows(const std::vector<Tensor>& data, const std::vector<int>& indices,
                              int begin, int count) {
  std::vector<Tensor> out;
  out.reserve(data.size());
  for (const Tensor& t : data) {
    Tensor slice(count, t.cols);
    for (int i = 0; i < count; ++i) {
      for (int j = 0; j < t.cols; ++j) slice.at(i, j) = t.at(indices[begin + i], j);
    }
    out.push_back(std::move(slice));
  }
  return out;
}

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t t = 0;
};

void adam_step(std::vector<Tensor*>& params, const std::vector<Tensor>& ascent_grads,
               AdamState& state, const TrainConfig& cfg) {
  ++state.t;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor& theta = *params[p];
    for (int i = 0; i < theta.numel(); ++i) {
      const double g = -ascent_grads[p].data[i];  // descent on the negated bound
      double& m = state.m[p].data[i];
      double& v = state.v[p].data[i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m / bias1;
      const double v_hat = v / bias2;
      theta.data[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace

LossExpression compile_variant(Variant variant, const ModalitySet& set) {
  switch (variant) {
    case Variant::Vanilla: return expand_vanilla(set);
    case Variant::Joint: return expand_joint(set);
    case Variant::JMVAE: return expand_jmvae(set);
    case Variant::JMVAE3Style: return expand_jmvae3_style(set);
    case Variant::M2VAE: return expand_m2vae(set);
  }
  throw std::logic_error("unreachable variant");
}

TrainConfig TrainConfig::from_json(const nlohmann::json& doc) {
  static const std::set<std::string> known = {
      "dataset",    "variant",   "latent_dim", "hidden",  "activation", "learning_rate",
      "beta1",      "beta2",     "epsilon",    "batch_size", "epochs",  "mc_samples",
      "seed",       "checkpoint", "metrics",   "eval_every", "stop_reference_gradient"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw std::invalid_argument("unknown config key: " + key);
  }
  TrainConfig cfg;
  cfg.dataset_path = doc.at("dataset").get<std::string>();
  if (doc.contains("variant")) cfg.variant = variant_from_string(doc["variant"].get<std::string>());
  if (doc.contains("latent_dim")) cfg.latent_dim = doc["latent_dim"].get<int>();
  if (doc.contains("hidden")) cfg.arch.hidden = doc["hidden"].get<std::vector<int>>();
  if (doc.contains("activation")) {
    cfg.arch.activation = activation_from_string(doc["activation"].get<std::string>());
  }
  if (doc.contains("learning_rate")) cfg.learning_rate = doc["learning_rate"].get<double>();
  if (doc.contains("beta1")) cfg.beta1 = doc["beta1"].get<double>();
  if (doc.contains("beta2")) cfg.beta2 = doc["beta2"].get<double>();
  if (doc.contains("epsilon")) cfg.epsilon = doc["epsilon"].get<double>();
  if (doc.contains("batch_size")) cfg.batch_size = doc["batch_size"].get<int>();
  if (doc.contains("epochs")) cfg.epochs = doc["epochs"].get<int>();
  if (doc.contains("mc_samples")) cfg.mc_samples = doc["mc_samples"].get<int>();
  if (doc.contains("stop_reference_gradient")) {
    cfg.stop_reference_gradient = doc["stop_reference_gradient"].get<bool>();
  }
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("checkpoint")) cfg.checkpoint_path = doc["checkpoint"].get<std::string>();
  if (doc.contains("metrics")) cfg.metrics_path = doc["metrics"].get<std::string>();
  if (doc.contains("eval_every")) cfg.eval_every = doc["eval_every"].get<int>();
  cfg.validate();
  return cfg;
}

nlohmann::ordered_json TrainConfig::to_json() const {
  nlohmann::ordered_json doc;
  doc["dataset"] = dataset_path;
  doc["variant"] = to_string(variant);
  doc["latent_dim"] = latent_dim;
  doc["hidden"] = arch.hidden;
  doc["activation"] = to_string(arch.activation);
  doc["learning_rate"] = learning_rate;
  doc["beta1"] = beta1;
  doc["beta2"] = beta2;
  doc["epsilon"] = epsilon;
  doc["batch_size"] = batch_size;
  doc["epochs"] = epochs;
  doc["mc_samples"] = mc_samples;
  doc["stop_reference_gradient"] = stop_reference_gradient;
  doc["seed"] = seed;
  doc["checkpoint"] = checkpoint_path;
  doc["metrics"] = metrics_path;
  doc["eval_every"] = eval_every;
  return doc;
}

void TrainConfig::validate() const {
  if (learning_rate < 0.0) throw std::invalid_argument("learning_rate must be >= 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw std::invalid_argument("beta1 and beta2 must lie in [0, 1)");
  }
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (mc_samples < 1) throw std::invalid_argument("mc_samples must be >= 1");
  if (latent_dim < 0) throw std::invalid_argument("latent_dim must be >= 0");
  if (eval_every < 0) throw std::invalid_argument("eval_every must be >= 0");
}

TrainResult train(const TrainConfig& config, const Dataset& dataset) {
  config.validate();
  const ModalitySet set =
      config.latent_dim == 0
          ? dataset.set
          : ModalitySet(dataset.set.modalities(), config.latent_dim);
  const LossExpression expr = compile_variant(config.variant, set);

  TrainResult result;
  result.bundle = make_bundle(expr, config.arch);
  init_params(result.bundle, config.seed);
  ModelBundle& bundle = result.bundle;

  std::vector<Tensor*> params = bundle.parameters();
  AdamState adam;
  for (Tensor* p : params) {
    adam.m.emplace_back(p->rows, p->cols);
    adam.v.emplace_back(p->rows, p->cols);
  }

  // metrics columns are fixed at run start: step, objective, one column per
  // compiled term, then optional cross-modal error columns
  std::ofstream metrics;
  std::vector<std::pair<SubsetMask, int>> eval_pairs;
  if (!config.metrics_path.empty()) {
    metrics.open(config.metrics_path, std::ios::trunc);
    if (!metrics) throw std::runtime_error("cannot open metrics file: " + config.metrics_path);
    metrics << "step,objective";
    for (const LossTerm& term : expr.terms) metrics << ',' << term_name(expr, term);
    if (config.eval_every > 0) {
      for (SubsetMask src : encoder_inventory(expr)) {
        for (int tgt : decoder_inventory(expr)) {
          eval_pairs.emplace_back(src, tgt);
          metrics << ",xm[" << set.subset_label(src) << "->" << set.modality(tgt).name << ']';
        }
      }
    }
    metrics << '\n';
  }

  const int n = dataset.rows();
  const int batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::uint64_t shuffle_base = derive_seed(config.seed, kShuffleTag);
  const std::uint64_t step_base = derive_seed(config.seed, kStepTag);

  int step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const std::vector<int> order = shuffled_indices(n, RngStream(derive_seed(shuffle_base, epoch)));
    for (int b = 0; b < batches_per_epoch; ++b) {
      const int begin = b * config.batch_size;
      const int count = std::min(config.batch_size, n - begin);
      const std::vector<Tensor> batch = take_rows(dataset.data, order, begin, count);

      ObjectiveEval ev =
          forward_objective(bundle, batch, RngStream(derive_seed(step_base, step)),
                            config.mc_samples, config.stop_reference_gradient);
      const std::vector<double> term_values = ev.term_values();
      for (size_t i = 0; i < term_values.size(); ++i) {
        if (!std::isfinite(term_values[i])) {
          throw std::runtime_error("non-finite value in term " +
                                   term_name(expr, ev.terms[i].term) + " at step " +
                                   std::to_string(step));
        }
      }
      const double objective = ev.objective_value();
      result.objective_history.push_back(objective);

      if (metrics.is_open()) {
        metrics << step << ',' << format_double(objective);
        for (double v : term_values) metrics << ',' << format_double(v);
        if (config.eval_every > 0) {
          const bool at_eval = step % config.eval_every == 0;
          for (const auto& [src, tgt] : eval_pairs) {
            metrics << ',';
            if (at_eval) metrics << format_double(evaluate_cross_modal(bundle, dataset, src, tgt).value);
          }
        }
        metrics << '\n';
      }

      backward(ev);
      std::vector<Tensor> grads = parameter_gradients(ev);
      adam_step(params, grads, adam, config);
      ++step;
    }
  }
  result.steps = step;

  if (!config.checkpoint_path.empty()) {
    save_checkpoint(config.checkpoint_path, bundle, config.seed);
  }
  return result;
}

CrossModalError evaluate_cross_modal(const ModelBundle& bundle, const Dataset& dataset,
                                     SubsetMask source, int target) {
  const ModalitySet& set = bundle.expression.set;
  if (!set.valid_subset(source)) throw std::invalid_argument("invalid source subset");
  if (target < 0 || target >= set.size()) throw std::invalid_argument("invalid target modality");

  const auto [mean, log_var] = encode_batch(bundle, source, dataset.data);
  const auto [out, out_log_var] = decode_batch(bundle, target, mean);

  const Tensor& truth = dataset.data[target];
  CrossModalError err;
  err.count = truth.rows;
  double total = 0.0;
  if (set.modality(target).likelihood == Likelihood::Gaussian) {
    err.metric = "mse";
    for (int i = 0; i < truth.rows; ++i) {
      for (int j = 0; j < truth.cols; ++j) {
        const double d = out.at(i, j) - truth.at(i, j);
        total += d * d;
      }
    }
  } else {
    err.metric = "bernoulli_ce";
    for (int i = 0; i < truth.rows; ++i) {
      for (int j = 0; j < truth.cols; ++j) {
        const double logit = out.at(i, j);
        const double x = truth.at(i, j);
        total += std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit))) - x * logit;
      }
    }
  }
  err.value = total / (static_cast<double>(truth.rows) * truth.cols);
  return err;
}

}  // namespace mmvae
