#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "mmvae/nets.hpp"
#include "mmvae/synthetic.hpp"

namespace mmvae {

struct TrainConfig {
  std::string dataset_path;
  Variant variant = Variant::M2VAE;
  int latent_dim = 0;  // 0 keeps the dataset's latent width
  NetArch arch;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 128;
  int epochs = 10;
  int mc_samples = 1;
  bool stop_reference_gradient = false;  // freeze the reduced side of cross KLs
  std::uint64_t seed = 1;
  std::string checkpoint_path;  // empty: no checkpoint written
  std::string metrics_path;     // empty: no metrics written
  int eval_every = 0;           // 0: no in-loop cross-modal columns

  // Rejects unknown keys; every field has a default except "dataset".
  static TrainConfig from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;
  void validate() const;
};

// Expression for the configured variant over the dataset's modality set.
LossExpression compile_variant(Variant variant, const ModalitySet& set);

struct TrainResult {
  ModelBundle bundle;
  int steps = 0;
  std::vector<double> objective_history;  // one bound value per step
};

// Adam ascent on the compiled bound (implemented as descent on its
// negation). Deterministic per (config, dataset): metrics and checkpoints
// are byte-identical across reruns. Aborts with the offending term's name
// if any term value turns non-finite.
TrainResult train(const TrainConfig& config, const Dataset& dataset);

struct CrossModalError {
  std::string metric;  // "mse" | "bernoulli_ce"
  double value = 0.0;
  int count = 0;
};

// Encodes the source subset, decodes the target from the posterior mean and
// scores against the dataset: mean squared error per element for Gaussian
// targets, mean stable cross-entropy per element for Bernoulli targets.
// Throws inventory_error when the bundle lacks the source encoder.
CrossModalError evaluate_cross_modal(const ModelBundle& bundle, const Dataset& dataset,
                                     SubsetMask source, int target);

}  // namespace mmvae
