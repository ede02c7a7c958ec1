#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmvae/expression.hpp"
#include "mmvae/gaussian.hpp"
#include "mmvae/rng.hpp"
#include "mmvae/tape.hpp"
#include "mmvae/tensor.hpp"

namespace mmvae {

enum class Activation { Tanh, Relu, Identity };

std::string to_string(Activation act);
Activation activation_from_string(const std::string& text);

struct DenseLayer {
  Tensor weight;  // [in x out]
  Tensor bias;    // [1 x out]
};

struct NetArch {
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::Tanh;
};

// Posterior network for one modality subset. Input is the concatenation of
// the subset's modalities in canonical order; mean and log-variance heads
// share the trunk.
struct EncoderNet {
  SubsetMask subset = 0;
  std::vector<DenseLayer> trunk;
  DenseLayer mean_head;
  DenseLayer logvar_head;
};

// Likelihood network for one modality: a logits head for Bernoulli, mean
// plus log-variance heads for Gaussian.
struct DecoderNet {
  int modality = -1;
  std::vector<DenseLayer> trunk;
  DenseLayer out_head;
  std::optional<DenseLayer> logvar_head;
};

struct ModelBundle {
  LossExpression expression;
  NetArch arch;
  std::map<SubsetMask, EncoderNet> encoders;
  std::map<int, DecoderNet> decoders;

  std::vector<Tensor*> parameters();  // canonical order: encoders by mask, then decoders
  std::vector<std::string> parameter_names() const;
  std::int64_t parameter_count() const;
};

// Builds every encoder in the expression's inventory and one decoder per
// recon target. Parameters are zero until init_params runs.
ModelBundle make_bundle(LossExpression expression, NetArch arch = {});

// Xavier-uniform weights, zero biases; log-variance head biases start at -1
// so early posteriors have variance around exp(-1).
void init_params(ModelBundle& bundle, std::uint64_t seed);

struct TermEval {
  LossTerm term;
  NodeId node = -1;
};

struct ObjectiveEval {
  Tape tape;
  NodeId objective = -1;  // maximization-oriented bound value
  std::vector<TermEval> terms;
  std::vector<NodeId> param_nodes;

  double objective_value() const { return tape.value(objective).data[0]; }
  std::vector<double> term_values() const;
};

// Evaluates the compiled objective on a batch (one tensor per modality in
// canonical order, equal row counts, averaged over rows). Reconstruction
// expectations use mc_samples reparameterized draws; draw s comes from
// rng.substream(s), so a k-sample evaluation equals the mean of the k
// single-sample evaluations run on those substreams.
//
// By default cross-KL gradients flow into both encoders; with
// stop_reference_gradient the reduced-subset side is treated as a constant.
ObjectiveEval forward_objective(ModelBundle& bundle, const std::vector<Tensor>& batch,
                                RngStream rng, int mc_samples = 1,
                                bool stop_reference_gradient = false);

void backward(ObjectiveEval& eval);
std::vector<Tensor> parameter_gradients(ObjectiveEval& eval);

struct GradCheckReport {
  double max_rel_err = 0.0;
  int checked = 0;
  struct Entry {
    std::string param;
    int index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
  };
  std::vector<Entry> failures;  // coordinates beyond the tolerance
};

// Central finite differences against the reverse-mode gradient at `coords`
// randomly sampled parameter coordinates. The sampling rng is frozen to
// `seed`, making the objective a deterministic function of the parameters.
GradCheckReport grad_check(ModelBundle& bundle, const std::vector<Tensor>& batch, int coords,
                           double step, std::uint64_t seed, double tolerance, int mc_samples = 1);

// Plain (tape-free) evaluation paths used for cross-modal inference and
// oracle comparisons.
std::pair<Tensor, Tensor> encode_batch(const ModelBundle& bundle, SubsetMask subset,
                                       const std::vector<Tensor>& batch);  // (mean, log_var)
std::pair<Tensor, Tensor> decode_batch(const ModelBundle& bundle, int modality, const Tensor& z);

DiagGaussian row_gaussian(const Tensor& mean, const Tensor& log_var, int row);

// Bit-exact single-file checkpoint embedding the expression, architecture,
// seed and every parameter tensor.
void save_checkpoint(const std::string& path, ModelBundle& bundle, std::uint64_t seed);
struct LoadedCheckpoint {
  ModelBundle bundle;
  std::uint64_t seed = 0;
};
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace mmvae
