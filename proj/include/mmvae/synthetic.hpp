#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmvae/linear_gaussian.hpp"
#include "mmvae/modality.hpp"
#include "mmvae/tensor.hpp"

namespace mmvae {

// K latent clusters, each emitting independent bits per modality at stored
// effective rates (generation noise already folded in).
struct ClusterBitsModel {
  int clusters = 0;
  std::vector<Tensor> rates;  // per modality, [clusters x data_dim]
};

struct SyntheticSpec {
  std::string generator;  // "shared_latent_linear" | "cluster_bits"
  ModalitySet set;
  int samples = 0;
  std::vector<double> noise;  // per modality (or one value for all):
                              // Gaussian sigma, or bit-flip rate for clusters
  int clusters = 4;           // cluster_bits only
  std::uint64_t seed = 1;
};

struct Dataset {
  ModalitySet set;
  std::vector<Tensor> data;  // canonical order, [n x data_dim]
  std::string generator;
  std::uint64_t seed = 1;
  std::optional<LinearGaussianModel> linear_truth;
  std::optional<ClusterBitsModel> cluster_truth;

  int rows() const { return data.empty() ? 0 : data[0].rows; }
};

// Every sample draws one shared latent and emits all modalities from it.
// Deterministic per seed; the ground-truth model rides along for oracles.
Dataset generate(const SyntheticSpec& spec);

// Fresh draws from an existing ground truth, e.g. held-out splits.
std::vector<Tensor> sample_linear(const LinearGaussianModel& model, int n, std::uint64_t seed);
std::vector<Tensor> sample_cluster_bits(const ModalitySet& set, const ClusterBitsModel& model,
                                        int n, std::uint64_t seed);

void save_dataset(const std::string& path, const Dataset& dataset);
Dataset load_dataset(const std::string& path);

}  // namespace mmvae
