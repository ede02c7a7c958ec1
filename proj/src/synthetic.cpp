#include "mmvae/synthetic.hpp"

#include <cmath>
#include <stdexcept>

#include "mmvae/io.hpp"
#include "mmvae/rng.hpp"

namespace mmvae {
namespace {

constexpr std::uint64_t kModelTag = 0x6d6f64656c;  // "model"
constexpr std::uint64_t kDataTag = 0x64617461;     // "data"

std::vector<double> per_modality_noise(const SyntheticSpec& spec) {
  const size_t n = static_cast<size_t>(spec.set.size());
  if (spec.noise.size() == 1) return std::vector<double>(n, spec.noise[0]);
  if (spec.noise.size() != n) {
    throw std::invalid_argument("noise must have one entry or one per modality");
  }
  return spec.noise;
}

LinearGaussianModel draw_linear_truth(const SyntheticSpec& spec,
                                      const std::vector<double>& noise) {
  RngStream rng(derive_seed(spec.seed, kModelTag));
  LinearGaussianModel model;
  model.set = spec.set;
  const double scale = 1.0 / std::sqrt(static_cast<double>(spec.set.latent_dim()));
  for (int m = 0; m < spec.set.size(); ++m) {
    if (spec.set.modality(m).likelihood != Likelihood::Gaussian) {
      throw std::invalid_argument("shared_latent_linear requires Gaussian modalities");
    }
    if (!(noise[m] > 0.0)) {
      throw std::invalid_argument("shared_latent_linear requires positive noise levels");
    }
    Tensor w(spec.set.modality(m).data_dim, spec.set.latent_dim());
    for (double& v : w.data) v = scale * rng.normal();
    model.weights.push_back(std::move(w));
    std::vector<double> bias(spec.set.modality(m).data_dim);
    for (double& v : bias) v = 0.5 * rng.normal();
    model.biases.push_back(std::move(bias));
    model.noise_var.push_back(noise[m] * noise[m]);
  }
  model.validate();
  return model;
}

ClusterBitsModel draw_cluster_truth(const SyntheticSpec& spec, const std::vector<double>& noise) {
  if (spec.clusters < 1) throw std::invalid_argument("cluster_bits requires clusters >= 1");
  RngStream rng(derive_seed(spec.seed, kModelTag));
  ClusterBitsModel model;
  model.clusters = spec.clusters;
  for (int m = 0; m < spec.set.size(); ++m) {
    if (spec.set.modality(m).likelihood != Likelihood::Bernoulli) {
      throw std::invalid_argument("cluster_bits requires Bernoulli modalities");
    }
    const double flip = noise[m];
    if (flip < 0.0 || flip >= 0.5) {
      throw std::invalid_argument("cluster_bits flip rate must lie in [0, 0.5)");
    }
    Tensor rates(spec.clusters, spec.set.modality(m).data_dim);
    for (double& v : rates.data) {
      const double p = rng.uniform(0.1, 0.9);
      v = p * (1.0 - 2.0 * flip) + flip;
    }
    model.rates.push_back(std::move(rates));
  }
  return model;
}

}  // namespace

std::vector<Tensor> sample_linear(const LinearGaussianModel& model, int n, std::uint64_t seed) {
  model.validate();
  RngStream rng(seed);
  std::vector<Tensor> data;
  for (int m = 0; m < model.set.size(); ++m) {
    data.emplace_back(n, model.set.modality(m).data_dim);
  }
  std::vector<double> z(model.latent_dim());
  for (int i = 0; i < n; ++i) {
    for (double& v : z) v = rng.normal();
    for (int m = 0; m < model.set.size(); ++m) {
      const Tensor& w = model.weights[m];
      const double sigma = std::sqrt(model.noise_var[m]);
      for (int r = 0; r < w.rows; ++r) {
        double x = model.biases[m][r];
        for (int j = 0; j < w.cols; ++j) x += w.at(r, j) * z[j];
        data[m].at(i, r) = x + sigma * rng.normal();
      }
    }
  }
  return data;
}

std::vector<Tensor> sample_cluster_bits(const ModalitySet& set, const ClusterBitsModel& model,
                                        int n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<Tensor> data;
  for (int m = 0; m < set.size(); ++m) data.emplace_back(n, set.modality(m).data_dim);
  for (int i = 0; i < n; ++i) {
    const int cluster = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(model.clusters));
    for (int m = 0; m < set.size(); ++m) {
      for (int d = 0; d < set.modality(m).data_dim; ++d) {
        data[m].at(i, d) = rng.uniform() < model.rates[m].at(cluster, d) ? 1.0 : 0.0;
      }
    }
  }
  return data;
}

Dataset generate(const SyntheticSpec& spec) {
  if (spec.samples < 1) throw std::invalid_argument("sample count must be >= 1");
  const std::vector<double> noise = per_modality_noise(spec);

  Dataset out;
  out.set = spec.set;
  out.generator = spec.generator;
  out.seed = spec.seed;
  const std::uint64_t data_seed = derive_seed(spec.seed, kDataTag);

  if (spec.generator == "shared_latent_linear") {
    out.linear_truth = draw_linear_truth(spec, noise);
    out.data = sample_linear(*out.linear_truth, spec.samples, data_seed);
  } else if (spec.generator == "cluster_bits") {
    out.cluster_truth = draw_cluster_truth(spec, noise);
    out.data = sample_cluster_bits(spec.set, *out.cluster_truth, spec.samples, data_seed);
  } else {
    throw std::invalid_argument("unknown generator: " + spec.generator);
  }
  return out;
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  nlohmann::ordered_json meta;
  meta["format"] = "mmvae.dataset";
  meta["version"] = 1;
  meta["generator"] = dataset.generator;
  meta["seed"] = dataset.seed;
  meta["n"] = dataset.rows();
  meta["latent_dim"] = dataset.set.latent_dim();
  meta["modalities"] = nlohmann::ordered_json::array();
  for (const Modality& m : dataset.set.modalities()) {
    meta["modalities"].push_back(
        {{"name", m.name}, {"dim", m.data_dim}, {"likelihood", to_string(m.likelihood)}});
  }

  std::vector<std::pair<std::string, Tensor>> tensors;
  for (int m = 0; m < dataset.set.size(); ++m) {
    tensors.emplace_back("data:" + dataset.set.modality(m).name, dataset.data[m]);
  }
  if (dataset.linear_truth) {
    const LinearGaussianModel& truth = *dataset.linear_truth;
    Tensor noise_var(1, truth.set.size());
    for (int m = 0; m < truth.set.size(); ++m) {
      tensors.emplace_back("truth:W:" + truth.set.modality(m).name, truth.weights[m]);
      tensors.emplace_back("truth:b:" + truth.set.modality(m).name, Tensor::row(truth.biases[m]));
      noise_var.at(0, m) = truth.noise_var[m];
    }
    tensors.emplace_back("truth:noise_var", std::move(noise_var));
  }
  if (dataset.cluster_truth) {
    meta["clusters"] = dataset.cluster_truth->clusters;
    for (int m = 0; m < dataset.set.size(); ++m) {
      tensors.emplace_back("truth:rates:" + dataset.set.modality(m).name,
                           dataset.cluster_truth->rates[m]);
    }
  }
  write_tensor_file(path, std::move(meta), tensors);
}

Dataset load_dataset(const std::string& path) {
  const TensorFile file = read_tensor_file(path);
  if (file.header.at("format").get<std::string>() != "mmvae.dataset") {
    throw std::runtime_error("not a dataset file: " + path);
  }
  std::vector<Modality> modalities;
  for (const auto& m : file.header.at("modalities")) {
    modalities.push_back({m.at("name").get<std::string>(), m.at("dim").get<int>(),
                          likelihood_from_string(m.at("likelihood").get<std::string>())});
  }
  Dataset out;
  out.set = ModalitySet(std::move(modalities), file.header.at("latent_dim").get<int>());
  out.generator = file.header.at("generator").get<std::string>();
  out.seed = file.header.at("seed").get<std::uint64_t>();
  for (int m = 0; m < out.set.size(); ++m) {
    out.data.push_back(file.tensor("data:" + out.set.modality(m).name));
  }

  if (file.has_tensor("truth:noise_var")) {
    LinearGaussianModel truth;
    truth.set = out.set;
    const Tensor& noise_var = file.tensor("truth:noise_var");
    for (int m = 0; m < out.set.size(); ++m) {
      truth.weights.push_back(file.tensor("truth:W:" + out.set.modality(m).name));
      const Tensor& bias = file.tensor("truth:b:" + out.set.modality(m).name);
      truth.biases.emplace_back(bias.data.begin(), bias.data.end());
      truth.noise_var.push_back(noise_var.at(0, m));
    }
    truth.validate();
    out.linear_truth = std::move(truth);
  }
  if (file.header.contains("clusters")) {
    ClusterBitsModel truth;
    truth.clusters = file.header.at("clusters").get<int>();
    for (int m = 0; m < out.set.size(); ++m) {
      truth.rates.push_back(file.tensor("truth:rates:" + out.set.modality(m).name));
    }
    out.cluster_truth = std::move(truth);
  }
  return out;
}

}  // namespace mmvae
