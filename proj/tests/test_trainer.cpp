#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "mmvae/compiler.hpp"
#include "mmvae/errors.hpp"
#include "mmvae/trainer.hpp"

using namespace mmvae;

namespace {

SyntheticSpec linear_spec(int n = 256, std::uint64_t seed = 5) {
  SyntheticSpec spec;
  spec.generator = "shared_latent_linear";
  spec.set = ModalitySet({{"a", 3, Likelihood::Gaussian}, {"b", 2, Likelihood::Gaussian}}, 2);
  spec.samples = n;
  spec.noise = {0.1};
  spec.seed = seed;
  return spec;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

TEST_CASE("generation is deterministic per seed") {
  const Dataset d1 = generate(linear_spec());
  const Dataset d2 = generate(linear_spec());
  for (int m = 0; m < 2; ++m) CHECK(d1.data[m].data == d2.data[m].data);

  const Dataset d3 = generate(linear_spec(256, 6));
  CHECK(d1.data[0].data != d3.data[0].data);
  REQUIRE(d1.linear_truth.has_value());
}

TEST_CASE("near-zero noise makes modalities exact functions of the latent") {
  SyntheticSpec spec = linear_spec(64);
  spec.noise = {1e-9};
  const Dataset d = generate(spec);
  const LinearGaussianModel& truth = *d.linear_truth;

  // recover z per sample from modality a by least squares, then check that
  // modality b is reproduced to the noise floor
  for (int i = 0; i < 8; ++i) {
    // z solves W_a z = x_a - b_a; latent=2, dim_a=3: use normal equations
    const Tensor& wa = truth.weights[0];
    Tensor ata(2, 2);
    std::vector<double> atb(2, 0.0);
    for (int r = 0; r < wa.rows; ++r) {
      const double res = d.data[0].at(i, r) - truth.biases[0][r];
      for (int p = 0; p < 2; ++p) {
        atb[p] += wa.at(r, p) * res;
        for (int q = 0; q < 2; ++q) ata.at(p, q) += wa.at(r, p) * wa.at(r, q);
      }
    }
    const Tensor lower = linalg::cholesky(ata);
    const std::vector<double> z = linalg::solve_cholesky(lower, atb);
    for (int r = 0; r < truth.weights[1].rows; ++r) {
      double predicted = truth.biases[1][r];
      for (int p = 0; p < 2; ++p) predicted += truth.weights[1].at(r, p) * z[p];
      CHECK(std::abs(predicted - d.data[1].at(i, r)) < 1e-6);
    }
  }
}

TEST_CASE("empirical covariance matches W W^T + diag(sigma^2)") {
  SyntheticSpec spec = linear_spec(10000, 77);
  spec.noise = {0.3};
  const Dataset d = generate(spec);
  const LinearGaussianModel& truth = *d.linear_truth;

  // stacked dimension 5
  const int dim = 5;
  std::vector<double> mean(dim, 0.0);
  const auto stacked_at = [&](int i, int j) {
    return j < 3 ? d.data[0].at(i, j) : d.data[1].at(i, j - 3);
  };
  for (int i = 0; i < 10000; ++i) {
    for (int j = 0; j < dim; ++j) mean[j] += stacked_at(i, j);
  }
  for (double& v : mean) v /= 10000.0;

  Tensor stacked_w(dim, 2);
  for (int j = 0; j < 3; ++j) {
    for (int p = 0; p < 2; ++p) stacked_w.at(j, p) = truth.weights[0].at(j, p);
  }
  for (int j = 0; j < 2; ++j) {
    for (int p = 0; p < 2; ++p) stacked_w.at(3 + j, p) = truth.weights[1].at(j, p);
  }
  const Tensor expected = matmul(stacked_w, transpose(stacked_w));
  for (int a = 0; a < dim; ++a) {
    for (int b = 0; b < dim; ++b) {
      double cov = 0.0;
      for (int i = 0; i < 10000; ++i) {
        cov += (stacked_at(i, a) - mean[a]) * (stacked_at(i, b) - mean[b]);
      }
      cov /= 9999.0;
      double want = expected.at(a, b) + (a == b ? 0.09 : 0.0);
      CHECK(std::abs(cov - want) < 0.08);  // ~4 sigma at n = 1e4 for unit-scale entries
    }
  }
}

TEST_CASE("dataset files round-trip including the embedded ground truth") {
  const Dataset d = generate(linear_spec(32));
  const std::string path = "trainer_test_dataset.bin";
  save_dataset(path, d);
  const Dataset loaded = load_dataset(path);
  CHECK(loaded.set == d.set);
  CHECK(loaded.generator == d.generator);
  CHECK(loaded.seed == d.seed);
  for (int m = 0; m < 2; ++m) CHECK(loaded.data[m] == d.data[m]);
  REQUIRE(loaded.linear_truth.has_value());
  for (int m = 0; m < 2; ++m) {
    CHECK(loaded.linear_truth->weights[m] == d.linear_truth->weights[m]);
    CHECK(loaded.linear_truth->biases[m] == d.linear_truth->biases[m]);
    CHECK(loaded.linear_truth->noise_var[m] == d.linear_truth->noise_var[m]);
  }

  save_dataset(path + ".2", loaded);
  CHECK(slurp(path) == slurp(path + ".2"));
  std::remove(path.c_str());
  std::remove((path + ".2").c_str());
}

TEST_CASE("cluster bits generation is deterministic and binary") {
  SyntheticSpec spec;
  spec.generator = "cluster_bits";
  spec.set = ModalitySet({{"a", 6, Likelihood::Bernoulli}, {"b", 4, Likelihood::Bernoulli}}, 2);
  spec.samples = 128;
  spec.noise = {0.05};
  spec.clusters = 3;
  spec.seed = 9;
  const Dataset d1 = generate(spec);
  const Dataset d2 = generate(spec);
  for (int m = 0; m < 2; ++m) {
    CHECK(d1.data[m].data == d2.data[m].data);
    for (double v : d1.data[m].data) CHECK((v == 0.0 || v == 1.0));
  }
  REQUIRE(d1.cluster_truth.has_value());
  CHECK(d1.cluster_truth->clusters == 3);
}

TEST_CASE("training improves the bound and logs consistent metrics") {
  const Dataset dataset = generate(linear_spec(256, 15));
  TrainConfig cfg;
  cfg.dataset_path = "(in-memory)";
  cfg.variant = Variant::M2VAE;
  cfg.arch = {{16}, Activation::Tanh};
  cfg.batch_size = 64;
  cfg.epochs = 50;
  cfg.seed = 3;
  cfg.metrics_path = "trainer_test_metrics.csv";

  const TrainResult result = train(cfg, dataset);
  CHECK(result.steps == 200);

  // smoothed bound improves from the first to the last window
  const auto& h = result.objective_history;
  double early = 0.0, late = 0.0;
  for (int i = 0; i < 20; ++i) {
    early += h[i];
    late += h[h.size() - 20 + i];
  }
  CHECK(late > early);

  // metrics: header names every compiled term; objective column equals the
  // signed weighted term sum on every row
  const auto rows = read_csv(cfg.metrics_path);
  const LossExpression expr = compile_variant(Variant::M2VAE, dataset.set);
  REQUIRE(rows.size() == 201);
  REQUIRE(rows[0].size() == 2 + expr.terms.size());
  CHECK(rows[0][0] == "step");
  CHECK(rows[0][1] == "objective");
  for (size_t i = 0; i < expr.terms.size(); ++i) {
    CHECK(rows[0][2 + i] == term_name(expr, expr.terms[i]));
  }
  for (size_t r = 1; r < rows.size(); r += 37) {
    double sum = 0.0;
    for (size_t i = 0; i < expr.terms.size(); ++i) {
      sum += term_sign(expr.terms[i].kind) * expr.terms[i].coeff.to_double() *
             std::stod(rows[r][2 + i]);
    }
    CHECK(std::abs(std::stod(rows[r][1]) - sum) < 1e-9);
  }
  std::remove(cfg.metrics_path.c_str());
}

TEST_CASE("training is byte-deterministic and zero-lr is a fixed point") {
  const Dataset dataset = generate(linear_spec(128, 21));
  TrainConfig cfg;
  cfg.dataset_path = "(in-memory)";
  cfg.arch = {{8}, Activation::Tanh};
  cfg.batch_size = 32;
  cfg.epochs = 3;
  cfg.seed = 11;
  cfg.metrics_path = "det_metrics_1.csv";
  cfg.checkpoint_path = "det_ckpt_1.bin";
  train(cfg, dataset);

  TrainConfig cfg2 = cfg;
  cfg2.metrics_path = "det_metrics_2.csv";
  cfg2.checkpoint_path = "det_ckpt_2.bin";
  train(cfg2, dataset);

  CHECK(slurp("det_metrics_1.csv") == slurp("det_metrics_2.csv"));
  const std::string c1 = slurp("det_ckpt_1.bin");
  std::string c2 = slurp("det_ckpt_2.bin");
  // headers embed the seed only; identical configs must match bytewise
  CHECK(c1 == c2);
  for (const char* f : {"det_metrics_1.csv", "det_metrics_2.csv", "det_ckpt_1.bin", "det_ckpt_2.bin"}) {
    std::remove(f);
  }

  // zero learning rate leaves parameters bit-identical
  TrainConfig frozen = cfg;
  frozen.metrics_path.clear();
  frozen.checkpoint_path.clear();
  frozen.learning_rate = 0.0;
  frozen.epochs = 2;
  LossExpression expr = compile_variant(frozen.variant, dataset.set);
  ModelBundle reference = make_bundle(expr, frozen.arch);
  init_params(reference, frozen.seed);
  TrainResult result = train(frozen, dataset);
  auto a = reference.parameters();
  auto b = result.bundle.parameters();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i]->data == b[i]->data);
}

TEST_CASE("cross-modal evaluation works for every m2vae subset and fails for jmvae3 singletons") {
  SyntheticSpec spec;
  spec.generator = "shared_latent_linear";
  spec.set = ModalitySet({{"a", 2, Likelihood::Gaussian},
                          {"b", 2, Likelihood::Gaussian},
                          {"c", 2, Likelihood::Gaussian}},
                         2);
  spec.samples = 64;
  spec.noise = {0.2};
  spec.seed = 31;
  const Dataset dataset = generate(spec);

  ModelBundle m2 = make_bundle(expand_m2vae(dataset.set), {{8}, Activation::Tanh});
  init_params(m2, 1);
  for (SubsetMask src = 1; src <= dataset.set.full_mask(); ++src) {
    for (int tgt = 0; tgt < 3; ++tgt) {
      const CrossModalError err = evaluate_cross_modal(m2, dataset, src, tgt);
      CHECK(err.metric == "mse");
      CHECK(err.count == 64);
      CHECK(std::isfinite(err.value));
    }
  }

  ModelBundle j3 = make_bundle(expand_jmvae3_style(dataset.set), {{8}, Activation::Tanh});
  init_params(j3, 2);
  for (SubsetMask singleton : {0b001u, 0b010u, 0b100u}) {
    CHECK_THROWS_AS(evaluate_cross_modal(j3, dataset, singleton, 0), inventory_error);
  }
  for (SubsetMask pair : {0b011u, 0b101u, 0b110u, 0b111u}) {
    CHECK_NOTHROW(evaluate_cross_modal(j3, dataset, pair, 1));
  }
}

TEST_CASE("bernoulli cross-modal error and training stay finite") {
  SyntheticSpec spec;
  spec.generator = "cluster_bits";
  spec.set = ModalitySet({{"a", 5, Likelihood::Bernoulli}, {"b", 3, Likelihood::Bernoulli}}, 2);
  spec.samples = 96;
  spec.noise = {0.02};
  spec.clusters = 4;
  spec.seed = 41;
  const Dataset dataset = generate(spec);

  TrainConfig cfg;
  cfg.dataset_path = "(in-memory)";
  cfg.variant = Variant::JMVAE;
  cfg.arch = {{8}, Activation::Tanh};
  cfg.batch_size = 32;
  cfg.epochs = 10;
  cfg.seed = 2;
  const TrainResult result = train(cfg, dataset);
  for (double v : result.objective_history) CHECK(std::isfinite(v));
  const CrossModalError err = evaluate_cross_modal(result.bundle, dataset, 0b01, 1);
  CHECK(err.metric == "bernoulli_ce");
  CHECK(err.value > 0.0);
}

TEST_CASE("metrics gain cross-modal columns when eval_every is set") {
  const Dataset dataset = generate(linear_spec(64, 51));
  TrainConfig cfg;
  cfg.dataset_path = "(in-memory)";
  cfg.variant = Variant::JMVAE;
  cfg.arch = {{6}, Activation::Tanh};
  cfg.batch_size = 64;
  cfg.epochs = 2;
  cfg.eval_every = 2;
  cfg.metrics_path = "eval_metrics.csv";
  train(cfg, dataset);
  const auto rows = read_csv(cfg.metrics_path);
  const LossExpression expr = compile_variant(Variant::JMVAE, dataset.set);
  // 3 encoders x 2 decoders = 6 eval columns
  REQUIRE(rows[0].size() == 2 + expr.terms.size() + 6);
  CHECK(rows[0][2 + expr.terms.size()] == "xm[a->a]");
  CHECK(!rows[1][2 + expr.terms.size()].empty());   // step 0 evaluates
  CHECK(rows[2][2 + expr.terms.size()].empty());    // step 1 does not
  std::remove(cfg.metrics_path.c_str());
}

TEST_CASE("config json honors defaults and rejects unknown keys") {
  const auto cfg = TrainConfig::from_json(nlohmann::json::parse(
      R"({"dataset": "d.bin", "variant": "jmvae", "epochs": 7, "hidden": [32], "seed": 9})"));
  CHECK(cfg.dataset_path == "d.bin");
  CHECK(cfg.variant == Variant::JMVAE);
  CHECK(cfg.epochs == 7);
  CHECK(cfg.arch.hidden == std::vector<int>{32});
  CHECK(cfg.learning_rate == 1e-3);
  CHECK(cfg.beta1 == 0.9);
  CHECK(cfg.beta2 == 0.999);
  CHECK(cfg.epsilon == 1e-8);
  CHECK(cfg.batch_size == 128);
  CHECK(cfg.mc_samples == 1);

  CHECK_THROWS_AS(
      TrainConfig::from_json(nlohmann::json::parse(R"({"dataset": "d", "learning_rte": 0.1})")),
      std::invalid_argument);
  CHECK_THROWS_AS(TrainConfig::from_json(nlohmann::json::parse(R"({"dataset": "d", "epochs": 0})")),
                  std::invalid_argument);

  // variant/modality-count compatibility surfaces at compile time
  const Dataset dataset = generate(linear_spec(16));
  TrainConfig bad;
  bad.dataset_path = "(in-memory)";
  bad.variant = Variant::JMVAE3Style;  // needs three modalities
  CHECK_THROWS_AS(train(bad, dataset), std::invalid_argument);
}
