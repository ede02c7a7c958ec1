#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mmvae/checks.hpp"
#include "mmvae/compiler.hpp"
#include "mmvae/errors.hpp"
#include "mmvae/serialize.hpp"
#include "mmvae/trainer.hpp"

namespace {

using namespace mmvae;

// "a:4:gauss,b:8:bern" -> modality list
std::vector<Modality> parse_modalities(const std::string& text) {
  std::vector<Modality> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find(':');
    const auto second = item.find(':', first + 1);
    if (first == std::string::npos || second == std::string::npos) {
      throw std::invalid_argument("modality must be name:dim:likelihood, got '" + item + "'");
    }
    Modality m;
    m.name = item.substr(0, first);
    m.data_dim = std::stoi(item.substr(first + 1, second - first - 1));
    m.likelihood = likelihood_from_string(item.substr(second + 1));
    out.push_back(std::move(m));
  }
  if (out.empty()) throw std::invalid_argument("empty modality list");
  return out;
}

SubsetMask parse_subset(const ModalitySet& set, const std::string& text) {
  SubsetMask mask = 0;
  std::stringstream ss(text);
  std::string name;
  while (std::getline(ss, name, ',')) {
    const int idx = set.index_of(name);
    if (idx < 0) throw std::invalid_argument("unknown modality: " + name);
    mask |= subset_bit(idx);
  }
  if (mask == 0) throw std::invalid_argument("empty source subset");
  return mask;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
  out << text << '\n';
}

int run_expand(const std::string& modalities, const std::string& variant, int latent_dim,
               const std::string& format, const std::string& out_path) {
  const ModalitySet set(parse_modalities(modalities), latent_dim);
  const LossExpression expr = compile_variant(variant_from_string(variant), set);
  RenderFormat fmt = RenderFormat::Text;
  if (format == "json") fmt = RenderFormat::Json;
  else if (format == "latex") fmt = RenderFormat::Latex;
  else if (format != "text") throw std::invalid_argument("unknown format: " + format);
  emit(render(expr, fmt), out_path);
  return 0;
}

int run_generate(const std::string& generator, const std::string& modalities, int latent_dim,
                 int samples, const std::string& noise, int clusters, std::uint64_t seed,
                 const std::string& out_path) {
  SyntheticSpec spec;
  spec.generator = generator == "shared-linear" ? "shared_latent_linear"
                  : generator == "cluster-bits" ? "cluster_bits"
                                                : generator;
  spec.set = ModalitySet(parse_modalities(modalities), latent_dim);
  spec.samples = samples;
  spec.clusters = clusters;
  spec.seed = seed;
  std::stringstream ss(noise);
  std::string item;
  while (std::getline(ss, item, ',')) spec.noise.push_back(std::stod(item));
  const Dataset dataset = generate(spec);
  save_dataset(out_path, dataset);
  std::cout << "wrote " << dataset.rows() << " samples x " << dataset.set.size()
            << " modalities to " << out_path << '\n';
  return 0;
}

// MMVAE_SEED overrides the default seed wherever none was given explicitly.
std::optional<std::uint64_t> env_seed() {
  const char* value = std::getenv("MMVAE_SEED");
  if (value == nullptr) return std::nullopt;
  return std::stoull(value);
}

int run_train(const std::string& config_path) {
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open config: " + config_path);
  nlohmann::json doc = nlohmann::json::parse(in);
  if (!doc.contains("seed")) {
    if (const auto seed = env_seed()) doc["seed"] = *seed;
  }
  const TrainConfig cfg = TrainConfig::from_json(doc);
  const Dataset dataset = load_dataset(cfg.dataset_path);
  const TrainResult result = train(cfg, dataset);
  std::cout << "trained " << to_string(cfg.variant) << " for " << result.steps << " steps; final bound "
            << result.objective_history.back() << '\n';
  if (!cfg.metrics_path.empty()) std::cout << "metrics: " << cfg.metrics_path << '\n';
  if (!cfg.checkpoint_path.empty()) std::cout << "checkpoint: " << cfg.checkpoint_path << '\n';
  return 0;
}

nlohmann::ordered_json eval_entry(const ModelBundle& bundle, const Dataset& dataset,
                                  SubsetMask source, int target) {
  const ModalitySet& set = bundle.expression.set;
  nlohmann::ordered_json entry;
  entry["source"] = nlohmann::ordered_json::array();
  for (int i : set.members(source)) entry["source"].push_back(set.modality(i).name);
  entry["target"] = set.modality(target).name;
  try {
    const CrossModalError err = evaluate_cross_modal(bundle, dataset, source, target);
    entry["metric"] = err.metric;
    entry["value"] = err.value;
    entry["n"] = err.count;
  } catch (const inventory_error& e) {
    entry["error"] = e.what();
  }
  return entry;
}

int run_eval(const std::string& checkpoint_path, const std::string& dataset_path,
             const std::string& source, const std::string& target, bool all_pairs,
             const std::string& out_path) {
  const LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
  const Dataset dataset = load_dataset(dataset_path);
  const ModalitySet& set = loaded.bundle.expression.set;
  if (!(dataset.set == set)) {
    throw std::runtime_error("dataset modalities do not match the checkpoint");
  }

  nlohmann::ordered_json report;
  report["checkpoint"] = checkpoint_path;
  report["dataset"] = dataset_path;
  if (all_pairs) {
    report["results"] = nlohmann::ordered_json::array();
    for (SubsetMask mask = 1; mask <= set.full_mask(); ++mask) {
      for (int tgt = 0; tgt < set.size(); ++tgt) {
        report["results"].push_back(eval_entry(loaded.bundle, dataset, mask, tgt));
      }
    }
  } else {
    if (source.empty() || target.empty()) {
      throw std::invalid_argument("eval needs --source and --target (or --all-pairs)");
    }
    const int tgt = set.index_of(target);
    if (tgt < 0) throw std::invalid_argument("unknown target modality: " + target);
    report["results"] = {eval_entry(loaded.bundle, dataset, parse_subset(set, source), tgt)};
  }
  // a requested-but-missing encoder is a reportable result, not a crash;
  // surface it in the exit code all the same
  bool any_error = false;
  for (const auto& entry : report["results"]) any_error |= entry.contains("error");
  emit(report.dump(2), out_path);
  return any_error && !all_pairs ? 1 : 0;
}

int run_check(const std::string& suite) {
  const auto results = checks::run_suite(suite);
  bool all_passed = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name;
    if (!r.detail.empty()) std::cout << " (" << r.detail << ')';
    std::cout << '\n';
    all_passed &= r.passed;
  }
  std::cout << (all_passed ? "all checks passed" : "CHECK FAILURES") << '\n';
  return all_passed ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-modal VAE toolkit: objective expansion, training and verification"};
  app.require_subcommand(1);

  std::string modalities, variant = "m2vae", format = "text", out_path;
  int latent_dim = 2;
  auto* expand = app.add_subcommand("expand", "expand an objective into its weighted terms");
  expand->add_option("--modalities", modalities, "name:dim:likelihood list, e.g. a:4:gauss,b:8:bern")
      ->required();
  expand->add_option("--variant", variant, "vanilla|joint|jmvae|jmvae3|m2vae");
  expand->add_option("--latent-dim", latent_dim, "latent width (default 2)");
  expand->add_option("--format", format, "text|json|latex");
  expand->add_option("--out", out_path, "write to file instead of stdout");

  std::string generator = "shared-linear", noise = "0.1", data_out;
  int samples = 1000, clusters = 4;
  std::uint64_t seed = env_seed().value_or(1);
  auto* gen = app.add_subcommand("generate", "draw a synthetic multi-modal dataset");
  gen->add_option("--generator", generator, "shared-linear|cluster-bits");
  gen->add_option("--modalities", modalities, "name:dim:likelihood list")->required();
  gen->add_option("--latent-dim", latent_dim, "shared latent width");
  gen->add_option("--samples", samples, "number of rows");
  gen->add_option("--noise", noise, "noise level(s), one value or per-modality list");
  gen->add_option("--clusters", clusters, "cluster count (cluster-bits)");
  gen->add_option("--seed", seed, "generation seed");
  gen->add_option("--out", data_out, "output dataset path")->required();

  std::string config_path;
  auto* tr = app.add_subcommand("train", "train on a dataset per a JSON config");
  tr->add_option("--config", config_path, "JSON config path")->required();

  std::string checkpoint_path, dataset_path, source, target;
  bool all_pairs = false;
  auto* ev = app.add_subcommand("eval", "cross-modal inference report for a checkpoint");
  ev->add_option("--checkpoint", checkpoint_path, "checkpoint path")->required();
  ev->add_option("--dataset", dataset_path, "dataset path")->required();
  ev->add_option("--source", source, "comma-separated source modalities");
  ev->add_option("--target", target, "target modality");
  ev->add_flag("--all-pairs", all_pairs, "evaluate every (source subset, target) pair");
  ev->add_option("--out", out_path, "write the JSON report to a file");

  std::string suite = "all";
  auto* ck = app.add_subcommand("check", "run the oracle and invariant suites");
  ck->add_option("--suite", suite, "all|compiler|kl|grad|bound|vi");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (expand->parsed()) return run_expand(modalities, variant, latent_dim, format, out_path);
    if (gen->parsed()) {
      return run_generate(generator, modalities, latent_dim, samples, noise, clusters, seed,
                          data_out);
    }
    if (tr->parsed()) return run_train(config_path);
    if (ev->parsed()) {
      return run_eval(checkpoint_path, dataset_path, source, target, all_pairs, out_path);
    }
    if (ck->parsed()) return run_check(suite);
  } catch (const parse_error& e) {
    std::cerr << "parse error at byte " << e.position() << ": " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
