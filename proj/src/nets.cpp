#include "mmvae/nets.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mmvae/errors.hpp"
#include "mmvae/io.hpp"
#include "mmvae/serialize.hpp"

namespace mmvae {
namespace {

constexpr std::uint64_t kInitTag = 0x696e6974;      // "init"
constexpr std::uint64_t kGradPickTag = 0x67636b70;  // "gckp"

DenseLayer make_layer(int in, int out) { return {Tensor(in, out), Tensor(1, out)}; }

template <typename BundleT, typename Fn>
void visit_params(BundleT& bundle, Fn&& fn) {
  const auto layer = [&fn](const std::string& prefix, auto& l) {
    fn(prefix + ":W", l.weight);
    fn(prefix + ":b", l.bias);
  };
  for (auto& [mask, enc] : bundle.encoders) {
    const std::string base = "enc:" + bundle.expression.set.subset_label(mask);
    for (size_t i = 0; i < enc.trunk.size(); ++i) {
      layer(base + ":trunk" + std::to_string(i), enc.trunk[i]);
    }
    layer(base + ":mean", enc.mean_head);
    layer(base + ":logvar", enc.logvar_head);
  }
  for (auto& [m, dec] : bundle.decoders) {
    const std::string base = "dec:" + bundle.expression.set.modality(m).name;
    for (size_t i = 0; i < dec.trunk.size(); ++i) {
      layer(base + ":trunk" + std::to_string(i), dec.trunk[i]);
    }
    layer(base + ":out", dec.out_head);
    if (dec.logvar_head) layer(base + ":logvar", *dec.logvar_head);
  }
}

void check_batch(const ModalitySet& set, const std::vector<Tensor>& batch) {
  if (batch.size() != static_cast<size_t>(set.size())) {
    throw std::invalid_argument("batch must supply every modality in canonical order");
  }
  for (int i = 0; i < set.size(); ++i) {
    if (batch[i].cols != set.modality(i).data_dim) {
      throw std::invalid_argument("batch width mismatch for modality " + set.modality(i).name);
    }
    if (batch[i].rows != batch[0].rows || batch[i].rows == 0) {
      throw std::invalid_argument("batch row counts must be equal and nonzero");
    }
  }
}

Tensor concat_columns(const std::vector<Tensor>& batch, const std::vector<int>& members) {
  const int rows = batch[members[0]].rows;
  int cols = 0;
  for (int m : members) cols += batch[m].cols;
  Tensor out(rows, cols);
  int offset = 0;
  for (int m : members) {
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < batch[m].cols; ++j) out.at(i, offset + j) = batch[m].at(i, j);
    }
    offset += batch[m].cols;
  }
  return out;
}

NodeId apply_activation(Tape& t, NodeId h, Activation act) {
  switch (act) {
    case Activation::Tanh: return t.tanh(h);
    case Activation::Relu: return t.relu(h);
    case Activation::Identity: return h;
  }
  throw std::logic_error("unreachable activation");
}

// Plain-math dense layer application, shared by the tape-free paths.
Tensor dense_plain(const Tensor& x, const DenseLayer& layer, Activation act) {
  Tensor h = matmul(x, layer.weight);
  for (int i = 0; i < h.rows; ++i) {
    for (int j = 0; j < h.cols; ++j) h.at(i, j) += layer.bias.at(0, j);
  }
  switch (act) {
    case Activation::Tanh:
      for (double& v : h.data) v = std::tanh(v);
      break;
    case Activation::Relu:
      for (double& v : h.data) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Identity: break;
  }
  return h;
}

}  // namespace

std::string to_string(Activation act) {
  switch (act) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  throw std::logic_error("unreachable activation");
}

Activation activation_from_string(const std::string& text) {
  if (text == "tanh") return Activation::Tanh;
  if (text == "relu") return Activation::Relu;
  if (text == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation: " + text);
}

std::vector<Tensor*> ModelBundle::parameters() {
  std::vector<Tensor*> out;
  visit_params(*this, [&out](const std::string&, Tensor& t) { out.push_back(&t); });
  return out;
}

std::vector<std::string> ModelBundle::parameter_names() const {
  std::vector<std::string> out;
  visit_params(*this, [&out](const std::string& name, const Tensor&) { out.push_back(name); });
  return out;
}

std::int64_t ModelBundle::parameter_count() const {
  std::int64_t total = 0;
  visit_params(*this, [&total](const std::string&, const Tensor& t) { total += t.numel(); });
  return total;
}

ModelBundle make_bundle(LossExpression expression, NetArch arch) {
  ModelBundle bundle;
  bundle.expression = std::move(expression);
  bundle.arch = std::move(arch);
  const ModalitySet& set = bundle.expression.set;
  const int latent = set.latent_dim();

  for (SubsetMask mask : encoder_inventory(bundle.expression)) {
    EncoderNet enc;
    enc.subset = mask;
    int width = set.input_dim(mask);
    for (int hidden : bundle.arch.hidden) {
      enc.trunk.push_back(make_layer(width, hidden));
      width = hidden;
    }
    enc.mean_head = make_layer(width, latent);
    enc.logvar_head = make_layer(width, latent);
    bundle.encoders.emplace(mask, std::move(enc));
  }

  for (int m : decoder_inventory(bundle.expression)) {
    DecoderNet dec;
    dec.modality = m;
    int width = latent;
    for (int hidden : bundle.arch.hidden) {
      dec.trunk.push_back(make_layer(width, hidden));
      width = hidden;
    }
    dec.out_head = make_layer(width, set.modality(m).data_dim);
    if (set.modality(m).likelihood == Likelihood::Gaussian) {
      dec.logvar_head = make_layer(width, set.modality(m).data_dim);
    }
    bundle.decoders.emplace(m, std::move(dec));
  }
  return bundle;
}

void init_params(ModelBundle& bundle, std::uint64_t seed) {
  RngStream rng(derive_seed(seed, kInitTag));
  visit_params(bundle, [&rng](const std::string& name, Tensor& t) {
    const bool is_weight = name.ends_with(":W");
    if (is_weight) {
      const double limit = std::sqrt(6.0 / (t.rows + t.cols));
      for (double& v : t.data) v = rng.uniform(-limit, limit);
    } else {
      const bool logvar_bias = name.find(":logvar:") != std::string::npos;
      std::fill(t.data.begin(), t.data.end(), logvar_bias ? -1.0 : 0.0);
    }
  });
}

std::vector<double> ObjectiveEval::term_values() const {
  std::vector<double> out;
  out.reserve(terms.size());
  for (const TermEval& te : terms) out.push_back(tape.value(te.node).data[0]);
  return out;
}

ObjectiveEval forward_objective(ModelBundle& bundle, const std::vector<Tensor>& batch,
                                RngStream rng, int mc_samples, bool stop_reference_gradient) {
  if (mc_samples < 1) throw std::invalid_argument("mc_samples must be >= 1");
  const LossExpression& expr = bundle.expression;
  const ModalitySet& set = expr.set;
  check_batch(set, batch);
  const int rows = batch[0].rows;
  const int latent = set.latent_dim();

  ObjectiveEval ev;
  Tape& t = ev.tape;

  std::map<const Tensor*, NodeId> param_node;
  visit_params(bundle, [&](const std::string&, Tensor& p) {
    const NodeId id = t.leaf(p, true);
    ev.param_nodes.push_back(id);
    param_node.emplace(&p, id);
  });
  const auto node_of = [&param_node](const Tensor& p) { return param_node.at(&p); };

  std::vector<NodeId> data_nodes;
  for (int i = 0; i < set.size(); ++i) data_nodes.push_back(t.constant(batch[i]));

  // posterior heads for every encoder in the inventory
  struct EncNodes {
    NodeId mean = -1;
    NodeId log_var = -1;
  };
  std::map<SubsetMask, EncNodes> posterior;
  for (SubsetMask mask : encoder_inventory(expr)) {
    const auto it = bundle.encoders.find(mask);
    if (it == bundle.encoders.end()) {
      throw inventory_error("encoder not in inventory: " + set.subset_label(mask));
    }
    const EncoderNet& enc = it->second;
    NodeId h = t.constant(concat_columns(batch, set.members(mask)));
    for (const DenseLayer& layer : enc.trunk) {
      h = apply_activation(t, t.add_bias(t.matmul(h, node_of(layer.weight)), node_of(layer.bias)),
                           bundle.arch.activation);
    }
    EncNodes out;
    out.mean = t.add_bias(t.matmul(h, node_of(enc.mean_head.weight)), node_of(enc.mean_head.bias));
    out.log_var = t.clamp(
        t.add_bias(t.matmul(h, node_of(enc.logvar_head.weight)), node_of(enc.logvar_head.bias)),
        -kLogVarClamp, kLogVarClamp);
    posterior.emplace(mask, out);
  }

  // one eps draw per (estimator sample, recon-source subset), subsets in
  // ascending mask order within a sample
  std::vector<SubsetMask> recon_sources;
  for (const LossTerm& term : expr.terms) {
    if (term.kind == TermKind::Recon &&
        std::find(recon_sources.begin(), recon_sources.end(), term.subset) ==
            recon_sources.end()) {
      recon_sources.push_back(term.subset);
    }
  }
  std::sort(recon_sources.begin(), recon_sources.end());

  std::map<std::pair<int, SubsetMask>, NodeId> latent_draw;  // z nodes shared per (sample, subset)
  for (int s = 0; s < mc_samples; ++s) {
    RngStream stream = rng.substream(static_cast<std::uint64_t>(s));
    for (SubsetMask mask : recon_sources) {
      Tensor eps(rows, latent);
      for (double& v : eps.data) v = stream.normal();
      const EncNodes& q = posterior.at(mask);
      latent_draw[{s, mask}] = t.reparam(q.mean, q.log_var, t.constant(std::move(eps)));
    }
  }

  const auto decode_logprob = [&](int s, const LossTerm& term) {
    const auto it = bundle.decoders.find(term.modality);
    if (it == bundle.decoders.end()) {
      throw inventory_error("decoder not in inventory: " + set.modality(term.modality).name);
    }
    const DecoderNet& dec = it->second;
    NodeId h = latent_draw.at({s, term.subset});
    for (const DenseLayer& layer : dec.trunk) {
      h = apply_activation(t, t.add_bias(t.matmul(h, node_of(layer.weight)), node_of(layer.bias)),
                           bundle.arch.activation);
    }
    const NodeId out =
        t.add_bias(t.matmul(h, node_of(dec.out_head.weight)), node_of(dec.out_head.bias));
    if (set.modality(term.modality).likelihood == Likelihood::Gaussian) {
      const NodeId lv = t.clamp(t.add_bias(t.matmul(h, node_of(dec.logvar_head->weight)),
                                           node_of(dec.logvar_head->bias)),
                                -kLogVarClamp, kLogVarClamp);
      return t.gauss_logprob_rows(data_nodes[term.modality], out, lv);
    }
    return t.bern_logprob_rows(data_nodes[term.modality], out);
  };

  for (const LossTerm& term : expr.terms) {
    NodeId node = -1;
    switch (term.kind) {
      case TermKind::PriorKL: {
        const EncNodes& q = posterior.at(term.subset);
        node = t.mean_all(t.kl_std_rows(q.mean, q.log_var));
        break;
      }
      case TermKind::CrossKL: {
        const EncNodes& q = posterior.at(term.subset);
        EncNodes ref = posterior.at(cross_reference(term));
        if (stop_reference_gradient) {
          ref.mean = t.constant(t.value(ref.mean));
          ref.log_var = t.constant(t.value(ref.log_var));
        }
        node = t.mean_all(t.kl_pair_rows(q.mean, q.log_var, ref.mean, ref.log_var));
        break;
      }
      case TermKind::Recon: {
        NodeId acc = -1;
        for (int s = 0; s < mc_samples; ++s) {
          const NodeId lp = decode_logprob(s, term);
          acc = acc < 0 ? lp : t.add(acc, lp);
        }
        if (mc_samples > 1) acc = t.scale(acc, 1.0 / mc_samples);
        node = t.mean_all(acc);
        break;
      }
    }
    ev.terms.push_back({term, node});
  }

  NodeId objective = -1;
  for (const TermEval& te : ev.terms) {
    const NodeId weighted = t.scale(te.node, term_sign(te.term.kind) * te.term.coeff.to_double());
    objective = objective < 0 ? weighted : t.add(objective, weighted);
  }
  ev.objective = objective;
  return ev;
}

void backward(ObjectiveEval& eval) { eval.tape.backward(eval.objective); }

std::vector<Tensor> parameter_gradients(ObjectiveEval& eval) {
  std::vector<Tensor> out;
  out.reserve(eval.param_nodes.size());
  for (NodeId id : eval.param_nodes) out.push_back(eval.tape.grad(id));
  return out;
}

GradCheckReport grad_check(ModelBundle& bundle, const std::vector<Tensor>& batch, int coords,
                           double step, std::uint64_t seed, double tolerance, int mc_samples) {
  const std::vector<Tensor*> params = bundle.parameters();
  const std::vector<std::string> names = bundle.parameter_names();

  ObjectiveEval ev = forward_objective(bundle, batch, RngStream(seed), mc_samples);
  backward(ev);
  const std::vector<Tensor> grads = parameter_gradients(ev);

  const auto objective_at = [&]() {
    return forward_objective(bundle, batch, RngStream(seed), mc_samples).objective_value();
  };

  const std::int64_t total = bundle.parameter_count();
  RngStream pick(derive_seed(seed, kGradPickTag));
  GradCheckReport report;
  for (int c = 0; c < coords; ++c) {
    std::int64_t flat = static_cast<std::int64_t>(pick.next_u64() % static_cast<std::uint64_t>(total));
    size_t p = 0;
    while (flat >= params[p]->numel()) {
      flat -= params[p]->numel();
      ++p;
    }
    const int index = static_cast<int>(flat);
    double& coord = params[p]->data[index];
    const double original = coord;

    coord = original + step;
    const double up = objective_at();
    coord = original - step;
    const double down = objective_at();
    coord = original;

    const double numeric = (up - down) / (2.0 * step);
    const double analytic = grads[p].data[index];
    const double rel_err =
        std::abs(analytic - numeric) / std::max({1.0, std::abs(analytic), std::abs(numeric)});
    report.max_rel_err = std::max(report.max_rel_err, rel_err);
    ++report.checked;
    if (rel_err > tolerance) {
      report.failures.push_back({names[p], index, analytic, numeric, rel_err});
    }
  }
  return report;
}

std::pair<Tensor, Tensor> encode_batch(const ModelBundle& bundle, SubsetMask subset,
                                       const std::vector<Tensor>& batch) {
  const ModalitySet& set = bundle.expression.set;
  check_batch(set, batch);
  const auto it = bundle.encoders.find(subset);
  if (it == bundle.encoders.end()) {
    throw inventory_error("encoder not in inventory: " + set.subset_label(subset));
  }
  const EncoderNet& enc = it->second;
  Tensor h = concat_columns(batch, set.members(subset));
  for (const DenseLayer& layer : enc.trunk) h = dense_plain(h, layer, bundle.arch.activation);
  Tensor mean = dense_plain(h, enc.mean_head, Activation::Identity);
  Tensor log_var = dense_plain(h, enc.logvar_head, Activation::Identity);
  for (double& v : log_var.data) v = std::clamp(v, -kLogVarClamp, kLogVarClamp);
  return {std::move(mean), std::move(log_var)};
}

std::pair<Tensor, Tensor> decode_batch(const ModelBundle& bundle, int modality, const Tensor& z) {
  const auto it = bundle.decoders.find(modality);
  if (it == bundle.decoders.end()) {
    throw inventory_error("decoder not in inventory: " +
                          bundle.expression.set.modality(modality).name);
  }
  const DecoderNet& dec = it->second;
  Tensor h = z;
  for (const DenseLayer& layer : dec.trunk) h = dense_plain(h, layer, bundle.arch.activation);
  Tensor out = dense_plain(h, dec.out_head, Activation::Identity);
  Tensor log_var;
  if (dec.logvar_head) {
    log_var = dense_plain(h, *dec.logvar_head, Activation::Identity);
    for (double& v : log_var.data) v = std::clamp(v, -kLogVarClamp, kLogVarClamp);
  }
  return {std::move(out), std::move(log_var)};
}

DiagGaussian row_gaussian(const Tensor& mean, const Tensor& log_var, int row) {
  std::vector<double> m(mean.cols), lv(log_var.cols);
  for (int j = 0; j < mean.cols; ++j) {
    m[j] = mean.at(row, j);
    lv[j] = log_var.at(row, j);
  }
  return DiagGaussian(std::move(m), std::move(lv));
}

void save_checkpoint(const std::string& path, ModelBundle& bundle, std::uint64_t seed) {
  nlohmann::ordered_json meta;
  meta["format"] = "mmvae.checkpoint";
  meta["version"] = 1;
  meta["seed"] = seed;
  meta["arch"] = {{"hidden", bundle.arch.hidden}, {"activation", to_string(bundle.arch.activation)}};
  meta["expression"] = nlohmann::ordered_json::parse(render(bundle.expression, RenderFormat::Json));

  std::vector<std::pair<std::string, Tensor>> tensors;
  visit_params(bundle, [&tensors](const std::string& name, Tensor& t) {
    tensors.emplace_back(name, t);
  });
  write_tensor_file(path, std::move(meta), tensors);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  const TensorFile file = read_tensor_file(path);
  if (file.header.at("format").get<std::string>() != "mmvae.checkpoint") {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  NetArch arch;
  arch.hidden = file.header.at("arch").at("hidden").get<std::vector<int>>();
  arch.activation = activation_from_string(file.header.at("arch").at("activation").get<std::string>());

  LoadedCheckpoint out{make_bundle(parse_expression(file.header.at("expression").dump()), arch),
                       file.header.at("seed").get<std::uint64_t>()};
  size_t assigned = 0;
  visit_params(out.bundle, [&](const std::string& name, Tensor& t) {
    const Tensor& stored = file.tensor(name);
    if (!stored.same_shape(t)) throw std::runtime_error("checkpoint shape mismatch for " + name);
    t = stored;
    ++assigned;
  });
  if (assigned != file.tensors.size()) {
    throw std::runtime_error("checkpoint holds unexpected tensors: " + path);
  }
  return out;
}

}  // namespace mmvae
