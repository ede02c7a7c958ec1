#include "mmvae/discrete_info.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mmvae {
namespace {

double entropy_of_table(const std::vector<double>& p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

void check_disjoint_sorted(const std::vector<int>& vars, int n_vars) {
  if (vars.empty()) throw std::invalid_argument("variable selection must be nonempty");
  for (size_t i = 0; i < vars.size(); ++i) {
    if (vars[i] < 0 || vars[i] >= n_vars) throw std::invalid_argument("variable index out of range");
    if (i > 0 && vars[i] <= vars[i - 1]) {
      throw std::invalid_argument("variable selection must be strictly ascending");
    }
  }
}

std::vector<int> merge_sorted(std::vector<int> a, const std::vector<int>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  return a;
}

}  // namespace

DiscreteJoint::DiscreteJoint(std::vector<int> cardinalities, std::vector<double> probabilities)
    : card_(std::move(cardinalities)), probs_(std::move(probabilities)) {
  if (card_.size() < 2 || card_.size() > 3) {
    throw std::invalid_argument("joint table supports 2 or 3 variables");
  }
  size_t expected = 1;
  for (int c : card_) {
    if (c < 1) throw std::invalid_argument("cardinalities must be >= 1");
    expected *= static_cast<size_t>(c);
  }
  if (probs_.size() != expected) throw std::invalid_argument("table size mismatch");
  double total = 0.0;
  for (double p : probs_) {
    if (p < 0.0) throw std::invalid_argument("probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument("probabilities must sum to 1 within 1e-12");
  }
}

DiscreteJoint DiscreteJoint::random(std::vector<int> cardinalities, RngStream& rng) {
  size_t size = 1;
  for (int c : cardinalities) size *= static_cast<size_t>(c);
  std::vector<double> p(size);
  double total = 0.0;
  for (double& v : p) {
    v = -std::log(1.0 - rng.uniform());  // Exp(1) draws give a Dirichlet(1,...) table
    total += v;
  }
  for (double& v : p) v /= total;
  // renormalize exactly enough for the 1e-12 constructor tolerance
  double sum = 0.0;
  for (double v : p) sum += v;
  for (double& v : p) v /= sum;
  return DiscreteJoint(std::move(cardinalities), std::move(p));
}

double DiscreteJoint::prob(const std::vector<int>& index) const {
  if (index.size() != card_.size()) throw std::invalid_argument("index arity mismatch");
  size_t flat = 0;
  for (size_t v = 0; v < card_.size(); ++v) {
    if (index[v] < 0 || index[v] >= card_[v]) throw std::invalid_argument("index out of range");
    flat = flat * static_cast<size_t>(card_[v]) + static_cast<size_t>(index[v]);
  }
  return probs_[flat];
}

std::vector<double> DiscreteJoint::marginal(const std::vector<int>& vars) const {
  check_disjoint_sorted(vars, n_vars());
  size_t out_size = 1;
  for (int v : vars) out_size *= static_cast<size_t>(card_[v]);
  std::vector<double> out(out_size, 0.0);

  std::vector<int> index(card_.size(), 0);
  for (size_t flat = 0; flat < probs_.size(); ++flat) {
    size_t rem = flat;
    for (int v = n_vars() - 1; v >= 0; --v) {
      index[v] = static_cast<int>(rem % static_cast<size_t>(card_[v]));
      rem /= static_cast<size_t>(card_[v]);
    }
    size_t out_flat = 0;
    for (int v : vars) out_flat = out_flat * static_cast<size_t>(card_[v]) + index[v];
    out[out_flat] += probs_[flat];
  }
  return out;
}

double entropy(const DiscreteJoint& joint, const std::vector<int>& vars) {
  return entropy_of_table(joint.marginal(vars));
}

double conditional_entropy(const DiscreteJoint& joint, const std::vector<int>& of,
                           const std::vector<int>& given) {
  return entropy(joint, merge_sorted(of, given)) - entropy(joint, given);
}

double mutual_information(const DiscreteJoint& joint, int a, int b) {
  return entropy(joint, {a}) + entropy(joint, {b}) - entropy(joint, merge_sorted({a}, {b}));
}

double conditional_mutual_information(const DiscreteJoint& joint, int a, int b, int c) {
  return entropy(joint, merge_sorted({a}, {c})) + entropy(joint, merge_sorted({b}, {c})) -
         entropy(joint, merge_sorted(merge_sorted({a}, {b}), {c})) - entropy(joint, {c});
}

double variation_of_information(const DiscreteJoint& joint) {
  if (joint.n_vars() == 2) {
    const double entropy_form =
        entropy(joint, {0}) + entropy(joint, {1}) - 2.0 * mutual_information(joint, 0, 1);
    const double conditional_form =
        conditional_entropy(joint, {0}, {1}) + conditional_entropy(joint, {1}, {0});
    if (std::abs(entropy_form - conditional_form) > 1e-9) {
      throw std::logic_error("variation of information: formula mismatch");
    }
    return entropy_form;
  }
  return conditional_entropy(joint, {0}, {1, 2}) + conditional_entropy(joint, {1}, {0, 2}) +
         conditional_entropy(joint, {2}, {0, 1});
}

}  // namespace mmvae
