#include "mmvae/compiler.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>
#include <tuple>

namespace mmvae {
namespace {

constexpr int kMaxExactSetSize = 12;   // N! must stay well inside int64
constexpr int kMaxBruteforceSetSize = 8;

void require_size(const ModalitySet& set, int min, int max, const char* op) {
  const int n = set.size();
  if (n < min || n > max) {
    throw std::invalid_argument(std::string(op) + ": modality count " + std::to_string(n) +
                                " outside supported range [" + std::to_string(min) + ", " +
                                std::to_string(max) + "]");
  }
}

std::int64_t factorial(int n) {
  std::int64_t f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Prior KL, per-member recon and (for |S| >= 2) per-member cross terms of one
// subset, all with unit coefficient.
void append_subset_terms(std::vector<LossTerm>& out, const ModalitySet& set, SubsetMask subset) {
  out.push_back({TermKind::PriorKL, subset, -1, Rational(1)});
  for (int m : set.members(subset)) {
    out.push_back({TermKind::Recon, subset, m, Rational(1)});
    if (subset_size(subset) >= 2) {
      out.push_back({TermKind::CrossKL, subset, m, Rational(1)});
    }
  }
}

using TermKey = std::tuple<int, SubsetMask, int>;
using TermMap = std::map<TermKey, Rational>;

TermKey key_of(const LossTerm& t) { return {static_cast<int>(t.kind), t.subset, t.modality}; }

void accumulate(TermMap& into, const TermMap& from, const Rational& scale) {
  for (const auto& [key, coeff] : from) {
    auto [it, inserted] = into.emplace(key, coeff * scale);
    if (!inserted) it->second = it->second + coeff * scale;
  }
}

const TermMap& recursive_terms(const ModalitySet& set, SubsetMask subset,
                               std::map<SubsetMask, TermMap>& memo) {
  auto found = memo.find(subset);
  if (found != memo.end()) return found->second;

  TermMap acc;
  const int k = subset_size(subset);
  if (k == 1) {
    const int m = set.members(subset).front();
    acc[{static_cast<int>(TermKind::PriorKL), subset, -1}] = Rational(1);
    acc[{static_cast<int>(TermKind::Recon), subset, m}] = Rational(1);
  } else {
    const Rational inv(1, k);
    TermMap own;
    std::vector<LossTerm> subset_terms;
    append_subset_terms(subset_terms, set, subset);
    for (const LossTerm& t : subset_terms) own[key_of(t)] = t.coeff;
    accumulate(acc, own, inv);
    for (int m : set.members(subset)) {
      accumulate(acc, recursive_terms(set, subset & ~subset_bit(m), memo), inv);
    }
  }
  return memo.emplace(subset, std::move(acc)).first->second;
}

}  // namespace

LossExpression expand_vanilla(const ModalitySet& set) {
  require_size(set, 1, 1, "expand_vanilla");
  std::vector<LossTerm> terms;
  terms.push_back({TermKind::PriorKL, 1, -1, Rational(1)});
  terms.push_back({TermKind::Recon, 1, 0, Rational(1)});
  return make_expression(Variant::Vanilla, set, std::move(terms));
}

LossExpression expand_joint(const ModalitySet& set) {
  require_size(set, 2, 20, "expand_joint");
  const SubsetMask full = set.full_mask();
  std::vector<LossTerm> terms;
  terms.push_back({TermKind::PriorKL, full, -1, Rational(1)});
  for (int m = 0; m < set.size(); ++m) {
    terms.push_back({TermKind::Recon, full, m, Rational(1)});
  }
  return make_expression(Variant::Joint, set, std::move(terms));
}

LossExpression expand_jmvae(const ModalitySet& set) {
  require_size(set, 2, 2, "expand_jmvae");
  const SubsetMask full = set.full_mask();
  std::vector<LossTerm> terms = expand_joint(set).terms;
  for (int m = 0; m < set.size(); ++m) {
    terms.push_back({TermKind::CrossKL, full, m, Rational(1)});
  }
  return make_expression(Variant::JMVAE, set, std::move(terms));
}

LossExpression expand_jmvae3_style(const ModalitySet& set) {
  require_size(set, 3, 3, "expand_jmvae3_style");
  const SubsetMask full = set.full_mask();
  std::vector<LossTerm> terms = expand_joint(set).terms;
  for (int m = 0; m < set.size(); ++m) {
    terms.push_back({TermKind::CrossKL, full, m, Rational(1)});
  }
  return make_expression(Variant::JMVAE3Style, set, std::move(terms));
}

LossExpression expand_m2vae(const ModalitySet& set) {
  require_size(set, 1, kMaxExactSetSize, "expand_m2vae");
  const int n = set.size();
  std::vector<LossTerm> terms;
  for (SubsetMask subset = 1; subset <= set.full_mask(); ++subset) {
    const Rational c = coefficient(subset_size(subset), n);
    std::vector<LossTerm> unit;
    append_subset_terms(unit, set, subset);
    for (LossTerm& t : unit) {
      t.coeff = c;
      terms.push_back(t);
    }
  }
  return make_expression(Variant::M2VAE, set, std::move(terms));
}

LossExpression expand_m2vae_bruteforce(const ModalitySet& set) {
  require_size(set, 1, kMaxBruteforceSetSize, "expand_m2vae_bruteforce");
  std::map<SubsetMask, TermMap> memo;
  const TermMap& acc = recursive_terms(set, set.full_mask(), memo);
  std::vector<LossTerm> terms;
  for (const auto& [key, coeff] : acc) {
    const auto& [kind, subset, modality] = key;
    terms.push_back({static_cast<TermKind>(kind), subset, modality, coeff});
  }
  return make_expression(Variant::M2VAE, set, std::move(terms));
}

Rational coefficient(int subset_size, int set_size) {
  if (subset_size < 1 || subset_size > set_size) {
    throw std::invalid_argument("coefficient: require 1 <= subset_size <= set_size");
  }
  if (set_size > kMaxExactSetSize) {
    throw std::invalid_argument("coefficient: set_size exceeds exact-arithmetic bound of 12");
  }
  return Rational(factorial(set_size - subset_size) * factorial(subset_size - 1),
                  factorial(set_size));
}

}  // namespace mmvae
