#include "mmvae/expression.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>
#include <tuple>

namespace mmvae {

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::Vanilla: return "vanilla";
    case Variant::Joint: return "joint";
    case Variant::JMVAE: return "jmvae";
    case Variant::JMVAE3Style: return "jmvae3";
    case Variant::M2VAE: return "m2vae";
  }
  throw std::logic_error("unreachable variant value");
}

Variant variant_from_string(const std::string& text) {
  if (text == "vanilla") return Variant::Vanilla;
  if (text == "joint") return Variant::Joint;
  if (text == "jmvae") return Variant::JMVAE;
  if (text == "jmvae3") return Variant::JMVAE3Style;
  if (text == "m2vae") return Variant::M2VAE;
  throw std::invalid_argument("unknown variant: " + text);
}

std::string to_string(TermKind kind) {
  switch (kind) {
    case TermKind::PriorKL: return "prior_kl";
    case TermKind::Recon: return "recon";
    case TermKind::CrossKL: return "cross_kl";
  }
  throw std::logic_error("unreachable term kind");
}

TermKind term_kind_from_string(const std::string& text) {
  if (text == "prior_kl") return TermKind::PriorKL;
  if (text == "recon") return TermKind::Recon;
  if (text == "cross_kl") return TermKind::CrossKL;
  throw std::invalid_argument("unknown term kind: " + text);
}

bool term_key_less(const LossTerm& a, const LossTerm& b) {
  return std::tuple(static_cast<int>(a.kind), a.subset, a.modality) <
         std::tuple(static_cast<int>(b.kind), b.subset, b.modality);
}

bool same_term_key(const LossTerm& a, const LossTerm& b) {
  return a.kind == b.kind && a.subset == b.subset && a.modality == b.modality;
}

namespace {

void validate_term(const LossTerm& t, const ModalitySet& set) {
  if (!set.valid_subset(t.subset)) {
    throw std::invalid_argument("term subset must be a nonempty subset of the modality set");
  }
  switch (t.kind) {
    case TermKind::PriorKL:
      if (t.modality != -1) throw std::invalid_argument("prior term carries no modality");
      break;
    case TermKind::Recon:
      if (t.modality < 0 || t.modality >= set.size() || !(t.subset & subset_bit(t.modality))) {
        throw std::invalid_argument("recon target must be a member of the term subset");
      }
      break;
    case TermKind::CrossKL:
      if (subset_size(t.subset) < 2) {
        throw std::invalid_argument("cross term requires a subset of size >= 2");
      }
      if (t.modality < 0 || t.modality >= set.size() || !(t.subset & subset_bit(t.modality))) {
        throw std::invalid_argument("dropped modality must be a member of the term subset");
      }
      break;
  }
  if (!t.coeff.positive()) throw std::invalid_argument("term coefficient must be positive");
}

}  // namespace

LossExpression make_expression(Variant variant, ModalitySet set, std::vector<LossTerm> terms) {
  std::sort(terms.begin(), terms.end(), term_key_less);
  std::vector<LossTerm> merged;
  for (LossTerm& t : terms) {
    if (!merged.empty() && same_term_key(merged.back(), t)) {
      merged.back().coeff = merged.back().coeff + t.coeff;
    } else {
      merged.push_back(std::move(t));
    }
  }
  for (const LossTerm& t : merged) validate_term(t, set);
  return LossExpression{variant, std::move(set), std::move(merged)};
}

std::vector<SubsetMask> encoder_inventory(const LossExpression& expr) {
  std::set<SubsetMask> masks;
  for (const LossTerm& t : expr.terms) {
    masks.insert(t.subset);
    if (t.kind == TermKind::CrossKL) masks.insert(cross_reference(t));
  }
  return std::vector<SubsetMask>(masks.begin(), masks.end());
}

std::vector<int> decoder_inventory(const LossExpression& expr) {
  std::set<int> targets;
  for (const LossTerm& t : expr.terms) {
    if (t.kind == TermKind::Recon) targets.insert(t.modality);
  }
  return std::vector<int>(targets.begin(), targets.end());
}

std::string term_name(const LossExpression& expr, const LossTerm& term) {
  const std::string subset = expr.set.subset_label(term.subset);
  switch (term.kind) {
    case TermKind::PriorKL: return "kl[" + subset + "||prior]";
    case TermKind::Recon: return "recon[" + subset + "->" + expr.set.modality(term.modality).name + "]";
    case TermKind::CrossKL: return "kl[" + subset + "||" + expr.set.subset_label(cross_reference(term)) + "]";
  }
  throw std::logic_error("unreachable term kind");
}

}  // namespace mmvae
