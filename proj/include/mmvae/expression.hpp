#pragma once

#include <string>
#include <vector>

#include "mmvae/modality.hpp"
#include "mmvae/rational.hpp"

namespace mmvae {

// The three compiled term shapes:
//   PriorKL(S)    : KL(q(z|S) || p(z)),        enters the objective negatively
//   Recon(S, m)   : E_{q(z|S)}[log p(m|z)],    enters positively
//   CrossKL(S, m) : KL(q(z|S) || q(z|S\{m})),  enters negatively
enum class TermKind : int { PriorKL = 0, Recon = 1, CrossKL = 2 };

enum class Variant { Vanilla, Joint, JMVAE, JMVAE3Style, M2VAE };

std::string to_string(Variant variant);
Variant variant_from_string(const std::string& text);
std::string to_string(TermKind kind);
TermKind term_kind_from_string(const std::string& text);

// One additive piece of a compiled objective. `modality` is the recon target
// or the dropped member for cross terms, -1 for prior terms. Coefficients are
// positive; the kind carries the sign.
struct LossTerm {
  TermKind kind = TermKind::PriorKL;
  SubsetMask subset = 0;
  int modality = -1;
  Rational coeff;

  friend bool operator==(const LossTerm&, const LossTerm&) = default;
};

inline int term_sign(TermKind kind) { return kind == TermKind::Recon ? 1 : -1; }
inline SubsetMask cross_reference(const LossTerm& t) { return t.subset & ~subset_bit(t.modality); }

bool term_key_less(const LossTerm& a, const LossTerm& b);
bool same_term_key(const LossTerm& a, const LossTerm& b);

struct LossExpression {
  Variant variant = Variant::Vanilla;
  ModalitySet set;
  std::vector<LossTerm> terms;  // canonical order, duplicate keys merged

  friend bool operator==(const LossExpression&, const LossExpression&) = default;
};

// Merges duplicate term keys by exact rational addition, sorts canonically
// (kind, subset mask, modality index) and validates structural invariants.
LossExpression make_expression(Variant variant, ModalitySet set, std::vector<LossTerm> terms);

// Subsets that must own an encoder: every term subset plus the reduced
// subset referenced by each cross term. Ascending mask order.
std::vector<SubsetMask> encoder_inventory(const LossExpression& expr);

// Modality indices that must own a decoder (recon targets), ascending.
std::vector<int> decoder_inventory(const LossExpression& expr);

// Stable display name, e.g. "recon[ab->a]", "kl[ab||prior]", "kl[ab||b]".
std::string term_name(const LossExpression& expr, const LossTerm& term);

}  // namespace mmvae
