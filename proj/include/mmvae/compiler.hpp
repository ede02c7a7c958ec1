#pragma once

#include "mmvae/expression.hpp"

namespace mmvae {

// Single-modality bound: one prior KL plus one reconstruction term.
LossExpression expand_vanilla(const ModalitySet& set);

// Joint bound for N >= 2: one prior KL on the full encoder plus one
// reconstruction term per modality.
LossExpression expand_joint(const ModalitySet& set);

// Bimodal joint bound extended with the two cross KL terms that pull the
// joint posterior toward each unimodal posterior. N = 2 only.
LossExpression expand_jmvae(const ModalitySet& set);

// Trimodal analogue in which each cross KL drops one modality from the full
// set, so only pairwise encoders are referenced and no singleton encoder
// exists in the inventory. N = 3 only.
LossExpression expand_jmvae3_style(const ModalitySet& set);

// Recursive subset-averaged bound: every nonempty subset S contributes a
// prior KL, one reconstruction per member, and (for |S| >= 2) one cross KL
// per member, all weighted by coefficient(|S|, N). 1 <= N <= 12.
LossExpression expand_m2vae(const ModalitySet& set);

// Literal evaluation of the recursion
//   L(S) = (1/|S|) * (vi_terms(S) + sum_m L(S \ {m})),  L({m}) = vanilla({m})
// merging duplicate terms by exact rational addition. Exponential; N <= 8.
// Serves as the independent oracle for expand_m2vae.
LossExpression expand_m2vae_bruteforce(const ModalitySet& set);

// Closed-form subset weight (N-k)!(k-1)!/N! for subsets of size k out of N.
Rational coefficient(int subset_size, int set_size);

}  // namespace mmvae
