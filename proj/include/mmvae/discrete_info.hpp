#pragma once

#include <vector>

#include "mmvae/rng.hpp"

namespace mmvae {

// Finite joint probability table over two or three variables. Entries are
// nonnegative and sum to one within 1e-12. Entropies are in nats.
class DiscreteJoint {
 public:
  DiscreteJoint(std::vector<int> cardinalities, std::vector<double> probabilities);

  static DiscreteJoint random(std::vector<int> cardinalities, RngStream& rng);

  int n_vars() const { return static_cast<int>(card_.size()); }
  int cardinality(int var) const { return card_.at(var); }
  double prob(const std::vector<int>& index) const;
  const std::vector<double>& table() const { return probs_; }

  // Marginal table over the given variables (ascending order of `vars`).
  std::vector<double> marginal(const std::vector<int>& vars) const;

 private:
  std::vector<int> card_;
  std::vector<double> probs_;  // row-major over variables in order
};

// Shannon entropy of the marginal over `vars`, in nats.
double entropy(const DiscreteJoint& joint, const std::vector<int>& vars);

// H(A | B) = H(A, B) - H(B) for disjoint variable groups.
double conditional_entropy(const DiscreteJoint& joint, const std::vector<int>& of,
                           const std::vector<int>& given);

// I(A; B) = H(A) + H(B) - H(A, B).
double mutual_information(const DiscreteJoint& joint, int a, int b);

// I(A; B | C) = H(A, C) + H(B, C) - H(A, B, C) - H(C).
double conditional_mutual_information(const DiscreteJoint& joint, int a, int b, int c);

// Two variables: H(A) + H(B) - 2 I(A, B), asserted equal to
// H(A|B) + H(B|A). Three variables: H(A|B,C) + H(B|A,C) + H(C|A,B).
double variation_of_information(const DiscreteJoint& joint);

}  // namespace mmvae
