#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace mmvae {

enum class Likelihood { Bernoulli, Gaussian };

std::string to_string(Likelihood lik);
Likelihood likelihood_from_string(const std::string& text);

// One observable data channel.
struct Modality {
  std::string name;
  int data_dim = 0;
  Likelihood likelihood = Likelihood::Gaussian;

  friend bool operator==(const Modality&, const Modality&) = default;
};

// Bitmask over the canonical (lexicographic) modality order of a ModalitySet.
using SubsetMask = std::uint32_t;

inline int subset_size(SubsetMask mask) { return std::popcount(mask); }
inline SubsetMask subset_bit(int index) { return SubsetMask(1) << index; }

// The modalities of one setup plus the shared latent width. Modalities are
// kept sorted by name so subset masks are deterministic.
class ModalitySet {
 public:
  ModalitySet() = default;
  ModalitySet(std::vector<Modality> modalities, int latent_dim);

  int size() const { return static_cast<int>(modalities_.size()); }
  int latent_dim() const { return latent_dim_; }
  const Modality& modality(int index) const { return modalities_.at(index); }
  const std::vector<Modality>& modalities() const { return modalities_; }

  int index_of(const std::string& name) const;  // -1 when absent
  SubsetMask full_mask() const { return (SubsetMask(1) << size()) - 1; }
  bool valid_subset(SubsetMask mask) const { return mask != 0 && (mask & ~full_mask()) == 0; }
  std::vector<int> members(SubsetMask mask) const;
  int input_dim(SubsetMask mask) const;  // sum of member data dims

  // Display label for a subset, e.g. "ab". Names are joined with '+' when
  // any of them is longer than one character.
  std::string subset_label(SubsetMask mask) const;

  friend bool operator==(const ModalitySet&, const ModalitySet&) = default;

 private:
  std::vector<Modality> modalities_;
  int latent_dim_ = 0;
};

}  // namespace mmvae
