#include "mmvae/modality.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace mmvae {

std::string to_string(Likelihood lik) {
  switch (lik) {
    case Likelihood::Bernoulli: return "bernoulli";
    case Likelihood::Gaussian: return "gaussian";
  }
  throw std::logic_error("unreachable likelihood value");
}

Likelihood likelihood_from_string(const std::string& text) {
  if (text == "bernoulli" || text == "bern") return Likelihood::Bernoulli;
  if (text == "gaussian" || text == "gauss") return Likelihood::Gaussian;
  throw std::invalid_argument("unknown likelihood: " + text);
}

ModalitySet::ModalitySet(std::vector<Modality> modalities, int latent_dim)
    : modalities_(std::move(modalities)), latent_dim_(latent_dim) {
  if (modalities_.empty()) throw std::invalid_argument("modality set must be nonempty");
  if (modalities_.size() > 20) throw std::invalid_argument("modality set too large (max 20)");
  if (latent_dim_ < 1) throw std::invalid_argument("latent_dim must be >= 1");
  std::sort(modalities_.begin(), modalities_.end(),
            [](const Modality& a, const Modality& b) { return a.name < b.name; });
  std::unordered_set<std::string> seen;
  for (const Modality& m : modalities_) {
    if (m.name.empty()) throw std::invalid_argument("modality name must be nonempty");
    if (m.data_dim < 1) throw std::invalid_argument("modality data_dim must be >= 1");
    if (!seen.insert(m.name).second) {
      throw std::invalid_argument("duplicate modality name: " + m.name);
    }
  }
}

int ModalitySet::index_of(const std::string& name) const {
  for (int i = 0; i < size(); ++i) {
    if (modalities_[i].name == name) return i;
  }
  return -1;
}

std::vector<int> ModalitySet::members(SubsetMask mask) const {
  std::vector<int> out;
  for (int i = 0; i < size(); ++i) {
    if (mask & subset_bit(i)) out.push_back(i);
  }
  return out;
}

int ModalitySet::input_dim(SubsetMask mask) const {
  int total = 0;
  for (int i : members(mask)) total += modalities_[i].data_dim;
  return total;
}

std::string ModalitySet::subset_label(SubsetMask mask) const {
  bool single_char = true;
  for (const Modality& m : modalities_) single_char &= m.name.size() == 1;
  std::string out;
  for (int i : members(mask)) {
    if (!out.empty() && !single_char) out += '+';
    out += modalities_[i].name;
  }
  return out;
}

}  // namespace mmvae
