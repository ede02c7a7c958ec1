#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmvae::checks {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Expansion golden values, recursion-oracle equality for N = 1..6, the
// closed-form coefficient law and serialization round trips.
std::vector<CheckResult> compiler_suite();

// Exact 1/2 bimodal value plus closed-form/Monte-Carlo agreement on random
// Gaussian pairs within se_multiple standard errors.
std::vector<CheckResult> kl_suite(int pairs, int samples, double se_multiple, std::uint64_t seed);

// Reverse-mode vs central finite differences: tanh bundle below 1e-4 and the
// linear-Gaussian smooth case below 1e-6, at `coords` random coordinates.
std::vector<CheckResult> gradient_suite(int coords, std::uint64_t seed);

// Bound witness on a 1-latent, 2-modality linear-Gaussian model: random
// encoders never beat the exact likelihood (within 3 MC standard errors) and
// the analytic posterior closes the gap.
std::vector<CheckResult> bound_suite(int encoders, int samples, std::uint64_t seed);

// Variation-of-information identities on random joints plus the independent
// uniform-bit endpoints.
std::vector<CheckResult> vi_suite(int joints, std::uint64_t seed);

// Desk-scale end-to-end run: smoothed bound improvement and a >= 2x
// cross-modal error reduction over the untrained baseline on held-out data.
std::vector<CheckResult> training_sanity_check(int samples, int steps, std::uint64_t seed);

// Two identical train runs produce byte-identical metrics and checkpoints.
std::vector<CheckResult> determinism_check(std::uint64_t seed);

// "compiler", "kl", "grad", "bound", "vi" or "all" at default strengths.
std::vector<CheckResult> run_suite(const std::string& name);

}  // namespace mmvae::checks
