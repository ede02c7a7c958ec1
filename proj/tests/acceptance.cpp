// Acceptance suite: every release criterion as one pass/fail line.
// Exits nonzero if any criterion fails its checks or its runtime budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "mmvae/checks.hpp"
#include "mmvae/compiler.hpp"
#include "mmvae/errors.hpp"
#include "mmvae/nets.hpp"
#include "mmvae/trainer.hpp"

using namespace mmvae;
using checks::CheckResult;

namespace {

constexpr std::uint64_t kSeed = 987654321;

ModalitySet letter_set(int n) {
  std::vector<Modality> mods;
  for (int i = 0; i < n; ++i) mods.push_back({std::string(1, char('a' + i)), 2, Likelihood::Gaussian});
  return ModalitySet(std::move(mods), 2);
}

const Rational* find_coeff(const LossExpression& e, TermKind kind, SubsetMask subset,
                           int modality = -1) {
  for (const LossTerm& t : e.terms) {
    if (t.kind == kind && t.subset == subset && t.modality == modality) return &t.coeff;
  }
  return nullptr;
}

std::vector<CheckResult> criterion_compiler_golden() {
  std::vector<CheckResult> out;
  {
    const LossExpression e = expand_m2vae(letter_set(2));
    bool ok = e.terms.size() == 9;
    for (const LossTerm& t : e.terms) ok &= t.coeff == Rational(1, 2);
    for (SubsetMask s : {0b01u, 0b10u, 0b11u}) ok &= find_coeff(e, TermKind::PriorKL, s) != nullptr;
    ok &= find_coeff(e, TermKind::Recon, 0b01, 0) && find_coeff(e, TermKind::Recon, 0b10, 1) &&
          find_coeff(e, TermKind::Recon, 0b11, 0) && find_coeff(e, TermKind::Recon, 0b11, 1) &&
          find_coeff(e, TermKind::CrossKL, 0b11, 0) && find_coeff(e, TermKind::CrossKL, 0b11, 1);
    out.push_back({"bimodal m2vae: exactly the 9 expected terms, every coefficient 1/2", ok, ""});
  }
  {
    const LossExpression e = expand_m2vae(letter_set(3));
    bool ok = e.terms.size() == 28;
    for (const LossTerm& t : e.terms) {
      const int k = subset_size(t.subset);
      ok &= t.coeff == (k == 2 ? Rational(1, 6) : Rational(1, 3));
    }
    out.push_back({"trimodal m2vae: full-set terms 1/3, pairwise 1/6, singleton 1/3", ok, ""});
  }
  return out;
}

std::vector<CheckResult> criterion_recursion_oracle() {
  std::vector<CheckResult> out;
  bool equal = true;
  for (int n = 1; n <= 6; ++n) {
    const ModalitySet set = letter_set(n);
    equal &= expand_m2vae(set).terms == expand_m2vae_bruteforce(set).terms;
  }
  out.push_back({"expand_m2vae equals the brute-force recursion term-for-term, N = 1..6", equal, ""});

  const auto factorial = [](int v) {
    std::int64_t f = 1;
    for (int i = 2; i <= v; ++i) f *= i;
    return f;
  };
  bool law = true;
  for (int n = 1; n <= 6; ++n) {
    for (int k = 1; k <= n; ++k) {
      law &= coefficient(k, n) == Rational(factorial(n - k) * factorial(k - 1), factorial(n));
    }
  }
  out.push_back({"coefficient(k, N) = (N-k)!(k-1)!/N! for all k <= N <= 6", law, ""});
  return out;
}

std::vector<CheckResult> criterion_jmvae_structure() {
  std::vector<CheckResult> out;
  {
    const LossExpression e = expand_jmvae(letter_set(2));
    bool ok = e.terms.size() == 5;
    for (const LossTerm& t : e.terms) ok &= t.coeff == Rational(1);
    ok &= find_coeff(e, TermKind::PriorKL, 0b11) && find_coeff(e, TermKind::Recon, 0b11, 0) &&
          find_coeff(e, TermKind::Recon, 0b11, 1) && find_coeff(e, TermKind::CrossKL, 0b11, 0) &&
          find_coeff(e, TermKind::CrossKL, 0b11, 1);
    out.push_back({"jmvae bimodal: joint terms plus both cross-KL terms, all unit weight", ok, ""});
  }
  {
    const ModalitySet trio = letter_set(3);
    const LossExpression e = expand_jmvae3_style(trio);
    const auto inventory = encoder_inventory(e);
    bool ok = inventory == std::vector<SubsetMask>{0b011, 0b101, 0b110, 0b111};

    // a bundle built from this expression rejects singleton sources
    SyntheticSpec spec;
    spec.generator = "shared_latent_linear";
    spec.set = trio;
    spec.samples = 32;
    spec.noise = {0.2};
    spec.seed = kSeed;
    const Dataset dataset = generate(spec);
    ModelBundle bundle = make_bundle(e, {{8}, Activation::Tanh});
    init_params(bundle, kSeed);
    bool inventory_errors = true;
    for (SubsetMask singleton : {0b001u, 0b010u, 0b100u}) {
      try {
        evaluate_cross_modal(bundle, dataset, singleton, 0);
        inventory_errors = false;
      } catch (const inventory_error&) {
      }
    }
    bool pairs_ok = true;
    for (SubsetMask mask : {0b011u, 0b101u, 0b110u, 0b111u}) {
      try {
        evaluate_cross_modal(bundle, dataset, mask, 0);
      } catch (...) {
        pairs_ok = false;
      }
    }
    out.push_back({"jmvae3-style inventory holds no singleton encoders; singleton sources raise "
                   "the inventory error",
                   ok && inventory_errors && pairs_ok, ""});
  }
  return out;
}

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;  // 0: no stated budget
  std::function<std::vector<CheckResult>()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "compiler golden expansions (exact rationals)", 1.0, criterion_compiler_golden},
      {2, "recursion oracle and closed-form coefficients", 10.0, criterion_recursion_oracle},
      {3, "jmvae structure and jmvae3 inventory behaviour", 0.0, criterion_jmvae_structure},
      {4, "gaussian kl closed form vs monte carlo (200 pairs, n=1e5, 4 SE)", 30.0,
       [] { return checks::kl_suite(200, 100000, 4.0, kSeed); }},
      {5, "gradient fidelity vs central differences (1e3 coords)", 60.0,
       [] { return checks::gradient_suite(1000, kSeed); }},
      {6, "bound witness on the 1-latent 2-modality linear-gaussian model", 60.0,
       [] { return checks::bound_suite(100, 20000, kSeed); }},
      {7, "training sanity: m2vae on shared-latent data (n=2000, 2000 steps)", 300.0,
       [] { return checks::training_sanity_check(2000, 2000, kSeed); }},
      {8, "variation-of-information identities", 0.0, [] { return checks::vi_suite(100, kSeed); }},
      {9, "byte-identical training reruns", 0.0, [] { return checks::determinism_check(kSeed); }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<CheckResult> results;
    std::string error;
    try {
      results = c.run();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    bool passed = error.empty() && !results.empty();
    for (const CheckResult& r : results) passed &= r.passed;
    const bool in_budget = c.budget_seconds == 0.0 || elapsed < c.budget_seconds;
    passed &= in_budget;

    std::printf("[%s] criterion %d: %s (%.2f s)\n", passed ? "PASS" : "FAIL", c.id, c.name.c_str(),
                elapsed);
    if (!error.empty()) std::printf("       threw: %s\n", error.c_str());
    if (!in_budget) std::printf("       over budget of %.0f s\n", c.budget_seconds);
    for (const CheckResult& r : results) {
      if (!r.passed || !passed) {
        std::printf("       [%s] %s%s%s\n", r.passed ? "ok" : "FAIL", r.name.c_str(),
                    r.detail.empty() ? "" : " — ", r.detail.c_str());
      }
    }
    if (!passed) ++failures;
  }

  if (failures == 0) {
    std::printf("acceptance: all %zu criteria passed\n", criteria.size());
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", failures);
  return 1;
}
