#include "mcalign/generators.hpp"

#include "mcalign/counterexample.hpp"
#include "mcalign/errors.hpp"
#include "mcalign/sampling.hpp"

#include <cmath>
#include <string>

namespace mcalign {

std::string to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::RandomFriendlyChain: return "random-friendly-chain";
    case GeneratorKind::RandomMdp: return "random-mdp";
    case GeneratorKind::Counterexample: return "counterexample";
  }
  return "random-friendly-chain";
}

GeneratorKind generator_kind_from_string(const std::string& name) {
  if (name == "random-friendly-chain") return GeneratorKind::RandomFriendlyChain;
  if (name == "random-mdp") return GeneratorKind::RandomMdp;
  if (name == "counterexample") return GeneratorKind::Counterexample;
  throw ValidationError("unknown generator kind '" + name + "'");
}

namespace {

void validate(const GeneratorSpec& spec) {
  if (spec.n_states < 1) throw ValidationError("generator: n_states must be positive");
  if (spec.n_actions < 1) throw ValidationError("generator: n_actions must be positive");
  if (spec.retry_cap < 1) throw ValidationError("generator: retry_cap must be positive");
  if (spec.low_occupancy_states < 0 || spec.low_occupancy_states >= spec.n_states) {
    throw ValidationError("generator: low_occupancy_states must lie in [0, n_states)");
  }
  if (!(spec.low_occupancy_scale > 0.0 && spec.low_occupancy_scale <= 1.0)) {
    throw ValidationError("generator: low_occupancy_scale must lie in (0, 1]");
  }
}

GeneratedInstance draw(const GeneratorSpec& spec, Rng& rng) {
  const int n = spec.n_states;
  const int first_low = n - spec.low_occupancy_states;
  auto damp = [&](Vector row) {
    for (int j = first_low; j < n; ++j) row(j) *= spec.low_occupancy_scale;
    return Vector(row / row.sum());
  };

  std::vector<Matrix> dyn;
  for (int a = 0; a < spec.n_actions; ++a) {
    Matrix pa(n, n);
    for (int s = 0; s < n; ++s) pa.row(s) = damp(rng.dirichlet(n)).transpose();
    dyn.push_back(std::move(pa));
  }
  const Vector p0 = damp(rng.dirichlet(n));
  Matrix probs(n, spec.n_actions);
  for (int s = 0; s < n; ++s) probs.row(s) = rng.dirichlet(spec.n_actions).transpose();

  TabularMdp mdp(std::move(dyn), p0, spec.gamma);
  StochasticPolicy policy(std::move(probs));
  auto cert = chain_certificate(mdp, policy, spec.min_alpha, spec.min_beta);
  return GeneratedInstance{std::move(mdp), std::move(policy), cert, 1};
}

}  // namespace

FriendlinessCertificate chain_certificate(const TabularMdp& mdp, const StochasticPolicy& policy,
                                          double tol_alpha, double tol_beta) {
  return friendliness(rescale(induced_chain(mdp, policy), discounted_stationary(mdp, policy)),
                      tol_alpha, tol_beta);
}

GeneratedInstance generate_random_mdp(const GeneratorSpec& spec, std::uint64_t seed) {
  validate(spec);
  Rng rng(seed, 0);
  return draw(spec, rng);
}

GeneratedInstance generate_random_friendly(const GeneratorSpec& spec, std::uint64_t seed) {
  validate(spec);
  double best_alpha = -1.0, best_beta = -1.0;
  for (int attempt = 0; attempt < spec.retry_cap; ++attempt) {
    Rng rng(seed, static_cast<std::uint64_t>(attempt));
    GeneratedInstance inst = draw(spec, rng);
    inst.attempts = attempt + 1;
    if (inst.certificate.is_friendly) return inst;
    if (std::min(inst.certificate.alpha, inst.certificate.beta) > std::min(best_alpha, best_beta)) {
      best_alpha = inst.certificate.alpha;
      best_beta = inst.certificate.beta;
    }
  }
  throw GenerationError("generator: no friendly instance in " + std::to_string(spec.retry_cap) +
                        " attempts (best alpha=" + std::to_string(best_alpha) +
                        ", beta=" + std::to_string(best_beta) + ")");
}

GeneratedInstance generate(const GeneratorSpec& spec, std::uint64_t seed) {
  switch (spec.kind) {
    case GeneratorKind::RandomFriendlyChain: return generate_random_friendly(spec, seed);
    case GeneratorKind::RandomMdp: return generate_random_mdp(spec, seed);
    case GeneratorKind::Counterexample: {
      const Counterexample ce = build_counterexample({spec.epsilon, spec.gamma});
      // Leaves never return except through restarts, so certify on the
      // recurrent block only.
      const Matrix m = induced_chain(ce.source, ce.behavior);
      const auto restricted = scc_restrict(m, ce.source.p0());
      const Vector mu = subvector(discounted_stationary(ce.source, ce.behavior), restricted.indices);
      auto cert = friendliness(rescale(restricted.block, mu), spec.min_alpha, spec.min_beta);
      return GeneratedInstance{ce.source, ce.behavior, cert, 1};
    }
  }
  throw InternalError("generator: unhandled kind");
}

}  // namespace mcalign
