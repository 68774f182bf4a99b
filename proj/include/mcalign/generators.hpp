#pragma once

#include "mcalign/chain_spectral.hpp"
#include "mcalign/tabular_mdp.hpp"

#include <cstdint>
#include <string>

namespace mcalign {

enum class GeneratorKind { RandomFriendlyChain, RandomMdp, Counterexample };

std::string to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(const std::string& name);

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::RandomFriendlyChain;
  int n_states = 6;
  int n_actions = 2;
  double gamma = 0.9;
  int retry_cap = 50;
  /// Certificate tolerances the generated chain must clear.
  double min_alpha = kDefaultTolAlpha;
  double min_beta = kDefaultTolBeta;
  /// The last k states receive inflow and restart mass scaled by
  /// low_occupancy_scale, giving them small stationary mass.
  int low_occupancy_states = 0;
  double low_occupancy_scale = 0.1;
  double epsilon = 0.1;  ///< counterexample only
};

struct GeneratedInstance {
  TabularMdp mdp;
  StochasticPolicy policy;
  FriendlinessCertificate certificate;  ///< of the full rescaled chain
  int attempts = 1;
};

/// Dirichlet(1) dynamics and policy rows with a dense Dirichlet restart
/// distribution, so the induced chain is ergodic. No friendliness check.
GeneratedInstance generate_random_mdp(const GeneratorSpec& spec, std::uint64_t seed);

/// Redraws (stream = attempt index) until the induced chain's rescaled matrix
/// is (min_alpha, min_beta)-friendly. Throws GenerationError with the best
/// certificate seen once retry_cap attempts are exhausted.
GeneratedInstance generate_random_friendly(const GeneratorSpec& spec, std::uint64_t seed);

/// Dispatches on spec.kind.
GeneratedInstance generate(const GeneratorSpec& spec, std::uint64_t seed);

/// Certificate of the chain induced by (mdp, policy), all states retained.
FriendlinessCertificate chain_certificate(const TabularMdp& mdp, const StochasticPolicy& policy,
                                          double tol_alpha = kDefaultTolAlpha,
                                          double tol_beta = kDefaultTolBeta);

}  // namespace mcalign
