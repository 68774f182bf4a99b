#pragma once

#include "mcalign/chain_spectral.hpp"
#include "mcalign/hungarian.hpp"
#include "mcalign/sampling.hpp"
#include "mcalign/tabular_mdp.hpp"

#include <optional>
#include <string>
#include <vector>

namespace mcalign {

/// How states outside the matched set are filled in once the partial
/// permutation is known.
enum class CompletionRule {
  /// Remaining target indices, ascending, go to remaining source indices,
  /// ascending.
  Ascending,
  /// Keep i -> i wherever i is still free on both sides, then Ascending.
  PreferIdentity,
};

std::string to_string(CompletionRule rule);
CompletionRule completion_rule_from_string(const std::string& name);

/// partial[i] = source index for target index i, or nullopt when unmatched.
PermutationMap complete_permutation(const std::vector<std::optional<int>>& partial,
                                    CompletionRule rule = CompletionRule::Ascending);

/// Recovers Pi* from M and M_permuted = Pi*^T M Pi* when the rescaled chain
/// is friendly. Both chains are restricted to their recurrent states first;
/// states outside the restriction are placed by the completion rule. The
/// result is verified: || Pi^T M Pi - M_permuted ||_F <= 1e-8.
///
/// Throws PreconditionError if M is not friendly under the given tolerances,
/// RecoveryError if verification fails.
PermutationMap exact_recover(const Matrix& m, const Matrix& m_permuted, const Vector& p0,
                             double tol_alpha = kDefaultTolAlpha,
                             double tol_beta = kDefaultTolBeta);

struct PplConfig {
  double t = 0.0;  ///< occupancy threshold, > 0
  double tol_alpha = kDefaultTolAlpha;
  double tol_beta = kDefaultTolBeta;
  CompletionRule completion_rule = CompletionRule::Ascending;
  StationaryEstimator estimator = StationaryEstimator::TransitionCounts;
};

struct PplDiagnostics {
  long m = 0;
  int matched = 0;                ///< |I_t| = |I_hat_t|
  double gap = 0.0;               ///< min_i |mu_i - t| over all source states
  FriendlinessCertificate empirical_certificate;  ///< of the estimated block
  double assignment_cost = 0.0;
};

struct AlignmentResult {
  PermutationMap pi_hat;
  std::vector<int> matched_indices;  ///< I_hat_t, target domain, ascending
  std::vector<int> source_indices;   ///< I_t, source domain, ascending
  StochasticPolicy policy_hat;
  FriendlinessCertificate certificate;  ///< of the source block L_t
  PplDiagnostics diagnostics;
};

/// Permuted policy learning from an estimated target chain. Thresholds both
/// stationary vectors at t, rescales the principal blocks without
/// renormalizing rows, matches oriented right singular vectors by linear
/// assignment and transports the source policy through the completed map.
///
/// An unfriendly source block is recorded in the certificate; recovery is
/// still attempted.
AlignmentResult ppl_from_estimate(const TabularMdp& mdp, const StochasticPolicy& policy,
                                  const PplConfig& config, const EmpiricalChain& estimate);

/// Same, estimating the chain from a target-domain trajectory (m >= 2).
AlignmentResult ppl(const TabularMdp& mdp, const StochasticPolicy& policy,
                    const PplConfig& config, const std::vector<int>& trajectory);

/// I_t: states with mu_i >= t, ascending.
std::vector<int> threshold_set(const Vector& mu, double t);

struct BoundCheck {
  double loss = 0.0;
  double bound = 0.0;            ///< 2 t |S| / (1 - gamma)^2
  bool hypothesis_met = false;   ///< pi_hat^{-1}(s) = pi*^{-1}(s) on I_t
  bool holds = false;            ///< loss <= bound + 1e-9
};

/// Evaluates the threshold imitation bound for playing the source policy
/// through pi_hat when pi_star is the true map. When hypothesis_met is false
/// the bound does not apply and `holds` is only informative.
BoundCheck imitation_loss_bound_check(const TabularMdp& mdp, const StochasticPolicy& policy,
                                      const PermutationMap& pi_star, const PermutationMap& pi_hat,
                                      double t);

}  // namespace mcalign
