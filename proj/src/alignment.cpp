#include "mcalign/alignment.hpp"

#include "mcalign/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mcalign {

std::string to_string(CompletionRule rule) {
  switch (rule) {
    case CompletionRule::Ascending: return "ascending";
    case CompletionRule::PreferIdentity: return "prefer-identity";
  }
  return "ascending";
}

CompletionRule completion_rule_from_string(const std::string& name) {
  if (name == "ascending") return CompletionRule::Ascending;
  if (name == "prefer-identity") return CompletionRule::PreferIdentity;
  throw ValidationError("unknown completion rule '" + name + "'");
}

PermutationMap complete_permutation(const std::vector<std::optional<int>>& partial,
                                    CompletionRule rule) {
  const int n = static_cast<int>(partial.size());
  std::vector<char> source_used(n, 0);
  for (const auto& entry : partial) {
    if (!entry) continue;
    if (*entry < 0 || *entry >= n) throw ValidationError("complete_permutation: index out of range");
    if (source_used[*entry]) throw ValidationError("complete_permutation: partial map is not injective");
    source_used[*entry] = 1;
  }

  std::vector<int> forward(n, -1);
  for (int i = 0; i < n; ++i)
    if (partial[i]) forward[i] = *partial[i];

  if (rule == CompletionRule::PreferIdentity) {
    for (int i = 0; i < n; ++i) {
      if (forward[i] == -1 && !source_used[i]) {
        forward[i] = i;
        source_used[i] = 1;
      }
    }
  }
  int next_source = 0;
  for (int i = 0; i < n; ++i) {
    if (forward[i] != -1) continue;
    while (source_used[next_source]) ++next_source;
    forward[i] = next_source;
    source_used[next_source] = 1;
  }
  return PermutationMap(std::move(forward));
}

std::vector<int> threshold_set(const Vector& mu, double t) {
  std::vector<int> idx;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (mu(i) >= t) idx.push_back(static_cast<int>(i));
  return idx;
}

namespace {

// Matches the rows of the source and target V factors and writes the
// resulting pairs into a full-size partial map.
std::vector<std::optional<int>> match_blocks(const ChainSummary& source, const std::vector<int>& source_idx,
                                             const ChainSummary& target, const std::vector<int>& target_idx,
                                             int n, double* cost_out) {
  const auto problem = AssignmentProblem::from_rows(source.svd.v, target.svd.v);
  const auto solution = solve_assignment(problem);
  if (cost_out) *cost_out = solution.cost;
  std::vector<std::optional<int>> partial(n);
  for (std::size_t i = 0; i < target_idx.size(); ++i) {
    partial[target_idx[i]] = source_idx[solution.assignment(static_cast<int>(i))];
  }
  return partial;
}

}  // namespace

PermutationMap exact_recover(const Matrix& m, const Matrix& m_permuted, const Vector& p0,
                             double tol_alpha, double tol_beta) {
  if (m.rows() != m.cols() || m_permuted.rows() != m.rows() || m_permuted.cols() != m.cols()) {
    throw DimensionError("exact_recover: chains must be square and of equal size");
  }
  const int n = static_cast<int>(m.rows());
  require_row_stochastic(m_permuted, "exact_recover: permuted chain");

  const auto source = scc_restrict(m, p0);
  // The target's initial distribution is unknown; its recurrent states are
  // the closed classes reachable from anywhere.
  const Vector everywhere = Vector::Constant(n, 1.0 / n);
  const auto target = scc_restrict(m_permuted, everywhere);
  if (source.indices.size() != target.indices.size()) {
    throw RecoveryError("exact_recover: recurrent state sets differ in size (" +
                        std::to_string(source.indices.size()) + " vs " +
                        std::to_string(target.indices.size()) + ")");
  }

  const Vector mu = subvector(stationary_distribution(m, p0), source.indices);
  const Vector mu_hat = subvector(stationary_distribution(m_permuted, everywhere), target.indices);
  const ChainSummary l1 = rescale(source.block, mu);
  const ChainSummary l2 = rescale(target.block, mu_hat);
  const auto cert = friendliness(l1, tol_alpha, tol_beta);
  if (!cert.is_friendly) {
    throw PreconditionError("exact_recover: chain is not friendly (alpha=" + std::to_string(cert.alpha) +
                            ", beta=" + std::to_string(cert.beta) + ")");
  }

  const auto partial = match_blocks(l1, source.indices, l2, target.indices, n, nullptr);
  PermutationMap pi = complete_permutation(partial, CompletionRule::Ascending);
  const double residual = (conjugate(m, pi) - m_permuted).norm();
  if (!(residual <= 1e-8)) {
    throw RecoveryError("exact_recover: verification failed, ||Pi^T M Pi - M_permuted||_F = " +
                        std::to_string(residual));
  }
  return pi;
}

AlignmentResult ppl_from_estimate(const TabularMdp& mdp, const StochasticPolicy& policy,
                                  const PplConfig& config, const EmpiricalChain& est) {
  if (!(config.t > 0.0)) throw ValidationError("ppl: threshold t must be positive");
  const int n = mdp.n_states();
  if (est.n_states() != n || est.mu_hat.size() != n) {
    throw DimensionError("ppl: estimate has " + std::to_string(est.n_states()) +
                         " states, mdp has " + std::to_string(n));
  }

  const Matrix m = induced_chain(mdp, policy);
  const Vector mu = discounted_stationary(mdp, policy);

  const auto source_idx = threshold_set(mu, config.t);
  if (source_idx.empty()) {
    throw DegenerateThresholdError("ppl: no source state has stationary mass >= t");
  }
  const auto target_idx = threshold_set(est.mu_hat, config.t);
  if (target_idx.size() != source_idx.size()) {
    throw ThresholdMismatchError("ppl: |I_t| = " + std::to_string(source_idx.size()) +
                                 " but |I_hat_t| = " + std::to_string(target_idx.size()));
  }
  if (est.m > 0) {
    for (int i : target_idx) {
      if (est.counts.row(i).sum() == 0) throw InternalError("ppl: unvisited state above threshold");
    }
  }

  const ChainSummary l_t = rescale(principal_submatrix(m, source_idx), subvector(mu, source_idx));
  const ChainSummary l_hat_t =
      rescale(principal_submatrix(est.m_hat, target_idx), subvector(est.mu_hat, target_idx));

  AlignmentResult out{PermutationMap::identity(n), target_idx, source_idx, policy,
                      friendliness(l_t, config.tol_alpha, config.tol_beta), {}};
  out.diagnostics.m = est.m;
  out.diagnostics.matched = static_cast<int>(source_idx.size());
  out.diagnostics.gap = (mu.array() - config.t).abs().minCoeff();
  out.diagnostics.empirical_certificate = friendliness(l_hat_t, config.tol_alpha, config.tol_beta);

  const auto partial =
      match_blocks(l_t, source_idx, l_hat_t, target_idx, n, &out.diagnostics.assignment_cost);
  out.pi_hat = complete_permutation(partial, config.completion_rule);
  out.policy_hat = transport_policy(policy, out.pi_hat);
  return out;
}

AlignmentResult ppl(const TabularMdp& mdp, const StochasticPolicy& policy, const PplConfig& config,
                    const std::vector<int>& trajectory) {
  if (trajectory.size() < 2) throw ValidationError("ppl: trajectory needs m >= 2 states");
  return ppl_from_estimate(mdp, policy, config, estimate(trajectory, mdp.n_states(), config.estimator));
}

BoundCheck imitation_loss_bound_check(const TabularMdp& mdp, const StochasticPolicy& policy,
                                      const PermutationMap& pi_star, const PermutationMap& pi_hat,
                                      double t) {
  if (pi_star.size() != mdp.n_states() || pi_hat.size() != mdp.n_states()) {
    throw DimensionError("bound_check: permutation size mismatch");
  }
  BoundCheck check;
  const double g = mdp.gamma();
  check.bound = 2.0 * t * mdp.n_states() / ((1.0 - g) * (1.0 - g));
  check.loss = imitation_loss(mdp, policy, pi_star, transport_policy(policy, pi_hat));

  const Vector mu = discounted_stationary(mdp, policy);
  const PermutationMap star_inv = pi_star.inverse();
  const PermutationMap hat_inv = pi_hat.inverse();
  check.hypothesis_met = true;
  for (int s : threshold_set(mu, t)) {
    if (star_inv(s) != hat_inv(s)) {
      check.hypothesis_met = false;
      break;
    }
  }
  check.holds = check.loss <= check.bound + 1e-9;
  return check;
}

}  // namespace mcalign
