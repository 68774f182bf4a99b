#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace mcalign {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tolerance used when validating row sums and probability vectors.
inline constexpr double kStochasticTol = 1e-9;

/// Finite MDP without reward: per-action transition matrices P_a[s][s'],
/// an initial distribution p0 and a discount gamma in (0, 1).
class TabularMdp {
 public:
  /// Validates on construction; inputs that are not stochastic within
  /// kStochasticTol are rejected, never renormalized.
  TabularMdp(std::vector<Matrix> dynamics, Vector p0, double gamma);

  int n_states() const noexcept { return static_cast<int>(p0_.size()); }
  int n_actions() const noexcept { return static_cast<int>(dynamics_.size()); }
  double gamma() const noexcept { return gamma_; }
  const Vector& p0() const noexcept { return p0_; }
  const Matrix& transition(int action) const { return dynamics_.at(action); }
  const std::vector<Matrix>& dynamics() const noexcept { return dynamics_; }

  /// Probability of s -> s' under action a.
  double p(int s, int a, int s_next) const { return dynamics_[a](s, s_next); }

  /// Block form [P_a1 | ... | P_aA], |S| x |S||A|.
  Matrix block_dynamics() const;

  /// Same dynamics with a different discount.
  TabularMdp with_gamma(double gamma) const;

 private:
  std::vector<Matrix> dynamics_;
  Vector p0_;
  double gamma_;
};

/// Per-state action distribution phi[s][a].
class StochasticPolicy {
 public:
  explicit StochasticPolicy(Matrix probs);

  static StochasticPolicy uniform(int n_states, int n_actions);

  int n_states() const noexcept { return static_cast<int>(probs_.rows()); }
  int n_actions() const noexcept { return static_cast<int>(probs_.cols()); }
  const Matrix& probs() const noexcept { return probs_; }
  double operator()(int s, int a) const { return probs_(s, a); }

  /// Block matrix Phi = [Phi_a1 | ... | Phi_aA]^T with (Phi_a)_ii = phi(a|s_i);
  /// shape |S||A| x |S|.
  Matrix block_matrix() const;

  bool operator==(const StochasticPolicy&) const = default;

 private:
  Matrix probs_;
};

/// Bijection from target states to source states: forward[i] = j means the
/// target state i corresponds to source state j.
class PermutationMap {
 public:
  PermutationMap() = default;
  explicit PermutationMap(std::vector<int> forward);

  static PermutationMap identity(int n);

  int size() const noexcept { return static_cast<int>(forward_.size()); }
  int operator()(int i) const { return forward_[i]; }
  const std::vector<int>& forward() const noexcept { return forward_; }

  PermutationMap inverse() const;

  /// Permutation matrix with rows indexed by source states and columns by
  /// target states: Pi(forward[i], i) = 1.
  Matrix matrix() const;

  /// Recovers the map from a 0/1 permutation matrix in the convention above.
  static PermutationMap from_matrix(const Matrix& pi);

  bool operator==(const PermutationMap&) const = default;

 private:
  std::vector<int> forward_;
};

struct OccupancyMeasure {
  Matrix rho;  ///< rho[s][a], sums to one
  Vector mu;   ///< state marginal
};

// --- Transport between source and target domains -------------------------

/// Target-domain MDP Pi^T P (I (x) Pi) with initial distribution Pi^T p0.
TabularMdp permute_mdp(const TabularMdp& mdp, const PermutationMap& pi);

/// (I (x) Pi^T) Phi Pi: the policy played in the target domain by mapping
/// each target state to its source state.
StochasticPolicy transport_policy(const StochasticPolicy& policy,
                                  const PermutationMap& pi);

/// Pi^T M Pi, i.e. out(i, k) = M(pi(i), pi(k)).
Matrix conjugate(const Matrix& m, const PermutationMap& pi);

/// Pi^T v, i.e. out(i) = v(pi(i)).
Vector permute_vector(const Vector& v, const PermutationMap& pi);

/// (I (x) Pi^T) rho: rows permuted into the target domain.
Matrix permute_rows(const Matrix& rho, const PermutationMap& pi);

// --- Chains, occupancy, values -------------------------------------------

/// P_phi(s'|s) = sum_a phi(a|s) P(s'|s,a).
Matrix policy_chain(const TabularMdp& mdp, const StochasticPolicy& policy);

/// Restart chain M[s][s'] = (1-gamma) p0(s') + gamma P_phi(s'|s).
Matrix induced_chain(const TabularMdp& mdp, const StochasticPolicy& policy);

/// Stationary distribution of a row-stochastic chain. Solves the balance
/// equations directly and falls back to power iteration when the direct
/// system is singular (several closed classes); p0 seeds the fallback.
Vector stationary_distribution(const Matrix& m, const Vector& p0);

/// Power iteration on the lazy chain (I + M)/2 started from p0. Exposed as
/// an independent oracle for the direct solve.
Vector stationary_power_iteration(const Matrix& m, const Vector& p0,
                                  long max_iterations = 1'000'000,
                                  double tol = 1e-12);

/// Restart-form solve of mu = (1-gamma) p0 + gamma P_phi^T mu; always
/// nonsingular for gamma < 1.
Vector discounted_stationary(const TabularMdp& mdp,
                             const StochasticPolicy& policy);

/// Normalized discounted occupancy; rho(s,a) = phi(a|s) mu(s).
OccupancyMeasure occupancy(const TabularMdp& mdp,
                           const StochasticPolicy& policy);

/// V = R_phi + gamma P_phi V for a reward matrix R[s][a].
Vector value_function(const TabularMdp& mdp, const StochasticPolicy& policy,
                      const Matrix& reward);

/// Average advantage of policy1 against the value of policy2:
/// A(s) = E_{a~phi1}[R(s,a) + gamma E_{s'}V2(s')] - V2(s).
Vector advantage(const TabularMdp& mdp, const StochasticPolicy& policy1,
                 const StochasticPolicy& policy2, const Matrix& reward);

/// Imitation loss sup_{|c|<=1} <rho_1 - rho_2, c>, i.e. the L1 distance
/// (twice the usual total variation).
double tv_distance(const Matrix& rho1, const Matrix& rho2);

/// L1 distance between the correctly transported occupancy (I (x) Pi*^T) rho
/// and the occupancy of policy_hat played in the target domain.
double imitation_loss(const TabularMdp& mdp, const StochasticPolicy& policy,
                      const PermutationMap& pi_star,
                      const StochasticPolicy& policy_hat);

// --- Validation helpers --------------------------------------------------

void require_row_stochastic(const Matrix& m, const char* what,
                            double tol = kStochasticTol);
void require_probability_vector(const Vector& v, const char* what,
                                double tol = kStochasticTol);
bool is_row_stochastic(const Matrix& m, double tol = kStochasticTol);

}  // namespace mcalign
