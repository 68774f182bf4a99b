#include "mcalign/tabular_mdp.hpp"

#include "mcalign/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mcalign {

namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

bool is_row_stochastic(const Matrix& m, double tol) {
  if (m.size() == 0 || !m.allFinite()) return false;
  if ((m.array() < 0.0).any()) return false;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (std::abs(m.row(r).sum() - 1.0) > tol) return false;
  }
  return true;
}

void require_row_stochastic(const Matrix& m, const char* what, double tol) {
  if (!m.allFinite()) throw ValidationError(std::string(what) + ": non-finite entry");
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) < 0.0) {
        throw ValidationError(std::string(what) + ": negative entry at (" +
                              std::to_string(r) + "," + std::to_string(c) + ")");
      }
    }
    const double s = m.row(r).sum();
    if (std::abs(s - 1.0) > tol) {
      throw ValidationError(std::string(what) + ": row " + std::to_string(r) +
                            " sums to " + std::to_string(s));
    }
  }
}

void require_probability_vector(const Vector& v, const char* what, double tol) {
  if (v.size() == 0) throw ValidationError(std::string(what) + ": empty");
  if (!v.allFinite()) throw ValidationError(std::string(what) + ": non-finite entry");
  if ((v.array() < 0.0).any()) throw ValidationError(std::string(what) + ": negative entry");
  if (std::abs(v.sum() - 1.0) > tol) {
    throw ValidationError(std::string(what) + ": sums to " + std::to_string(v.sum()));
  }
}

// --- TabularMdp ------------------------------------------------------------

TabularMdp::TabularMdp(std::vector<Matrix> dynamics, Vector p0, double gamma)
    : dynamics_(std::move(dynamics)), p0_(std::move(p0)), gamma_(gamma) {
  if (dynamics_.empty()) throw ValidationError("mdp: at least one action required");
  const auto n = p0_.size();
  if (n == 0) throw ValidationError("mdp: at least one state required");
  for (std::size_t a = 0; a < dynamics_.size(); ++a) {
    if (dynamics_[a].rows() != n || dynamics_[a].cols() != n) {
      throw DimensionError("mdp: P[" + std::to_string(a) + "] is " + dims(dynamics_[a]) +
                           ", expected " + std::to_string(n) + "x" + std::to_string(n));
    }
    require_row_stochastic(dynamics_[a], "mdp dynamics");
  }
  require_probability_vector(p0_, "mdp p0");
  if (!(gamma_ > 0.0 && gamma_ < 1.0)) {
    throw ValidationError("mdp: gamma must lie in (0,1), got " + std::to_string(gamma_));
  }
}

Matrix TabularMdp::block_dynamics() const {
  const int n = n_states();
  Matrix block(n, n * n_actions());
  for (int a = 0; a < n_actions(); ++a) block.middleCols(a * n, n) = dynamics_[a];
  return block;
}

TabularMdp TabularMdp::with_gamma(double gamma) const {
  return TabularMdp(dynamics_, p0_, gamma);
}

// --- StochasticPolicy --------------------------------------------------------

StochasticPolicy::StochasticPolicy(Matrix probs) : probs_(std::move(probs)) {
  if (probs_.rows() == 0 || probs_.cols() == 0) throw ValidationError("policy: empty");
  require_row_stochastic(probs_, "policy");
}

StochasticPolicy StochasticPolicy::uniform(int n_states, int n_actions) {
  return StochasticPolicy(Matrix::Constant(n_states, n_actions, 1.0 / n_actions));
}

Matrix StochasticPolicy::block_matrix() const {
  const int n = n_states();
  Matrix phi = Matrix::Zero(static_cast<Eigen::Index>(n) * n_actions(), n);
  for (int a = 0; a < n_actions(); ++a) {
    for (int s = 0; s < n; ++s) phi(a * n + s, s) = probs_(s, a);
  }
  return phi;
}

// --- PermutationMap --------------------------------------------------------

PermutationMap::PermutationMap(std::vector<int> forward) : forward_(std::move(forward)) {
  std::vector<char> seen(forward_.size(), 0);
  for (int j : forward_) {
    if (j < 0 || j >= size() || seen[j]) {
      throw ValidationError("permutation: not a bijection on {0..n-1}");
    }
    seen[j] = 1;
  }
}

PermutationMap PermutationMap::identity(int n) {
  std::vector<int> f(n);
  for (int i = 0; i < n; ++i) f[i] = i;
  return PermutationMap(std::move(f));
}

PermutationMap PermutationMap::inverse() const {
  std::vector<int> inv(forward_.size());
  for (int i = 0; i < size(); ++i) inv[forward_[i]] = i;
  return PermutationMap(std::move(inv));
}

Matrix PermutationMap::matrix() const {
  Matrix pi = Matrix::Zero(size(), size());
  for (int i = 0; i < size(); ++i) pi(forward_[i], i) = 1.0;
  return pi;
}

PermutationMap PermutationMap::from_matrix(const Matrix& pi) {
  if (pi.rows() != pi.cols()) throw DimensionError("permutation matrix must be square");
  std::vector<int> f(pi.cols(), -1);
  for (Eigen::Index i = 0; i < pi.cols(); ++i) {
    for (Eigen::Index j = 0; j < pi.rows(); ++j) {
      if (pi(j, i) == 1.0) {
        if (f[i] != -1) throw ValidationError("permutation matrix: column with two ones");
        f[i] = static_cast<int>(j);
      } else if (pi(j, i) != 0.0) {
        throw ValidationError("permutation matrix: entries must be 0 or 1");
      }
    }
    if (f[i] == -1) throw ValidationError("permutation matrix: empty column");
  }
  return PermutationMap(std::move(f));
}

// --- Transport ---------------------------------------------------------------

Matrix conjugate(const Matrix& m, const PermutationMap& pi) {
  if (m.rows() != pi.size() || m.cols() != pi.size()) {
    throw DimensionError("conjugate: matrix " + dims(m) + " vs permutation of size " +
                         std::to_string(pi.size()));
  }
  Matrix out(m.rows(), m.cols());
  for (int i = 0; i < pi.size(); ++i)
    for (int k = 0; k < pi.size(); ++k) out(i, k) = m(pi(i), pi(k));
  return out;
}

Vector permute_vector(const Vector& v, const PermutationMap& pi) {
  if (v.size() != pi.size()) throw DimensionError("permute_vector: size mismatch");
  Vector out(v.size());
  for (int i = 0; i < pi.size(); ++i) out(i) = v(pi(i));
  return out;
}

Matrix permute_rows(const Matrix& rho, const PermutationMap& pi) {
  if (rho.rows() != pi.size()) throw DimensionError("permute_rows: size mismatch");
  Matrix out(rho.rows(), rho.cols());
  for (int i = 0; i < pi.size(); ++i) out.row(i) = rho.row(pi(i));
  return out;
}

TabularMdp permute_mdp(const TabularMdp& mdp, const PermutationMap& pi) {
  std::vector<Matrix> dyn;
  dyn.reserve(mdp.n_actions());
  for (const auto& pa : mdp.dynamics()) dyn.push_back(conjugate(pa, pi));
  return TabularMdp(std::move(dyn), permute_vector(mdp.p0(), pi), mdp.gamma());
}

StochasticPolicy transport_policy(const StochasticPolicy& policy, const PermutationMap& pi) {
  return StochasticPolicy(permute_rows(policy.probs(), pi));
}

// --- Chains ------------------------------------------------------------------

namespace {

void require_compatible(const TabularMdp& mdp, const StochasticPolicy& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions()) {
    throw DimensionError("policy is " + dims(policy.probs()) + " but mdp has " +
                         std::to_string(mdp.n_states()) + " states and " +
                         std::to_string(mdp.n_actions()) + " actions");
  }
}

void require_reward(const TabularMdp& mdp, const Matrix& reward) {
  if (reward.rows() != mdp.n_states() || reward.cols() != mdp.n_actions()) {
    throw DimensionError("reward is " + dims(reward) + ", expected |S|x|A|");
  }
}

}  // namespace

Matrix policy_chain(const TabularMdp& mdp, const StochasticPolicy& policy) {
  require_compatible(mdp, policy);
  const int n = mdp.n_states();
  Matrix p_phi = Matrix::Zero(n, n);
  for (int a = 0; a < mdp.n_actions(); ++a) {
    p_phi.noalias() += policy.probs().col(a).asDiagonal() * mdp.transition(a);
  }
  return p_phi;
}

Matrix induced_chain(const TabularMdp& mdp, const StochasticPolicy& policy) {
  const double g = mdp.gamma();
  Matrix m = g * policy_chain(mdp, policy);
  m.rowwise() += (1.0 - g) * mdp.p0().transpose();
  return m;
}

Vector stationary_power_iteration(const Matrix& m, const Vector& p0, long max_iterations,
                                  double tol) {
  require_row_stochastic(m, "stationary: chain");
  if (p0.size() != m.rows()) throw DimensionError("stationary: p0 size mismatch");
  require_probability_vector(p0, "stationary: p0");
  // The lazy chain shares the stationary distribution but is aperiodic.
  const Matrix lazy_t = 0.5 * (Matrix::Identity(m.rows(), m.cols()) + m).transpose();
  Vector mu = p0;
  for (long it = 0; it < max_iterations; ++it) {
    Vector next = lazy_t * mu;
    next /= next.sum();
    const double delta = (next - mu).lpNorm<1>();
    mu.swap(next);
    if (delta < tol) return mu;
  }
  throw ConvergenceError("stationary: power iteration did not converge in " +
                         std::to_string(max_iterations) + " iterations");
}

Vector stationary_distribution(const Matrix& m, const Vector& p0) {
  require_row_stochastic(m, "stationary: chain");
  if (m.rows() != m.cols()) throw DimensionError("stationary: chain must be square");
  if (p0.size() != m.rows()) throw DimensionError("stationary: p0 size mismatch");
  require_probability_vector(p0, "stationary: p0");

  const auto n = m.rows();
  // Balance equations (I - M^T) mu = 0 stacked with sum(mu) = 1.
  Matrix a(n + 1, n);
  a.topRows(n) = Matrix::Identity(n, n) - m.transpose();
  a.row(n).setOnes();
  Vector b = Vector::Zero(n + 1);
  b(n) = 1.0;
  Eigen::ColPivHouseholderQR<Matrix> qr(a);
  if (qr.rank() == n) {
    Vector mu = qr.solve(b);
    mu = mu.cwiseMax(0.0);
    mu /= mu.sum();
    if ((mu.transpose() * m - mu.transpose()).lpNorm<Eigen::Infinity>() <= 1e-10) return mu;
  }
  return stationary_power_iteration(m, p0);
}

Vector discounted_stationary(const TabularMdp& mdp, const StochasticPolicy& policy) {
  const int n = mdp.n_states();
  const double g = mdp.gamma();
  const Matrix a = Matrix::Identity(n, n) - g * policy_chain(mdp, policy).transpose();
  Vector mu = a.partialPivLu().solve((1.0 - g) * mdp.p0());
  // Round-off can leave tiny negatives on unreachable states.
  mu = mu.cwiseMax(0.0);
  mu /= mu.sum();
  return mu;
}

OccupancyMeasure occupancy(const TabularMdp& mdp, const StochasticPolicy& policy) {
  require_compatible(mdp, policy);
  OccupancyMeasure occ;
  occ.mu = discounted_stationary(mdp, policy);
  occ.rho = occ.mu.asDiagonal() * policy.probs();
  return occ;
}

Vector value_function(const TabularMdp& mdp, const StochasticPolicy& policy,
                      const Matrix& reward) {
  require_compatible(mdp, policy);
  require_reward(mdp, reward);
  const int n = mdp.n_states();
  const Vector r_phi = policy.probs().cwiseProduct(reward).rowwise().sum();
  const Matrix p_phi = policy_chain(mdp, policy);
  const Matrix a = Matrix::Identity(n, n) - mdp.gamma() * p_phi;
  Vector v = a.partialPivLu().solve(r_phi);
  const double scale = std::max(1.0, r_phi.lpNorm<Eigen::Infinity>());
  if (!v.allFinite() || (a * v - r_phi).lpNorm<Eigen::Infinity>() > 1e-10 * scale) {
    throw InternalError("value_function: linear solve failed");
  }
  return v;
}

Vector advantage(const TabularMdp& mdp, const StochasticPolicy& policy1,
                 const StochasticPolicy& policy2, const Matrix& reward) {
  require_compatible(mdp, policy1);
  const Vector v2 = value_function(mdp, policy2, reward);
  Vector adv = -v2;
  for (int a = 0; a < mdp.n_actions(); ++a) {
    const Vector q_a = reward.col(a) + mdp.gamma() * mdp.transition(a) * v2;
    adv += policy1.probs().col(a).cwiseProduct(q_a);
  }
  return adv;
}

double tv_distance(const Matrix& rho1, const Matrix& rho2) {
  if (rho1.rows() != rho2.rows() || rho1.cols() != rho2.cols()) {
    throw DimensionError("tv_distance: " + dims(rho1) + " vs " + dims(rho2));
  }
  return (rho1 - rho2).cwiseAbs().sum();
}

double imitation_loss(const TabularMdp& mdp, const StochasticPolicy& policy,
                      const PermutationMap& pi_star, const StochasticPolicy& policy_hat) {
  require_compatible(mdp, policy);
  if (pi_star.size() != mdp.n_states()) {
    throw DimensionError("imitation_loss: permutation size mismatch");
  }
  const TabularMdp target = permute_mdp(mdp, pi_star);
  require_compatible(target, policy_hat);
  const Matrix transported = permute_rows(occupancy(mdp, policy).rho, pi_star);
  return tv_distance(transported, occupancy(target, policy_hat).rho);
}

}  // namespace mcalign
