#pragma once

#include "mcalign/tabular_mdp.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

namespace mcalign {

/// (seed, stream) pair identifying one reproducible random stream.
struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// Reproducible random source.
///
/// Engine: std::mt19937_64 seeded through std::seed_seq with the words
/// {seed lo, seed hi, stream lo, stream hi}. Both the engine and seed_seq are
/// fully specified by the C++ standard, and every derived variate below is
/// computed here rather than through <random> distributions (whose output is
/// implementation-defined), so streams are bit-identical across toolchains.
/// Changing any of this is a format break: bump kRngVersion.
class Rng {
 public:
  static constexpr int kRngVersion = 1;

  explicit Rng(RngSeed seed);
  Rng(std::uint64_t seed, std::uint64_t stream) : Rng(RngSeed{seed, stream}) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n), unbiased (rejection).
  std::uint64_t index(std::uint64_t n);
  /// Exponential(1) variate.
  double exponential();
  /// Symmetric Dirichlet(1) draw of the given dimension.
  Vector dirichlet(int dim);
  /// Uniformly random permutation (Fisher-Yates).
  PermutationMap permutation(int n);
  /// Index drawn from the probability vector `probs` by inversion.
  int categorical(const Eigen::Ref<const Vector>& probs);

 private:
  std::mt19937_64 engine_;
};

/// Row-wise cumulative sums for repeated categorical draws from a chain.
class ChainSampler {
 public:
  explicit ChainSampler(const Matrix& m);
  int next(int state, Rng& rng) const;

 private:
  Matrix cdf_;
};

/// Length-m realization of the chain m started from p0.
std::vector<int> sample_chain(const Matrix& m, const Vector& p0, long length, Rng& rng);

/// Trajectory of the oracle's target-domain chain Pi*^T M Pi* (restart folded
/// into M), X_1 ~ Pi*^T p0. States are indexed in the target domain.
std::vector<int> sample_trajectory(const TabularMdp& mdp, const StochasticPolicy& policy,
                                   const PermutationMap& pi_star, long m, RngSeed seed);

enum class StationaryEstimator {
  /// mu_hat_i = sum_j N_ij / (m - 1), as in the permuted policy learner.
  TransitionCounts,
  /// mu_hat_i = (visits of i among X_1..X_m) / m; sensitivity alternative.
  VisitCounts,
};

/// Transition counts and the derived estimators.
struct EmpiricalChain {
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;
  long m = 0;  ///< trajectory length; 0 marks an injected exact chain
  Vector mu_hat;
  Matrix m_hat;  ///< N_ij / N_i on visited rows, uniform on unvisited rows

  int n_states() const noexcept { return static_cast<int>(m_hat.rows()); }

  /// Wraps an exact chain and stationary vector (the infinite-sample limit).
  static EmpiricalChain exact(Matrix m_hat, Vector mu_hat);
};

EmpiricalChain estimate(const std::vector<int>& trajectory, int n_states,
                        StationaryEstimator estimator = StationaryEstimator::TransitionCounts);

/// One row of the concentration-rate table.
struct RateSample {
  long m = 0;
  std::uint64_t seed = 0;
  double chain_error = 0.0;       ///< max_i || M~(i,.) - M(i,.) ||_2
  double stationary_error = 0.0;  ///< max_i |mu~_i - mu_i| / mu_i
};

struct RateTable {
  std::vector<RateSample> samples;  ///< ordered by (m, seed)
  std::vector<long> m_grid;
  std::vector<double> median_chain_error;       ///< per grid point
  std::vector<double> median_stationary_error;  ///< per grid point
  double chain_slope = 0.0;       ///< least-squares slope of log median vs log m
  double stationary_slope = 0.0;
};

/// Errors of the un-permuted estimators M~ = Pi* M_hat Pi*^T against the
/// true chain.
RateSample estimator_errors(const Matrix& m_true, const Vector& mu_true,
                            const EmpiricalChain& est, const PermutationMap& pi_star);

/// Samples one trajectory per (m, seed) with stream = grid index and reports
/// the estimator errors plus log-log slopes. Requires every mu_i > 0.
RateTable rate_diagnostics(const TabularMdp& mdp, const StochasticPolicy& policy,
                           const PermutationMap& pi_star, const std::vector<long>& m_grid,
                           const std::vector<std::uint64_t>& seeds);

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

double median(std::vector<double> values);

/// Newline-delimited state indices.
void write_trajectory(std::ostream& out, const std::vector<int>& trajectory);
std::vector<int> read_trajectory(std::istream& in);

}  // namespace mcalign
