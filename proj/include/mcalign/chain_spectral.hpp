#pragma once

#include "mcalign/tabular_mdp.hpp"

#include <limits>
#include <vector>

namespace mcalign {

inline constexpr double kDefaultTolAlpha = 1e-8;
inline constexpr double kDefaultTolBeta = 1e-8;
/// |v^T 1| at or below this is treated as an orientation tie.
inline constexpr double kOrientationTieTol = 1e-12;

/// Singular value decomposition L = U diag(sigma) V^T with sigma sorted
/// descending and V oriented so that V^T 1 >= 0 column-wise.
struct OrientedSvd {
  Matrix u;
  Vector sigma;
  Matrix v;
  bool orientation_tie = false;  ///< some column had v^T 1 == 0
};

/// Spectral summary of a (possibly sub-stochastic) chain block.
struct ChainSummary {
  Matrix m;
  Vector mu;
  Vector d;  ///< diagonal of D = diag(mu)
  Matrix l;  ///< D^{1/2} M D^{-1/2}
  OrientedSvd svd;
};

struct FriendlinessCertificate {
  double alpha = 0.0;  ///< min_i sigma_i - sigma_{i+1}; +inf for a single state
  double beta = 0.0;   ///< min_i (V^T 1)_i; 0 on an orientation tie
  double tol_alpha = kDefaultTolAlpha;
  double tol_beta = kDefaultTolBeta;
  bool is_friendly = false;
};

/// Flips singular-vector pairs so that every column of V has a nonnegative
/// sum. Columns whose sum is within kOrientationTieTol of zero are kept as
/// they are and reported through orientation_tie.
void orient(OrientedSvd& svd);

OrientedSvd oriented_svd(const Matrix& a);

/// Builds the rescaled matrix and its oriented SVD. `m` need not be
/// stochastic (principal submatrices are accepted); every mu entry must be
/// strictly positive.
ChainSummary rescale(const Matrix& m, const Vector& mu);

FriendlinessCertificate friendliness(const ChainSummary& summary,
                                     double tol_alpha = kDefaultTolAlpha,
                                     double tol_beta = kDefaultTolBeta);

struct SccRestriction {
  std::vector<int> indices;  ///< ascending
  Matrix block;              ///< principal submatrix of M on `indices`
};

/// Strongly connected components of the support graph of `m` (edge i->j when
/// m(i,j) > 0), in Tarjan completion order (sinks first). Each component is
/// listed in ascending state order.
std::vector<std::vector<int>> strongly_connected_components(const Matrix& m);

/// States carrying stationary mass when the chain is started from p0: the
/// union of closed communicating classes reachable from supp(p0).
SccRestriction scc_restrict(const Matrix& m, const Vector& p0);

/// Principal submatrix on the given ordered index set.
Matrix principal_submatrix(const Matrix& m, const std::vector<int>& idx);
Vector subvector(const Vector& v, const std::vector<int>& idx);

/// max_{1<=k<=k_max} (1 - lambda_2((D^{-1} M^T D)^k M^k)) / k. The supremum
/// over all k is truncated at k_max, which can only underestimate the gap.
/// k_max <= 0 selects the default 2 |S|.
double pseudospectral_gap(const Matrix& m, const Vector& mu, int k_max = 0);

/// sum_i p0_i^2 / mu_i with 0/0 = 0.
double d_p0(const Vector& p0, const Vector& mu);

}  // namespace mcalign
