#pragma once

// Test-side instances and independent oracles. Nothing here calls the
// routine it is used to check.

#include "mcalign/tabular_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <vector>

namespace testing {

using mcalign::Matrix;
using mcalign::Vector;

// Chain [[0.9,0.1],[0.2,0.8]] realized as a restart chain with gamma = 0.9
// and p0 = (1/2, 1/2); every action has the same dynamics.
inline mcalign::TabularMdp two_state_mdp(int actions = 1) {
  Matrix p(2, 2);
  p << 0.85 / 0.9, 0.05 / 0.9, 0.15 / 0.9, 0.75 / 0.9;
  return mcalign::TabularMdp(std::vector<Matrix>(actions, p), Vector::Constant(2, 0.5), 0.9);
}

inline Matrix two_state_chain() {
  Matrix m(2, 2);
  m << 0.9, 0.1, 0.2, 0.8;
  return m;
}

inline Vector random_simplex(std::mt19937_64& g, int n) {
  std::exponential_distribution<double> e(1.0);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = e(g);
  return v / v.sum();
}

// Independent draw of a dense MDP and policy (std::<random>, not the
// library generator).
struct RandomInstance {
  mcalign::TabularMdp mdp;
  mcalign::StochasticPolicy policy;
};

inline RandomInstance random_instance(std::uint64_t seed, int n, int a, double gamma = 0.9) {
  std::mt19937_64 g(seed);
  std::vector<Matrix> dyn;
  for (int k = 0; k < a; ++k) {
    Matrix p(n, n);
    for (int s = 0; s < n; ++s) p.row(s) = random_simplex(g, n).transpose();
    dyn.push_back(p);
  }
  Matrix phi(n, a);
  for (int s = 0; s < n; ++s) phi.row(s) = random_simplex(g, a).transpose();
  return {mcalign::TabularMdp(dyn, random_simplex(g, n), gamma), mcalign::StochasticPolicy(phi)};
}

inline Matrix random_chain(std::uint64_t seed, int n) {
  std::mt19937_64 g(seed);
  Matrix m(n, n);
  for (int s = 0; s < n; ++s) m.row(s) = random_simplex(g, n).transpose();
  return m;
}

inline std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

// out(i,k) = m(p[i], p[k]), written out elementwise.
inline Matrix conjugate_oracle(const Matrix& m, const std::vector<int>& p) {
  const int n = static_cast<int>(p.size());
  Matrix out(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) out(i, k) = m(p[i], p[k]);
  return out;
}

// max over c in {-1,+1}^{S x A} of <delta, c>.
inline double sign_pattern_max(const Matrix& delta) {
  const int cells = static_cast<int>(delta.size());
  double best = -1e300;
  for (long mask = 0; mask < (1L << cells); ++mask) {
    double v = 0.0;
    for (int k = 0; k < cells; ++k) v += ((mask >> k) & 1 ? 1.0 : -1.0) * delta.data()[k];
    best = std::max(best, v);
  }
  return best;
}

// States reachable from `start` in the support graph.
inline std::vector<bool> reachable(const Matrix& m, int start) {
  std::vector<bool> seen(m.rows(), false);
  std::queue<int> q;
  q.push(start);
  seen[start] = true;
  while (!q.empty()) {
    const int s = q.front();
    q.pop();
    for (int t = 0; t < m.cols(); ++t) {
      if (m(s, t) > 0.0 && !seen[t]) {
        seen[t] = true;
        q.push(t);
      }
    }
  }
  return seen;
}

// Recurrent states reachable from supp(p0): j reachable from supp(p0) and
// every state reachable from j reaches j back.
inline std::vector<int> recurrent_reachable(const Matrix& m, const Vector& p0) {
  const int n = static_cast<int>(m.rows());
  std::vector<std::vector<bool>> r(n);
  for (int s = 0; s < n; ++s) r[s] = reachable(m, s);
  std::vector<int> out;
  for (int j = 0; j < n; ++j) {
    bool from_start = false;
    for (int s = 0; s < n; ++s)
      if (p0(s) > 0.0 && r[s][j]) from_start = true;
    bool closed = true;
    for (int k = 0; k < n; ++k)
      if (r[j][k] && !r[k][j]) closed = false;
    if (from_start && closed) out.push_back(j);
  }
  return out;
}

}  // namespace testing
