#include "mcalign/chain_spectral.hpp"

#include "mcalign/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

namespace mcalign {

void orient(OrientedSvd& svd) {
  svd.orientation_tie = false;
  for (Eigen::Index c = 0; c < svd.v.cols(); ++c) {
    const double s = svd.v.col(c).sum();
    if (std::abs(s) <= kOrientationTieTol) {
      svd.orientation_tie = true;
    } else if (s < 0.0) {
      svd.v.col(c) *= -1.0;
      svd.u.col(c) *= -1.0;
    }
  }
}

OrientedSvd oriented_svd(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("oriented_svd: matrix must be square");
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  OrientedSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV(), false};
  orient(out);
  return out;
}

ChainSummary rescale(const Matrix& m, const Vector& mu) {
  if (m.rows() != m.cols() || m.rows() != mu.size()) {
    throw DimensionError("rescale: chain and stationary vector disagree in size");
  }
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (!(mu(i) > 0.0)) {
      throw DomainError("rescale: mu[" + std::to_string(i) + "] = " + std::to_string(mu(i)) +
                        " is not positive");
    }
  }
  ChainSummary s;
  s.m = m;
  s.mu = mu;
  s.d = mu;
  const Vector sq = mu.cwiseSqrt();
  s.l = sq.asDiagonal() * m * sq.cwiseInverse().asDiagonal();
  s.svd = oriented_svd(s.l);
  return s;
}

FriendlinessCertificate friendliness(const ChainSummary& summary, double tol_alpha,
                                     double tol_beta) {
  FriendlinessCertificate cert;
  cert.tol_alpha = tol_alpha;
  cert.tol_beta = tol_beta;
  const Vector& sigma = summary.svd.sigma;
  cert.alpha = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i + 1 < sigma.size(); ++i) {
    cert.alpha = std::min(cert.alpha, sigma(i) - sigma(i + 1));
  }
  if (summary.svd.orientation_tie) {
    cert.beta = 0.0;
  } else {
    cert.beta = (summary.svd.v.transpose() * Vector::Ones(summary.svd.v.rows())).minCoeff();
  }
  cert.is_friendly = cert.alpha > tol_alpha && cert.beta > tol_beta;
  return cert;
}

std::vector<std::vector<int>> strongly_connected_components(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<int> index(n, -1), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  std::vector<std::vector<int>> components;
  int counter = 0;

  // Iterative Tarjan: each frame is (vertex, next neighbour to inspect).
  std::vector<std::pair<int, int>> call;
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    call.emplace_back(root, 0);
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      auto& [v, next] = call.back();
      bool descended = false;
      while (next < n) {
        const int w = next++;
        if (!(m(v, w) > 0.0)) continue;
        if (index[w] == -1) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.emplace_back(w, 0);
          descended = true;
          break;
        }
        if (on_stack[w]) low[v] = std::min(low[v], index[w]);
      }
      if (descended) continue;
      const int v_done = v;
      if (low[v_done] == index[v_done]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          comp.push_back(w);
        } while (w != v_done);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
      call.pop_back();
      if (!call.empty()) {
        const int parent = call.back().first;
        low[parent] = std::min(low[parent], low[v_done]);
      }
    }
  }
  return components;
}

SccRestriction scc_restrict(const Matrix& m, const Vector& p0) {
  require_row_stochastic(m, "scc_restrict: chain");
  if (p0.size() != m.rows()) throw DimensionError("scc_restrict: p0 size mismatch");
  const int n = static_cast<int>(m.rows());

  std::vector<char> reachable(n, 0);
  std::deque<int> frontier;
  for (int i = 0; i < n; ++i) {
    if (p0(i) > 0.0) {
      reachable[i] = 1;
      frontier.push_back(i);
    }
  }
  while (!frontier.empty()) {
    const int v = frontier.front();
    frontier.pop_front();
    for (int w = 0; w < n; ++w) {
      if (m(v, w) > 0.0 && !reachable[w]) {
        reachable[w] = 1;
        frontier.push_back(w);
      }
    }
  }

  const auto components = strongly_connected_components(m);
  std::vector<int> component_of(n);
  for (std::size_t c = 0; c < components.size(); ++c)
    for (int v : components[c]) component_of[v] = static_cast<int>(c);

  SccRestriction out;
  for (std::size_t c = 0; c < components.size(); ++c) {
    const auto& comp = components[c];
    if (!reachable[comp.front()]) continue;
    bool closed = true;
    for (int v : comp) {
      for (int w = 0; w < n && closed; ++w) {
        if (m(v, w) > 0.0 && component_of[w] != static_cast<int>(c)) closed = false;
      }
    }
    if (closed) out.indices.insert(out.indices.end(), comp.begin(), comp.end());
  }
  if (out.indices.empty()) {
    throw InternalError("scc_restrict: no closed class reachable from p0");
  }
  std::sort(out.indices.begin(), out.indices.end());
  out.block = principal_submatrix(m, out.indices);
  return out;
}

Matrix principal_submatrix(const Matrix& m, const std::vector<int>& idx) {
  const auto k = static_cast<Eigen::Index>(idx.size());
  Matrix out(k, k);
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < k; ++c) out(r, c) = m(idx[r], idx[c]);
  return out;
}

Vector subvector(const Vector& v, const std::vector<int>& idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t r = 0; r < idx.size(); ++r) out(static_cast<Eigen::Index>(r)) = v(idx[r]);
  return out;
}

double pseudospectral_gap(const Matrix& m, const Vector& mu, int k_max) {
  if (m.rows() != m.cols() || m.rows() != mu.size()) {
    throw DimensionError("pseudospectral_gap: size mismatch");
  }
  if ((mu.array() <= 0.0).any()) {
    throw DomainError("pseudospectral_gap: stationary vector must be positive (restrict first)");
  }
  const auto n = m.rows();
  if (n == 1) return 1.0;
  if (k_max <= 0) k_max = static_cast<int>(2 * n);

  const auto d = mu.asDiagonal();
  const auto d_inv = mu.cwiseInverse().asDiagonal();
  Matrix mk = Matrix::Identity(n, n);
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= k_max; ++k) {
    mk = mk * m;
    // (D^{-1} M^T D)^k M^k = D^{-1} (M^k)^T D M^k
    const Matrix product = d_inv * mk.transpose() * d * mk;
    Eigen::EigenSolver<Matrix> es(product, false);
    if (es.info() != Eigen::Success) {
      throw NumericalError("pseudospectral_gap: eigen-solve failed at k=" + std::to_string(k));
    }
    std::vector<double> lambdas;
    lambdas.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto z = es.eigenvalues()(i);
      if (std::abs(z.imag()) > 1e-8 * std::max(1.0, std::abs(z.real()))) {
        throw NumericalError("pseudospectral_gap: complex eigenvalue at k=" + std::to_string(k));
      }
      lambdas.push_back(z.real());
    }
    std::sort(lambdas.begin(), lambdas.end(), std::greater<>());
    best = std::max(best, (1.0 - lambdas[1]) / k);
  }
  return best;
}

double d_p0(const Vector& p0, const Vector& mu) {
  if (p0.size() != mu.size()) throw DimensionError("d_p0: size mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    if (p0(i) == 0.0) continue;
    if (!(mu(i) > 0.0)) {
      throw DomainError("d_p0: p0 puts mass on state " + std::to_string(i) +
                        " where mu vanishes");
    }
    total += p0(i) * p0(i) / mu(i);
  }
  return total;
}

}  // namespace mcalign
