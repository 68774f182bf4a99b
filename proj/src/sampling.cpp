#include "mcalign/sampling.hpp"

#include "mcalign/errors.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

namespace mcalign {

Rng::Rng(RngSeed seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed.seed), static_cast<std::uint32_t>(seed.seed >> 32),
                    static_cast<std::uint32_t>(seed.stream),
                    static_cast<std::uint32_t>(seed.stream >> 32)};
  engine_.seed(seq);
}

std::uint64_t Rng::index(std::uint64_t n) {
  if (n == 0) throw ValidationError("rng: index range must be nonempty");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::exponential() {
  // 1 - U lies in (0, 1], so the log is finite.
  return -std::log(1.0 - uniform());
}

Vector Rng::dirichlet(int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = exponential();
  const double total = v.sum();
  if (!(total > 0.0)) v.setConstant(1.0 / dim);
  else v /= total;
  return v;
}

PermutationMap Rng::permutation(int n) {
  std::vector<int> f(n);
  for (int i = 0; i < n; ++i) f[i] = i;
  for (int i = n - 1; i > 0; --i) std::swap(f[i], f[index(static_cast<std::uint64_t>(i) + 1)]);
  return PermutationMap(std::move(f));
}

int Rng::categorical(const Eigen::Ref<const Vector>& probs) {
  const double u = uniform();
  double acc = 0.0;
  int last_positive = 0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    acc += probs(i);
    last_positive = static_cast<int>(i);
    if (u < acc) return last_positive;
  }
  return last_positive;
}

ChainSampler::ChainSampler(const Matrix& m) : cdf_(m.rows(), m.cols()) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      acc += m(r, c);
      cdf_(r, c) = acc;
    }
    // Pin the top of each row so round-off never leaves a gap below 1. The
    // last positive column absorbs it.
    Eigen::Index last = m.cols() - 1;
    while (last > 0 && m(r, last) <= 0.0) --last;
    for (Eigen::Index c = last; c < m.cols(); ++c) cdf_(r, c) = 2.0;
  }
}

int ChainSampler::next(int state, Rng& rng) const {
  const double u = rng.uniform();
  const auto row = cdf_.row(state);
  for (Eigen::Index c = 0; c < row.size(); ++c) {
    if (u < row(c)) return static_cast<int>(c);
  }
  return static_cast<int>(row.size() - 1);
}

std::vector<int> sample_chain(const Matrix& m, const Vector& p0, long length, Rng& rng) {
  if (length < 1) throw ValidationError("sample_chain: length must be >= 1");
  require_row_stochastic(m, "sample_chain: chain");
  require_probability_vector(p0, "sample_chain: p0");
  if (p0.size() != m.rows()) throw DimensionError("sample_chain: p0 size mismatch");
  const ChainSampler sampler(m);
  std::vector<int> traj;
  traj.reserve(static_cast<std::size_t>(length));
  traj.push_back(rng.categorical(p0));
  for (long k = 1; k < length; ++k) traj.push_back(sampler.next(traj.back(), rng));
  return traj;
}

std::vector<int> sample_trajectory(const TabularMdp& mdp, const StochasticPolicy& policy,
                                   const PermutationMap& pi_star, long m, RngSeed seed) {
  if (m < 1) throw ValidationError("sample_trajectory: m must be >= 1");
  const Matrix target_chain = conjugate(induced_chain(mdp, policy), pi_star);
  Rng rng(seed);
  return sample_chain(target_chain, permute_vector(mdp.p0(), pi_star), m, rng);
}

EmpiricalChain EmpiricalChain::exact(Matrix m_hat, Vector mu_hat) {
  EmpiricalChain e;
  e.counts = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(m_hat.rows(), m_hat.cols());
  e.m = 0;
  e.m_hat = std::move(m_hat);
  e.mu_hat = std::move(mu_hat);
  return e;
}

EmpiricalChain estimate(const std::vector<int>& trajectory, int n_states,
                        StationaryEstimator estimator) {
  if (trajectory.size() < 2) throw ValidationError("estimate: trajectory needs at least 2 states");
  if (n_states < 1) throw ValidationError("estimate: n_states must be positive");
  EmpiricalChain e;
  e.m = static_cast<long>(trajectory.size());
  e.counts = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>::Zero(n_states, n_states);
  for (int s : trajectory) {
    if (s < 0 || s >= n_states) {
      throw ValidationError("estimate: state " + std::to_string(s) + " out of range");
    }
  }
  for (std::size_t k = 0; k + 1 < trajectory.size(); ++k) ++e.counts(trajectory[k], trajectory[k + 1]);

  const auto row_totals = e.counts.rowwise().sum();
  e.m_hat = Matrix::Constant(n_states, n_states, 1.0 / n_states);
  for (int i = 0; i < n_states; ++i) {
    if (row_totals(i) > 0) {
      e.m_hat.row(i) = e.counts.row(i).cast<double>() / static_cast<double>(row_totals(i));
    }
  }
  if (estimator == StationaryEstimator::TransitionCounts) {
    e.mu_hat = row_totals.cast<double>() / static_cast<double>(e.m - 1);
  } else {
    e.mu_hat = Vector::Zero(n_states);
    for (int s : trajectory) e.mu_hat(s) += 1.0;
    e.mu_hat /= static_cast<double>(e.m);
  }
  return e;
}

RateSample estimator_errors(const Matrix& m_true, const Vector& mu_true,
                            const EmpiricalChain& est, const PermutationMap& pi_star) {
  // Pi* M_hat Pi*^T: conjugation by the inverse map.
  const PermutationMap back = pi_star.inverse();
  const Matrix m_tilde = conjugate(est.m_hat, back);
  const Vector mu_tilde = permute_vector(est.mu_hat, back);
  RateSample r;
  r.m = est.m;
  r.chain_error = (m_tilde - m_true).rowwise().norm().maxCoeff();
  r.stationary_error = ((mu_tilde - mu_true).cwiseAbs().array() / mu_true.array()).maxCoeff();
  return r;
}

double median(std::vector<double> values) {
  if (values.empty()) throw ValidationError("median of empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("fit_slope: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw ValidationError("fit_slope: x values are all equal");
  return sxy / sxx;
}

RateTable rate_diagnostics(const TabularMdp& mdp, const StochasticPolicy& policy,
                           const PermutationMap& pi_star, const std::vector<long>& m_grid,
                           const std::vector<std::uint64_t>& seeds) {
  if (m_grid.empty() || seeds.empty()) throw ValidationError("rate_diagnostics: empty grid");
  for (std::size_t g = 1; g < m_grid.size(); ++g) {
    if (m_grid[g] <= m_grid[g - 1]) throw ValidationError("rate_diagnostics: m grid must increase");
  }
  if (m_grid.front() < 2) throw ValidationError("rate_diagnostics: m must be >= 2");

  const Matrix m_true = induced_chain(mdp, policy);
  const Vector mu_true = discounted_stationary(mdp, policy);
  if ((mu_true.array() <= 0.0).any()) {
    throw DomainError("rate_diagnostics: relative stationary error needs mu > 0 everywhere");
  }
  const Matrix target_chain = conjugate(m_true, pi_star);
  const Vector target_p0 = permute_vector(mdp.p0(), pi_star);

  RateTable table;
  table.m_grid = m_grid;
  std::vector<double> log_m, log_chain, log_stat;
  for (std::size_t g = 0; g < m_grid.size(); ++g) {
    std::vector<double> chain_errs, stat_errs;
    for (std::uint64_t seed : seeds) {
      Rng rng(seed, g);
      const auto traj = sample_chain(target_chain, target_p0, m_grid[g], rng);
      RateSample r = estimator_errors(m_true, mu_true, estimate(traj, mdp.n_states()), pi_star);
      r.seed = seed;
      chain_errs.push_back(r.chain_error);
      stat_errs.push_back(r.stationary_error);
      table.samples.push_back(r);
    }
    table.median_chain_error.push_back(median(chain_errs));
    table.median_stationary_error.push_back(median(stat_errs));
    log_m.push_back(std::log(static_cast<double>(m_grid[g])));
    log_chain.push_back(std::log(table.median_chain_error.back()));
    log_stat.push_back(std::log(table.median_stationary_error.back()));
  }
  if (m_grid.size() >= 2) {
    table.chain_slope = fit_slope(log_m, log_chain);
    table.stationary_slope = fit_slope(log_m, log_stat);
  }
  return table;
}

void write_trajectory(std::ostream& out, const std::vector<int>& trajectory) {
  for (int s : trajectory) out << s << '\n';
}

std::vector<int> read_trajectory(std::istream& in) {
  std::vector<int> traj;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::size_t pos = 0;
    int s = 0;
    try {
      s = std::stoi(line, &pos);
    } catch (const std::exception&) {
      throw ValidationError("trajectory: line " + std::to_string(line_no) + " is not an integer");
    }
    if (pos != line.size() || s < 0) {
      throw ValidationError("trajectory: line " + std::to_string(line_no) + " is not a state index");
    }
    traj.push_back(s);
  }
  return traj;
}

}  // namespace mcalign
