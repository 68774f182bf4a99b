#include "doctest.h"
#include "test_support.hpp"

#include "mcalign/errors.hpp"
#include "mcalign/generators.hpp"
#include "mcalign/sampling.hpp"

#include <set>
#include <sstream>

using namespace mcalign;

TEST_CASE("rng engine is mt19937_64 over seed_seq{seed lo, seed hi, stream lo, stream hi}") {
  const std::uint64_t seed = 0x0123456789abcdefULL, stream = 42;
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 reference(seq);
  Rng rng(seed, stream);
  for (int k = 0; k < 100; ++k) CHECK(rng.next_u64() == reference());
  CHECK(Rng::kRngVersion == 1);
}

TEST_CASE("rng streams and variates") {
  Rng a(7, 0), b(7, 0), c(7, 1);
  bool differs = false;
  for (int k = 0; k < 10; ++k) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    if (x != c.next_u64()) differs = true;
  }
  CHECK(differs);

  Rng r(1, 2);
  std::vector<int> hist(5, 0);
  for (int k = 0; k < 50000; ++k) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    ++hist[r.index(5)];
  }
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);

  const Vector d = r.dirichlet(6);
  CHECK(d.sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(d.minCoeff() > 0.0);

  const PermutationMap p = r.permutation(9);
  CHECK(std::set<int>(p.forward().begin(), p.forward().end()).size() == 9);

  Vector probs(3);
  probs << 0.0, 1.0, 0.0;
  for (int k = 0; k < 100; ++k) CHECK(r.categorical(probs) == 1);
}

TEST_CASE("estimate: hand-counted alternating trajectory") {
  const auto e = estimate({0, 1, 0, 1, 0}, 2);
  CHECK(e.counts(0, 0) == 0);
  CHECK(e.counts(0, 1) == 2);
  CHECK(e.counts(1, 0) == 2);
  CHECK(e.counts(1, 1) == 0);
  CHECK(e.mu_hat(0) == doctest::Approx(0.5));
  CHECK(e.mu_hat(1) == doctest::Approx(0.5));
  CHECK(e.m_hat(0, 1) == 1.0);
  CHECK(e.m_hat(1, 0) == 1.0);
}

TEST_CASE("estimate: constant trajectory") {
  const auto e = estimate({0, 0, 0}, 3);
  CHECK(e.mu_hat(0) == 1.0);
  CHECK(e.mu_hat(1) == 0.0);
  CHECK(e.m_hat(0, 0) == 1.0);
  CHECK(e.m_hat(0, 1) == 0.0);
  CHECK(e.m_hat(1, 2) == doctest::Approx(1.0 / 3.0));
  const auto v = estimate({0, 0, 0}, 3, StationaryEstimator::VisitCounts);
  CHECK(v.mu_hat(0) == 1.0);
}

TEST_CASE("estimate: invariants and concatenation") {
  Rng rng(3, 0);
  const Matrix chain = testing::random_chain(5, 4);
  const auto a = sample_chain(chain, Vector::Constant(4, 0.25), 500, rng);
  const auto b = sample_chain(chain, Vector::Constant(4, 0.25), 300, rng);
  const auto ea = estimate(a, 4), eb = estimate(b, 4);
  CHECK(ea.counts.sum() == 499);
  for (int i = 0; i < 4; ++i) CHECK(ea.m_hat.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ea.mu_hat.sum() == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<int> ab = a;
  ab.insert(ab.end(), b.begin(), b.end());
  auto joined = estimate(ab, 4).counts;
  joined(a.back(), b.front()) -= 1;
  CHECK(joined == ea.counts + eb.counts);

  CHECK_THROWS_AS(estimate({0}, 2), ValidationError);
  CHECK_THROWS_AS(estimate({0, 3}, 2), ValidationError);
}

TEST_CASE("sample_trajectory") {
  SUBCASE("deterministic cycle") {
    Matrix cycle(3, 3);
    cycle << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    Vector e0 = Vector::Zero(3);
    e0(0) = 1.0;
    Rng rng(0, 0);
    const auto traj = sample_chain(cycle, e0, 30, rng);
    for (int k = 0; k < 30; ++k) CHECK(traj[k] == k % 3);
  }
  SUBCASE("restart-dominated chain: marginal matches the permuted p0") {
    const auto inst = testing::random_instance(12, 4, 2, 1e-9);
    const PermutationMap pi({2, 3, 1, 0});
    const long m = 100000;
    const auto traj = sample_trajectory(inst.mdp, inst.policy, pi, m, RngSeed{5, 0});
    std::vector<double> counts(4, 0.0);
    for (long k = 1; k < m; ++k) counts[traj[k]] += 1.0;
    const Vector expect = permute_vector(inst.mdp.p0(), pi) * static_cast<double>(m - 1);
    double chi2 = 0.0;
    for (int i = 0; i < 4; ++i) chi2 += (counts[i] - expect(i)) * (counts[i] - expect(i)) / expect(i);
    CHECK(chi2 < 16.27);  // 0.999 quantile, 3 degrees of freedom
  }
  SUBCASE("two-state chain, m = 1e6") {
    const PermutationMap swap({1, 0});
    const auto traj = sample_trajectory(testing::two_state_mdp(), StochasticPolicy::uniform(2, 1), swap,
                                        1000000, RngSeed{9, 0});
    const auto e = estimate(traj, 2);
    const Vector mu = permute_vector(e.mu_hat, swap.inverse());
    CHECK(std::abs(mu(0) - 2.0 / 3.0) < 0.005);
    CHECK(std::abs(mu(1) - 1.0 / 3.0) < 0.005);
  }
  SUBCASE("same seed reproduces the trajectory") {
    const auto inst = testing::random_instance(2, 5, 2);
    const PermutationMap pi({4, 3, 2, 1, 0});
    CHECK(sample_trajectory(inst.mdp, inst.policy, pi, 1000, {1, 2}) ==
          sample_trajectory(inst.mdp, inst.policy, pi, 1000, {1, 2}));
  }
}

TEST_CASE("rate diagnostics") {
  GeneratorSpec spec;
  const auto inst = generate_random_friendly(spec, 0);
  const PermutationMap pi({3, 5, 0, 1, 4, 2});
  const Matrix m = induced_chain(inst.mdp, inst.policy);
  const Vector mu = discounted_stationary(inst.mdp, inst.policy);

  SUBCASE("exact injection has zero error") {
    const auto est = EmpiricalChain::exact(conjugate(m, pi), permute_vector(mu, pi));
    const auto r = estimator_errors(m, mu, est, pi);
    CHECK(r.chain_error == 0.0);
    CHECK(r.stationary_error == 0.0);
  }
  SUBCASE("doubling m shrinks the median error by about 1/sqrt(2)") {
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 0; s < 20; ++s) seeds.push_back(s);
    const auto table = rate_diagnostics(inst.mdp, inst.policy, pi, {20000, 40000}, seeds);
    const double chain_ratio = table.median_chain_error[1] / table.median_chain_error[0];
    const double stat_ratio = table.median_stationary_error[1] / table.median_stationary_error[0];
    CHECK(chain_ratio >= 0.6);
    CHECK(chain_ratio <= 0.85);
    CHECK(stat_ratio >= 0.6);
    CHECK(stat_ratio <= 0.85);
  }
}

TEST_CASE("trajectory file round trip") {
  const std::vector<int> traj = {0, 3, 1, 1, 2};
  std::stringstream ss;
  write_trajectory(ss, traj);
  CHECK(read_trajectory(ss) == traj);
  std::stringstream bad("0\n1\nx\n");
  CHECK_THROWS_AS(read_trajectory(bad), ValidationError);
}

TEST_CASE("fit_slope and median") {
  CHECK(fit_slope({0, 1, 2}, {1, 3, 5}) == doctest::Approx(2.0));
  CHECK(median({3, 1, 2}) == 2.0);
  CHECK(median({4, 1, 2, 3}) == 2.5);
}
