#include "doctest.h"
#include "test_support.hpp"

#include "mcalign/alignment.hpp"
#include "mcalign/errors.hpp"
#include "mcalign/generators.hpp"
#include "mcalign/hungarian.hpp"

using namespace mcalign;

namespace {

double brute_force_assignment(const Matrix& c, std::vector<int>* best_perm) {
  double best = 1e300;
  for (const auto& p : testing::all_permutations(static_cast<int>(c.rows()))) {
    double total = 0.0;
    for (int i = 0; i < c.rows(); ++i) total += c(i, p[i]);
    if (total < best - 1e-12) {
      best = total;
      if (best_perm) *best_perm = p;
    }
  }
  return best;
}

GeneratedInstance friendly_instance(int n, std::uint64_t seed) {
  GeneratorSpec spec;
  spec.n_states = n;
  return generate_random_friendly(spec, seed);
}

}  // namespace

TEST_CASE("hungarian: identity-favoring cost") {
  const Matrix c = Matrix::Ones(5, 5) - Matrix::Identity(5, 5);
  const auto sol = solve_assignment({c});
  CHECK(sol.assignment == PermutationMap::identity(5));
  CHECK(sol.cost == 0.0);
}

TEST_CASE("hungarian: worked 3x3 example") {
  Matrix c(3, 3);
  c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
  const auto sol = solve_assignment({c});
  CHECK(sol.assignment == PermutationMap({1, 0, 2}));
  CHECK(sol.cost == doctest::Approx(5.0));
}

TEST_CASE("hungarian: random 7x7 against exhaustive search") {
  std::mt19937_64 g(123);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int seed = 0; seed < 100; ++seed) {
    Matrix c(7, 7);
    for (int k = 0; k < c.size(); ++k) c.data()[k] = u(g);
    std::vector<int> best;
    const double cost = brute_force_assignment(c, &best);
    const auto sol = solve_assignment({c});
    CHECK(sol.cost == doctest::Approx(cost).epsilon(1e-12));
    CHECK(sol.assignment.forward() == best);
  }
}

TEST_CASE("hungarian: ties resolve to the lexicographically smallest assignment") {
  CHECK(hungarian({Matrix::Zero(4, 4)}) == PermutationMap::identity(4));
  Matrix c = Matrix::Ones(3, 3);
  c(0, 0) = 5.0;
  CHECK(hungarian({c}) == PermutationMap({1, 0, 2}));
}

TEST_CASE("assignment cost from singular-vector rows") {
  Matrix src(2, 2), tgt(2, 2);
  src << 1, 0, 0, 1;
  tgt << 0, 1, 1, 0;
  const auto prob = AssignmentProblem::from_rows(src, tgt);
  CHECK(prob.cost(0, 0) == doctest::Approx(2.0));
  CHECK(prob.cost(0, 1) == doctest::Approx(0.0));
  CHECK(hungarian(prob) == PermutationMap({1, 0}));
}

TEST_CASE("complete_permutation") {
  using Partial = std::vector<std::optional<int>>;
  CHECK(complete_permutation(Partial{2, 0, 1}) == PermutationMap({2, 0, 1}));
  CHECK(complete_permutation(Partial(3)) == PermutationMap::identity(3));
  CHECK(complete_permutation(Partial{2, std::nullopt, std::nullopt}) == PermutationMap({2, 0, 1}));
  CHECK(complete_permutation(Partial{2, std::nullopt, std::nullopt}, CompletionRule::PreferIdentity) ==
        PermutationMap({2, 1, 0}));
  CHECK_THROWS_AS(complete_permutation(Partial{1, 1, std::nullopt}), ValidationError);
  CHECK(completion_rule_from_string("prefer-identity") == CompletionRule::PreferIdentity);
  CHECK_THROWS_AS(completion_rule_from_string("nearest"), ValidationError);
}

TEST_CASE("exact recovery") {
  SUBCASE("unpermuted chain gives the identity") {
    const Matrix m = testing::two_state_chain();
    CHECK(exact_recover(m, m, Vector::Constant(2, 0.5)) == PermutationMap::identity(2));
  }
  SUBCASE("two-state swap") {
    const Matrix m = testing::two_state_chain();
    Matrix swapped(2, 2);
    swapped << 0.8, 0.2, 0.1, 0.9;
    CHECK((conjugate(m, PermutationMap({1, 0})) - swapped).norm() < 1e-15);
    CHECK(exact_recover(m, swapped, Vector::Constant(2, 0.5)) == PermutationMap({1, 0}));
  }
  SUBCASE("random friendly chains match the Frobenius minimizer") {
    std::mt19937_64 g(8);
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
      const int n = 4 + static_cast<int>(seed % 3);
      const auto inst = friendly_instance(n, seed);
      const Matrix m = induced_chain(inst.mdp, inst.policy);
      std::vector<int> f(n);
      std::iota(f.begin(), f.end(), 0);
      std::shuffle(f.begin(), f.end(), g);
      const Matrix mp = testing::conjugate_oracle(m, f);
      const PermutationMap pi = exact_recover(m, mp, inst.mdp.p0());
      CHECK(pi.forward() == f);
      double best = 1e300;
      std::vector<int> arg;
      for (const auto& p : testing::all_permutations(n)) {
        const double d = (testing::conjugate_oracle(m, p) - mp).norm();
        if (d < best) {
          best = d;
          arg = p;
        }
      }
      CHECK(best <= 1e-10);
      CHECK(arg == pi.forward());
    }
  }
  SUBCASE("unfriendly chain is rejected") {
    Matrix m(3, 3);
    m << 0.5, 0.3, 0.2, 0.3, 0.5, 0.2, 0.25, 0.25, 0.5;
    CHECK_THROWS_AS(exact_recover(m, m, Vector::Constant(3, 1.0 / 3.0)), PreconditionError);
  }
  SUBCASE("transient states are placed by completion") {
    Matrix m = Matrix::Zero(3, 3);
    m.topLeftCorner(2, 2) = testing::two_state_chain();
    m(2, 0) = 0.5;
    m(2, 2) = 0.5;
    Vector p0(3);
    p0 << 0.5, 0.5, 0.0;
    const PermutationMap pi_star({2, 1, 0});
    const PermutationMap pi = exact_recover(m, conjugate(m, pi_star), p0);
    CHECK(pi == pi_star);
  }
}

TEST_CASE("ppl in the exact-chain limit reproduces the oracle policy") {
  std::mt19937_64 g(31);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int n = 4 + static_cast<int>(seed % 5);
    const auto inst = friendly_instance(n, seed + 40);
    const Matrix m = induced_chain(inst.mdp, inst.policy);
    const Vector mu = discounted_stationary(inst.mdp, inst.policy);
    std::vector<int> f(n);
    std::iota(f.begin(), f.end(), 0);
    std::shuffle(f.begin(), f.end(), g);
    const PermutationMap pi_star(f);
    const auto est = EmpiricalChain::exact(conjugate(m, pi_star), permute_vector(mu, pi_star));
    PplConfig cfg;
    cfg.t = 0.5 * mu.minCoeff();
    const AlignmentResult r = ppl_from_estimate(inst.mdp, inst.policy, cfg, est);
    CHECK(r.pi_hat == pi_star);
    CHECK(static_cast<int>(r.matched_indices.size()) == n);
    const Matrix expected = transport_policy(inst.policy, pi_star).probs();
    CHECK((r.policy_hat.probs() - expected).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("ppl threshold errors") {
  const auto inst = friendly_instance(5, 3);
  const Matrix m = induced_chain(inst.mdp, inst.policy);
  const Vector mu = discounted_stationary(inst.mdp, inst.policy);
  PplConfig cfg;
  cfg.t = mu.maxCoeff() + 0.01;
  CHECK_THROWS_AS(ppl_from_estimate(inst.mdp, inst.policy, cfg, EmpiricalChain::exact(m, mu)),
                  DegenerateThresholdError);

  std::vector<double> sorted(mu.data(), mu.data() + mu.size());
  std::sort(sorted.begin(), sorted.end());
  cfg.t = 0.5 * (sorted[0] + sorted[1]);
  Vector skewed = mu;
  int low = 0;
  mu.minCoeff(&low);
  skewed(low) = sorted[1];
  skewed /= skewed.sum();
  if ((skewed.array() >= cfg.t).count() != (mu.array() >= cfg.t).count()) {
    CHECK_THROWS_AS(ppl_from_estimate(inst.mdp, inst.policy, cfg, EmpiricalChain::exact(m, skewed)),
                    ThresholdMismatchError);
  }
  cfg.t = 0.0;
  CHECK_THROWS_AS(ppl_from_estimate(inst.mdp, inst.policy, cfg, EmpiricalChain::exact(m, mu)),
                  ValidationError);
}

TEST_CASE("imitation loss bound check") {
  GeneratorSpec spec;
  spec.n_states = 6;
  spec.low_occupancy_states = 2;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = generate_random_mdp(spec, seed);
    const Vector mu = discounted_stationary(inst.mdp, inst.policy);
    std::vector<int> order(6);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return mu(a) < mu(b); });
    const double t = 0.5 * (mu(order[1]) + mu(order[2]));
    const PermutationMap pi_star({5, 3, 1, 0, 2, 4});

    const auto same = imitation_loss_bound_check(inst.mdp, inst.policy, pi_star, pi_star, t);
    CHECK(same.loss <= 1e-12);
    CHECK(same.hypothesis_met);
    CHECK(same.holds);
    CHECK(same.bound == doctest::Approx(2.0 * t * 6 / (0.1 * 0.1)));

    // Swap the preimages of the two clipped source states.
    std::vector<int> f = pi_star.forward();
    const auto inv = pi_star.inverse();
    std::swap(f[inv(order[0])], f[inv(order[1])]);
    const auto check = imitation_loss_bound_check(inst.mdp, inst.policy, pi_star, PermutationMap(f), t);
    CHECK(check.hypothesis_met);
    CHECK(check.holds);
    CHECK(check.loss <= check.bound + 1e-9);

    // Misassigning a retained state breaks the hypothesis.
    std::vector<int> h = pi_star.forward();
    std::swap(h[inv(order[0])], h[inv(order[5])]);
    CHECK_FALSE(imitation_loss_bound_check(inst.mdp, inst.policy, pi_star, PermutationMap(h), t).hypothesis_met);
  }
}
