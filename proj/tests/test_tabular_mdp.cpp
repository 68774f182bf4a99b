#include "doctest.h"
#include "test_support.hpp"

#include "mcalign/errors.hpp"
#include "mcalign/io.hpp"
#include "mcalign/tabular_mdp.hpp"

using namespace mcalign;

TEST_CASE("mdp validation rejects malformed inputs") {
  Matrix p = Matrix::Identity(2, 2);
  const Vector p0 = Vector::Constant(2, 0.5);
  CHECK_NOTHROW(TabularMdp({p}, p0, 0.5));
  CHECK_THROWS_AS(TabularMdp({p}, p0, 1.0), ValidationError);
  CHECK_THROWS_AS(TabularMdp({p}, p0, 0.0), ValidationError);
  CHECK_THROWS_AS(TabularMdp({p}, Vector::Constant(2, 0.6), 0.5), ValidationError);
  Matrix bad = p;
  bad(0, 0) = 0.9;
  CHECK_THROWS_AS(TabularMdp({bad}, p0, 0.5), ValidationError);
  bad(0, 0) = 1.1;
  bad(0, 1) = -0.1;
  CHECK_THROWS_AS(TabularMdp({bad}, p0, 0.5), ValidationError);
  CHECK_THROWS_AS(TabularMdp({Matrix::Identity(3, 3)}, p0, 0.5), DimensionError);
  Matrix near = p;
  near(0, 0) = 1.0 + 5e-10;
  CHECK_NOTHROW(TabularMdp({near}, p0, 0.5));
}

TEST_CASE("permutation map conventions") {
  const PermutationMap pi({2, 0, 1});
  CHECK(pi.inverse() == PermutationMap({1, 2, 0}));
  const Matrix P = pi.matrix();
  CHECK(P(2, 0) == 1.0);
  CHECK(PermutationMap::from_matrix(P) == pi);
  CHECK_THROWS_AS(PermutationMap({0, 0, 1}), ValidationError);

  const Matrix m = testing::random_chain(3, 3);
  CHECK((conjugate(m, pi) - P.transpose() * m * P).norm() < 1e-15);
  CHECK((conjugate(m, pi) - testing::conjugate_oracle(m, pi.forward())).norm() == 0.0);
  const Vector v = Vector::LinSpaced(3, 1.0, 3.0);
  CHECK((permute_vector(v, pi) - P.transpose() * v).norm() < 1e-15);
}

TEST_CASE("induced chain") {
  SUBCASE("deterministic 3-cycle with p0 = e0") {
    Matrix p(3, 3);
    p << 0, 1, 0, 0, 0, 1, 1, 0, 0;
    Vector p0(3);
    p0 << 1, 0, 0;
    const TabularMdp mdp({p}, p0, 0.9);
    const Matrix m = induced_chain(mdp, StochasticPolicy::uniform(3, 1));
    CHECK(m(0, 0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(m(0, 1) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(m(0, 2) == 0.0);
  }
  SUBCASE("small gamma approaches restart-only rows") {
    const auto inst = testing::random_instance(11, 4, 2, 1e-12);
    const Matrix m = induced_chain(inst.mdp, inst.policy);
    for (int s = 0; s < 4; ++s) CHECK((m.row(s).transpose() - inst.mdp.p0()).cwiseAbs().maxCoeff() < 1e-11);
  }
  SUBCASE("worked two-state realization") {
    const Matrix m = induced_chain(testing::two_state_mdp(), StochasticPolicy::uniform(2, 1));
    CHECK((m - testing::two_state_chain()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("permutation equivariance") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto inst = testing::random_instance(seed, 5, 3);
      std::mt19937_64 g(seed);
      std::vector<int> f = {0, 1, 2, 3, 4};
      std::shuffle(f.begin(), f.end(), g);
      const PermutationMap pi(f);
      const Matrix lhs = induced_chain(permute_mdp(inst.mdp, pi), transport_policy(inst.policy, pi));
      const Matrix rhs = testing::conjugate_oracle(induced_chain(inst.mdp, inst.policy), f);
      CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
}

TEST_CASE("stationary distribution") {
  const Matrix m = testing::two_state_chain();
  const Vector p0 = Vector::Constant(2, 0.5);
  const Vector mu = stationary_distribution(m, p0);
  CHECK(mu(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(mu(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  SUBCASE("restart-only chain returns p0") {
    Vector q(3);
    q << 0.2, 0.5, 0.3;
    const Matrix r = Vector::Ones(3) * q.transpose();
    CHECK((stationary_distribution(r, q) - q).norm() < 1e-12);
  }
  SUBCASE("swap permutation permutes mu") {
    const PermutationMap swap({1, 0});
    const Vector mu_p = stationary_distribution(conjugate(m, swap), p0);
    CHECK(mu_p(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(mu_p(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("direct solve agrees with power iteration and the discounted solve") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto inst = testing::random_instance(seed, 6, 2);
      const Matrix chain = induced_chain(inst.mdp, inst.policy);
      const Vector a = stationary_distribution(chain, inst.mdp.p0());
      const Vector b = stationary_power_iteration(chain, inst.mdp.p0());
      const Vector c = discounted_stationary(inst.mdp, inst.policy);
      CHECK((a - b).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((a - c).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((chain.transpose() * a - a).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  SUBCASE("two closed classes: the start vector selects the limit") {
    Matrix r = Matrix::Zero(3, 3);
    r << 1, 0, 0, 0.5, 0, 0.5, 0, 0, 1;
    Vector start(3);
    start << 0, 1, 0;
    const Vector lim = stationary_distribution(r, start);
    CHECK(lim(0) == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(lim(1) == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(lim(2) == doctest::Approx(0.5).epsilon(1e-9));
  }
}

TEST_CASE("occupancy measure") {
  SUBCASE("single state and action") {
    const TabularMdp mdp({Matrix::Ones(1, 1)}, Vector::Ones(1), 0.5);
    const auto occ = occupancy(mdp, StochasticPolicy::uniform(1, 1));
    CHECK(occ.rho(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("uniform two-action policy splits mu evenly") {
    const auto occ = occupancy(testing::two_state_mdp(2), StochasticPolicy::uniform(2, 2));
    CHECK(occ.rho(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(occ.rho(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(occ.rho(1, 0) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(occ.rho(1, 1) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
  }
  SUBCASE("<rho, R> = (1 - gamma) E_p0[V]") {
    std::mt19937_64 g(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto inst = testing::random_instance(seed, 5, 3, 0.8);
      Matrix r(5, 3);
      for (int k = 0; k < r.size(); ++k) r.data()[k] = u(g);
      const auto occ = occupancy(inst.mdp, inst.policy);
      const double lhs = (occ.rho.array() * r.array()).sum();
      const double rhs = (1.0 - 0.8) * inst.mdp.p0().dot(value_function(inst.mdp, inst.policy, r));
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
      CHECK(occ.rho.sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("value function") {
  const auto inst = testing::random_instance(17, 4, 2, 0.75);
  CHECK(value_function(inst.mdp, inst.policy, Matrix::Zero(4, 2)).cwiseAbs().maxCoeff() == 0.0);
  const Vector ones = value_function(inst.mdp, inst.policy, Matrix::Ones(4, 2));
  for (int s = 0; s < 4; ++s) CHECK(ones(s) == doctest::Approx(1.0 / (1.0 - 0.75)).epsilon(1e-12));

  SUBCASE("matches Monte Carlo rollouts with geometric termination") {
    std::mt19937_64 g(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix r(4, 2);
    for (int k = 0; k < r.size(); ++k) r.data()[k] = u(g);
    const Vector v = value_function(inst.mdp, inst.policy, r);
    auto draw = [&](const Eigen::Ref<const Vector>& p) {
      double x = u(g), acc = 0.0;
      for (int k = 0; k < p.size(); ++k) {
        acc += p(k);
        if (x < acc) return k;
      }
      return static_cast<int>(p.size() - 1);
    };
    const int episodes = 100000;
    for (int s0 = 0; s0 < 4; ++s0) {
      double sum = 0.0, sq = 0.0;
      for (int e = 0; e < episodes; ++e) {
        int s = s0;
        double total = 0.0;
        while (true) {
          const int a = draw(inst.policy.probs().row(s).transpose());
          total += r(s, a);
          if (u(g) >= 0.75) break;
          s = draw(inst.mdp.transition(a).row(s).transpose());
        }
        sum += total;
        sq += total * total;
      }
      const double mean = sum / episodes;
      const double se = std::sqrt((sq / episodes - mean * mean) / episodes);
      CHECK(std::abs(mean - v(s0)) <= 3.0 * se);
    }
  }
}

TEST_CASE("advantage and the policy difference identity") {
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = testing::random_instance(seed, 5, 3, 0.85);
    const auto b = testing::random_instance(seed + 100, 5, 3, 0.85);
    Matrix r(5, 3);
    for (int k = 0; k < r.size(); ++k) r.data()[k] = u(g);
    CHECK(advantage(a.mdp, a.policy, a.policy, r).cwiseAbs().maxCoeff() < 1e-10);
    const Vector adv = advantage(a.mdp, a.policy, b.policy, r);
    CHECK(adv.cwiseAbs().maxCoeff() <= 2.0 / (1.0 - 0.85));
    const double lhs = a.mdp.p0().dot(value_function(a.mdp, a.policy, r) - value_function(a.mdp, b.policy, r));
    const double rhs = discounted_stationary(a.mdp, a.policy).dot(adv) / (1.0 - 0.85);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
  }
}

TEST_CASE("imitation loss") {
  SUBCASE("transported policy has zero loss") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const auto inst = testing::random_instance(seed, 5, 2);
      const PermutationMap pi({3, 0, 4, 1, 2});
      CHECK(imitation_loss(inst.mdp, inst.policy, pi, transport_policy(inst.policy, pi)) <= 1e-9);
    }
  }
  SUBCASE("equals the brute-force sign-pattern witness") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const int n = 2 + static_cast<int>(seed % 3);
      const auto inst = testing::random_instance(seed, n, 2);
      const auto other = testing::random_instance(seed + 50, n, 2);
      std::vector<int> f(n);
      std::iota(f.begin(), f.end(), 0);
      std::reverse(f.begin(), f.end());
      const PermutationMap pi(f);
      const Matrix rho_star = permute_rows(occupancy(inst.mdp, inst.policy).rho, pi);
      const Matrix rho_hat = occupancy(permute_mdp(inst.mdp, pi), other.policy).rho;
      const double loss = imitation_loss(inst.mdp, inst.policy, pi, other.policy);
      CHECK(loss == doctest::Approx(testing::sign_pattern_max(rho_star - rho_hat)).epsilon(1e-12));
      CHECK(loss >= 0.0);
      CHECK(loss <= 2.0 + 1e-12);
    }
  }
}

TEST_CASE("mdp file round trip") {
  const auto inst = testing::random_instance(4, 3, 2);
  const Json j = mdp_to_json(inst.mdp, &inst.policy);
  const MdpFile back = mdp_from_json(Json::parse(j.dump()));
  REQUIRE(back.policy.has_value());
  CHECK(*back.policy == inst.policy);
  for (int a = 0; a < 2; ++a) CHECK(back.mdp.transition(a) == inst.mdp.transition(a));
  CHECK(back.mdp.p0() == inst.mdp.p0());
  CHECK(back.mdp.gamma() == inst.mdp.gamma());

  Json broken = j;
  broken.erase("gamma");
  CHECK_THROWS_AS(mdp_from_json(broken), ValidationError);
}
