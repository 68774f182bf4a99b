#pragma once

#include "mcalign/sampling.hpp"
#include "mcalign/tabular_mdp.hpp"

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mcalign {

// The eight-state bandit-like MDP. Starting at x0, action r leads to x1 and
// b to y1; from y0 the actions lead to the opposite sides. x1 forks to x2/x3
// with probability alpha/(1-alpha), y1 to y2/y3 with beta/(1-beta), and the
// four leaves are absorbing.
namespace bandit {
enum State : int { kX0 = 0, kY0, kX1, kY1, kX2, kX3, kY2, kY3, kNumStates };
enum Action : int { kR = 0, kB, kNumActions };
}  // namespace bandit

struct BanditMdpParams {
  double epsilon = 0.1;
  double gamma = 0.9;

  double alpha() const noexcept { return 0.5 + epsilon; }
  double beta() const noexcept { return 0.5 - epsilon; }
  /// epsilon must lie in [0, 1/2); epsilon = 0 gives the symmetric instance.
  void validate() const;
};

struct Counterexample {
  BanditMdpParams params;
  TabularMdp source;
  StochasticPolicy behavior;  ///< r at x0, b at y0, uniform elsewhere
  std::array<PermutationMap, 2> candidates;  ///< identity, x<->y swap
};

Counterexample build_counterexample(const BanditMdpParams& params);

/// Lower bound on the imitation loss from the witness c = 1 on the three
/// x-side states (hypothesis 0) or y-side states (hypothesis 1) of the
/// target domain: gamma - gamma (phi(r|x0) + phi(b|y0)) / 2, with actions
/// swapped under hypothesis 1.
double witness_lower_bound(const Counterexample& ce, const StochasticPolicy& policy_hat,
                           int hypothesis);

struct Transition {
  int state = 0;
  int action = -1;  ///< -1 on a reset
  int next_state = 0;
  bool reset = false;
};

/// Target-domain simulator for a hidden permutation of a source MDP.
class OnlineEnv {
 public:
  /// count_resets: whether a reset consumes one unit of the transition budget.
  OnlineEnv(const TabularMdp& source, PermutationMap hidden, RngSeed seed,
            bool count_resets = true);

  int state() const noexcept { return state_; }
  long transitions() const noexcept { return transitions_; }
  const PermutationMap& hidden() const noexcept { return hidden_; }
  const TabularMdp& target() const noexcept { return target_; }
  std::span<const Transition> history() const noexcept { return history_; }

  Transition step(int action);
  Transition reset();
  /// Draws an action from `policy` at the current state.
  int sample_action(const StochasticPolicy& policy);

 private:
  TabularMdp target_;
  PermutationMap hidden_;
  Rng rng_;
  bool count_resets_;
  int state_ = 0;
  long transitions_ = 0;
  std::vector<Transition> history_;
};

struct History {
  int current_state = 0;
  long transitions = 0;
  std::span<const Transition> past;
};

/// Online learner. The driver asks for a reset or a policy each round;
/// returning nullopt from choose_policy stops the session. finalize is
/// called exactly once.
class OnlineAgent {
 public:
  virtual ~OnlineAgent() = default;
  virtual bool wants_reset(const History&) { return false; }
  virtual std::optional<StochasticPolicy> choose_policy(const History& history) = 0;
  virtual void observe(const Transition& transition) = 0;
  virtual StochasticPolicy finalize() = 0;
};

struct OnlineOutcome {
  StochasticPolicy policy_hat;
  long transitions = 0;
  bool truncated = false;  ///< budget hit before the agent stopped
};

OnlineOutcome run_online(OnlineEnv& env, OnlineAgent& agent, long budget);

/// Sequential test between the two candidate maps. Alternately steers to
/// the x-side and y-side fork, records whether the fork lands on its first
/// leaf and stops once the evidence clears the confidence level 1 - delta:
/// a Wald likelihood-ratio test when epsilon is known, an anytime Hoeffding
/// test on the difference of fork frequencies otherwise.
class EliminationAgent final : public OnlineAgent {
 public:
  EliminationAgent(const Counterexample& ce, bool epsilon_known, double delta);

  bool wants_reset(const History& h) override;
  std::optional<StochasticPolicy> choose_policy(const History& h) override;
  void observe(const Transition& tr) override;
  StochasticPolicy finalize() override;

  std::optional<int> decision() const noexcept { return decision_; }
  int selected_hypothesis() const noexcept { return selected_; }

 private:
  void update_decision();

  Counterexample ce_;
  bool epsilon_known_;
  double delta_;
  std::array<int, 2> forks_{bandit::kX1, bandit::kY1};
  std::array<int, 2> first_leaf_{bandit::kX2, bandit::kY2};
  std::array<long, 2> pulls_{0, 0};
  std::array<long, 2> hits_{0, 0};
  std::array<std::array<double, 2>, 2> hit_prob_{};  ///< [hypothesis][fork]
  double log_likelihood_ratio_ = 0.0;                ///< log P(H0) - log P(H1)
  int next_fork_ = 0;
  std::optional<int> decision_;
  int selected_ = 0;
  bool finalized_ = false;
};

std::unique_ptr<OnlineAgent> elimination_agent(const Counterexample& ce, bool epsilon_known,
                                               double delta);

/// Stops immediately and plays the correctly transported policy.
class OracleAgent final : public OnlineAgent {
 public:
  OracleAgent(const StochasticPolicy& behavior, const PermutationMap& truth)
      : answer_(transport_policy(behavior, truth)) {}
  std::optional<StochasticPolicy> choose_policy(const History&) override { return std::nullopt; }
  void observe(const Transition&) override {}
  StochasticPolicy finalize() override { return answer_; }

 private:
  StochasticPolicy answer_;
};

/// Stops immediately and plays the uniform policy.
class UniformAgent final : public OnlineAgent {
 public:
  UniformAgent(int n_states, int n_actions) : answer_(StochasticPolicy::uniform(n_states, n_actions)) {}
  std::optional<StochasticPolicy> choose_policy(const History&) override { return std::nullopt; }
  void observe(const Transition&) override {}
  StochasticPolicy finalize() override { return answer_; }

 private:
  StochasticPolicy answer_;
};

struct LowerBoundRun {
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  long transitions = 0;
  double final_loss = 0.0;
  int selected_hypothesis = 0;
  int true_hypothesis = 0;
  bool truncated = false;
};

struct LowerBoundSummary {
  double epsilon = 0.0;
  double median_transitions = 0.0;
  double success_rate = 0.0;  ///< fraction with final loss < gamma / 4
};

struct LowerBoundTable {
  std::vector<LowerBoundRun> runs;  ///< ordered by (epsilon, seed)
  std::vector<LowerBoundSummary> summary;
  double slope = 0.0;  ///< log median T against log epsilon
};

struct LowerBoundOptions {
  double gamma = 0.9;
  double delta = 0.05;
  bool epsilon_known = true;
  bool count_resets = true;
  long budget = 100'000'000;
};

/// Runs the elimination agent for every (epsilon, seed). The hidden
/// hypothesis of each run is drawn from the seed.
LowerBoundTable lower_bound_experiment(const std::vector<double>& eps_grid,
                                       const std::vector<std::uint64_t>& seeds,
                                       const LowerBoundOptions& options = {});

}  // namespace mcalign
