#include "mcalign/counterexample.hpp"

#include "mcalign/errors.hpp"

#include <cmath>

namespace mcalign {

using namespace bandit;

void BanditMdpParams::validate() const {
  if (!(epsilon >= 0.0 && epsilon < 0.5)) {
    throw ValidationError("bandit mdp: epsilon must lie in [0, 1/2), got " + std::to_string(epsilon));
  }
  if (!(gamma > 0.0 && gamma < 1.0)) throw ValidationError("bandit mdp: gamma must lie in (0,1)");
}

Counterexample build_counterexample(const BanditMdpParams& params) {
  params.validate();
  std::vector<Matrix> dyn(kNumActions, Matrix::Zero(kNumStates, kNumStates));
  auto& pr = dyn[kR];
  auto& pb = dyn[kB];
  pr(kX0, kX1) = 1.0;
  pb(kX0, kY1) = 1.0;
  pr(kY0, kY1) = 1.0;
  pb(kY0, kX1) = 1.0;
  for (auto* p : {&pr, &pb}) {
    (*p)(kX1, kX2) = params.alpha();
    (*p)(kX1, kX3) = 1.0 - params.alpha();
    (*p)(kY1, kY2) = params.beta();
    (*p)(kY1, kY3) = 1.0 - params.beta();
    for (int leaf : {kX2, kX3, kY2, kY3}) (*p)(leaf, leaf) = 1.0;
  }
  Vector p0 = Vector::Zero(kNumStates);
  p0(kX0) = p0(kY0) = 0.5;

  Matrix behavior = Matrix::Constant(kNumStates, kNumActions, 0.5);
  behavior.row(kX0) << 1.0, 0.0;
  behavior.row(kY0) << 0.0, 1.0;

  // x_i <-> y_i
  PermutationMap swap({kY0, kX0, kY1, kX1, kY2, kY3, kX2, kX3});
  return Counterexample{params, TabularMdp(std::move(dyn), std::move(p0), params.gamma),
                        StochasticPolicy(std::move(behavior)),
                        {PermutationMap::identity(kNumStates), std::move(swap)}};
}

double witness_lower_bound(const Counterexample& ce, const StochasticPolicy& policy_hat,
                           int hypothesis) {
  const double g = ce.params.gamma;
  if (hypothesis == 0) return g - g * (policy_hat(kX0, kR) + policy_hat(kY0, kB)) / 2.0;
  return g - g * (policy_hat(kX0, kB) + policy_hat(kY0, kR)) / 2.0;
}

// --- OnlineEnv -------------------------------------------------------------------

OnlineEnv::OnlineEnv(const TabularMdp& source, PermutationMap hidden, RngSeed seed, bool count_resets)
    : target_(permute_mdp(source, hidden)),
      hidden_(std::move(hidden)),
      rng_(seed),
      count_resets_(count_resets) {
  state_ = rng_.categorical(target_.p0());
}

Transition OnlineEnv::step(int action) {
  if (action < 0 || action >= target_.n_actions()) throw ValidationError("online env: invalid action");
  Transition tr{state_, action, 0, false};
  tr.next_state = rng_.categorical(target_.transition(action).row(state_).transpose());
  state_ = tr.next_state;
  ++transitions_;
  history_.push_back(tr);
  return tr;
}

Transition OnlineEnv::reset() {
  Transition tr{state_, -1, 0, true};
  tr.next_state = rng_.categorical(target_.p0());
  state_ = tr.next_state;
  if (count_resets_) ++transitions_;
  history_.push_back(tr);
  return tr;
}

int OnlineEnv::sample_action(const StochasticPolicy& policy) {
  return rng_.categorical(policy.probs().row(state_).transpose());
}

OnlineOutcome run_online(OnlineEnv& env, OnlineAgent& agent, long budget) {
  if (budget < 1) throw ValidationError("run_online: budget must be >= 1");
  const long start = env.transitions();
  OnlineOutcome out{StochasticPolicy::uniform(env.target().n_states(), env.target().n_actions()), 0, false};
  while (true) {
    if (env.transitions() - start >= budget) {
      out.truncated = true;
      break;
    }
    const History h{env.state(), env.transitions() - start, env.history()};
    if (agent.wants_reset(h)) {
      agent.observe(env.reset());
      continue;
    }
    auto policy = agent.choose_policy(h);
    if (!policy) break;
    agent.observe(env.step(env.sample_action(*policy)));
  }
  out.policy_hat = agent.finalize();
  out.transitions = env.transitions() - start;
  return out;
}

// --- EliminationAgent ----------------------------------------------------------

EliminationAgent::EliminationAgent(const Counterexample& ce, bool epsilon_known, double delta)
    : ce_(ce), epsilon_known_(epsilon_known), delta_(delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("elimination agent: delta must lie in (0,1)");
  for (int h = 0; h < 2; ++h) {
    const TabularMdp target = permute_mdp(ce_.source, ce_.candidates[h]);
    for (int f = 0; f < 2; ++f) hit_prob_[h][f] = target.p(forks_[f], kR, first_leaf_[f]);
  }
}

bool EliminationAgent::wants_reset(const History& h) {
  const int s = h.current_state;
  return s == kX2 || s == kX3 || s == kY2 || s == kY3;
}

std::optional<StochasticPolicy> EliminationAgent::choose_policy(const History& h) {
  if (decision_) return std::nullopt;
  Matrix probs = Matrix::Constant(kNumStates, kNumActions, 0.5);
  const int s = h.current_state;
  if (s == kX0 || s == kY0) {
    // The first layer is identical under both candidates, so the action that
    // reaches the wanted fork is known in advance.
    const TabularMdp target = permute_mdp(ce_.source, ce_.candidates[0]);
    const int fork = forks_[next_fork_];
    const int action = target.p(s, kR, fork) > 0.5 ? kR : kB;
    probs.row(s).setZero();
    probs(s, action) = 1.0;
  }
  return StochasticPolicy(std::move(probs));
}

void EliminationAgent::observe(const Transition& tr) {
  if (tr.reset || decision_) return;
  for (int f = 0; f < 2; ++f) {
    if (tr.state != forks_[f]) continue;
    const bool hit = tr.next_state == first_leaf_[f];
    ++pulls_[f];
    if (hit) ++hits_[f];
    const double p0 = hit_prob_[0][f];
    const double p1 = hit_prob_[1][f];
    if (p0 != p1) log_likelihood_ratio_ += hit ? std::log(p0 / p1) : std::log((1.0 - p0) / (1.0 - p1));
    next_fork_ = 1 - f;
    update_decision();
  }
}

void EliminationAgent::update_decision() {
  if (epsilon_known_) {
    const double threshold = std::log((1.0 - delta_) / delta_);
    if (log_likelihood_ratio_ >= threshold) decision_ = 0;
    else if (log_likelihood_ratio_ <= -threshold) decision_ = 1;
    return;
  }
  if (pulls_[0] == 0 || pulls_[1] == 0) return;
  const double diff = static_cast<double>(hits_[0]) / pulls_[0] - static_cast<double>(hits_[1]) / pulls_[1];
  const double n = static_cast<double>(pulls_[0] + pulls_[1]);
  const double width = std::sqrt((0.5 / pulls_[0] + 0.5 / pulls_[1]) * std::log(4.0 * n * n / delta_));
  if (std::abs(diff) > width) {
    // Hypothesis 0 (identity) makes the x-side fork the likelier one to hit.
    const bool x_side_higher = diff > 0.0;
    const bool h0_predicts_x_higher = hit_prob_[0][0] > hit_prob_[0][1];
    decision_ = x_side_higher == h0_predicts_x_higher ? 0 : 1;
  }
}

StochasticPolicy EliminationAgent::finalize() {
  if (finalized_) throw InternalError("elimination agent: finalize called twice");
  finalized_ = true;
  if (decision_) {
    selected_ = *decision_;
  } else if (epsilon_known_) {
    selected_ = log_likelihood_ratio_ >= 0.0 ? 0 : 1;
  } else {
    const double px = pulls_[0] ? static_cast<double>(hits_[0]) / pulls_[0] : 0.5;
    const double py = pulls_[1] ? static_cast<double>(hits_[1]) / pulls_[1] : 0.5;
    selected_ = (px >= py) == (hit_prob_[0][0] >= hit_prob_[0][1]) ? 0 : 1;
  }
  return transport_policy(ce_.behavior, ce_.candidates[selected_]);
}

std::unique_ptr<OnlineAgent> elimination_agent(const Counterexample& ce, bool epsilon_known, double delta) {
  return std::make_unique<EliminationAgent>(ce, epsilon_known, delta);
}

// --- Experiment --------------------------------------------------------------------

LowerBoundTable lower_bound_experiment(const std::vector<double>& eps_grid,
                                       const std::vector<std::uint64_t>& seeds,
                                       const LowerBoundOptions& options) {
  if (eps_grid.empty() || seeds.empty()) throw ValidationError("lower_bound: empty grid");
  LowerBoundTable table;
  std::vector<double> log_eps, log_t;
  for (std::size_t g = 0; g < eps_grid.size(); ++g) {
    const Counterexample ce = build_counterexample({eps_grid[g], options.gamma});
    std::vector<double> ts;
    long successes = 0;
    for (std::uint64_t seed : seeds) {
      Rng coin(seed, 2 * g);
      const int truth = static_cast<int>(coin.index(2));
      OnlineEnv env(ce.source, ce.candidates[truth], RngSeed{seed, 2 * g + 1}, options.count_resets);
      EliminationAgent agent(ce, options.epsilon_known, options.delta);
      const OnlineOutcome outcome = run_online(env, agent, options.budget);

      LowerBoundRun run;
      run.epsilon = eps_grid[g];
      run.seed = seed;
      run.transitions = outcome.transitions;
      run.final_loss = imitation_loss(ce.source, ce.behavior, ce.candidates[truth], outcome.policy_hat);
      run.selected_hypothesis = agent.selected_hypothesis();
      run.true_hypothesis = truth;
      run.truncated = outcome.truncated;
      if (run.final_loss < options.gamma / 4.0) ++successes;
      ts.push_back(static_cast<double>(run.transitions));
      table.runs.push_back(run);
    }
    LowerBoundSummary s;
    s.epsilon = eps_grid[g];
    s.median_transitions = median(ts);
    s.success_rate = static_cast<double>(successes) / static_cast<double>(seeds.size());
    table.summary.push_back(s);
    if (eps_grid[g] > 0.0 && s.median_transitions > 0.0) {
      log_eps.push_back(std::log(eps_grid[g]));
      log_t.push_back(std::log(s.median_transitions));
    }
  }
  if (log_eps.size() >= 2) table.slope = fit_slope(log_eps, log_t);
  return table;
}

}  // namespace mcalign
