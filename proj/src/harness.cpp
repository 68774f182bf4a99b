#include "mcalign/harness.hpp"

#include "mcalign/alignment.hpp"
#include "mcalign/counterexample.hpp"
#include "mcalign/errors.hpp"
#include "mcalign/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace mcalign {

namespace {

// Stream ids reserved for harness-level draws, away from the small integers
// used for per-grid-point trajectories.
constexpr std::uint64_t kPermutationStream = 1000;
constexpr std::uint64_t kScenarioStream = 2000;

}  // namespace

std::string to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::ExactRecovery: return "exact-recovery";
    case ExperimentId::PplSweep: return "ppl-sweep";
    case ExperimentId::RateDiagnostics: return "rate-diagnostics";
    case ExperimentId::ThresholdBound: return "theorem2-check";
    case ExperimentId::LowerBound: return "lower-bound";
  }
  return "exact-recovery";
}

std::optional<ExperimentId> experiment_from_string(const std::string& name) {
  for (auto id : {ExperimentId::ExactRecovery, ExperimentId::PplSweep, ExperimentId::RateDiagnostics,
                  ExperimentId::ThresholdBound, ExperimentId::LowerBound}) {
    if (to_string(id) == name) return id;
  }
  return std::nullopt;
}

// --- Config parsing --------------------------------------------------------------

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError(assignment, "override must have the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json value = Json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  if (!config.is_object()) config = Json::object();
  Json* node = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError(key, "empty path component in override");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    Json& child = (*node)[part];
    if (!child.is_object()) child = Json::object();
    node = &child;
    start = dot + 1;
  }
}

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file '" + path + "'");
  Json j = Json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config", "config file '" + path + "' is not valid JSON");
  return j;
}

namespace {

class Reader {
 public:
  Reader(const Json& obj, std::string prefix) : obj_(obj), prefix_(std::move(prefix)) {
    if (!obj_.is_object()) throw ConfigError(prefix_.empty() ? "<root>" : prefix_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, v] : obj_.items()) {
      if (!ok.count(k)) throw ConfigError(path(k), "unknown key");
    }
  }

  bool has(const std::string& k) const { return obj_.contains(k); }
  const Json& at(const std::string& k) const { return obj_.at(k); }
  std::string path(const std::string& k) const { return prefix_.empty() ? k : prefix_ + "." + k; }

  double number(const std::string& k, double def) const {
    if (!has(k)) return def;
    if (!at(k).is_number()) throw ConfigError(path(k), "expected a number");
    return at(k).get<double>();
  }
  long integer(const std::string& k, long def) const {
    if (!has(k)) return def;
    if (!at(k).is_number_integer()) throw ConfigError(path(k), "expected an integer");
    return at(k).get<long>();
  }
  bool boolean(const std::string& k, bool def) const {
    if (!has(k)) return def;
    if (!at(k).is_boolean()) throw ConfigError(path(k), "expected true or false");
    return at(k).get<bool>();
  }
  std::string string(const std::string& k, const std::string& def) const {
    if (!has(k)) return def;
    if (!at(k).is_string()) throw ConfigError(path(k), "expected a string");
    return at(k).get<std::string>();
  }
  template <class T>
  std::vector<T> array(const std::string& k, std::vector<T> def) const {
    if (!has(k)) return def;
    const Json& a = at(k);
    if (!a.is_array() || a.empty()) throw ConfigError(path(k), "expected a nonempty array");
    std::vector<T> out;
    for (const auto& e : a) {
      if constexpr (std::is_integral_v<T>) {
        if (!e.is_number_integer()) throw ConfigError(path(k), "expected integers");
      } else {
        if (!e.is_number()) throw ConfigError(path(k), "expected numbers");
      }
      out.push_back(e.get<T>());
    }
    return out;
  }

 private:
  const Json& obj_;
  std::string prefix_;
};

std::uint64_t default_seed_count(ExperimentId id) {
  switch (id) {
    case ExperimentId::ExactRecovery: return 100;
    case ExperimentId::PplSweep: return 20;
    case ExperimentId::RateDiagnostics: return 20;
    case ExperimentId::ThresholdBound: return 100;
    case ExperimentId::LowerBound: return 200;
  }
  return 20;
}

std::string default_output_dir() {
  if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
  return "align-out";
}

Json generator_to_json(const GeneratorSpec& g) {
  return {{"kind", to_string(g.kind)},
          {"n_states", g.n_states},
          {"n_actions", g.n_actions},
          {"gamma", g.gamma},
          {"retry_cap", g.retry_cap},
          {"min_alpha", g.min_alpha},
          {"min_beta", g.min_beta},
          {"low_occupancy_states", g.low_occupancy_states},
          {"low_occupancy_scale", g.low_occupancy_scale},
          {"epsilon", g.epsilon}};
}

}  // namespace

ExperimentConfig parse_config(const Json& j) {
  const Reader root(j, "");
  root.allow({"experiment", "instance", "seed", "seeds", "grids", "delta", "epsilon_known", "adversarial",
              "completion_rule", "tol_alpha", "tol_beta", "output_dir"});

  ExperimentConfig c;
  if (!root.has("experiment")) throw ConfigError("experiment", "missing experiment id");
  const std::string id = root.string("experiment", "");
  const auto parsed = experiment_from_string(id);
  if (!parsed) throw ConfigError("experiment", "unrecognized experiment '" + id + "'");
  c.experiment = *parsed;

  // Experiment-specific generator defaults.
  if (c.experiment == ExperimentId::PplSweep) {
    c.generator.kind = GeneratorKind::RandomMdp;
    c.generator.low_occupancy_states = 1;
    c.generator.min_alpha = 0.02;
    c.generator.min_beta = 0.05;
  } else if (c.experiment == ExperimentId::ThresholdBound) {
    c.generator.kind = GeneratorKind::RandomMdp;
  } else if (c.experiment == ExperimentId::LowerBound) {
    c.generator.kind = GeneratorKind::Counterexample;
  }

  if (root.has("instance")) {
    const Reader inst(root.at("instance"), "instance");
    inst.allow({"file", "generator"});
    if (inst.has("file") && inst.has("generator")) {
      throw ConfigError("instance", "give either 'file' or 'generator', not both");
    }
    if (inst.has("file")) {
      c.instance_file = inst.string("file", "");
      if (!std::filesystem::exists(*c.instance_file)) {
        throw ConfigError("instance.file", "file '" + *c.instance_file + "' does not exist");
      }
    }
    if (inst.has("generator")) {
      const Reader g(inst.at("generator"), "instance.generator");
      g.allow({"kind", "n_states", "n_actions", "gamma", "retry_cap", "min_alpha", "min_beta",
               "low_occupancy_states", "low_occupancy_scale", "epsilon"});
      auto& spec = c.generator;
      if (g.has("kind")) {
        try {
          spec.kind = generator_kind_from_string(g.string("kind", ""));
        } catch (const ValidationError& e) {
          throw ConfigError(g.path("kind"), e.what());
        }
      }
      spec.n_states = static_cast<int>(g.integer("n_states", spec.n_states));
      spec.n_actions = static_cast<int>(g.integer("n_actions", spec.n_actions));
      spec.gamma = g.number("gamma", spec.gamma);
      spec.retry_cap = static_cast<int>(g.integer("retry_cap", spec.retry_cap));
      spec.min_alpha = g.number("min_alpha", spec.min_alpha);
      spec.min_beta = g.number("min_beta", spec.min_beta);
      spec.low_occupancy_states = static_cast<int>(g.integer("low_occupancy_states", spec.low_occupancy_states));
      spec.low_occupancy_scale = g.number("low_occupancy_scale", spec.low_occupancy_scale);
      spec.epsilon = g.number("epsilon", spec.epsilon);
      if (spec.n_states < 1) throw ConfigError(g.path("n_states"), "must be positive");
      if (spec.n_actions < 1) throw ConfigError(g.path("n_actions"), "must be positive");
      if (!(spec.gamma > 0.0 && spec.gamma < 1.0)) throw ConfigError(g.path("gamma"), "must lie in (0,1)");
      if (spec.retry_cap < 1) throw ConfigError(g.path("retry_cap"), "must be positive");
      if (spec.low_occupancy_states < 0 || spec.low_occupancy_states >= spec.n_states) {
        throw ConfigError(g.path("low_occupancy_states"), "must lie in [0, n_states)");
      }
    }
  }

  const long base_seed = root.integer("seed", 0);
  if (base_seed < 0) throw ConfigError("seed", "must be nonnegative");
  if (root.has("seeds") && root.at("seeds").is_array()) {
    for (long s : root.array<long>("seeds", {})) {
      if (s < 0) throw ConfigError("seeds", "seeds must be nonnegative");
      c.seeds.push_back(static_cast<std::uint64_t>(s));
    }
  } else {
    const long count = root.integer("seeds", static_cast<long>(default_seed_count(c.experiment)));
    if (count < 1) throw ConfigError("seeds", "seed count must be positive");
    for (long k = 0; k < count; ++k) c.seeds.push_back(static_cast<std::uint64_t>(base_seed + k));
  }

  c.m_grid = {1000, 10000, 100000, 1000000};
  if (c.experiment == ExperimentId::PplSweep) c.m_grid = {1000, 10000, 100000};
  c.eps_grid = {0.02, 0.04, 0.08, 0.16};
  c.n_grid = {4, 5, 6, 7, 8, 9, 10, 11, 12};
  if (root.has("grids")) {
    const Reader g(root.at("grids"), "grids");
    g.allow({"m", "t", "epsilon", "n_states"});
    c.m_grid = g.array<long>("m", c.m_grid);
    c.t_grid = g.array<double>("t", c.t_grid);
    c.eps_grid = g.array<double>("epsilon", c.eps_grid);
    c.n_grid = g.array<int>("n_states", c.n_grid);
    for (long m : c.m_grid)
      if (m < 2) throw ConfigError("grids.m", "trajectory lengths must be >= 2");
    for (std::size_t k = 1; k < c.m_grid.size(); ++k)
      if (c.m_grid[k] <= c.m_grid[k - 1]) throw ConfigError("grids.m", "must be strictly increasing");
    for (double t : c.t_grid)
      if (!(t > 0.0)) throw ConfigError("grids.t", "thresholds must be positive");
    for (double e : c.eps_grid)
      if (!(e > 0.0 && e < 0.5)) throw ConfigError("grids.epsilon", "values must lie in (0, 1/2)");
    for (int n : c.n_grid)
      if (n < 1) throw ConfigError("grids.n_states", "sizes must be positive");
  }
  if (c.experiment == ExperimentId::ThresholdBound && c.t_grid.empty()) {
    for (int n : c.n_grid)
      if (n < 3) throw ConfigError("grids.n_states", "theorem2-check needs at least 3 states");
  }

  c.delta = root.number("delta", c.delta);
  if (!(c.delta > 0.0 && c.delta < 1.0)) throw ConfigError("delta", "must lie in (0,1)");
  c.epsilon_known = root.boolean("epsilon_known", c.epsilon_known);
  c.adversarial = root.boolean("adversarial", c.adversarial);
  try {
    c.completion_rule = completion_rule_from_string(root.string("completion_rule", "ascending"));
  } catch (const ValidationError& e) {
    throw ConfigError("completion_rule", e.what());
  }
  c.tol_alpha = root.number("tol_alpha", c.tol_alpha);
  c.tol_beta = root.number("tol_beta", c.tol_beta);
  c.output_dir = root.string("output_dir", default_output_dir());

  Json echo;
  echo["experiment"] = to_string(c.experiment);
  if (c.instance_file) echo["instance"] = {{"file", *c.instance_file}};
  else echo["instance"] = {{"generator", generator_to_json(c.generator)}};
  echo["seeds"] = c.seeds;
  echo["grids"] = {{"m", c.m_grid}, {"epsilon", c.eps_grid}, {"n_states", c.n_grid}};
  if (!c.t_grid.empty()) echo["grids"]["t"] = c.t_grid;
  echo["delta"] = c.delta;
  echo["epsilon_known"] = c.epsilon_known;
  echo["adversarial"] = c.adversarial;
  echo["completion_rule"] = to_string(c.completion_rule);
  echo["tol_alpha"] = c.tol_alpha;
  echo["tol_beta"] = c.tol_beta;
  echo["output_dir"] = c.output_dir;
  c.echo = std::move(echo);
  return c;
}

// --- Shared helpers ----------------------------------------------------------------

double midpoint_threshold(const Vector& mu, int clipped) {
  if (clipped < 1 || clipped >= mu.size()) {
    throw ValidationError("midpoint_threshold: clipped count must lie in [1, n)");
  }
  std::vector<double> sorted(mu.data(), mu.data() + mu.size());
  std::sort(sorted.begin(), sorted.end());
  return 0.5 * (sorted[clipped - 1] + sorted[clipped]);
}

ThresholdInstance find_threshold_instance(const GeneratorSpec& spec, std::uint64_t first_seed,
                                          double min_alpha, double min_beta, int max_tries) {
  GeneratorSpec draw_spec = spec;
  draw_spec.kind = GeneratorKind::RandomMdp;
  const int clipped = std::max(1, spec.low_occupancy_states);
  for (int k = 0; k < max_tries; ++k) {
    const std::uint64_t seed = first_seed + static_cast<std::uint64_t>(k);
    GeneratedInstance inst = generate_random_mdp(draw_spec, seed);
    const Vector mu = discounted_stationary(inst.mdp, inst.policy);
    const double t = midpoint_threshold(mu, clipped);
    const auto idx = threshold_set(mu, t);
    const ChainSummary block = rescale(principal_submatrix(induced_chain(inst.mdp, inst.policy), idx),
                                       subvector(mu, idx));
    const auto cert = friendliness(block, min_alpha, min_beta);
    if (cert.is_friendly) return ThresholdInstance{std::move(inst), t, cert, seed};
  }
  throw GenerationError("no threshold instance with a friendly retained block in " +
                        std::to_string(max_tries) + " seeds");
}

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

struct Instance {
  TabularMdp mdp;
  StochasticPolicy policy;
  std::optional<FriendlinessCertificate> certificate;
  int attempts = 1;
};

Instance file_instance(const ExperimentConfig& c) {
  MdpFile f = load_mdp_file(*c.instance_file);
  if (!f.policy) throw ConfigError("instance.file", "mdp file has no 'policy'");
  return Instance{std::move(f.mdp), std::move(*f.policy), std::nullopt, 1};
}

Instance generated_instance(const GeneratorSpec& spec, std::uint64_t seed) {
  GeneratedInstance g = generate(spec, seed);
  return Instance{std::move(g.mdp), std::move(g.policy), g.certificate, g.attempts};
}

PermutationMap hidden_permutation(std::uint64_t seed, int n) {
  Rng rng(seed, kPermutationStream);
  return rng.permutation(n);
}

// --- Experiments -------------------------------------------------------------------

std::string exact_recovery(const ExperimentConfig& c, Json& summary, std::string& line) {
  std::ostringstream csv;
  csv << "seed,n_states,attempts,alpha,beta,success,error\n";
  long successes = 0;
  for (std::size_t k = 0; k < c.seeds.size(); ++k) {
    const std::uint64_t seed = c.seeds[k];
    GeneratorSpec spec = c.generator;
    spec.n_states = c.n_grid[k % c.n_grid.size()];
    std::string error;
    bool success = false;
    int n = spec.n_states, attempts = 0;
    double alpha = std::nan(""), beta = std::nan("");
    try {
      const Instance inst = c.instance_file ? file_instance(c) : generated_instance(spec, seed);
      n = inst.mdp.n_states();
      attempts = inst.attempts;
      const Matrix m = induced_chain(inst.mdp, inst.policy);
      const auto cert = chain_certificate(inst.mdp, inst.policy, c.tol_alpha, c.tol_beta);
      alpha = cert.alpha;
      beta = cert.beta;
      const PermutationMap pi_star = hidden_permutation(seed, n);
      const PermutationMap pi = exact_recover(m, conjugate(m, pi_star), inst.mdp.p0(), c.tol_alpha, c.tol_beta);
      success = pi == pi_star;
      if (!success) error = "wrong-permutation";
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      error = e.kind();
    }
    if (success) ++successes;
    csv << seed << ',' << n << ',' << attempts << ',' << num(alpha) << ',' << num(beta) << ','
        << (success ? 1 : 0) << ',' << error << '\n';
  }
  summary["successes"] = successes;
  summary["runs"] = c.seeds.size();
  line = "success=" + std::to_string(successes) + "/" + std::to_string(c.seeds.size());
  return csv.str();
}

std::string ppl_sweep(const ExperimentConfig& c, Json& summary, std::string& line) {
  std::optional<Instance> inst;
  std::vector<double> ts = c.t_grid;
  if (c.instance_file) {
    inst = file_instance(c);
    if (ts.empty()) {
      ts.push_back(midpoint_threshold(discounted_stationary(inst->mdp, inst->policy),
                                      std::max(1, c.generator.low_occupancy_states)));
    }
  } else {
    ThresholdInstance ti = find_threshold_instance(c.generator, c.seeds.front(), c.generator.min_alpha,
                                                   c.generator.min_beta);
    summary["instance_seed"] = ti.seed;
    summary["restricted_alpha"] = ti.restricted_certificate.alpha;
    summary["restricted_beta"] = ti.restricted_certificate.beta;
    if (ts.empty()) ts.push_back(ti.t);
    inst = Instance{ti.instance.mdp, ti.instance.policy, ti.instance.certificate, ti.instance.attempts};
  }
  const TabularMdp& mdp = inst->mdp;
  const StochasticPolicy& policy = inst->policy;
  const int n = mdp.n_states();
  const Vector mu = discounted_stationary(mdp, policy);

  std::ostringstream csv;
  csv << "t,m,seed,status,matched,aligned,loss,bound,within_bound\n";
  Json cells = Json::array();
  for (double t : ts) {
    const auto source_idx = threshold_set(mu, t);
    for (std::size_t g = 0; g < c.m_grid.size(); ++g) {
      const long m = c.m_grid[g];
      std::vector<double> losses;
      long aligned_count = 0;
      for (std::uint64_t seed : c.seeds) {
        const PermutationMap pi_star = hidden_permutation(seed, n);
        const auto traj = sample_trajectory(mdp, policy, pi_star, m, RngSeed{seed, g});
        PplConfig cfg{t, c.tol_alpha, c.tol_beta, c.completion_rule, StationaryEstimator::TransitionCounts};
        std::string status = "ok";
        int matched = 0;
        bool aligned = false;
        double loss = std::nan(""), bound = 2.0 * t * n / ((1.0 - mdp.gamma()) * (1.0 - mdp.gamma()));
        try {
          const AlignmentResult r = ppl(mdp, policy, cfg, traj);
          matched = r.diagnostics.matched;
          aligned = true;
          for (int i : r.matched_indices) {
            if (r.pi_hat(i) != pi_star(i)) aligned = false;
          }
          loss = imitation_loss(mdp, policy, pi_star, r.policy_hat);
          losses.push_back(loss);
        } catch (const Error& e) {
          status = e.kind();
        }
        if (aligned) ++aligned_count;
        const bool within = !std::isnan(loss) && loss <= bound + 1e-9;
        csv << num(t) << ',' << m << ',' << seed << ',' << status << ',' << matched << ',' << (aligned ? 1 : 0)
            << ',' << num(loss) << ',' << num(bound) << ',' << (within ? 1 : 0) << '\n';
      }
      cells.push_back({{"t", t},
                       {"m", m},
                       {"source_matched", source_idx.size()},
                       {"aligned", aligned_count},
                       {"completed", losses.size()},
                       {"median_loss", losses.empty() ? Json(nullptr) : Json(median(losses))}});
    }
  }
  summary["cells"] = cells;
  line = "cells=" + std::to_string(cells.size());
  for (const auto& cell : cells) {
    line += " [m=" + std::to_string(cell["m"].get<long>()) + " aligned=" +
            std::to_string(cell["aligned"].get<long>()) + "/" + std::to_string(c.seeds.size()) + "]";
  }
  return csv.str();
}

std::string rate_experiment(const ExperimentConfig& c, Json& summary, std::string& line) {
  const Instance inst = c.instance_file ? file_instance(c) : generated_instance(c.generator, c.seeds.front());
  const PermutationMap pi_star = hidden_permutation(c.seeds.front(), inst.mdp.n_states());
  const RateTable table = rate_diagnostics(inst.mdp, inst.policy, pi_star, c.m_grid, c.seeds);
  std::ostringstream csv;
  csv << "m,seed,chain_error,stationary_error\n";
  for (const auto& s : table.samples) {
    csv << s.m << ',' << s.seed << ',' << num(s.chain_error) << ',' << num(s.stationary_error) << '\n';
  }
  summary["m"] = table.m_grid;
  summary["median_chain_error"] = table.median_chain_error;
  summary["median_stationary_error"] = table.median_stationary_error;
  summary["chain_slope"] = table.chain_slope;
  summary["stationary_slope"] = table.stationary_slope;
  line = "chain_slope=" + num(table.chain_slope) + " stationary_slope=" + num(table.stationary_slope);
  return csv.str();
}

std::string threshold_bound(const ExperimentConfig& c, Json& summary, std::string& line) {
  std::ostringstream csv;
  csv << "seed,n_states,clipped,t,loss,bound,hypothesis_met,holds\n";
  long holds = 0, applicable = 0;
  double max_ratio = 0.0;
  for (std::size_t k = 0; k < c.seeds.size(); ++k) {
    const std::uint64_t seed = c.seeds[k];
    GeneratorSpec spec = c.generator;
    spec.n_states = c.n_grid[k % c.n_grid.size()];
    Instance inst = c.instance_file ? file_instance(c) : generated_instance(spec, seed);
    const int n = inst.mdp.n_states();
    Vector mu = discounted_stationary(inst.mdp, inst.policy);
    Rng rng(seed, kScenarioStream);

    double t;
    if (c.t_grid.empty()) {
      if (n < 3) throw ConfigError("grids.n_states", "theorem2-check needs at least 3 states");
      const int clipped = 2 + static_cast<int>(rng.index(static_cast<std::uint64_t>(n - 2)));
      t = midpoint_threshold(mu, clipped);
    } else {
      t = c.t_grid[k % c.t_grid.size()];
    }
    std::vector<int> low;
    for (int s = 0; s < n; ++s)
      if (mu(s) < t) low.push_back(s);

    if (c.adversarial && inst.mdp.n_actions() > 1) {
      // Opposed deterministic actions on consecutive clipped states; mu does
      // not depend on these rows only through the chain, so recompute it.
      Matrix probs = inst.policy.probs();
      for (std::size_t r = 0; r < low.size(); ++r) {
        probs.row(low[r]).setZero();
        probs(low[r], static_cast<int>(r % inst.mdp.n_actions())) = 1.0;
      }
      inst.policy = StochasticPolicy(std::move(probs));
      mu = discounted_stationary(inst.mdp, inst.policy);
      low.clear();
      for (int s = 0; s < n; ++s)
        if (mu(s) < t) low.push_back(s);
    }

    const PermutationMap pi_star = hidden_permutation(seed, n);
    // pi_hat agrees with pi_star except that the preimages of clipped source
    // states are rotated among themselves.
    std::vector<int> forward = pi_star.forward();
    std::vector<int> targets;
    for (int i = 0; i < n; ++i)
      if (std::find(low.begin(), low.end(), forward[i]) != low.end()) targets.push_back(i);
    if (targets.size() >= 2) {
      const int first = forward[targets.front()];
      for (std::size_t r = 0; r + 1 < targets.size(); ++r) forward[targets[r]] = forward[targets[r + 1]];
      forward[targets.back()] = first;
    }
    const PermutationMap pi_hat(std::move(forward));
    const BoundCheck check = imitation_loss_bound_check(inst.mdp, inst.policy, pi_star, pi_hat, t);
    if (check.hypothesis_met) {
      ++applicable;
      if (check.holds) ++holds;
    }
    max_ratio = std::max(max_ratio, check.loss / check.bound);
    csv << seed << ',' << n << ',' << low.size() << ',' << num(t) << ',' << num(check.loss) << ','
        << num(check.bound) << ',' << (check.hypothesis_met ? 1 : 0) << ',' << (check.holds ? 1 : 0) << '\n';
  }
  summary["holds"] = holds;
  summary["applicable"] = applicable;
  summary["max_loss_to_bound"] = max_ratio;
  line = "holds=" + std::to_string(holds) + "/" + std::to_string(applicable) + " max_ratio=" + num(max_ratio);
  return csv.str();
}

std::string lower_bound(const ExperimentConfig& c, Json& summary, std::string& line) {
  LowerBoundOptions opt;
  opt.gamma = c.generator.gamma;
  opt.delta = c.delta;
  opt.epsilon_known = c.epsilon_known;
  const LowerBoundTable table = lower_bound_experiment(c.eps_grid, c.seeds, opt);
  std::ostringstream csv;
  csv << "epsilon,seed,T,final_loss,selected_hypothesis,true_hypothesis\n";
  for (const auto& r : table.runs) {
    csv << num(r.epsilon) << ',' << r.seed << ',' << r.transitions << ',' << num(r.final_loss) << ','
        << r.selected_hypothesis << ',' << r.true_hypothesis << '\n';
  }
  Json rows = Json::array();
  for (const auto& s : table.summary) {
    rows.push_back({{"epsilon", s.epsilon}, {"median_T", s.median_transitions}, {"success_rate", s.success_rate}});
  }
  summary["per_epsilon"] = rows;
  summary["slope"] = table.slope;
  line = "slope=" + num(table.slope);
  return csv.str();
}

}  // namespace

std::string run_to_csv(const ExperimentConfig& config, Json* summary, std::string* summary_line) {
  Json s = Json::object();
  std::string line;
  std::string csv;
  switch (config.experiment) {
    case ExperimentId::ExactRecovery: csv = exact_recovery(config, s, line); break;
    case ExperimentId::PplSweep: csv = ppl_sweep(config, s, line); break;
    case ExperimentId::RateDiagnostics: csv = rate_experiment(config, s, line); break;
    case ExperimentId::ThresholdBound: csv = threshold_bound(config, s, line); break;
    case ExperimentId::LowerBound: csv = lower_bound(config, s, line); break;
  }
  if (summary) *summary = std::move(s);
  if (summary_line) *summary_line = std::move(line);
  return csv;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << text;
}

}  // namespace

RunReport run(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);

  Json manifest;
  manifest["experiment"] = to_string(config.experiment);
  manifest["library_version"] = kLibraryVersion;
  manifest["rng"] = {{"engine", "mt19937_64 via seed_seq{seed lo, seed hi, stream lo, stream hi}"},
                     {"version", Rng::kRngVersion}};
  manifest["seeds"] = config.seeds;
  manifest["config"] = config.echo;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");

  RunReport report;
  try {
    const std::string csv = run_to_csv(config, &report.summary, &report.summary_line);
    write_file(dir / (to_string(config.experiment) + ".csv"), csv);
    Json results;
    results["experiment"] = to_string(config.experiment);
    results["summary"] = report.summary;
    results["summary_line"] = report.summary_line;
    write_file(dir / "results.json", results.dump(2) + "\n");
    report.exit_code = 0;
  } catch (const ConfigError& e) {
    report.summary = {{"error", e.kind()}, {"key", e.key()}, {"message", e.what()}};
    report.exit_code = 2;
  } catch (const Error& e) {
    report.summary = {{"error", e.kind()}, {"message", e.what()}};
    report.exit_code = 1;
  }
  if (report.exit_code != 0) {
    write_file(dir / "error.json", report.summary.dump(2) + "\n");
    report.summary_line = "error=" + report.summary["error"].get<std::string>();
  }
  return report;
}

}  // namespace mcalign
