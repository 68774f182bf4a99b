#include "mcalign/errors.hpp"
#include "mcalign/harness.hpp"
#include "mcalign/sampling.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

struct RunFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> overrides;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON experiment config");
  cmd->add_option("--seed", flags.seed, "base seed (overrides the config)");
  cmd->add_option("--out", flags.out, "output directory (default $ALIGN_OUTPUT_DIR or ./align-out)");
  cmd->add_option("--override", flags.overrides, "key=value, dotted keys for nested fields")->take_all();
}

void write_error(const std::string& dir, const mcalign::Json& record) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream out(std::filesystem::path(dir) / "error.json");
  if (out) out << record.dump(2) << '\n';
}

int run_experiment(const std::string& id, const RunFlags& flags) {
  using namespace mcalign;
  std::string out_dir = flags.out;
  if (out_dir.empty()) {
    const char* env = std::getenv(kOutputDirEnv);
    out_dir = env && *env ? env : "align-out";
  }
  try {
    Json cfg = flags.config_path.empty() ? Json::object() : load_config_file(flags.config_path);
    if (!cfg.is_object()) throw ConfigError("<root>", "config must be a JSON object");
    if (cfg.contains("experiment") && cfg["experiment"] != id) {
      throw ConfigError("experiment", "config is for '" + cfg["experiment"].dump() + "', not '" + id + "'");
    }
    cfg["experiment"] = id;
    for (const auto& o : flags.overrides) apply_override(cfg, o);
    if (flags.seed) cfg["seed"] = *flags.seed;
    if (!flags.out.empty()) cfg["output_dir"] = flags.out;
    else if (!cfg.contains("output_dir")) cfg["output_dir"] = out_dir;
    if (cfg["output_dir"].is_string()) out_dir = cfg["output_dir"].get<std::string>();

    const ExperimentConfig config = parse_config(cfg);
    const RunReport report = run(config);
    if (report.exit_code != 0) {
      std::cerr << report.summary.dump() << '\n';
    } else {
      std::cout << report.summary_line << '\n';
    }
    return report.exit_code;
  } catch (const ConfigError& e) {
    const Json record = {{"error", e.kind()}, {"key", e.key()}, {"message", e.what()}};
    write_error(out_dir, record);
    std::cerr << record.dump() << '\n';
    return 2;
  } catch (const Error& e) {
    const Json record = {{"error", e.kind()}, {"message", e.what()}};
    write_error(out_dir, record);
    std::cerr << record.dump() << '\n';
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace mcalign;
  CLI::App app{"Permutation recovery and imitation experiments for isomorphic tabular MDPs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kLibraryVersion));

  const std::vector<ExperimentId> ids = {ExperimentId::ExactRecovery, ExperimentId::PplSweep,
                                         ExperimentId::RateDiagnostics, ExperimentId::ThresholdBound,
                                         ExperimentId::LowerBound};
  std::vector<RunFlags> flags(ids.size());
  std::vector<CLI::App*> commands;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    CLI::App* cmd = app.add_subcommand(to_string(ids[k]), "run the " + to_string(ids[k]) + " experiment");
    add_run_flags(cmd, flags[k]);
    commands.push_back(cmd);
  }

  std::string gen_kind = "random-friendly-chain";
  int gen_states = 6, gen_actions = 2;
  double gen_gamma = 0.9, gen_epsilon = 0.1;
  std::uint64_t gen_seed = 0;
  std::string gen_path;
  CLI::App* gen = app.add_subcommand("generate", "write a generated MDP and policy to a JSON file");
  gen->add_option("--kind", gen_kind, "random-friendly-chain | random-mdp | counterexample");
  gen->add_option("--states", gen_states, "number of states");
  gen->add_option("--actions", gen_actions, "number of actions");
  gen->add_option("--gamma", gen_gamma, "discount factor");
  gen->add_option("--epsilon", gen_epsilon, "counterexample bias");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--file", gen_path, "output path")->required();

  std::string sample_mdp, sample_out;
  long sample_length = 1000;
  std::uint64_t sample_seed = 0, sample_perm_seed = 0;
  CLI::App* sample = app.add_subcommand("sample", "write a target-domain trajectory from an MDP file");
  sample->add_option("--mdp", sample_mdp, "MDP file with a policy")->required();
  sample->add_option("--length", sample_length, "trajectory length m");
  sample->add_option("--seed", sample_seed, "trajectory seed");
  sample->add_option("--permutation-seed", sample_perm_seed, "seed of the hidden permutation");
  sample->add_option("--file", sample_out, "output path (newline-delimited states)")->required();

  CLI11_PARSE(app, argc, argv);

  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (commands[k]->parsed()) return run_experiment(to_string(ids[k]), flags[k]);
  }

  try {
    if (gen->parsed()) {
      GeneratorSpec spec;
      spec.kind = generator_kind_from_string(gen_kind);
      spec.n_states = gen_states;
      spec.n_actions = gen_actions;
      spec.gamma = gen_gamma;
      spec.epsilon = gen_epsilon;
      const GeneratedInstance inst = generate(spec, gen_seed);
      save_mdp_file(gen_path, inst.mdp, &inst.policy);
      std::cout << to_json(inst.certificate).dump() << '\n';
      return 0;
    }
    if (sample->parsed()) {
      const MdpFile f = load_mdp_file(sample_mdp);
      if (!f.policy) throw ValidationError("mdp file has no policy");
      Rng perm_rng(sample_perm_seed, 1000);
      const PermutationMap pi_star = perm_rng.permutation(f.mdp.n_states());
      const auto traj = sample_trajectory(f.mdp, *f.policy, pi_star, sample_length, RngSeed{sample_seed, 0});
      std::ofstream out(sample_out);
      if (!out) throw ValidationError("cannot write '" + sample_out + "'");
      write_trajectory(out, traj);
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << Json{{"error", e.kind()}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
  return 0;
}
