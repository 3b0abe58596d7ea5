#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "specrl/cli.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  int workers = 0;
  std::string output_dir;
  std::string checkpoint;
};

void add_run_options(CLI::App* sub, CommonOpts& o, bool with_checkpoint) {
  sub->add_option("--config", o.config_path, "run configuration file (JSON)")->required();
  sub->add_option("--seed", o.seed, "override the configured seed");
  sub->add_option("--workers", o.workers, "override the configured worker count");
  sub->add_option("--output-dir", o.output_dir, "override the configured output directory");
  if (with_checkpoint)
    sub->add_option("--checkpoint", o.checkpoint, "override the configured checkpoint path");
}

specrl::RunSetup load_setup(const CLI::App* sub, const CommonOpts& o) {
  specrl::RunConfig cfg = specrl::load_run_config(o.config_path);
  if (sub->count("--seed")) {
    cfg.seed = o.seed;
    cfg.train.seed = o.seed;
    cfg.effective["seed"] = o.seed;
  }
  if (sub->count("--workers")) {
    cfg.train.workers = o.workers;
    cfg.effective["train"]["workers"] = o.workers;
    cfg.train.validate();
  }
  if (sub->count("--output-dir")) {
    cfg.output_dir = o.output_dir;
    cfg.effective["output_dir"] = o.output_dir;
  }
  const CLI::Option* ck = sub->get_option_no_throw("--checkpoint");
  if (ck && ck->count()) {
    cfg.evaluate.checkpoint = o.checkpoint;
    cfg.effective["evaluate"]["checkpoint"] = o.checkpoint;
  }
  return specrl::materialize(std::move(cfg));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"specrl: policy learning for temporal specifications on black-box systems"};
  app.require_subcommand(1);

  CommonOpts topt, gopt, eopt, xopt;
  int translate_words = 2000;

  CLI::App* translate =
      app.add_subcommand("translate", "print normal forms and check them on random words");
  translate->add_option("--config", xopt.config_path, "run configuration file (JSON)")
      ->required();
  translate->add_option("--words", translate_words, "number of random lasso words")
      ->check(CLI::PositiveNumber);

  CLI::App* train = app.add_subcommand("train", "train a policy on the exact labelling");
  add_run_options(train, topt, false);

  CLI::App* guided =
      app.add_subcommand("guided-train", "train through a curriculum of relaxed labellings");
  add_run_options(guided, gopt, false);

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "estimate satisfaction of a trained policy by simulation");
  add_run_options(evaluate, eopt, true);

  CLI::App* oracle = app.add_subcommand("oracle", "exact references on finite models");
  oracle->require_subcommand(1);

  double o_zeta = 0.999, o_tol = 1e-9, o_eps = 0.0;
  int o_ntrunc = 10000, o_horizon = 128, o_chain = 0;
  long long o_traj = 20000, o_n = 0, o_h = 0;
  std::uint64_t o_seed = 1;
  std::string o_mdp;

  CLI::App* ochain = oracle->add_subcommand("chain", "reachability value of the walk chain");
  ochain->add_option("--zeta", o_zeta, "discard parameter in (0,1)")->required();
  ochain->add_option("--n-trunc", o_ntrunc, "truncation length");
  ochain->add_option("--tol", o_tol, "value iteration tolerance");

  CLI::App* oreach = oracle->add_subcommand("reach", "reachability value of an MDP file");
  oreach->add_option("--mdp", o_mdp, "MDP file")->required();
  oreach->add_option("--zeta", o_zeta, "discard parameter in (0,1)")->required();
  oreach->add_option("--tol", o_tol, "value iteration tolerance");

  CLI::App* obuchi = oracle->add_subcommand("buchi", "optimal repeated-visit value of an MDP file");
  obuchi->add_option("--mdp", o_mdp, "MDP file")->required();

  CLI::App* ovisits =
      oracle->add_subcommand("visits", "conditional accepting-visit count, uniform random policy");
  ovisits->add_option("--mdp", o_mdp, "MDP file");
  ovisits->add_option("--chain", o_chain, "use the walk chain with this truncation");
  ovisits->add_option("--horizon", o_horizon, "steps per trajectory");
  ovisits->add_option("--traj", o_traj, "number of trajectories");
  ovisits->add_option("--seed", o_seed, "sampling seed");

  CLI::App* ohoeff = oracle->add_subcommand("hoeffding", "one-sided lower confidence interval");
  ohoeff->add_option("--samples", o_n, "number of samples")->required();
  ohoeff->add_option("--successes", o_h, "number of successes")->required();
  ohoeff->add_option("--eps", o_eps, "interval margin")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  return specrl::run_guarded([&]() -> int {
    if (translate->parsed()) {
      const specrl::RunConfig cfg = specrl::load_run_config(xopt.config_path);
      const specrl::RunSetup setup = specrl::materialize(cfg);
      return specrl::cmd_translate(setup, std::cout, translate_words);
    }
    if (train->parsed()) return specrl::cmd_train(load_setup(train, topt), std::cout);
    if (guided->parsed()) return specrl::cmd_guided_train(load_setup(guided, gopt), std::cout);
    if (evaluate->parsed()) return specrl::cmd_evaluate(load_setup(evaluate, eopt), std::cout);
    if (ochain->parsed()) return specrl::cmd_oracle_chain(o_zeta, o_ntrunc, o_tol, std::cout);
    if (oreach->parsed()) return specrl::cmd_oracle_reach(o_mdp, o_zeta, o_tol, std::cout);
    if (obuchi->parsed()) return specrl::cmd_oracle_buchi(o_mdp, std::cout);
    if (ovisits->parsed()) {
      if (o_mdp.empty() && o_chain <= 0)
        throw std::invalid_argument("oracle visits: give either --mdp or --chain");
      return specrl::cmd_oracle_visits(o_mdp, o_chain, o_traj, o_horizon, o_seed, std::cout);
    }
    if (ohoeff->parsed()) return specrl::cmd_oracle_hoeffding(o_n, o_h, o_eps, std::cout);
    return 2;
  });
}
