#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "specrl/config.hpp"
#include "specrl/csv.hpp"
#include "specrl/oracle.hpp"

namespace specrl {

// ============================================================================
//  Commands: translate, train, guided-train, evaluate, oracle
// ============================================================================

// ----------------------------------------------------------------------------
//  Checkpoints: actor and critic back to back in one text file
// ----------------------------------------------------------------------------

inline void save_checkpoint(const std::string& path, const Mlp& actor, const Mlp& critic) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  save_mlp(out, actor, "actor");
  save_mlp(out, critic, "critic");
}

inline std::pair<Mlp, Mlp> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  Mlp actor = load_mlp(in, "actor");
  Mlp critic = load_mlp(in, "critic");
  return {std::move(actor), std::move(critic)};
}

namespace clidetail {

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
}

inline std::string run_dir(const RunSetup& s) {
  std::filesystem::create_directories(s.cfg.output_dir);
  return s.cfg.output_dir;
}

inline void dump_config(const RunSetup& s, const std::string& dir) {
  write_text_file(dir + "/config.json", s.cfg.effective.dump(2) + "\n");
}

inline MetricsSink make_metrics_sink(CsvWriter& w) {
  return [&w](const MetricsRow& r) {
    w.row({r.stage, r.phase, std::to_string(r.batch), std::to_string(r.episodes_done),
           csv_number(r.mean_return), csv_number(r.actor_loss), csv_number(r.critic_loss),
           csv_number(r.entropy), csv_number(r.estimate)});
  };
}

inline const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "stage",      "phase",      "batch",   "episodes_done", "mean_return",
      "actor_loss", "critic_loss", "entropy", "estimate"};
  return cols;
}

/// Fresh policy/value networks matching the product dimensions.
inline std::pair<Mlp, Mlp> init_networks(const AugmentedProduct& prod, const TrainConfig& cfg) {
  std::vector<int> as = {encode_dim(prod)};
  as.insert(as.end(), cfg.actor_hidden.begin(), cfg.actor_hidden.end());
  as.push_back(prod.num_actions());
  std::vector<int> cs = {encode_dim(prod)};
  cs.insert(cs.end(), cfg.critic_hidden.begin(), cfg.critic_hidden.end());
  cs.push_back(1);
  Rng rng = make_stream_rng(cfg.seed, detail::kInitStream);
  Mlp actor = Mlp::xavier(as, rng);
  Mlp critic = Mlp::xavier(cs, rng);
  return {std::move(actor), std::move(critic)};
}

inline void check_network_shape(const Mlp& net, int in, int out, const std::string& what) {
  if (net.sizes.front() != in || net.sizes.back() != out)
    throw std::runtime_error("checkpoint " + what + " expects input " +
                             std::to_string(net.sizes.front()) + " and output " +
                             std::to_string(net.sizes.back()) + ", the product needs " +
                             std::to_string(in) + " and " + std::to_string(out));
}

/// Policy closure over a trained actor: masked sampling on the product.
inline PolicyFn make_actor_policy(const AugmentedProduct& prod, const Mlp& actor) {
  return [&prod, &actor](const std::vector<double>& s, int q, Rng& rng) {
    const ProductState p{s, q};
    const std::uint64_t mask = action_mask(prod, p, true);
    return actor_sample(actor, encode_product_state(prod, p), mask, rng);
  };
}

}  // namespace clidetail

// ----------------------------------------------------------------------------
//  translate: normal forms plus a randomized equivalence check
// ----------------------------------------------------------------------------

/// Prints the formula, its positive normal form and (with a labeling) the
/// reinterpretation over the cell alphabet, then cross-checks them on
/// `words` random lasso words.  Returns 0 on agreement, 1 otherwise.
inline int cmd_translate(const RunSetup& s, std::ostream& out, int words = 2000) {
  if (!s.formula) throw std::invalid_argument("translate: the config has no formula");
  out << "formula:       " << to_string(s.formula) << "\n";
  out << "pnf:           " << to_string(s.formula_pnf) << "\n";
  if (s.formula_sigma) out << "reinterpreted: " << to_string(s.formula_sigma) << "\n";

  Rng rng = make_stream_rng(s.cfg.seed, 0x7000000);
  std::uniform_int_distribution<int> prefix_len(0, 6), cycle_len(1, 6);
  long long mismatches = 0;

  if (s.labeling) {
    const Labeling& lab = *s.labeling;
    LassoWord base, cells;
    base.atoms = lab.base_atoms;
    for (const auto& c : lab.cells) cells.atoms.push_back(c.name);
    std::uniform_int_distribution<int> pick(0, lab.num_cells() - 1);
    for (int w = 0; w < words; ++w) {
      base.prefix.clear();
      base.cycle.clear();
      cells.prefix.clear();
      cells.cycle.clear();
      const int np = prefix_len(rng), nc = cycle_len(rng);
      for (int i = 0; i < np + nc; ++i) {
        const int c = pick(rng);
        auto& bside = i < np ? base.prefix : base.cycle;
        auto& cside = i < np ? cells.prefix : cells.cycle;
        bside.push_back(lab.cells[c].base_letter);
        cside.push_back(LetterMask{1} << c);
      }
      const bool v0 = eval_lasso(s.formula, base);
      const bool v1 = eval_lasso(s.formula_pnf, base);
      const bool v2 = eval_lasso(s.formula_sigma, cells);
      if (v0 != v1 || v0 != v2) ++mismatches;
    }
  } else {
    std::set<std::string> atom_set;
    collect_atoms(s.formula, atom_set);
    LassoWord word;
    word.atoms.assign(atom_set.begin(), atom_set.end());
    const int n_atoms = static_cast<int>(word.atoms.size());
    std::uniform_int_distribution<LetterMask> pick(
        0, n_atoms >= 32 ? ~LetterMask{0} : (LetterMask{1} << n_atoms) - 1);
    for (int w = 0; w < words; ++w) {
      word.prefix.clear();
      word.cycle.clear();
      const int np = prefix_len(rng), nc = cycle_len(rng);
      for (int i = 0; i < np; ++i) word.prefix.push_back(pick(rng));
      for (int i = 0; i < nc; ++i) word.cycle.push_back(pick(rng));
      if (eval_lasso(s.formula, word) != eval_lasso(s.formula_pnf, word)) ++mismatches;
    }
  }

  if (mismatches == 0) {
    out << "lasso agreement: PASS (" << words << " words)\n";
    return 0;
  }
  out << "lasso agreement: FAIL (" << mismatches << " of " << words << " words disagree)\n";
  return 1;
}

// ----------------------------------------------------------------------------
//  train: flat training on the exact labelling
// ----------------------------------------------------------------------------

inline int cmd_train(const RunSetup& s, std::ostream& out) {
  if (!s.env) throw std::invalid_argument("train: the config has no environment");
  if (!s.automaton) throw std::invalid_argument("train: the config has no automaton");
  if (!s.label) throw std::invalid_argument("train: no labelling is available");
  const AugmentedProduct prod(*s.env, *s.automaton, s.label, s.cfg.zeta, s.mode);

  const std::string dir = clidetail::run_dir(s);
  clidetail::dump_config(s, dir);
  CsvWriter metrics(dir + "/metrics.csv", clidetail::metrics_columns());
  const TrainResult res = train(prod, s.cfg.train, clidetail::make_metrics_sink(metrics));

  save_checkpoint(dir + "/final.ckpt", res.actor, res.critic);
  clidetail::write_text_file(dir + "/estimate.txt", csv_number(res.estimate, 17) + "\n");
  out << "episodes: " << res.episodes << "\n";
  out << "estimate: " << csv_number(res.estimate) << "\n";
  out << "run directory: " << dir << "\n";
  return 0;
}

// ----------------------------------------------------------------------------
//  guided-train: curriculum over relaxed labellings
// ----------------------------------------------------------------------------

inline int cmd_guided_train(const RunSetup& s, std::ostream& out) {
  if (!s.env) throw std::invalid_argument("guided-train: the config has no environment");
  if (!s.automaton) throw std::invalid_argument("guided-train: the config has no automaton");
  if (!s.labeling) throw std::invalid_argument("guided-train: the config has no labeling");
  if (s.curriculum.stages.empty())
    throw std::invalid_argument("guided-train: the config has no curriculum");

  const std::string dir = clidetail::run_dir(s);
  clidetail::dump_config(s, dir);
  CsvWriter metrics(dir + "/metrics.csv", clidetail::metrics_columns());
  const GuidedResult res =
      guided_train(*s.env, *s.automaton, *s.labeling, s.curriculum, s.cfg.train, s.cfg.zeta,
                   s.mode, clidetail::make_metrics_sink(metrics));

  CsvWriter stages(dir + "/stages.csv", {"stage", "zeta", "episodes", "estimate"});
  for (std::size_t i = 0; i < res.stages.size(); ++i) {
    const StageResult& st = res.stages[i];
    stages.row({st.name, csv_number(st.zeta), std::to_string(st.episodes),
                csv_number(st.estimate)});
    save_checkpoint(dir + "/stage_" + std::to_string(i) + ".ckpt", st.actor, st.critic);
    out << "stage " << st.name << ": zeta " << csv_number(st.zeta) << ", estimate "
        << csv_number(st.estimate) << "\n";
  }
  save_checkpoint(dir + "/final.ckpt", res.actor, res.critic);
  clidetail::write_text_file(dir + "/estimate.txt",
                             csv_number(res.stages.back().estimate, 17) + "\n");
  out << "estimate: " << csv_number(res.stages.back().estimate) << "\n";
  out << "run directory: " << dir << "\n";
  return 0;
}

// ----------------------------------------------------------------------------
//  evaluate: Monte Carlo satisfaction with a Hoeffding lower bound
// ----------------------------------------------------------------------------

inline int cmd_evaluate(const RunSetup& s, std::ostream& out) {
  if (!s.env) throw std::invalid_argument("evaluate: the config has no environment");
  if (!s.automaton) throw std::invalid_argument("evaluate: the config has no automaton");
  if (!s.label) throw std::invalid_argument("evaluate: no labelling is available");
  if (!s.formula) throw std::invalid_argument("evaluate: the config has no formula");
  const AugmentedProduct prod(*s.env, *s.automaton, s.label, s.cfg.zeta, s.mode);
  const EvaluateConfig& ev = s.cfg.evaluate;

  Mlp actor, critic;
  if (!ev.checkpoint.empty()) {
    std::tie(actor, critic) = load_checkpoint(ev.checkpoint);
    clidetail::check_network_shape(actor, encode_dim(prod), prod.num_actions(), "actor");
    clidetail::check_network_shape(critic, encode_dim(prod), 1, "critic");
  } else {
    std::tie(actor, critic) = clidetail::init_networks(prod, s.cfg.train);
    out << "no checkpoint given, evaluating freshly initialized networks\n";
  }

  const std::string dir = clidetail::run_dir(s);
  clidetail::dump_config(s, dir);

  std::vector<std::string> cols = {"traj", "step"};
  for (int d = 0; d < s.env->state_dim; ++d) cols.push_back("s" + std::to_string(d));
  cols.push_back("q");
  cols.push_back("action");
  cols.push_back("letter");
  CsvWriter traj_csv(dir + "/trajectories.csv", cols);
  const Ldba& aut = *s.automaton;
  TrajectorySink sink = [&traj_csv, &aut](int traj, int step, const std::vector<double>& x,
                                          int q, int action, LetterMask letter) {
    std::vector<std::string> row = {std::to_string(traj), std::to_string(step)};
    for (double v : x) row.push_back(csv_number(v));
    row.push_back(std::to_string(q));
    row.push_back(std::to_string(action));
    row.push_back(aut.alphabet.letter_name(letter));
    traj_csv.row(row);
  };

  const PolicyFn policy = clidetail::make_actor_policy(prod, actor);
  const FormulaPtr check_formula = s.formula_pnf;
  const McResult res = monte_carlo_satisfaction(
      *s.env, aut, s.label, policy, check_formula, s.check_alphabet, s.check_label,
      ev.trajectories, ev.horizon, ev.epsilon, s.cfg.seed, s.cfg.train.workers, sink,
      ev.csv_trajectories);

  const SurrogateCheck surrogate = extract_surrogate(check_formula);
  CsvWriter summary(dir + "/summary.csv", {"metric", "value"});
  summary.row({"formula", to_string(s.formula)});
  summary.row({"trajectories", std::to_string(res.trajectories)});
  summary.row({"horizon", std::to_string(res.horizon)});
  summary.row({"successes", std::to_string(res.successes)});
  summary.row({"frequency", csv_number(res.frequency, 17)});
  summary.row({"epsilon", csv_number(ev.epsilon, 17)});
  summary.row({"interval_lo", csv_number(res.interval.lo, 17)});
  summary.row({"interval_hi", csv_number(res.interval.hi, 17)});
  summary.row({"confidence", csv_number(res.interval.confidence, 17)});
  for (std::size_t i = 0; i < surrogate.conjuncts.size(); ++i) {
    const auto& c = surrogate.conjuncts[i];
    const std::string what = std::string(c.is_safety ? "[](" : "<>(") + to_string(c.prop) + ")";
    summary.row({"failures " + what, std::to_string(res.conjunct_failures[i])});
  }
  if (!ev.checkpoint.empty()) summary.row({"checkpoint", ev.checkpoint});

  out << "trajectories: " << res.trajectories << " at horizon " << res.horizon << "\n";
  out << "satisfaction frequency: " << csv_number(res.frequency) << "\n";
  out << "lower bound: " << csv_number(res.interval.lo) << " at confidence "
      << csv_number(res.interval.confidence) << "\n";
  out << "run directory: " << dir << "\n";
  return 0;
}

// ----------------------------------------------------------------------------
//  oracle: exact and statistical references on finite models
// ----------------------------------------------------------------------------

inline int cmd_oracle_chain(double zeta, int n_trunc, double tol, std::ostream& out) {
  out << "closed form: " << csv_number(chain_reach_closed_form(zeta), 12) << "\n";
  const FiniteMdp chain = chain_mdp(n_trunc);
  const AugmentedMdp aug = augment_finite(chain, zeta);
  const ValueVector v = reach_value_iteration(aug.mdp, {aug.phi}, tol);
  out << "value iteration: " << csv_number(v.values[aug.mdp.initial], 12) << " ("
      << v.iterations << " iterations, residual " << csv_number(v.residual, 3) << ")\n";
  return 0;
}

inline int cmd_oracle_reach(const std::string& mdp_path, double zeta, double tol,
                            std::ostream& out) {
  const FiniteMdp m = load_mdp_file(mdp_path);
  const AugmentedMdp aug = augment_finite(m, zeta);
  const ValueVector v = reach_value_iteration(aug.mdp, {aug.phi}, tol);
  out << "reach value: " << csv_number(v.values[aug.mdp.initial], 12) << "\n";
  return 0;
}

inline int cmd_oracle_buchi(const std::string& mdp_path, std::ostream& out) {
  const FiniteMdp m = load_mdp_file(mdp_path);
  const ValueVector v = buchi_value(m);
  out << "buchi value: " << csv_number(v.values[m.initial], 12) << "\n";
  return 0;
}

inline int cmd_oracle_visits(const std::string& mdp_path, int chain_n, long long traj,
                             int horizon, std::uint64_t seed, std::ostream& out) {
  const FiniteMdp m = mdp_path.empty() ? chain_mdp(chain_n) : load_mdp_file(mdp_path);
  const VisitsEstimate v = conditional_visits_estimate(m, traj, horizon, seed);
  out << "conditional visits: " << csv_number(v.estimate, 12) << " (std error "
      << csv_number(v.std_error, 6) << ", " << v.qualifying << " of " << v.trajectories
      << " qualify)\n";
  return 0;
}

inline int cmd_oracle_hoeffding(long long n, long long h, double eps, std::ostream& out) {
  const HoeffdingInterval iv = hoeffding_lower(n, h, eps);
  out << "interval: [" << csv_number(iv.lo, 12) << ", " << csv_number(iv.hi, 12) << "]\n";
  out << "confidence: " << csv_number(iv.confidence, 12) << "\n";
  return 0;
}

// ----------------------------------------------------------------------------
//  Exit-code policy: bad input 2, runtime failure 1
// ----------------------------------------------------------------------------

template <typename F>
int run_guarded(F&& body) {
  try {
    return body();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace specrl
