#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "specrl/finite.hpp"
#include "specrl/ltl.hpp"
#include "specrl/product.hpp"

namespace specrl {

// ============================================================================
//  Exact finite-state oracles and statistical checks
// ============================================================================

struct ValueVector {
  std::vector<double> values;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Maximal reachability probabilities sup P(eventually target) by fixpoint
/// iteration from below.  The Bellman residual controls the stop; for
/// absorption rates around 1-zeta choose tol well below the wanted accuracy
/// times (1-zeta).
inline ValueVector reach_value_iteration(const FiniteMdp& m, const std::vector<int>& target,
                                         double tol = 1e-9, int max_iter = 2000000) {
  std::vector<char> is_target(m.num_states, 0);
  for (int t : target) {
    if (t < 0 || t >= m.num_states)
      throw std::invalid_argument("reach_value_iteration: target out of range");
    is_target[t] = 1;
  }
  ValueVector out;
  out.values.assign(m.num_states, 0.0);
  std::vector<double> next(m.num_states, 0.0);
  for (int s = 0; s < m.num_states; ++s)
    if (is_target[s]) out.values[s] = 1.0;
  for (int iter = 1; iter <= max_iter; ++iter) {
    double residual = 0.0;
    for (int s = 0; s < m.num_states; ++s) {
      if (is_target[s]) {
        next[s] = 1.0;
        continue;
      }
      double best = 0.0;
      for (const auto& row : m.trans[s]) {
        double v = 0.0;
        for (const auto& [n, p] : row) v += p * out.values[n];
        best = std::max(best, v);
      }
      residual = std::max(residual, std::abs(best - out.values[s]));
      next[s] = best;
    }
    out.values.swap(next);
    out.iterations = iter;
    out.residual = residual;
    if (residual <= tol) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged)
    throw std::runtime_error("reach_value_iteration: no convergence after " +
                             std::to_string(out.iterations) +
                             " iterations (residual " + std::to_string(out.residual) + ")");
  return out;
}

// ----------------------------------------------------------------------------
//  Maximal end components and Buchi values
// ----------------------------------------------------------------------------

namespace detail {

/// Iterative Tarjan SCC over an adjacency list; returns component id per
/// node (ids are arbitrary but consistent).
inline std::vector<int> scc_ids(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<char> on_stack(n, 0);
  std::vector<int> stack;
  int next_index = 0, next_comp = 0;
  struct Frame {
    int v;
    std::size_t edge;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call;
    call.push_back({root, 0});
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < adj[f.v].size()) {
        const int w = adj[f.v][f.edge++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        if (low[f.v] == index[f.v]) {
          while (true) {
            const int w = stack.back();
            stack.pop_back();
            on_stack[w] = 0;
            comp[w] = next_comp;
            if (w == f.v) break;
          }
          ++next_comp;
        }
        const int v = f.v;
        call.pop_back();
        if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      }
    }
  }
  return comp;
}

}  // namespace detail

/// Maximal end components: returns a component id per state, -1 for states
/// in no MEC.  An MEC is a maximal set of states closed under some nonempty
/// action subset and strongly connected through it.
inline std::vector<int> maximal_end_components(const FiniteMdp& m) {
  const int n = m.num_states;
  std::vector<std::vector<char>> action_alive(n);
  for (int s = 0; s < n; ++s) action_alive[s].assign(m.trans[s].size(), 1);
  std::vector<char> state_alive(n, 1);

  while (true) {
    std::vector<std::vector<int>> adj(n);
    for (int s = 0; s < n; ++s) {
      if (!state_alive[s]) continue;
      for (std::size_t a = 0; a < m.trans[s].size(); ++a) {
        if (!action_alive[s][a]) continue;
        for (const auto& [t, p] : m.trans[s][a]) adj[s].push_back(t);
      }
    }
    std::vector<int> comp = detail::scc_ids(adj);
    bool changed = false;
    for (int s = 0; s < n; ++s) {
      if (!state_alive[s]) continue;
      // kill actions whose support leaves the component of s
      bool any = false;
      for (std::size_t a = 0; a < m.trans[s].size(); ++a) {
        if (!action_alive[s][a]) continue;
        bool stays = true;
        for (const auto& [t, p] : m.trans[s][a])
          stays = stays && state_alive[t] && comp[t] == comp[s];
        if (!stays) {
          action_alive[s][a] = 0;
          changed = true;
        }
        any = any || action_alive[s][a];
      }
      if (!any) {
        state_alive[s] = 0;
        changed = true;
      }
    }
    if (!changed) {
      std::vector<int> out(n, -1);
      for (int s = 0; s < n; ++s)
        if (state_alive[s]) out[s] = comp[s];
      return out;
    }
  }
}

/// Optimal probability of visiting B infinitely often: reachability of the
/// union of maximal end components that contain a B-state.
inline ValueVector buchi_value(const FiniteMdp& m, const std::vector<int>& b_states,
                               double tol = 1e-12, int max_iter = 2000000) {
  std::vector<char> in_b(m.num_states, 0);
  for (int s : b_states) {
    if (s < 0 || s >= m.num_states)
      throw std::invalid_argument("buchi_value: B state out of range");
    in_b[s] = 1;
  }
  const std::vector<int> mec = maximal_end_components(m);
  std::vector<char> comp_accepting;
  for (int s = 0; s < m.num_states; ++s) {
    if (mec[s] < 0) continue;
    if (mec[s] >= static_cast<int>(comp_accepting.size()))
      comp_accepting.resize(mec[s] + 1, 0);
    if (in_b[s]) comp_accepting[mec[s]] = 1;
  }
  std::vector<int> target;
  for (int s = 0; s < m.num_states; ++s)
    if (mec[s] >= 0 && comp_accepting[mec[s]]) target.push_back(s);
  if (target.empty()) {
    ValueVector out;
    out.values.assign(m.num_states, 0.0);
    out.converged = true;
    return out;
  }
  return reach_value_iteration(m, target, tol, max_iter);
}

/// Convenience overload: B = the MDP's accepting states.
inline ValueVector buchi_value(const FiniteMdp& m, double tol = 1e-12, int max_iter = 2000000) {
  std::vector<int> b;
  for (int s = 0; s < m.num_states; ++s)
    if (m.accepting[s]) b.push_back(s);
  return buchi_value(m, b, tol, max_iter);
}

/// Exact reach-phi value of the unbounded climbing chain started at chain
/// state 2, as a function of zeta:  -(1-zeta) ln(1-zeta) / zeta.
inline double chain_reach_closed_form(double zeta) {
  if (!(zeta > 0.0 && zeta < 1.0))
    throw std::invalid_argument("chain_reach_closed_form: zeta must be in (0,1)");
  return -(1.0 - zeta) * std::log1p(-zeta) / zeta;
}

// ----------------------------------------------------------------------------
//  Hoeffding interval
// ----------------------------------------------------------------------------

struct HoeffdingInterval {
  double lo = 0.0, hi = 1.0;
  double confidence = 0.0;  // 1 - exp(-2 eps^2 N)
};

/// One-sided lower confidence interval [H/N - eps, 1] for a Bernoulli mean.
inline HoeffdingInterval hoeffding_lower(long long n, long long h, double eps) {
  if (n <= 0 || h < 0 || h > n) throw std::invalid_argument("hoeffding_lower: need 0 <= h <= n");
  const double freq = static_cast<double>(h) / static_cast<double>(n);
  if (!(eps >= 0.0 && eps <= freq))
    throw std::invalid_argument("hoeffding_lower: eps must lie in [0, h/n]");
  HoeffdingInterval out;
  out.lo = freq - eps;
  out.hi = 1.0;
  out.confidence = 1.0 - std::exp(-2.0 * eps * eps * static_cast<double>(n));
  return out;
}

// ----------------------------------------------------------------------------
//  Monte Carlo satisfaction of reach/safety surrogates
// ----------------------------------------------------------------------------

/// Bounded surrogate of a reinterpreted property: a conjunction of
/// <>(propositional) and [](propositional) parts over letter atoms.
struct SurrogateCheck {
  struct Conjunct {
    bool is_safety = false;  // [](prop) if true, <>(prop) otherwise
    FormulaPtr prop;
  };
  std::vector<Conjunct> conjuncts;
};

namespace detail {

inline bool is_propositional(const FormulaPtr& f) {
  switch (f->op) {
    case LtlOp::True:
    case LtlOp::False:
    case LtlOp::Atom:
    case LtlOp::NegAtom: return true;
    case LtlOp::Neg: return is_propositional(f->lhs);
    case LtlOp::And:
    case LtlOp::Or: return is_propositional(f->lhs) && is_propositional(f->rhs);
    default: return false;
  }
}

inline void flatten_and(const FormulaPtr& f, std::vector<FormulaPtr>& out) {
  if (f->op == LtlOp::And) {
    flatten_and(f->lhs, out);
    flatten_and(f->rhs, out);
  } else {
    out.push_back(f);
  }
}

}  // namespace detail

/// Extract the bounded-checking surrogate; rejects formulas outside the
/// supported conjunction shape.
inline SurrogateCheck extract_surrogate(const FormulaPtr& f) {
  std::vector<FormulaPtr> parts;
  detail::flatten_and(f, parts);
  SurrogateCheck out;
  for (const auto& part : parts) {
    SurrogateCheck::Conjunct c;
    if (part->op == LtlOp::Eventually && detail::is_propositional(part->lhs)) {
      c.is_safety = false;
      c.prop = part->lhs;
    } else if (part->op == LtlOp::Always && detail::is_propositional(part->lhs)) {
      c.is_safety = true;
      c.prop = part->lhs;
    } else if (part->op == LtlOp::Until && part->lhs->op == LtlOp::True &&
               detail::is_propositional(part->rhs)) {
      c.is_safety = false;
      c.prop = part->rhs;
    } else if (part->op == LtlOp::Release && part->lhs->op == LtlOp::False &&
               detail::is_propositional(part->rhs)) {
      c.is_safety = true;
      c.prop = part->rhs;
    } else {
      throw std::invalid_argument(
          "unsupported shape for bounded checking: expected a conjunction of <>(prop) and "
          "[](prop), got " + to_string(part));
    }
    out.conjuncts.push_back(std::move(c));
  }
  return out;
}

/// Evaluate a propositional formula on one letter.
inline bool eval_prop(const FormulaPtr& f, LetterMask letter, const Alphabet& alph) {
  switch (f->op) {
    case LtlOp::True: return true;
    case LtlOp::False: return false;
    case LtlOp::Atom:
    case LtlOp::NegAtom: {
      const int bit = alph.atom_index(f->atom);
      if (bit < 0) throw std::invalid_argument("eval_prop: unknown atom '" + f->atom + "'");
      const bool present = ((letter >> bit) & 1u) != 0;
      return f->op == LtlOp::Atom ? present : !present;
    }
    case LtlOp::Neg: return !eval_prop(f->lhs, letter, alph);
    case LtlOp::And: return eval_prop(f->lhs, letter, alph) && eval_prop(f->rhs, letter, alph);
    case LtlOp::Or: return eval_prop(f->lhs, letter, alph) || eval_prop(f->rhs, letter, alph);
    default: throw std::invalid_argument("eval_prop: not a propositional formula");
  }
}

/// A finite-memory controller for execution: picks a product action from the
/// observed state and its automaton memory.
using PolicyFn = std::function<int(const std::vector<double>& s, int q, Rng& rng)>;

struct McResult {
  long long trajectories = 0;
  int horizon = 0;
  long long successes = 0;
  double frequency = 0.0;
  std::vector<long long> conjunct_failures;  // per surrogate conjunct
  HoeffdingInterval interval;
};

/// Per-step trajectory reporting for CSV dumps (traj, step, state, q,
/// action, letter); called only for the first csv_limit trajectories.
using TrajectorySink =
    std::function<void(int traj, int step, const std::vector<double>& s, int q, int action,
                       LetterMask letter)>;

/// Estimate the satisfaction frequency of the surrogate over sampled
/// executions of the policy: the automaton memory advances on `label`
/// letters, while the formula's conjuncts are evaluated on `check_label`
/// letters over `check_alph` (pass the automaton's own alphabet and label
/// when they coincide).  The check applies to positions 1..horizon;
/// horizon 0 checks nothing and reports full satisfaction.
inline McResult monte_carlo_satisfaction(const Environment& env, const Ldba& aut,
                                         const LabelFn& label, const PolicyFn& policy,
                                         const FormulaPtr& formula, const Alphabet& check_alph,
                                         const LabelFn& check_label, long long n_traj, int horizon,
                                         double eps, std::uint64_t seed, int workers = 1,
                                         const TrajectorySink& sink = nullptr,
                                         int csv_limit = 0) {
  if (n_traj <= 0) throw std::invalid_argument("monte_carlo_satisfaction: need trajectories > 0");
  if (horizon < 0) throw std::invalid_argument("monte_carlo_satisfaction: need horizon >= 0");
  const SurrogateCheck check = extract_surrogate(formula);
  const int n_conj = static_cast<int>(check.conjuncts.size());
  const Alphabet& alph = aut.alphabet;
  if (horizon == 0) {
    McResult out;
    out.trajectories = n_traj;
    out.successes = n_traj;
    out.frequency = 1.0;
    out.conjunct_failures.assign(n_conj, 0);
    out.interval = hoeffding_lower(n_traj, n_traj, std::min(eps, 1.0));
    return out;
  }

  auto run_one = [&](long long traj, std::vector<char>& failed, const TrajectorySink& dump) {
    Rng rng = make_stream_rng(seed, 0x30000000ULL + static_cast<std::uint64_t>(traj));
    std::vector<double> s = env.sample_initial(rng);
    int q = aut.initial;
    std::vector<char> reach_met(n_conj, 0), safety_ok(n_conj, 1);
    for (int step = 0; step < horizon; ++step) {
      // resolve eps memory moves without consuming time
      int guard = 0;
      while (q < aut.num_states && aut.has_eps(q)) {
        const int a = policy(s, q, rng);
        const int target = a - env.num_inputs();
        bool ok = false;
        for (int t : aut.eps[q]) ok = ok || t == target;
        if (!ok) throw std::runtime_error("monte_carlo_satisfaction: policy chose a bad jump");
        q = target;
        if (++guard > aut.num_states)
          throw std::runtime_error("monte_carlo_satisfaction: eps cycle in execution");
      }
      const LetterMask letter = label(s);
      const int li = alph.letter_index(letter);
      if (li < 0) throw std::runtime_error("monte_carlo_satisfaction: letter outside alphabet");
      const int action = policy(s, q, rng);
      if (action < 0 || action >= env.num_inputs())
        throw std::runtime_error("monte_carlo_satisfaction: policy chose a bad input");
      if (dump) dump(static_cast<int>(traj), step, s, q, action, letter);
      if (q < aut.num_states) {
        const int t = aut.step(q, li);
        q = t < 0 ? aut.num_states : t;
      }
      s = env.sample_next(s, action, rng);
      // the surrogate constrains positions 1..horizon
      const LetterMask next_letter = check_label(s);
      for (int c = 0; c < n_conj; ++c) {
        const bool holds = eval_prop(check.conjuncts[c].prop, next_letter, check_alph);
        if (check.conjuncts[c].is_safety) safety_ok[c] = safety_ok[c] && holds;
        else reach_met[c] = reach_met[c] || holds;
      }
    }
    if (dump && horizon > 0) {
      const LetterMask letter = label(s);
      dump(static_cast<int>(traj), horizon, s, q, -1, letter);
    }
    for (int c = 0; c < n_conj; ++c)
      failed[c] = check.conjuncts[c].is_safety ? !safety_ok[c] : !reach_met[c];
  };

  McResult out;
  out.trajectories = n_traj;
  out.horizon = horizon;
  out.conjunct_failures.assign(n_conj, 0);

  const long long dumped = sink ? std::min<long long>(csv_limit, n_traj) : 0;
  std::vector<char> failed(n_conj, 0);
  for (long long traj = 0; traj < dumped; ++traj) {
    run_one(traj, failed, sink);
    bool all_ok = true;
    for (int c = 0; c < n_conj; ++c) {
      if (failed[c]) ++out.conjunct_failures[c];
      all_ok = all_ok && !failed[c];
    }
    out.successes += all_ok;
  }

  const int w = std::max(1, workers);
  std::vector<long long> succ(w, 0);
  std::vector<std::vector<long long>> fails(w, std::vector<long long>(n_conj, 0));
  auto shard = [&](int wi) {
    std::vector<char> f(n_conj, 0);
    for (long long traj = dumped + wi; traj < n_traj; traj += w) {
      run_one(traj, f, nullptr);
      bool all_ok = true;
      for (int c = 0; c < n_conj; ++c) {
        if (f[c]) ++fails[wi][c];
        all_ok = all_ok && !f[c];
      }
      succ[wi] += all_ok;
    }
  };
  if (w == 1) {
    shard(0);
  } else {
    std::vector<std::thread> threads;
    for (int wi = 0; wi < w; ++wi) threads.emplace_back(shard, wi);
    for (auto& t : threads) t.join();
  }
  for (int wi = 0; wi < w; ++wi) {
    out.successes += succ[wi];
    for (int c = 0; c < n_conj; ++c) out.conjunct_failures[c] += fails[wi][c];
  }
  out.frequency = static_cast<double>(out.successes) / static_cast<double>(n_traj);
  const double eps_used = std::min(eps, out.frequency);
  out.interval = hoeffding_lower(n_traj, out.successes, eps_used);
  return out;
}

/// Overload for the common case where the formula is checked on the same
/// letters the automaton consumes.
inline McResult monte_carlo_satisfaction(const Environment& env, const Ldba& aut,
                                         const LabelFn& label, const PolicyFn& policy,
                                         const FormulaPtr& formula, long long n_traj, int horizon,
                                         double eps, std::uint64_t seed, int workers = 1,
                                         const TrajectorySink& sink = nullptr,
                                         int csv_limit = 0) {
  return monte_carlo_satisfaction(env, aut, label, policy, formula, aut.alphabet, label, n_traj,
                                  horizon, eps, seed, workers, sink, csv_limit);
}

// ----------------------------------------------------------------------------
//  Conditional visit counts
// ----------------------------------------------------------------------------

struct VisitsEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  long long qualifying = 0;
  long long trajectories = 0;
};

namespace detail {

template <typename State, typename InitFn, typename StepFn, typename InBFn>
VisitsEstimate visits_core(InitFn&& init, StepFn&& advance, InBFn&& in_b, long long n_traj,
                           int horizon, std::uint64_t seed) {
  if (n_traj <= 0 || horizon <= 0)
    throw std::invalid_argument("conditional_visits_estimate: need trajectories and horizon > 0");
  const int cutoff = static_cast<int>(std::floor(0.8 * horizon));
  double sum = 0.0, sum_sq = 0.0;
  long long qualifying = 0;
  for (long long traj = 0; traj < n_traj; ++traj) {
    Rng rng = make_stream_rng(seed, 0x40000000ULL + static_cast<std::uint64_t>(traj));
    State state = init(rng);
    long long visits = 0;
    int last_b = -1;
    for (int pos = 0; pos <= horizon; ++pos) {
      if (pos > 0) state = advance(state, rng);
      if (in_b(state)) {
        ++visits;
        last_b = pos;
      }
    }
    if (last_b <= cutoff) {
      ++qualifying;
      sum += static_cast<double>(visits);
      sum_sq += static_cast<double>(visits) * static_cast<double>(visits);
    }
  }
  if (qualifying == 0)
    throw std::runtime_error(
        "conditional_visits_estimate: no qualifying trajectory (every sample still visits the "
        "accepting set near the horizon); increase the horizon or sample size");
  VisitsEstimate out;
  out.qualifying = qualifying;
  out.trajectories = n_traj;
  out.estimate = sum / static_cast<double>(qualifying);
  const double var =
      std::max(0.0, sum_sq / static_cast<double>(qualifying) - out.estimate * out.estimate);
  out.std_error = std::sqrt(var / static_cast<double>(qualifying));
  return out;
}

}  // namespace detail

/// Mean number of visits to B within the horizon, over trajectories whose
/// last B-visit falls in the first 80% of the horizon (proxy for
/// conditioning on finitely many visits).  Uses the uniform-random policy.
/// Unbounded-visit processes show estimates that grow with the horizon;
/// bounded ones stabilise.
inline VisitsEstimate conditional_visits_estimate(const FiniteMdp& m,
                                                  const std::vector<int>& b_states,
                                                  long long n_traj, int horizon,
                                                  std::uint64_t seed) {
  std::vector<char> in_b(m.num_states, 0);
  for (int s : b_states) {
    if (s < 0 || s >= m.num_states)
      throw std::invalid_argument("conditional_visits_estimate: B state out of range");
    in_b[s] = 1;
  }
  return detail::visits_core<int>(
      [&m](Rng&) { return m.initial; },
      [&m](int state, Rng& rng) {
        std::uniform_int_distribution<int> pick(0, m.num_actions(state) - 1);
        return m.sample_next(state, pick(rng), rng);
      },
      [&in_b](int state) { return in_b[state] != 0; }, n_traj, horizon, seed);
}

/// Convenience overload: B = the MDP's accepting states.
inline VisitsEstimate conditional_visits_estimate(const FiniteMdp& m, long long n_traj, int horizon,
                                                  std::uint64_t seed) {
  std::vector<int> b;
  for (int s = 0; s < m.num_states; ++s)
    if (m.accepting[s]) b.push_back(s);
  return conditional_visits_estimate(m, b, n_traj, horizon, seed);
}

/// Environment variant: membership in B is a state predicate, the policy is
/// fixed.
inline VisitsEstimate conditional_visits_estimate(
    const Environment& env, const std::function<int(const std::vector<double>&, Rng&)>& policy,
    const std::function<bool(const std::vector<double>&)>& in_b, long long n_traj, int horizon,
    std::uint64_t seed) {
  return detail::visits_core<std::vector<double>>(
      [&env](Rng& rng) { return env.sample_initial(rng); },
      [&](const std::vector<double>& state, Rng& rng) {
        auto s = state;
        return env.sample_next(s, policy(s, rng), rng);
      },
      in_b, n_traj, horizon, seed);
}

}  // namespace specrl
