#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "specrl/automaton.hpp"
#include "specrl/env.hpp"
#include "specrl/labeling.hpp"
#include "specrl/rng.hpp"

namespace specrl {

// ============================================================================
//  Augmented product process
//
//  Pairs a black-box environment with an automaton that reads the label of
//  the current state while the environment moves.  When the automaton fires
//  an accepting transition, a termination coin with success probability
//  1 - zeta may end the episode in the virtual goal phi.
//
//  UpperBound rewards reaching phi (optimal value over-approximates the
//  satisfaction probability); LowerBound rewards avoiding phi on the
//  negated-property automaton (optimal value under-approximates it).
// ============================================================================

enum class BoundMode { UpperBound, LowerBound };

inline BoundMode bound_mode_from_string(const std::string& s) {
  if (s == "upper") return BoundMode::UpperBound;
  if (s == "lower") return BoundMode::LowerBound;
  throw std::invalid_argument("mode must be 'upper' or 'lower', got '" + s + "'");
}

struct ProductState {
  std::vector<double> s;
  int q = 0;  // q == automaton size means the implicit rejecting sink
};

struct AugmentedProduct {
  const Environment* env = nullptr;
  const Ldba* aut = nullptr;
  LabelFn label;  // state -> letter mask over the automaton's atoms
  double zeta = 0.999;
  BoundMode mode = BoundMode::LowerBound;

  AugmentedProduct(const Environment& e, const Ldba& a, LabelFn lf, double z, BoundMode m)
      : env(&e), aut(&a), label(std::move(lf)), zeta(z), mode(m) {
    if (!(zeta > 0.0 && zeta < 1.0))
      throw std::invalid_argument("product: zeta must be in (0,1)");
    if (!label) throw std::invalid_argument("product: labelling function required");
  }

  int sink_state() const { return aut->num_states; }

  /// Actions: environment inputs first, then one jump action per automaton
  /// state when the automaton has eps moves at all.
  int num_actions() const {
    return env->num_inputs() + (aut->any_eps() ? aut->num_states : 0);
  }

  bool is_jump_action(int a) const { return a >= env->num_inputs(); }
  int jump_target(int a) const { return a - env->num_inputs(); }
  int jump_action(int target) const { return env->num_inputs() + target; }

  int letter_of(const std::vector<double>& s) const {
    const int li = aut->alphabet.letter_index(label(s));
    if (li < 0)
      throw std::runtime_error("product: labelling emitted a letter outside the automaton alphabet");
    return li;
  }

  ProductState initial(Rng& rng) const { return {env->sample_initial(rng), aut->initial}; }
};

/// Valid actions at a product state: at eps-states exactly the jumps, at the
/// sink and at letter states the environment's valid inputs.
inline std::vector<int> valid_product_inputs(const AugmentedProduct& p, const ProductState& x) {
  if (x.q < p.aut->num_states && p.aut->has_eps(x.q)) {
    std::vector<int> v;
    for (int t : p.aut->eps[x.q]) v.push_back(p.jump_action(t));
    return v;
  }
  return p.env->valid_inputs_at(x.s);
}

struct ProductStepResult {
  ProductState next;
  bool accepting_fired = false;
  bool reached_phi = false;
};

/// One product move.  Jump actions switch the automaton state and freeze the
/// environment; input actions read the current label, move both components,
/// and draw the termination coin when the fired transition is accepting.
inline ProductStepResult product_step(const AugmentedProduct& p, const ProductState& x, int action,
                                      Rng& rng) {
  ProductStepResult r;
  if (p.is_jump_action(action)) {
    if (x.q >= p.aut->num_states || !p.aut->has_eps(x.q))
      throw std::invalid_argument("product_step: jump action at a non-eps state");
    const int target = p.jump_target(action);
    bool ok = false;
    for (int t : p.aut->eps[x.q]) ok = ok || t == target;
    if (!ok) throw std::invalid_argument("product_step: jump target not an eps successor");
    r.next = {x.s, target};
    return r;
  }
  if (action < 0 || action >= p.env->num_inputs())
    throw std::invalid_argument("product_step: input index out of range");
  if (x.q < p.aut->num_states && p.aut->has_eps(x.q))
    throw std::invalid_argument("product_step: eps-states admit only jump actions");
  int q_next = p.sink_state();
  if (x.q < p.aut->num_states) {
    const int li = p.letter_of(x.s);
    const int t = p.aut->step(x.q, li);
    q_next = t < 0 ? p.sink_state() : t;
    r.accepting_fired = p.aut->transition_accepting(x.q, li);
  }
  r.next.s = p.env->sample_next(x.s, action, rng);
  r.next.q = q_next;
  if (r.accepting_fired) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    r.reached_phi = u(rng) >= p.zeta;
  }
  return r;
}

/// Episode return from the terminal flag: probability-of-phi estimate for
/// UpperBound, probability-of-avoiding-phi for LowerBound.
inline double episode_reward(BoundMode mode, bool reached_phi) {
  if (mode == BoundMode::UpperBound) return reached_phi ? 1.0 : 0.0;
  return reached_phi ? 0.0 : 1.0;
}

}  // namespace specrl
