#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "specrl/env.hpp"
#include "specrl/guided.hpp"
#include "specrl/labeling.hpp"
#include "specrl/ltl.hpp"

namespace specrl {

// ============================================================================
//  Built-in case studies: labellings, automata, formulas, curricula
// ============================================================================

inline constexpr double kPoleAngleBound = 0.20943951023931953;  // 12 degrees

/// Cart-pole partition over (position, velocity, angle, angular velocity).
/// Base atoms: a = position in [0.4,1), c1 = position in [-1,1), c2 = angle
/// within the 12-degree band.  Cells enumerate the consistent combinations.
inline Labeling cartpole_labeling() {
  const double th = kPoleAngleBound;
  const double inf = kInf;
  auto box = [](std::vector<double> lo, std::vector<double> hi) { return Box{lo, hi}; };
  std::vector<LabelingCell> cells;
  cells.push_back({"S_a_c1_c2", 0b111, {box({0.4, -inf, -th, -inf}, {1.0, inf, th, inf})}});
  cells.push_back({"S_a_c1", 0b011,
                   {box({0.4, -inf, -inf, -inf}, {1.0, inf, -th, inf}),
                    box({0.4, -inf, th, -inf}, {1.0, inf, inf, inf})}});
  cells.push_back({"S_c1_c2", 0b110, {box({-1.0, -inf, -th, -inf}, {0.4, inf, th, inf})}});
  cells.push_back({"S_c1", 0b010,
                   {box({-1.0, -inf, -inf, -inf}, {0.4, inf, -th, inf}),
                    box({-1.0, -inf, th, -inf}, {0.4, inf, inf, inf})}});
  cells.push_back({"S_c2", 0b100,
                   {box({-inf, -inf, -th, -inf}, {-1.0, inf, th, inf}),
                    box({1.0, -inf, -th, -inf}, {inf, inf, th, inf})}});
  cells.push_back({"S_none", 0b000,
                   {box({-inf, -inf, -inf, -inf}, {-1.0, inf, -th, inf}),
                    box({-inf, -inf, th, -inf}, {-1.0, inf, inf, inf}),
                    box({1.0, -inf, -inf, -inf}, {inf, inf, -th, inf}),
                    box({1.0, -inf, th, -inf}, {inf, inf, inf, inf})}});
  return Labeling({"a", "c1", "c2"}, 4, std::move(cells));
}

/// Boat partition over (x, y, delta, Omega, v, omega).  Base atom: t = the
/// landing strip x = 200 (the right bank, states clamp there) with y in
/// [95,105).
inline Labeling boat_labeling() {
  const double inf = kInf;
  std::vector<LabelingCell> cells;
  cells.push_back({"S_t", 0b1,
                   {Box{{200.0, 95.0, -inf, -inf, -inf, -inf}, {inf, 105.0, inf, inf, inf, inf}}}});
  cells.push_back({"S_none", 0b0,
                   {Box{{-inf, -inf, -inf, -inf, -inf, -inf}, {200.0, inf, inf, inf, inf, inf}},
                    Box{{200.0, -inf, -inf, -inf, -inf, -inf}, {inf, 95.0, inf, inf, inf, inf}},
                    Box{{200.0, 105.0, -inf, -inf, -inf, -inf}, {inf, inf, inf, inf, inf, inf}}}});
  return Labeling({"t"}, 6, std::move(cells));
}

inline std::string cartpole_formula_text() { return "<>a & [](c1 & c2)"; }
inline std::string boat_formula_text() { return "<>t"; }

// ----------------------------------------------------------------------------
//  Automata over the cell alphabets
// ----------------------------------------------------------------------------

namespace detail {

/// Does the letter contain a cell whose base letter has (present=true) or
/// lacks (present=false) the given base atom?
inline bool letter_witness(const Labeling& lab, LetterMask letter, int base_atom, bool present) {
  for (int i = 0; i < lab.num_cells(); ++i) {
    if (!((letter >> i) & 1u)) continue;
    const bool has = (lab.cells[i].base_letter >> base_atom) & 1u;
    if (has == present) return true;
  }
  return false;
}

inline int base_atom_index(const Labeling& lab, const std::string& name) {
  for (std::size_t i = 0; i < lab.base_atoms.size(); ++i)
    if (lab.base_atoms[i] == name) return static_cast<int>(i);
  throw std::invalid_argument("builtin: base atom '" + name + "' not in labelling");
}

inline Ldba empty_deterministic(const Alphabet& alph, int n_states, int initial) {
  Ldba a;
  a.alphabet = alph;
  a.num_states = n_states;
  a.initial = initial;
  a.in_deterministic.assign(n_states, 1);
  a.delta.assign(n_states, std::vector<int>(alph.num_letters(), -1));
  a.accepting.assign(n_states, std::vector<char>(alph.num_letters(), 0));
  a.eps.assign(n_states, {});
  return a;
}

}  // namespace detail

/// Eventually reach an a-cell while only ever seeing letters that witness
/// both c1 and c2: the reinterpreted cart-pole property.
inline Ldba cartpole_pos_automaton(const Labeling& lab) {
  const int a = detail::base_atom_index(lab, "a");
  const int c1 = detail::base_atom_index(lab, "c1");
  const int c2 = detail::base_atom_index(lab, "c2");
  Ldba m = detail::empty_deterministic(lab.sigma, 2, 0);
  for (int li = 0; li < lab.sigma.num_letters(); ++li) {
    const LetterMask L = lab.sigma.letters[li];
    const bool safe = detail::letter_witness(lab, L, c1, true) &&
                      detail::letter_witness(lab, L, c2, true);
    const bool reach = detail::letter_witness(lab, L, a, true);
    if (!safe) continue;  // undefined: the run is rejected
    m.delta[0][li] = reach ? 1 : 0;
    m.delta[1][li] = 1;
    m.accepting[1][li] = 1;
  }
  m.validate();
  return m;
}

/// Negation of the cart-pole property: always a not-a witness, or eventually
/// a letter that witnesses leaving the safe band.
inline Ldba cartpole_neg_automaton(const Labeling& lab) {
  const int a = detail::base_atom_index(lab, "a");
  const int c1 = detail::base_atom_index(lab, "c1");
  const int c2 = detail::base_atom_index(lab, "c2");
  Ldba m = detail::empty_deterministic(lab.sigma, 3, 0);
  for (int li = 0; li < lab.sigma.num_letters(); ++li) {
    const LetterMask L = lab.sigma.letters[li];
    const bool unsafe = detail::letter_witness(lab, L, c1, false) ||
                        detail::letter_witness(lab, L, c2, false);
    const bool not_a = detail::letter_witness(lab, L, a, false);
    if (unsafe) {
      m.delta[0][li] = 2;
      m.delta[1][li] = 2;
    } else {
      m.delta[0][li] = not_a ? 0 : 1;
      m.accepting[0][li] = not_a ? 1 : 0;
      m.delta[1][li] = 1;
    }
    m.delta[2][li] = 2;
    m.accepting[2][li] = 1;
  }
  m.validate();
  return m;
}

/// Eventually a letter witnessing the boat target.
inline Ldba boat_pos_automaton(const Labeling& lab) {
  const int t = detail::base_atom_index(lab, "t");
  Ldba m = detail::empty_deterministic(lab.sigma, 2, 0);
  for (int li = 0; li < lab.sigma.num_letters(); ++li) {
    const LetterMask L = lab.sigma.letters[li];
    m.delta[0][li] = detail::letter_witness(lab, L, t, true) ? 1 : 0;
    m.delta[1][li] = 1;
    m.accepting[1][li] = 1;
  }
  m.validate();
  return m;
}

/// Always a letter witnessing non-target: the negated boat property.
inline Ldba boat_neg_automaton(const Labeling& lab) {
  const int t = detail::base_atom_index(lab, "t");
  Ldba m = detail::empty_deterministic(lab.sigma, 1, 0);
  for (int li = 0; li < lab.sigma.num_letters(); ++li) {
    const LetterMask L = lab.sigma.letters[li];
    if (!detail::letter_witness(lab, L, t, false)) continue;
    m.delta[0][li] = 0;
    m.accepting[0][li] = 1;
  }
  m.validate();
  return m;
}

/// Single always-accepting state: the automaton of "true".
inline Ldba universal_automaton(const Alphabet& alph) {
  Ldba m = detail::empty_deterministic(alph, 1, 0);
  for (int li = 0; li < alph.num_letters(); ++li) {
    m.delta[0][li] = 0;
    m.accepting[0][li] = 1;
  }
  m.validate();
  return m;
}

/// The built-in automata by name; each pairs with its builtin labelling.
inline Ldba builtin_automaton(const std::string& name, const Labeling& lab) {
  if (name == "cartpole_pos") return cartpole_pos_automaton(lab);
  if (name == "cartpole_neg") return cartpole_neg_automaton(lab);
  if (name == "boat_pos") return boat_pos_automaton(lab);
  if (name == "boat_neg") return boat_neg_automaton(lab);
  if (name == "universal") return universal_automaton(lab.sigma);
  throw std::invalid_argument("unknown builtin automaton '" + name + "'");
}

// ----------------------------------------------------------------------------
//  Curricula
// ----------------------------------------------------------------------------

/// Expanded reach sets [alpha,1) with alpha in {-1, 0.01}, then the base
/// region [0.4,1): the a-cells claim the widened position range first, so
/// earlier stages hand out the reach label more generously.
inline Curriculum cartpole_curriculum(const Labeling& lab) {
  const double th = kPoleAngleBound;
  const double inf = kInf;
  const int cell_full = lab.cell_index("S_a_c1_c2");
  const int cell_tilted = lab.cell_index("S_a_c1");
  if (cell_full < 0 || cell_tilted < 0)
    throw std::invalid_argument("cartpole curriculum: labelling is missing the a-cells");
  Curriculum cur;
  const std::vector<std::pair<std::string, double>> widened = {{"alpha=-1", -1.0},
                                                               {"alpha=0.01", 0.01}};
  for (const auto& [name, alpha] : widened) {
    StageSpec st;
    st.name = name;
    st.overrides.push_back(
        {cell_full, {Box{{alpha, -inf, -th, -inf}, {1.0, inf, th, inf}}}});
    st.overrides.push_back({cell_tilted,
                            {Box{{alpha, -inf, -inf, -inf}, {1.0, inf, -th, inf}},
                             Box{{alpha, -inf, th, -inf}, {1.0, inf, inf, inf}}}});
    cur.stages.push_back(std::move(st));
  }
  StageSpec base;
  base.name = "alpha=0.4";
  cur.stages.push_back(std::move(base));
  return cur;
}

/// Shrinking landing strip with a rising zeta schedule, ending on the base
/// [95,105) target.
inline Curriculum boat_curriculum(const Labeling& lab) {
  const double inf = kInf;
  const int cell = lab.cell_index("S_t");
  if (cell < 0) throw std::invalid_argument("boat curriculum: labelling is missing the target cell");
  Curriculum cur;
  struct Stage {
    double ylo, yhi, zeta;
  };
  const std::vector<Stage> widened = {
      {50.0, 150.0, 0.9950}, {80.0, 120.0, 0.9965}, {85.0, 115.0, 0.9980}, {90.0, 110.0, 0.9995}};
  for (const auto& w : widened) {
    StageSpec st;
    st.name = "y" + std::to_string(static_cast<int>(w.ylo)) + "-" +
              std::to_string(static_cast<int>(w.yhi));
    st.zeta = w.zeta;
    st.overrides.push_back(
        {cell, {Box{{200.0, w.ylo, -inf, -inf, -inf, -inf}, {inf, w.yhi, inf, inf, inf, inf}}}});
    cur.stages.push_back(std::move(st));
  }
  StageSpec base;
  base.name = "y95-105";
  base.zeta = 0.9999;
  cur.stages.push_back(std::move(base));
  return cur;
}

}  // namespace specrl
