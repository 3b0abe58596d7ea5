#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "specrl/alphabet.hpp"
#include "specrl/automaton.hpp"
#include "specrl/env.hpp"
#include "specrl/rng.hpp"

namespace specrl {

// ============================================================================
//  Finite MDPs
//
//  Sparse per-(state, action) transition rows.  States may have different
//  action counts.  `accepting` marks the states whose departure fires an
//  accepting event (the set B used by augmentation and the Buchi oracle);
//  `state_letter` optionally assigns each state a letter index of `alphabet`
//  for product construction.
// ============================================================================

struct FiniteMdp {
  int num_states = 0;
  int initial = 0;
  // trans[s][a] = list of (next state, probability)
  std::vector<std::vector<std::vector<std::pair<int, double>>>> trans;
  std::vector<char> accepting;
  std::vector<int> state_letter;  // letter index per state, -1 if unlabelled
  Alphabet alphabet;              // empty unless states are labelled

  int num_actions(int s) const { return static_cast<int>(trans[s].size()); }

  int max_actions() const {
    int m = 0;
    for (const auto& row : trans) m = std::max<int>(m, static_cast<int>(row.size()));
    return m;
  }

  void validate(double row_tol = 1e-12) const {
    if (num_states <= 0) throw std::invalid_argument("mdp: no states");
    if (initial < 0 || initial >= num_states) throw std::invalid_argument("mdp: bad initial state");
    if (static_cast<int>(trans.size()) != num_states ||
        static_cast<int>(accepting.size()) != num_states ||
        static_cast<int>(state_letter.size()) != num_states)
      throw std::invalid_argument("mdp: table size mismatch");
    for (int s = 0; s < num_states; ++s) {
      if (trans[s].empty()) throw std::invalid_argument("mdp: state without actions");
      for (const auto& row : trans[s]) {
        if (row.empty()) throw std::invalid_argument("mdp: empty transition row");
        double sum = 0.0;
        for (const auto& [next, prob] : row) {
          if (next < 0 || next >= num_states)
            throw std::invalid_argument("mdp: transition target out of range");
          if (!(prob > 0.0)) throw std::invalid_argument("mdp: probabilities must be positive");
          sum += prob;
        }
        if (std::abs(sum - 1.0) > row_tol)
          throw std::invalid_argument("mdp: transition row does not sum to one");
      }
    }
  }

  /// Sample a successor of (s, a).
  int sample_next(int s, int a, Rng& rng) const {
    std::uniform_real_distribution<double> d(0.0, 1.0);
    double u = d(rng);
    for (const auto& [next, prob] : trans[s][a]) {
      if (u < prob) return next;
      u -= prob;
    }
    return trans[s][a].back().first;  // numerical slack lands on the last entry
  }
};

// ----------------------------------------------------------------------------
//  Fixtures and generators
// ----------------------------------------------------------------------------

/// Truncated climbing chain.  Chain states 1..n_trunc map to indices
/// 0..n_trunc-1.  State 1 (index 0) is absorbing and non-accepting; from
/// chain state n >= 2 the single action moves to state 1 with probability
/// 1/n and to n+1 with probability (n-1)/n.  The last state drops to 1
/// surely, which makes truncation conservative.  All states from the initial
/// chain state 2 upward are accepting.
inline FiniteMdp chain_mdp(int n_trunc) {
  if (n_trunc < 4) throw std::invalid_argument("chain_mdp: needs n_trunc >= 4");
  FiniteMdp m;
  m.num_states = n_trunc;
  m.initial = 1;  // chain state 2
  m.trans.resize(n_trunc);
  m.accepting.assign(n_trunc, 1);
  m.accepting[0] = 0;
  m.state_letter.assign(n_trunc, -1);
  m.trans[0] = {{{0, 1.0}}};
  for (int idx = 1; idx < n_trunc; ++idx) {
    const double n = idx + 1;  // chain numbering
    if (idx + 1 < n_trunc)
      m.trans[idx] = {{{0, 1.0 / n}, {idx + 1, (n - 1.0) / n}}};
    else
      m.trans[idx] = {{{0, 1.0}}};
  }
  m.validate();
  return m;
}

/// Random MDP: `num_actions` actions per state, supports of at most three
/// successors with probabilities floored away from zero (keeps conditional
/// visit counts small), and an accepting set drawn with the given density
/// (at least one accepting and one rejecting state when possible).
inline FiniteMdp random_finite_mdp(int num_states, int num_actions, double label_density,
                                   Rng& rng) {
  if (num_states < 1 || num_actions < 1)
    throw std::invalid_argument("random_finite_mdp: needs at least one state and action");
  if (!(label_density >= 0.0 && label_density <= 1.0))
    throw std::invalid_argument("random_finite_mdp: label_density must be in [0,1]");
  FiniteMdp m;
  m.num_states = num_states;
  m.initial = 0;
  m.trans.resize(num_states);
  m.state_letter.assign(num_states, -1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> state_pick(0, num_states - 1);
  for (int s = 0; s < num_states; ++s) {
    m.trans[s].resize(num_actions);
    for (int a = 0; a < num_actions; ++a) {
      const int support = 1 + static_cast<int>(unit(rng) * std::min(3, num_states));
      std::vector<int> targets;
      while (static_cast<int>(targets.size()) < support) {
        int t = state_pick(rng);
        bool dup = false;
        for (int u : targets) dup = dup || u == t;
        if (!dup) targets.push_back(t);
      }
      double sum = 0.0;
      std::vector<double> w(targets.size());
      for (auto& x : w) {
        x = 0.15 + 0.85 * unit(rng);
        sum += x;
      }
      auto& row = m.trans[s][a];
      for (std::size_t i = 0; i < targets.size(); ++i) row.push_back({targets[i], w[i] / sum});
    }
  }
  for (int attempt = 0; attempt < 1000; ++attempt) {
    int on = 0;
    m.accepting.assign(num_states, 0);
    for (int s = 0; s < num_states; ++s) {
      m.accepting[s] = unit(rng) < label_density;
      on += m.accepting[s];
    }
    if (num_states == 1 || (on > 0 && on < num_states)) break;
  }
  m.validate();
  return m;
}

// ----------------------------------------------------------------------------
//  Text format
//
//  states 3
//  initial 0
//  accepting 1
//  atoms g
//  label 1 {g}
//  trans 0 0 1:0.7 2:0.3
//
//  `atoms`/`label` lines are optional; every `trans` line gives one action
//  row.  Actions of a state must appear as consecutive indices 0,1,...
// ----------------------------------------------------------------------------

inline FiniteMdp load_mdp(std::istream& in) {
  FiniteMdp m;
  std::vector<std::string> atoms;
  struct Label {
    int line, state;
    std::string letter;
  };
  std::vector<Label> labels;
  int line_no = 0;
  bool have_states = false;
  auto fail = [](int ln, const std::string& msg) {
    throw std::invalid_argument("mdp line " + std::to_string(ln) + ": " + msg);
  };
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    std::istringstream ss(line);
    std::string head;
    ss >> head;
    if (head == "states") {
      if (!(ss >> m.num_states) || m.num_states <= 0) fail(line_no, "bad state count");
      m.trans.resize(m.num_states);
      m.accepting.assign(m.num_states, 0);
      m.state_letter.assign(m.num_states, -1);
      have_states = true;
    } else if (head == "initial") {
      if (!(ss >> m.initial)) fail(line_no, "bad initial state");
    } else if (head == "accepting") {
      if (!have_states) fail(line_no, "'accepting' before 'states'");
      int s;
      while (ss >> s) {
        if (s < 0 || s >= m.num_states) fail(line_no, "accepting state out of range");
        m.accepting[s] = 1;
      }
    } else if (head == "atoms") {
      std::string t;
      while (ss >> t) atoms.push_back(t);
    } else if (head == "label") {
      int s;
      std::string letter;
      if (!(ss >> s >> letter)) fail(line_no, "expected: label <state> {atoms}");
      labels.push_back({line_no, s, letter});
    } else if (head == "trans") {
      if (!have_states) fail(line_no, "'trans' before 'states'");
      int s, a;
      if (!(ss >> s >> a)) fail(line_no, "expected: trans <state> <action> next:prob ...");
      if (s < 0 || s >= m.num_states) fail(line_no, "state out of range");
      if (a != static_cast<int>(m.trans[s].size()))
        fail(line_no, "actions of a state must appear in order 0,1,...");
      std::vector<std::pair<int, double>> row;
      std::string entry;
      while (ss >> entry) {
        auto colon = entry.find(':');
        if (colon == std::string::npos) fail(line_no, "expected next:prob entries");
        try {
          row.push_back({std::stoi(entry.substr(0, colon)), std::stod(entry.substr(colon + 1))});
        } catch (const std::exception&) {
          fail(line_no, "bad transition entry '" + entry + "'");
        }
      }
      if (row.empty()) fail(line_no, "empty transition row");
      m.trans[s].push_back(std::move(row));
    } else {
      fail(line_no, "unknown directive '" + head + "'");
    }
  }
  if (!have_states) throw std::invalid_argument("mdp: missing 'states' line");
  if (!atoms.empty()) {
    m.alphabet = full_alphabet(atoms);
    for (const auto& lb : labels) {
      if (lb.state < 0 || lb.state >= m.num_states) fail(lb.line, "label state out of range");
      try {
        m.state_letter[lb.state] = m.alphabet.letter_index(m.alphabet.parse_letter(lb.letter));
      } catch (const std::invalid_argument& e) {
        fail(lb.line, e.what());
      }
    }
    for (int s = 0; s < m.num_states; ++s)
      if (m.state_letter[s] < 0) m.state_letter[s] = m.alphabet.letter_index(0);  // empty letter
  } else if (!labels.empty()) {
    throw std::invalid_argument("mdp: 'label' lines require an 'atoms' line");
  }
  m.validate();
  return m;
}

inline FiniteMdp load_mdp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("mdp: cannot open '" + path + "'");
  return load_mdp(in);
}

// ----------------------------------------------------------------------------
//  Product and augmentation
// ----------------------------------------------------------------------------

/// Index of the product state (s, q); q = |Q| is the implicit rejecting sink.
inline int product_index(int s, int q, int num_automaton_states) {
  return s * (num_automaton_states + 1) + q;
}

/// Synchronous product of a labelled MDP with an automaton.  The automaton
/// reads the letter of the current MDP state while the MDP moves; a product
/// state is accepting when that letter transition carries an accepting mark.
/// At eps-states the available actions are exactly the eps-jumps (the MDP
/// state freezes).  Undefined letter transitions enter the rejecting sink.
inline FiniteMdp build_finite_product(const FiniteMdp& mdp, const Ldba& aut) {
  for (int s = 0; s < mdp.num_states; ++s)
    if (mdp.state_letter[s] < 0 ||
        mdp.state_letter[s] >= aut.alphabet.num_letters())
      throw std::invalid_argument("product: every MDP state needs a letter of the automaton alphabet");
  const int nq = aut.num_states;
  FiniteMdp prod;
  prod.num_states = mdp.num_states * (nq + 1);
  prod.initial = product_index(mdp.initial, aut.initial, nq);
  prod.trans.resize(prod.num_states);
  prod.accepting.assign(prod.num_states, 0);
  prod.state_letter.assign(prod.num_states, -1);
  for (int s = 0; s < mdp.num_states; ++s) {
    const int letter = mdp.state_letter[s];
    for (int q = 0; q <= nq; ++q) {
      const int ps = product_index(s, q, nq);
      if (q < nq && aut.has_eps(q)) {
        // jump actions only; the environment state freezes
        for (int target : aut.eps[q])
          prod.trans[ps].push_back({{product_index(s, target, nq), 1.0}});
        continue;
      }
      const int q_next = q < nq ? aut.step(q, letter) : nq;
      const int q_to = q_next < 0 ? nq : q_next;
      if (q < nq && aut.transition_accepting(q, letter)) prod.accepting[ps] = 1;
      for (const auto& mdp_row : mdp.trans[s]) {
        std::vector<std::pair<int, double>> row;
        for (const auto& [next, prob] : mdp_row)
          row.push_back({product_index(next, q_to, nq), prob});
        prod.trans[ps].push_back(std::move(row));
      }
    }
  }
  prod.validate();
  return prod;
}

struct AugmentedMdp {
  FiniteMdp mdp;
  int phi = -1;  // index of the absorbing target state
};

/// Add the terminal state phi: every action row of an accepting state keeps
/// its successors with probability zeta and moves to phi with 1 - zeta.
inline AugmentedMdp augment_finite(const FiniteMdp& m, double zeta) {
  if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("augment: zeta must be in (0,1)");
  AugmentedMdp out;
  out.phi = m.num_states;
  out.mdp = m;
  out.mdp.num_states = m.num_states + 1;
  out.mdp.trans.push_back({{{out.phi, 1.0}}});
  out.mdp.accepting.push_back(0);
  out.mdp.state_letter.push_back(-1);
  for (int s = 0; s < m.num_states; ++s) {
    if (!m.accepting[s]) continue;
    for (auto& row : out.mdp.trans[s]) {
      for (auto& [next, prob] : row) prob *= zeta;
      row.push_back({out.phi, 1.0 - zeta});
    }
  }
  out.mdp.validate(1e-9);
  return out;
}

/// Wrap a finite MDP as a black-box environment (state = {index}).  The MDP
/// is captured by reference and must outlive the environment.
inline Environment make_finite_env(const FiniteMdp& m) {
  m.validate();
  Environment env;
  env.name = "mdp";
  env.state_dim = 1;
  const int max_a = m.max_actions();
  for (int a = 0; a < max_a; ++a) env.input_names.push_back("a" + std::to_string(a));
  env.norm_lo = {0.0};
  env.norm_hi = {static_cast<double>(std::max(1, m.num_states - 1))};
  env.sample_initial = [&m](Rng&) { return std::vector<double>{static_cast<double>(m.initial)}; };
  env.sample_next = [&m](const std::vector<double>& s, int a, Rng& rng) {
    const int idx = static_cast<int>(s[0]);
    return std::vector<double>{static_cast<double>(m.sample_next(idx, a, rng))};
  };
  env.valid_inputs = [&m](const std::vector<double>& s) {
    const int idx = static_cast<int>(s[0]);
    std::vector<int> v(m.num_actions(idx));
    for (int a = 0; a < m.num_actions(idx); ++a) v[a] = a;
    return v;
  };
  return env;
}

}  // namespace specrl
