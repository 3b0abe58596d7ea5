#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "specrl/alphabet.hpp"
#include "specrl/ltl.hpp"

namespace specrl {

// ============================================================================
//  Limit-deterministic Buchi automata
//
//  States split into a nondeterministic part Q_N and a deterministic part
//  Q_D.  Letter transitions are deterministic and may be partial; a missing
//  transition is an implicit rejecting sink.  Epsilon moves exist only from
//  Q_N states and must land in Q_D, so every run jumps at most once.
//  Accepting marks sit on letter transitions inside Q_D, and Q_D is closed
//  under letter transitions.
// ============================================================================

struct Ldba {
  Alphabet alphabet;
  int num_states = 0;
  int initial = 0;
  std::vector<char> in_deterministic;        // Q_D membership per state
  std::vector<std::vector<int>> delta;       // [state][letter] -> target, -1 undefined
  std::vector<std::vector<char>> accepting;  // per (state, letter), with delta defined
  std::vector<std::vector<int>> eps;         // eps targets per state, sorted

  /// Letter-successor of q, or -1 for the implicit rejecting sink.
  int step(int q, int letter) const { return delta[q][letter]; }

  bool transition_accepting(int q, int letter) const {
    return delta[q][letter] >= 0 && accepting[q][letter];
  }

  bool has_eps(int q) const { return !eps[q].empty(); }

  bool any_eps() const {
    for (const auto& e : eps)
      if (!e.empty()) return true;
    return false;
  }

  /// Every letter self-loops with an accepting mark.
  bool absorbing_accepting(int q) const {
    for (int l = 0; l < alphabet.num_letters(); ++l)
      if (delta[q][l] != q || !accepting[q][l]) return false;
    return alphabet.num_letters() > 0;
  }

  /// Every letter self-loops without an accepting mark (no escape, no reward).
  bool absorbing_silent(int q) const {
    for (int l = 0; l < alphabet.num_letters(); ++l)
      if (delta[q][l] != q || accepting[q][l]) return false;
    return alphabet.num_letters() > 0 && eps[q].empty();
  }

  void validate() const {
    if (num_states <= 0) throw std::invalid_argument("ldba: no states");
    if (initial < 0 || initial >= num_states) throw std::invalid_argument("ldba: bad initial state");
    const std::size_t ns = static_cast<std::size_t>(num_states);
    const std::size_t nl = static_cast<std::size_t>(alphabet.num_letters());
    if (in_deterministic.size() != ns || delta.size() != ns || accepting.size() != ns ||
        eps.size() != ns)
      throw std::invalid_argument("ldba: table size mismatch");
    for (int q = 0; q < num_states; ++q) {
      if (delta[q].size() != nl || accepting[q].size() != nl)
        throw std::invalid_argument("ldba: transition row size mismatch");
      for (int l = 0; l < static_cast<int>(nl); ++l) {
        const int t = delta[q][l];
        if (t < -1 || t >= num_states) throw std::invalid_argument("ldba: transition target out of range");
        if (t < 0 && accepting[q][l])
          throw std::invalid_argument("ldba: accepting mark on an undefined transition");
        if (accepting[q][l] && (!in_deterministic[q] || !in_deterministic[t]))
          throw std::invalid_argument(
              "ldba: accepting transitions must stay inside the deterministic part");
        if (t >= 0 && in_deterministic[q] && !in_deterministic[t])
          throw std::invalid_argument("ldba: the deterministic part must be closed under letters");
      }
      for (int t : eps[q]) {
        if (t < 0 || t >= num_states) throw std::invalid_argument("ldba: eps target out of range");
        if (in_deterministic[q])
          throw std::invalid_argument("ldba: eps moves may only leave nondeterministic states");
        if (!in_deterministic[t])
          throw std::invalid_argument("ldba: eps moves must land in the deterministic part");
      }
    }
  }
};

// ----------------------------------------------------------------------------
//  Text format
//
//  states 3
//  initial 0
//  atoms a c1 c2
//  deterministic 0 1 2
//  0 --{a,c1}--> 1 !
//  0 --eps--> 2
//
//  Blank lines and lines starting with '#' are skipped.  The alphabet is the
//  full powerset of the declared atoms.  A trailing '!' marks an accepting
//  transition.
// ----------------------------------------------------------------------------

inline Ldba load_automaton(std::istream& in) {
  Ldba a;
  int line_no = 0;
  bool have_states = false, have_initial = false, have_atoms = false, have_det = false;
  std::vector<std::string> atoms;
  struct PendingTransition {
    int line, from, to;
    std::string letter;
    bool acc, is_eps;
  };
  std::vector<PendingTransition> pending;
  std::vector<int> det_states;

  auto fail = [&](int ln, const std::string& msg) {
    throw std::invalid_argument("automaton line " + std::to_string(ln) + ": " + msg);
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
      if (!(ss >> a.num_states) || a.num_states <= 0) fail(line_no, "bad state count");
      have_states = true;
    } else if (head == "initial") {
      if (!(ss >> a.initial)) fail(line_no, "bad initial state");
      have_initial = true;
    } else if (head == "atoms") {
      std::string t;
      while (ss >> t) atoms.push_back(t);
      have_atoms = true;
    } else if (head == "deterministic") {
      int q;
      while (ss >> q) det_states.push_back(q);
      have_det = true;
    } else {
      // transition line:  q --letter--> q' [!]
      int from = 0;
      try {
        from = std::stoi(head);
      } catch (const std::exception&) {
        fail(line_no, "unknown directive '" + head + "'");
      }
      std::string arrow, tail;
      ss >> arrow;
      if (arrow.size() < 6 || arrow.substr(0, 2) != "--" ||
          arrow.substr(arrow.size() - 3) != "-->")
        fail(line_no, "expected --letter--> arrow");
      std::string letter = arrow.substr(2, arrow.size() - 5);
      int to = 0;
      if (!(ss >> to)) fail(line_no, "missing target state");
      bool acc = false;
      if (ss >> tail) {
        if (tail == "!") acc = true;
        else fail(line_no, "unexpected trailing token '" + tail + "'");
        if (ss >> tail) fail(line_no, "unexpected trailing token '" + tail + "'");
      }
      const bool is_eps = (letter == "eps");
      if (is_eps && acc) fail(line_no, "eps transitions cannot be accepting");
      pending.push_back({line_no, from, to, letter, acc, is_eps});
    }
  }
  if (!have_states) throw std::invalid_argument("automaton: missing 'states' line");
  if (!have_initial) throw std::invalid_argument("automaton: missing 'initial' line");
  if (!have_atoms) throw std::invalid_argument("automaton: missing 'atoms' line");
  if (!have_det) throw std::invalid_argument("automaton: missing 'deterministic' line");

  a.alphabet = full_alphabet(atoms);
  const int nl = a.alphabet.num_letters();
  a.in_deterministic.assign(a.num_states, 0);
  for (int q : det_states) {
    if (q < 0 || q >= a.num_states)
      throw std::invalid_argument("automaton: deterministic state out of range");
    a.in_deterministic[q] = 1;
  }
  a.delta.assign(a.num_states, std::vector<int>(nl, -1));
  a.accepting.assign(a.num_states, std::vector<char>(nl, 0));
  a.eps.assign(a.num_states, {});

  for (const auto& t : pending) {
    if (t.from < 0 || t.from >= a.num_states) fail(t.line, "source state out of range");
    if (t.to < 0 || t.to >= a.num_states) fail(t.line, "target state out of range");
    if (t.is_eps) {
      a.eps[t.from].push_back(t.to);
      continue;
    }
    int li = -1;
    try {
      li = a.alphabet.letter_index(a.alphabet.parse_letter(t.letter));
    } catch (const std::invalid_argument& e) {
      fail(t.line, e.what());
    }
    if (li < 0) fail(t.line, "letter outside the alphabet");
    if (a.delta[t.from][li] != -1)
      fail(t.line, "duplicate transition for state " + std::to_string(t.from) + " on " + t.letter);
    a.delta[t.from][li] = t.to;
    a.accepting[t.from][li] = t.acc;
  }
  for (auto& e : a.eps) {
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
  }
  a.validate();
  return a;
}

inline Ldba load_automaton_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("automaton: cannot open '" + path + "'");
  return load_automaton(in);
}

inline std::string serialize_automaton(const Ldba& a) {
  std::ostringstream out;
  out << "states " << a.num_states << "\n";
  out << "initial " << a.initial << "\n";
  out << "atoms";
  for (const auto& p : a.alphabet.atoms) out << ' ' << p;
  out << "\n";
  out << "deterministic";
  for (int q = 0; q < a.num_states; ++q)
    if (a.in_deterministic[q]) out << ' ' << q;
  out << "\n";
  for (int q = 0; q < a.num_states; ++q) {
    for (int l = 0; l < a.alphabet.num_letters(); ++l) {
      if (a.delta[q][l] < 0) continue;
      out << q << " --" << a.alphabet.letter_name(a.alphabet.letters[l]) << "--> " << a.delta[q][l];
      if (a.accepting[q][l]) out << " !";
      out << "\n";
    }
    for (int t : a.eps[q]) out << q << " --eps--> " << t << "\n";
  }
  return out.str();
}

inline bool ldba_equal(const Ldba& a, const Ldba& b) {
  return a.num_states == b.num_states && a.initial == b.initial &&
         a.alphabet.atoms == b.alphabet.atoms && a.alphabet.letters == b.alphabet.letters &&
         a.in_deterministic == b.in_deterministic && a.delta == b.delta &&
         a.accepting == b.accepting && a.eps == b.eps;
}

// ----------------------------------------------------------------------------
//  Lasso acceptance
// ----------------------------------------------------------------------------

namespace detail {

/// Follow letter transitions from (q, t) and decide Buchi acceptance of the
/// unique eps-free run suffix: accept iff the eventually entered loop over
/// (state, cycle position) pairs contains an accepting transition.
inline bool deterministic_run_accepts(const Ldba& a, const std::vector<int>& word_letters, int p,
                                      int c, int q, int t) {
  std::map<std::pair<int, int>, int> first_seen;  // (state, cycle pos) -> accepting count
  int acc_count = 0;
  while (true) {
    if (t >= p) {
      auto key = std::make_pair(q, (t - p) % c);
      auto it = first_seen.find(key);
      if (it != first_seen.end()) return acc_count > it->second;
      first_seen[key] = acc_count;
    }
    const int letter = word_letters[t < p ? t : p + (t - p) % c];
    if (a.delta[q][letter] < 0) return false;  // implicit rejecting sink
    if (a.accepting[q][letter]) ++acc_count;
    q = a.delta[q][letter];
    ++t;
  }
}

}  // namespace detail

/// Does the automaton accept the lasso word?  Enumerates the eps-free run
/// plus every single-jump schedule (jump time up to |prefix| + (|Q|+1)*|cycle|,
/// after which pre-jump configurations repeat).
inline bool accepts_lasso(const Ldba& a, const LassoWord& w) {
  if (w.cycle.empty()) throw std::invalid_argument("accepts_lasso: cycle must be nonempty");
  if (w.atoms != a.alphabet.atoms)
    throw std::invalid_argument("accepts_lasso: word atoms must match the automaton alphabet");
  const int p = static_cast<int>(w.prefix.size());
  const int c = static_cast<int>(w.cycle.size());
  std::vector<int> word_letters(p + c);
  for (int i = 0; i < p + c; ++i) {
    const LetterMask m = i < p ? w.prefix[i] : w.cycle[i - p];
    const int li = a.alphabet.letter_index(m);
    if (li < 0)
      throw std::invalid_argument("accepts_lasso: word letter outside the automaton alphabet");
    word_letters[i] = li;
  }
  if (detail::deterministic_run_accepts(a, word_letters, p, c, a.initial, 0)) return true;
  // Single-jump schedules: follow letters to time t, take one eps move there.
  int q = a.initial;
  const int max_jump = p + (a.num_states + 1) * c;
  for (int t = 0; t <= max_jump; ++t) {
    for (int target : a.eps[q])
      if (detail::deterministic_run_accepts(a, word_letters, p, c, target, t)) return true;
    const int letter = word_letters[t < p ? t : p + (t - p) % c];
    if (a.delta[q][letter] < 0) break;  // pre-jump run dies here
    q = a.delta[q][letter];
  }
  return false;
}

}  // namespace specrl
