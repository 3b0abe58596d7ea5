#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "specrl/ltl.hpp"
#include "specrl/rng.hpp"

using namespace specrl;

namespace {

// ----------------------------------------------------------------------------
//  Independent lasso-word evaluator: decides Until/Release by walking the
//  successor chain far enough to cover every reachable position, instead of
//  solving fixpoints.  Used as an oracle against eval_lasso.
// ----------------------------------------------------------------------------

int total_len(const LassoWord& w) {
  return static_cast<int>(w.prefix.size() + w.cycle.size());
}

int succ_pos(const LassoWord& w, int i) {
  return i + 1 < total_len(w) ? i + 1 : static_cast<int>(w.prefix.size());
}

LetterMask letter_at(const LassoWord& w, int i) {
  const int p = static_cast<int>(w.prefix.size());
  return i < p ? w.prefix[i] : w.cycle[i - p];
}

bool atom_at(const LassoWord& w, const std::string& atom, int i) {
  for (std::size_t j = 0; j < w.atoms.size(); ++j)
    if (w.atoms[j] == atom) return (letter_at(w, i) >> j) & 1u;
  FAIL("atom '" << atom << "' not in the lasso alphabet");
  return false;
}

using WalkMemo = std::map<std::pair<const Formula*, int>, bool>;

// The memo keys on node addresses, so the constant nodes used to expand
// Eventually and Always must outlive every memo that might reference them.
const FormulaPtr& walk_true() {
  static const FormulaPtr node = f_true();
  return node;
}

const FormulaPtr& walk_false() {
  static const FormulaPtr node = f_false();
  return node;
}

bool walk_eval(const FormulaPtr& f, const LassoWord& w, int pos, WalkMemo& memo);

bool walk_until(const FormulaPtr& lhs, const FormulaPtr& rhs, const LassoWord& w, int pos,
                WalkMemo& memo) {
  int cur = pos;
  for (int k = 0; k <= total_len(w); ++k) {
    if (walk_eval(rhs, w, cur, memo)) return true;
    if (!walk_eval(lhs, w, cur, memo)) return false;
    cur = succ_pos(w, cur);
  }
  return false;  // every reachable position visited without rhs
}

bool walk_release(const FormulaPtr& lhs, const FormulaPtr& rhs, const LassoWord& w, int pos,
                  WalkMemo& memo) {
  int cur = pos;
  for (int k = 0; k <= total_len(w); ++k) {
    if (!walk_eval(rhs, w, cur, memo)) return false;
    if (walk_eval(lhs, w, cur, memo)) return true;
    cur = succ_pos(w, cur);
  }
  return true;  // rhs held on every reachable position
}

bool walk_eval(const FormulaPtr& f, const LassoWord& w, int pos, WalkMemo& memo) {
  const auto key = std::make_pair(f.get(), pos);
  const auto it = memo.find(key);
  if (it != memo.end()) return it->second;
  bool v = false;
  switch (f->op) {
    case LtlOp::True: v = true; break;
    case LtlOp::False: v = false; break;
    case LtlOp::Atom: v = atom_at(w, f->atom, pos); break;
    case LtlOp::NegAtom: v = !atom_at(w, f->atom, pos); break;
    case LtlOp::Neg: v = !walk_eval(f->lhs, w, pos, memo); break;
    case LtlOp::And: v = walk_eval(f->lhs, w, pos, memo) && walk_eval(f->rhs, w, pos, memo); break;
    case LtlOp::Or: v = walk_eval(f->lhs, w, pos, memo) || walk_eval(f->rhs, w, pos, memo); break;
    case LtlOp::Next: v = walk_eval(f->lhs, w, succ_pos(w, pos), memo); break;
    case LtlOp::Until: v = walk_until(f->lhs, f->rhs, w, pos, memo); break;
    case LtlOp::Release: v = walk_release(f->lhs, f->rhs, w, pos, memo); break;
    case LtlOp::Eventually: v = walk_until(walk_true(), f->lhs, w, pos, memo); break;
    case LtlOp::Always: v = walk_release(walk_false(), f->lhs, w, pos, memo); break;
  }
  memo[key] = v;
  return v;
}

bool walk_eval(const FormulaPtr& f, const LassoWord& w) {
  WalkMemo memo;
  return walk_eval(f, w, 0, memo);
}

// ----------------------------------------------------------------------------
//  Random formulas and words
// ----------------------------------------------------------------------------

FormulaPtr random_formula(Rng& rng, const std::vector<std::string>& atoms, int depth) {
  std::uniform_int_distribution<int> atom_pick(0, static_cast<int>(atoms.size()) - 1);
  std::uniform_int_distribution<int> op_pick(0, depth <= 0 ? 3 : 11);
  switch (op_pick(rng)) {
    case 0: return f_true();
    case 1: return f_false();
    case 2: return f_atom(atoms[atom_pick(rng)]);
    case 3: return f_neg_atom(atoms[atom_pick(rng)]);
    case 4: return f_not(random_formula(rng, atoms, depth - 1));
    case 5: return f_and(random_formula(rng, atoms, depth - 1), random_formula(rng, atoms, depth - 1));
    case 6: return f_or(random_formula(rng, atoms, depth - 1), random_formula(rng, atoms, depth - 1));
    case 7: return f_next(random_formula(rng, atoms, depth - 1));
    case 8: return f_until(random_formula(rng, atoms, depth - 1), random_formula(rng, atoms, depth - 1));
    case 9:
      return f_release(random_formula(rng, atoms, depth - 1), random_formula(rng, atoms, depth - 1));
    case 10: return f_eventually(random_formula(rng, atoms, depth - 1));
    default: return f_always(random_formula(rng, atoms, depth - 1));
  }
}

LassoWord random_lasso(Rng& rng, const std::vector<std::string>& atoms) {
  LassoWord w;
  w.atoms = atoms;
  std::uniform_int_distribution<int> plen(0, 5), clen(1, 5);
  std::uniform_int_distribution<LetterMask> letter(0, (LetterMask{1} << atoms.size()) - 1);
  const int np = plen(rng), nc = clen(rng);
  for (int i = 0; i < np; ++i) w.prefix.push_back(letter(rng));
  for (int i = 0; i < nc; ++i) w.cycle.push_back(letter(rng));
  return w;
}

LassoWord make_lasso(std::vector<std::string> atoms, std::vector<LetterMask> prefix,
                     std::vector<LetterMask> cycle) {
  LassoWord w;
  w.atoms = std::move(atoms);
  w.prefix = std::move(prefix);
  w.cycle = std::move(cycle);
  return w;
}

bool has_neg_node(const FormulaPtr& f) {
  if (!f) return false;
  if (f->op == LtlOp::Neg) return true;
  return has_neg_node(f->lhs) || has_neg_node(f->rhs);
}

}  // namespace

// ----------------------------------------------------------------------------
//  Parser
// ----------------------------------------------------------------------------

TEST_CASE("parser precedence and associativity") {
  CHECK(formula_equal(parse_ltl("a | b & c"),
                      f_or(f_atom("a"), f_and(f_atom("b"), f_atom("c")))));
  CHECK(formula_equal(parse_ltl("a & b | c"),
                      f_or(f_and(f_atom("a"), f_atom("b")), f_atom("c"))));
  CHECK(formula_equal(parse_ltl("a U b U c"),
                      f_until(f_atom("a"), f_until(f_atom("b"), f_atom("c")))));
  CHECK(formula_equal(parse_ltl("a R b U c"),
                      f_release(f_atom("a"), f_until(f_atom("b"), f_atom("c")))));
  CHECK(formula_equal(parse_ltl("a U b & c"),
                      f_and(f_until(f_atom("a"), f_atom("b")), f_atom("c"))));
  CHECK(formula_equal(parse_ltl("!a U b"), f_until(f_not(f_atom("a")), f_atom("b"))));
  CHECK(formula_equal(parse_ltl("X a U b"), f_until(f_next(f_atom("a")), f_atom("b"))));
  CHECK(formula_equal(parse_ltl("<>a & []b"),
                      f_and(f_eventually(f_atom("a")), f_always(f_atom("b")))));
  CHECK(formula_equal(parse_ltl("!<>a"), f_not(f_eventually(f_atom("a")))));
  CHECK(formula_equal(parse_ltl("(a | b) & c"),
                      f_and(f_or(f_atom("a"), f_atom("b")), f_atom("c"))));
  CHECK(formula_equal(parse_ltl("true U false"), f_until(f_true(), f_false())));
  CHECK(formula_equal(parse_ltl("a && b || c"),
                      f_or(f_and(f_atom("a"), f_atom("b")), f_atom("c"))));
}

TEST_CASE("parser rejects malformed input") {
  CHECK_THROWS_AS(parse_ltl(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_ltl("a &"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ltl("U a"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ltl("((a)"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ltl("a)"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ltl("a # b"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ltl("<a"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ltl("[a]"), std::invalid_argument);
  CHECK_THROWS_AS(parse_ltl("a b"), std::invalid_argument);
}

TEST_CASE("parser enforces the declared atom set") {
  const std::set<std::string> ap = {"a", "b"};
  CHECK_NOTHROW(parse_ltl("a U b", ap));
  CHECK_THROWS_AS(parse_ltl("a U c", ap), std::invalid_argument);
  CHECK_NOTHROW(parse_ltl("c | d"));  // unrestricted overload accepts any name
}

TEST_CASE("printing round-trips through the parser") {
  Rng rng = make_stream_rng(11, 1);
  const std::vector<std::string> atoms = {"a", "b", "c"};
  for (int i = 0; i < 300; ++i) {
    // A negated atom prints as !a, which reparses as a Neg node; normal form
    // maps both spellings to the same tree.
    const FormulaPtr f = random_formula(rng, atoms, 4);
    const FormulaPtr g = parse_ltl(to_string(f));
    CAPTURE(to_string(f), to_string(to_pnf(f)), to_string(to_pnf(g)));
    CHECK(formula_equal(to_pnf(f), to_pnf(g)));
    const LassoWord w = random_lasso(rng, atoms);
    CHECK(walk_eval(f, w) == walk_eval(g, w));
  }
}

// ----------------------------------------------------------------------------
//  Lasso evaluation
// ----------------------------------------------------------------------------

TEST_CASE("eval_lasso pinned cases") {
  const std::vector<std::string> ab = {"a", "b"};
  const LetterMask A = 1, B = 2, AB = 3, N = 0;

  SECTION("always eventually") {
    const FormulaPtr f = parse_ltl("[]<>a");
    CHECK(eval_lasso(f, make_lasso(ab, {N}, {A, N})));
    CHECK_FALSE(eval_lasso(f, make_lasso(ab, {A, A}, {N})));
    CHECK(eval_lasso(f, make_lasso(ab, {}, {N, N, A})));
  }
  SECTION("eventually always") {
    const FormulaPtr f = parse_ltl("<>[]a");
    CHECK(eval_lasso(f, make_lasso(ab, {N}, {A})));
    CHECK_FALSE(eval_lasso(f, make_lasso(ab, {A}, {A, N})));
  }
  SECTION("eventually sees the prefix") {
    const FormulaPtr f = parse_ltl("<>b");
    CHECK(eval_lasso(f, make_lasso(ab, {B}, {N})));
    CHECK_FALSE(eval_lasso(f, make_lasso(ab, {A}, {N})));
  }
  SECTION("next wraps from the cycle end to the cycle start") {
    const FormulaPtr f = parse_ltl("X X a");
    CHECK(eval_lasso(f, make_lasso(ab, {}, {A, N})));       // 0 -> 1 -> 0 (a)
    CHECK_FALSE(eval_lasso(f, make_lasso(ab, {}, {N, A})));  // 0 -> 1 -> 0 (no a)
  }
  SECTION("until and release") {
    const FormulaPtr u = parse_ltl("a U b");
    CHECK(eval_lasso(u, make_lasso(ab, {A, A}, {B})));
    CHECK_FALSE(eval_lasso(u, make_lasso(ab, {A, N}, {B})));
    CHECK_FALSE(eval_lasso(u, make_lasso(ab, {A}, {A})));  // b never arrives
    const FormulaPtr r = parse_ltl("b R a");
    CHECK(eval_lasso(r, make_lasso(ab, {}, {A})));            // a forever
    CHECK(eval_lasso(r, make_lasso(ab, {A, AB}, {N})));       // released at step 1
    CHECK_FALSE(eval_lasso(r, make_lasso(ab, {A, B}, {N})));  // a fails before release
  }
  SECTION("boolean corners") {
    CHECK(eval_lasso(parse_ltl("true"), make_lasso(ab, {}, {N})));
    CHECK_FALSE(eval_lasso(parse_ltl("false"), make_lasso(ab, {}, {AB})));
    CHECK(eval_lasso(parse_ltl("!a"), make_lasso(ab, {}, {B})));
  }
}

TEST_CASE("eval_lasso agrees with the path-walk oracle on random formulas") {
  Rng rng = make_stream_rng(17, 2);
  const std::vector<std::string> atoms = {"a", "b"};
  long long mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    const FormulaPtr f = random_formula(rng, atoms, 4);
    for (int j = 0; j < 20; ++j) {
      const LassoWord w = random_lasso(rng, atoms);
      if (eval_lasso(f, w) != walk_eval(f, w)) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

// ----------------------------------------------------------------------------
//  Positive normal form
// ----------------------------------------------------------------------------

TEST_CASE("pnf removes negations and preserves meaning") {
  Rng rng = make_stream_rng(23, 3);
  const std::vector<std::string> atoms = {"a", "b", "c"};
  for (int i = 0; i < 400; ++i) {
    const FormulaPtr f = random_formula(rng, atoms, 4);
    const FormulaPtr p = to_pnf(f);
    CHECK(is_pnf(p));
    CHECK_FALSE(has_neg_node(p));
    for (int j = 0; j < 8; ++j) {
      const LassoWord w = random_lasso(rng, atoms);
      if (walk_eval(f, w) != walk_eval(p, w)) {
        CAPTURE(to_string(f), to_string(p));
        FAIL("pnf changed the meaning");
      }
    }
  }
}

TEST_CASE("pnf duality pins") {
  CHECK(is_pnf(parse_ltl("a U (!b R c)")) == false);  // Neg node from the parser
  CHECK(formula_equal(to_pnf(parse_ltl("!!a")), f_atom("a")));
  CHECK(formula_equal(to_pnf(parse_ltl("!a")), f_neg_atom("a")));
  CHECK(formula_equal(to_pnf(parse_ltl("!true")), f_false()));
  CHECK(formula_equal(to_pnf(parse_ltl("!(a & b)")),
                      f_or(f_neg_atom("a"), f_neg_atom("b"))));
  CHECK(formula_equal(to_pnf(parse_ltl("!(a U b)")),
                      f_release(f_neg_atom("a"), f_neg_atom("b"))));
  CHECK(formula_equal(to_pnf(parse_ltl("!X a")), f_next(f_neg_atom("a"))));
  const FormulaPtr not_event = to_pnf(parse_ltl("!<>a"));
  CHECK(is_pnf(not_event));
  CHECK(walk_eval(not_event, make_lasso({"a"}, {}, {0})));
  CHECK_FALSE(walk_eval(not_event, make_lasso({"a"}, {0}, {1})));
}

// ----------------------------------------------------------------------------
//  Reinterpretation over a cell alphabet
// ----------------------------------------------------------------------------

namespace {

/// Random cells over the base alphabet; a paired lasso word gives the same
/// trace as cell letters and as the cells' base letters.
struct CellSetup {
  Alphabet base;
  std::vector<SigmaAtom> cells;
  Alphabet cell_alph;
};

CellSetup random_cells(Rng& rng, const std::vector<std::string>& base_atoms, int n_cells) {
  CellSetup s;
  s.base = full_alphabet(base_atoms);
  std::uniform_int_distribution<LetterMask> letter(0, s.base.full_mask());
  for (int i = 0; i < n_cells; ++i)
    s.cells.push_back({"C" + std::to_string(i), letter(rng)});
  std::vector<std::string> names;
  for (const auto& c : s.cells) names.push_back(c.name);
  s.cell_alph = full_alphabet(names);
  return s;
}

}  // namespace

TEST_CASE("reinterpretation substitutes cell disjunctions") {
  const std::vector<std::string> base_atoms = {"p", "q"};
  const Alphabet base = full_alphabet(base_atoms);
  // C0 carries both atoms, C1 only p, C2 nothing.
  const std::vector<SigmaAtom> cells = {{"C0", 3}, {"C1", 1}, {"C2", 0}};

  const FormulaPtr f = to_pnf(parse_ltl("<>p & []!q"));
  const FormulaPtr g = interpret_over_alphabet(f, base, cells);
  std::set<std::string> atoms;
  collect_atoms(g, atoms);
  for (const auto& a : atoms) CHECK(a.front() == 'C');

  // Trace C2 C1 C1 ... : p occurs (via C1), q never occurs.
  LassoWord w = make_lasso({"C0", "C1", "C2"}, {4}, {2});
  CHECK(eval_lasso(g, w));
  // Trace C0 C0 ... : q occurs immediately.
  CHECK_FALSE(eval_lasso(g, make_lasso({"C0", "C1", "C2"}, {}, {1})));
}

TEST_CASE("atoms no cell carries become false") {
  const Alphabet base = full_alphabet({"p", "q"});
  const std::vector<SigmaAtom> cells = {{"C0", 1}, {"C1", 0}};  // q nowhere
  const FormulaPtr f = interpret_over_alphabet(to_pnf(parse_ltl("<>q")), base, cells);
  CHECK_FALSE(eval_lasso(f, make_lasso({"C0", "C1"}, {}, {1})));
  CHECK_FALSE(eval_lasso(f, make_lasso({"C0", "C1"}, {2}, {1})));
}

TEST_CASE("reinterpreted formulas track the base formula on paired words") {
  Rng rng = make_stream_rng(31, 4);
  const std::vector<std::string> base_atoms = {"p", "q"};
  long long mismatches = 0;
  for (int rep = 0; rep < 60; ++rep) {
    std::uniform_int_distribution<int> ncells(1, 5);
    const CellSetup setup = random_cells(rng, base_atoms, ncells(rng));
    const FormulaPtr f = to_pnf(random_formula(rng, base_atoms, 3));
    const FormulaPtr g = interpret_over_alphabet(f, setup.base, setup.cells);
    std::uniform_int_distribution<int> cell_pick(0, static_cast<int>(setup.cells.size()) - 1);
    std::uniform_int_distribution<int> plen(0, 4), clen(1, 4);
    for (int j = 0; j < 25; ++j) {
      LassoWord base_w, cell_w;
      base_w.atoms = base_atoms;
      for (const auto& c : setup.cells) cell_w.atoms.push_back(c.name);
      const int np = plen(rng), nc = clen(rng);
      for (int i = 0; i < np + nc; ++i) {
        const int c = cell_pick(rng);
        auto& bs = i < np ? base_w.prefix : base_w.cycle;
        auto& cs = i < np ? cell_w.prefix : cell_w.cycle;
        bs.push_back(setup.cells[c].base_letter);
        cs.push_back(LetterMask{1} << c);
      }
      if (eval_lasso(f, base_w) != eval_lasso(g, cell_w)) ++mismatches;
    }
  }
  CHECK(mismatches == 0);
}

TEST_CASE("collect_atoms and formula_equal") {
  std::set<std::string> atoms;
  collect_atoms(parse_ltl("a U (b & !a)"), atoms);
  CHECK(atoms == std::set<std::string>{"a", "b"});
  CHECK(formula_equal(parse_ltl("a U b"), parse_ltl("a U b")));
  CHECK_FALSE(formula_equal(parse_ltl("a U b"), parse_ltl("b U a")));
}
