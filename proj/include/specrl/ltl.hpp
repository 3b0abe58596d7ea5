#pragma once

#include <cctype>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "specrl/alphabet.hpp"

namespace specrl {

// ============================================================================
//  LTL formulas
//
//  Grammar (ASCII):   phi := true | false | p | !phi | phi & phi | phi | phi
//                          | X phi | <> phi | [] phi | phi U phi | phi R phi
//  Precedence: unary (!, X, <>, []) > U/R (right-assoc) > & > |.
//  <>phi and []phi are sugar for (true U phi) and (false R phi).
// ============================================================================

enum class LtlOp {
  True,
  False,
  Atom,
  NegAtom,
  Neg,
  And,
  Or,
  Next,
  Until,
  Release,
  Eventually,
  Always,
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  LtlOp op;
  std::string atom;  // Atom / NegAtom only
  FormulaPtr lhs, rhs;

  Formula(LtlOp o, std::string a, FormulaPtr l, FormulaPtr r)
      : op(o), atom(std::move(a)), lhs(std::move(l)), rhs(std::move(r)) {}
};

inline FormulaPtr f_true() { return std::make_shared<Formula>(LtlOp::True, "", nullptr, nullptr); }
inline FormulaPtr f_false() { return std::make_shared<Formula>(LtlOp::False, "", nullptr, nullptr); }
inline FormulaPtr f_atom(std::string p) {
  return std::make_shared<Formula>(LtlOp::Atom, std::move(p), nullptr, nullptr);
}
inline FormulaPtr f_neg_atom(std::string p) {
  return std::make_shared<Formula>(LtlOp::NegAtom, std::move(p), nullptr, nullptr);
}
inline FormulaPtr f_not(FormulaPtr x) {
  return std::make_shared<Formula>(LtlOp::Neg, "", std::move(x), nullptr);
}
inline FormulaPtr f_and(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<Formula>(LtlOp::And, "", std::move(a), std::move(b));
}
inline FormulaPtr f_or(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<Formula>(LtlOp::Or, "", std::move(a), std::move(b));
}
inline FormulaPtr f_next(FormulaPtr x) {
  return std::make_shared<Formula>(LtlOp::Next, "", std::move(x), nullptr);
}
inline FormulaPtr f_until(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<Formula>(LtlOp::Until, "", std::move(a), std::move(b));
}
inline FormulaPtr f_release(FormulaPtr a, FormulaPtr b) {
  return std::make_shared<Formula>(LtlOp::Release, "", std::move(a), std::move(b));
}
inline FormulaPtr f_eventually(FormulaPtr x) {
  return std::make_shared<Formula>(LtlOp::Eventually, "", std::move(x), nullptr);
}
inline FormulaPtr f_always(FormulaPtr x) {
  return std::make_shared<Formula>(LtlOp::Always, "", std::move(x), nullptr);
}

inline bool formula_equal(const FormulaPtr& a, const FormulaPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->op != b->op || a->atom != b->atom) return false;
  return formula_equal(a->lhs, b->lhs) && formula_equal(a->rhs, b->rhs);
}

/// Atoms referenced by the formula, sorted.
inline void collect_atoms(const FormulaPtr& f, std::set<std::string>& out) {
  if (!f) return;
  if (f->op == LtlOp::Atom || f->op == LtlOp::NegAtom) out.insert(f->atom);
  collect_atoms(f->lhs, out);
  collect_atoms(f->rhs, out);
}

// ----------------------------------------------------------------------------
//  Printing
// ----------------------------------------------------------------------------

namespace detail {

inline int precedence(LtlOp op) {
  switch (op) {
    case LtlOp::Or: return 1;
    case LtlOp::And: return 2;
    case LtlOp::Until:
    case LtlOp::Release: return 3;
    default: return 4;  // unary and leaves
  }
}

inline void print_formula(const FormulaPtr& f, int parent_prec, std::string& out) {
  const int prec = precedence(f->op);
  const bool parens = prec < parent_prec;
  if (parens) out += '(';
  switch (f->op) {
    case LtlOp::True: out += "true"; break;
    case LtlOp::False: out += "false"; break;
    case LtlOp::Atom: out += f->atom; break;
    case LtlOp::NegAtom: out += "!" + f->atom; break;
    case LtlOp::Neg:
      out += '!';
      print_formula(f->lhs, prec + 1, out);
      break;
    case LtlOp::Next:
      out += "X ";
      print_formula(f->lhs, prec + 1, out);
      break;
    case LtlOp::Eventually:
      out += "<> ";
      print_formula(f->lhs, prec + 1, out);
      break;
    case LtlOp::Always:
      out += "[] ";
      print_formula(f->lhs, prec + 1, out);
      break;
    case LtlOp::And:
      print_formula(f->lhs, prec, out);
      out += " & ";
      print_formula(f->rhs, prec + 1, out);  // left-assoc
      break;
    case LtlOp::Or:
      print_formula(f->lhs, prec, out);
      out += " | ";
      print_formula(f->rhs, prec + 1, out);  // left-assoc
      break;
    case LtlOp::Until:
      print_formula(f->lhs, prec + 1, out);
      out += " U ";
      print_formula(f->rhs, prec, out);  // right-assoc
      break;
    case LtlOp::Release:
      print_formula(f->lhs, prec + 1, out);
      out += " R ";
      print_formula(f->rhs, prec, out);
      break;
  }
  if (parens) out += ')';
}

}  // namespace detail

inline std::string to_string(const FormulaPtr& f) {
  std::string out;
  detail::print_formula(f, 0, out);
  return out;
}

// ----------------------------------------------------------------------------
//  Parsing
// ----------------------------------------------------------------------------

namespace detail {

enum class Tok { End, LParen, RParen, Not, And, Or, Next, Until, Release, Event, Always, True, False, Ident };

struct Lexer {
  const std::string& text;
  std::size_t pos = 0;
  Tok tok = Tok::End;
  std::string ident;
  std::size_t tok_pos = 0;

  explicit Lexer(const std::string& t) : text(t) { advance(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument("parse error at position " + std::to_string(tok_pos) + ": " + msg);
  }

  void advance() {
    while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' ||
                                 text[pos] == '\r'))
      ++pos;
    tok_pos = pos;
    if (pos >= text.size()) {
      tok = Tok::End;
      return;
    }
    const char c = text[pos];
    switch (c) {
      case '(': tok = Tok::LParen; ++pos; return;
      case ')': tok = Tok::RParen; ++pos; return;
      case '!': tok = Tok::Not; ++pos; return;
      case '&': tok = Tok::And; ++pos; if (pos < text.size() && text[pos] == '&') ++pos; return;
      case '|': tok = Tok::Or; ++pos; if (pos < text.size() && text[pos] == '|') ++pos; return;
      case '<':
        if (pos + 1 < text.size() && text[pos + 1] == '>') {
          tok = Tok::Event;
          pos += 2;
          return;
        }
        fail("expected '<>'");
      case '[':
        if (pos + 1 < text.size() && text[pos + 1] == ']') {
          tok = Tok::Always;
          pos += 2;
          return;
        }
        fail("expected '[]'");
      default: break;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos;
      while (pos < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
        ++pos;
      ident = text.substr(start, pos - start);
      if (ident == "true") tok = Tok::True;
      else if (ident == "false") tok = Tok::False;
      else if (ident == "X") tok = Tok::Next;
      else if (ident == "U") tok = Tok::Until;
      else if (ident == "R") tok = Tok::Release;
      else tok = Tok::Ident;
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

struct Parser {
  Lexer lex;
  const std::set<std::string>* allowed;  // null = any identifier

  Parser(const std::string& text, const std::set<std::string>* ap) : lex(text), allowed(ap) {}

  FormulaPtr parse() {
    FormulaPtr f = parse_or();
    if (lex.tok != Tok::End) lex.fail("trailing input");
    return f;
  }

  FormulaPtr parse_or() {
    FormulaPtr f = parse_and();
    while (lex.tok == Tok::Or) {
      lex.advance();
      f = f_or(f, parse_and());
    }
    return f;
  }

  FormulaPtr parse_and() {
    FormulaPtr f = parse_until();
    while (lex.tok == Tok::And) {
      lex.advance();
      f = f_and(f, parse_until());
    }
    return f;
  }

  FormulaPtr parse_until() {
    FormulaPtr f = parse_unary();
    if (lex.tok == Tok::Until) {
      lex.advance();
      return f_until(f, parse_until());
    }
    if (lex.tok == Tok::Release) {
      lex.advance();
      return f_release(f, parse_until());
    }
    return f;
  }

  FormulaPtr parse_unary() {
    switch (lex.tok) {
      case Tok::Not: lex.advance(); return f_not(parse_unary());
      case Tok::Next: lex.advance(); return f_next(parse_unary());
      case Tok::Event: lex.advance(); return f_eventually(parse_unary());
      case Tok::Always: lex.advance(); return f_always(parse_unary());
      case Tok::True: lex.advance(); return f_true();
      case Tok::False: lex.advance(); return f_false();
      case Tok::LParen: {
        lex.advance();
        FormulaPtr f = parse_or();
        if (lex.tok != Tok::RParen) lex.fail("expected ')'");
        lex.advance();
        return f;
      }
      case Tok::Ident: {
        std::string name = lex.ident;
        if (allowed && !allowed->count(name))
          lex.fail("unknown atomic proposition '" + name + "'");
        lex.advance();
        return f_atom(name);
      }
      default: lex.fail("expected a formula");
    }
  }
};

}  // namespace detail

/// Parse an LTL formula; atoms must come from `ap` when given.
inline FormulaPtr parse_ltl(const std::string& text, const std::set<std::string>& ap) {
  detail::Parser p(text, &ap);
  return p.parse();
}

inline FormulaPtr parse_ltl(const std::string& text) {
  detail::Parser p(text, nullptr);
  return p.parse();
}

// ----------------------------------------------------------------------------
//  Positive normal form
// ----------------------------------------------------------------------------

namespace detail {

inline FormulaPtr pnf_rec(const FormulaPtr& f, bool neg) {
  switch (f->op) {
    case LtlOp::True: return neg ? f_false() : f_true();
    case LtlOp::False: return neg ? f_true() : f_false();
    case LtlOp::Atom: return neg ? f_neg_atom(f->atom) : f_atom(f->atom);
    case LtlOp::NegAtom: return neg ? f_atom(f->atom) : f_neg_atom(f->atom);
    case LtlOp::Neg: return pnf_rec(f->lhs, !neg);
    case LtlOp::And: {
      auto l = pnf_rec(f->lhs, neg), r = pnf_rec(f->rhs, neg);
      return neg ? f_or(l, r) : f_and(l, r);
    }
    case LtlOp::Or: {
      auto l = pnf_rec(f->lhs, neg), r = pnf_rec(f->rhs, neg);
      return neg ? f_and(l, r) : f_or(l, r);
    }
    case LtlOp::Next: return f_next(pnf_rec(f->lhs, neg));
    case LtlOp::Until: {
      auto l = pnf_rec(f->lhs, neg), r = pnf_rec(f->rhs, neg);
      return neg ? f_release(l, r) : f_until(l, r);
    }
    case LtlOp::Release: {
      auto l = pnf_rec(f->lhs, neg), r = pnf_rec(f->rhs, neg);
      return neg ? f_until(l, r) : f_release(l, r);
    }
    case LtlOp::Eventually: {
      auto x = pnf_rec(f->lhs, neg);
      return neg ? f_always(x) : f_eventually(x);
    }
    case LtlOp::Always: {
      auto x = pnf_rec(f->lhs, neg);
      return neg ? f_eventually(x) : f_always(x);
    }
  }
  throw std::logic_error("pnf: bad op");
}

}  // namespace detail

/// Push negations to the atoms; result has no Neg nodes (NegAtom leaves only).
inline FormulaPtr to_pnf(const FormulaPtr& f) { return detail::pnf_rec(f, false); }

inline bool is_pnf(const FormulaPtr& f) {
  if (!f) return true;
  if (f->op == LtlOp::Neg) return false;
  return is_pnf(f->lhs) && is_pnf(f->rhs);
}

// ----------------------------------------------------------------------------
//  Reinterpretation over a labelling partition's letters
// ----------------------------------------------------------------------------

/// A named letter of the base alphabet, used as an atom of the derived
/// alphabet (one per labelling cell).
struct SigmaAtom {
  std::string name;
  LetterMask base_letter = 0;
};

/// Rewrite a PNF formula over base atoms into a negation-free formula over
/// the cell atoms: p becomes the disjunction of cells whose letter contains
/// p, and !p the disjunction of cells whose letter omits p.  An empty
/// disjunction collapses to false.
inline FormulaPtr interpret_over_alphabet(const FormulaPtr& f, const Alphabet& base,
                                          const std::vector<SigmaAtom>& cells) {
  if (!is_pnf(f))
    throw std::invalid_argument("interpret_over_alphabet: formula must be in positive normal form");
  std::set<std::string> seen;
  for (const auto& c : cells) {
    if (!seen.insert(c.name).second)
      throw std::invalid_argument("interpret_over_alphabet: duplicate cell name '" + c.name +
                                  "'");
  }
  auto disjunction = [&](auto&& pred) -> FormulaPtr {
    FormulaPtr out;
    for (const auto& c : cells) {
      if (!pred(c.base_letter)) continue;
      out = out ? f_or(out, f_atom(c.name)) : f_atom(c.name);
    }
    return out ? out : f_false();
  };
  std::function<FormulaPtr(const FormulaPtr&)> rec = [&](const FormulaPtr& g) -> FormulaPtr {
    switch (g->op) {
      case LtlOp::True: return f_true();
      case LtlOp::False: return f_false();
      case LtlOp::Atom: {
        int bit = base.atom_index(g->atom);
        if (bit < 0)
          throw std::invalid_argument("interpret_over_alphabet: atom '" + g->atom +
                                      "' not in the base alphabet");
        return disjunction([&](LetterMask m) { return (m >> bit) & 1u; });
      }
      case LtlOp::NegAtom: {
        int bit = base.atom_index(g->atom);
        if (bit < 0)
          throw std::invalid_argument("interpret_over_alphabet: atom '" + g->atom +
                                      "' not in the base alphabet");
        return disjunction([&](LetterMask m) { return !((m >> bit) & 1u); });
      }
      case LtlOp::And: return f_and(rec(g->lhs), rec(g->rhs));
      case LtlOp::Or: return f_or(rec(g->lhs), rec(g->rhs));
      case LtlOp::Next: return f_next(rec(g->lhs));
      case LtlOp::Until: return f_until(rec(g->lhs), rec(g->rhs));
      case LtlOp::Release: return f_release(rec(g->lhs), rec(g->rhs));
      case LtlOp::Eventually: return f_eventually(rec(g->lhs));
      case LtlOp::Always: return f_always(rec(g->lhs));
      case LtlOp::Neg: break;
    }
    throw std::logic_error("interpret_over_alphabet: bad op");
  };
  return rec(f);
}

// ----------------------------------------------------------------------------
//  Lasso-word evaluation
// ----------------------------------------------------------------------------

/// An ultimately periodic word  prefix . cycle^omega, each position a letter
/// (set of atoms) over the word's own atom list.
struct LassoWord {
  std::vector<std::string> atoms;
  std::vector<LetterMask> prefix;
  std::vector<LetterMask> cycle;
};

/// Evaluate an LTL formula (PNF not required) on a lasso word at position 0.
/// Until/Release are solved as least/greatest fixpoints over the finite
/// position set {0..|prefix|+|cycle|-1} with the wrap-around successor.
inline bool eval_lasso(const FormulaPtr& f, const LassoWord& w) {
  if (w.cycle.empty()) throw std::invalid_argument("eval_lasso: cycle must be nonempty");
  const int p = static_cast<int>(w.prefix.size());
  const int c = static_cast<int>(w.cycle.size());
  const int n = p + c;
  std::map<std::string, int> atom_bit;
  for (std::size_t i = 0; i < w.atoms.size(); ++i) atom_bit[w.atoms[i]] = static_cast<int>(i);
  auto letter_at = [&](int i) { return i < p ? w.prefix[i] : w.cycle[i - p]; };
  auto succ = [&](int i) { return i + 1 < n ? i + 1 : p; };

  std::map<const Formula*, std::vector<char>> memo;
  std::function<const std::vector<char>&(const FormulaPtr&)> ev =
      [&](const FormulaPtr& g) -> const std::vector<char>& {
    auto it = memo.find(g.get());
    if (it != memo.end()) return it->second;
    std::vector<char> v(n, 0);
    switch (g->op) {
      case LtlOp::True: v.assign(n, 1); break;
      case LtlOp::False: break;
      case LtlOp::Atom:
      case LtlOp::NegAtom: {
        auto bit_it = atom_bit.find(g->atom);
        if (bit_it == atom_bit.end())
          throw std::invalid_argument("eval_lasso: word does not declare atom '" + g->atom + "'");
        const int bit = bit_it->second;
        const bool want = (g->op == LtlOp::Atom);
        for (int i = 0; i < n; ++i)
          v[i] = (((letter_at(i) >> bit) & 1u) != 0) == want;
        break;
      }
      case LtlOp::Neg: {
        const auto& x = ev(g->lhs);
        for (int i = 0; i < n; ++i) v[i] = !x[i];
        break;
      }
      case LtlOp::And: {
        const auto& a = ev(g->lhs);
        const auto& b = ev(g->rhs);
        for (int i = 0; i < n; ++i) v[i] = a[i] && b[i];
        break;
      }
      case LtlOp::Or: {
        const auto& a = ev(g->lhs);
        const auto& b = ev(g->rhs);
        for (int i = 0; i < n; ++i) v[i] = a[i] || b[i];
        break;
      }
      case LtlOp::Next: {
        const auto& x = ev(g->lhs);
        for (int i = 0; i < n; ++i) v[i] = x[succ(i)];
        break;
      }
      case LtlOp::Until:
      case LtlOp::Eventually: {
        const std::vector<char> all_true(n, 1);
        const auto& a = (g->op == LtlOp::Until) ? ev(g->lhs) : all_true;
        const auto& b = (g->op == LtlOp::Until) ? ev(g->rhs) : ev(g->lhs);
        v.assign(n, 0);  // least fixpoint from below
        bool changed = true;
        while (changed) {
          changed = false;
          for (int i = n - 1; i >= 0; --i) {
            char nv = b[i] || (a[i] && v[succ(i)]);
            if (nv != v[i]) {
              v[i] = nv;
              changed = true;
            }
          }
        }
        break;
      }
      case LtlOp::Release:
      case LtlOp::Always: {
        const std::vector<char> all_false(n, 0);
        const auto& a = (g->op == LtlOp::Release) ? ev(g->lhs) : all_false;
        const auto& b = (g->op == LtlOp::Release) ? ev(g->rhs) : ev(g->lhs);
        v.assign(n, 1);  // greatest fixpoint from above
        bool changed = true;
        while (changed) {
          changed = false;
          for (int i = n - 1; i >= 0; --i) {
            char nv = b[i] && (a[i] || v[succ(i)]);
            if (nv != v[i]) {
              v[i] = nv;
              changed = true;
            }
          }
        }
        break;
      }
    }
    return memo.emplace(g.get(), std::move(v)).first->second;
  };
  return ev(f)[0] != 0;
}

}  // namespace specrl
