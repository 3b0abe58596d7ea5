#pragma once

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace specrl {

// ============================================================================
//  Letters and alphabets
//
//  A letter is a set of atomic propositions, stored as a bitmask over the
//  alphabet's atom list (bit i <-> atoms[i]).  An Alphabet fixes the atom
//  order and the admissible letters; automata and labelling functions share
//  alphabets so letter indices are comparable.
// ============================================================================

using LetterMask = std::uint32_t;

inline constexpr int kMaxAtoms = 20;

struct Alphabet {
  std::vector<std::string> atoms;
  std::vector<LetterMask> letters;

  Alphabet() = default;
  Alphabet(std::vector<std::string> atom_names, std::vector<LetterMask> letter_list)
      : atoms(std::move(atom_names)), letters(std::move(letter_list)) {
    if (static_cast<int>(atoms.size()) > kMaxAtoms)
      throw std::invalid_argument("alphabet: too many atoms (max " +
                                  std::to_string(kMaxAtoms) + ")");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (atoms[i].empty()) throw std::invalid_argument("alphabet: empty atom name");
      if (atom_pos_.count(atoms[i]))
        throw std::invalid_argument("alphabet: duplicate atom '" + atoms[i] + "'");
      atom_pos_[atoms[i]] = static_cast<int>(i);
    }
    const LetterMask bound = full_mask();
    for (std::size_t i = 0; i < letters.size(); ++i) {
      if ((letters[i] & ~bound) != 0)
        throw std::invalid_argument("alphabet: letter uses undeclared atom bit");
      if (letter_pos_.count(letters[i]))
        throw std::invalid_argument("alphabet: duplicate letter " + letter_name(letters[i]));
      letter_pos_[letters[i]] = static_cast<int>(i);
    }
  }

  int num_atoms() const { return static_cast<int>(atoms.size()); }
  int num_letters() const { return static_cast<int>(letters.size()); }

  LetterMask full_mask() const {
    return atoms.empty() ? 0u : static_cast<LetterMask>((1u << atoms.size()) - 1u);
  }

  /// Index of an atom name, or -1.
  int atom_index(const std::string& name) const {
    auto it = atom_pos_.find(name);
    return it == atom_pos_.end() ? -1 : it->second;
  }

  /// Index of a letter mask in the admissible list, or -1.
  int letter_index(LetterMask m) const {
    auto it = letter_pos_.find(m);
    return it == letter_pos_.end() ? -1 : it->second;
  }

  /// Render a mask as "{a,c1}" (atoms in declaration order), "{}" if empty.
  std::string letter_name(LetterMask m) const {
    std::string out = "{";
    bool first = true;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (m & (1u << i)) {
        if (!first) out += ',';
        out += atoms[i];
        first = false;
      }
    }
    out += '}';
    return out;
  }

  /// Parse "{a,c1}" into a mask; throws on unknown atoms or bad syntax.
  LetterMask parse_letter(const std::string& text) const {
    std::string s = text;
    if (s.size() < 2 || s.front() != '{' || s.back() != '}')
      throw std::invalid_argument("letter '" + text + "': expected {...}");
    s = s.substr(1, s.size() - 2);
    LetterMask m = 0;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      // trim surrounding spaces
      auto b = tok.find_first_not_of(" \t");
      auto e = tok.find_last_not_of(" \t");
      if (b == std::string::npos) continue;
      tok = tok.substr(b, e - b + 1);
      int idx = atom_index(tok);
      if (idx < 0) throw std::invalid_argument("letter '" + text + "': unknown atom '" + tok + "'");
      m |= (1u << idx);
    }
    return m;
  }

 private:
  std::unordered_map<std::string, int> atom_pos_;
  std::unordered_map<LetterMask, int> letter_pos_;
};

/// Alphabet whose letters are all subsets of the given atoms.
inline Alphabet full_alphabet(std::vector<std::string> atoms) {
  if (atoms.size() > 16)
    throw std::invalid_argument("full_alphabet: powerset too large for " +
                                std::to_string(atoms.size()) + " atoms");
  const std::size_t n = std::size_t{1} << atoms.size();
  std::vector<LetterMask> letters(n);
  for (std::size_t m = 0; m < n; ++m) letters[m] = static_cast<LetterMask>(m);
  return Alphabet(std::move(atoms), std::move(letters));
}

}  // namespace specrl
