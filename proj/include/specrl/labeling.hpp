#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "specrl/alphabet.hpp"
#include "specrl/ltl.hpp"

namespace specrl {

// ============================================================================
//  Labelling functions
//
//  A labelling partitions the state space into named cells, each a finite
//  union of half-open axis-aligned boxes [lo, hi) (+-infinity allowed).  The
//  cell names are the atoms of the derived (Sigma) alphabet; the base letter
//  of a cell records which original propositions hold on it.
//
//  relaxed_label(s, r) returns the set of cells whose region contains s
//  after inflating every box by r in the max norm; r = 0 recovers the
//  partition (exactly one cell).
// ============================================================================

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Box {
  std::vector<double> lo, hi;

  Box() = default;
  Box(std::vector<double> l, std::vector<double> h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() != hi.size()) throw std::invalid_argument("box: lo/hi dimension mismatch");
    for (std::size_t i = 0; i < lo.size(); ++i)
      if (!(lo[i] < hi[i]))
        throw std::invalid_argument("box: requires lo < hi in every dimension");
  }

  int dim() const { return static_cast<int>(lo.size()); }

  /// Membership in the box inflated by r: s in [lo - r, hi + r).
  bool contains(const std::vector<double>& s, double r = 0.0) const {
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!(s[i] >= lo[i] - r)) return false;
      if (!(s[i] < hi[i] + r)) return false;
    }
    return true;
  }
};

struct LabelingCell {
  std::string name;
  LetterMask base_letter = 0;  // original propositions holding on the cell
  std::vector<Box> boxes;
};

inline bool region_contains(const std::vector<Box>& region, const std::vector<double>& s,
                            double r = 0.0) {
  for (const auto& b : region)
    if (b.contains(s, r)) return true;
  return false;
}

namespace detail {

/// Representative coordinates refining all box endpoints in one dimension:
/// each endpoint itself, midpoints between consecutive endpoints, and points
/// beyond the extremes (stand-ins for the infinite tails).
inline std::vector<double> dim_representatives(const std::vector<const Box*>& boxes, int d) {
  std::set<double> ends;
  for (const Box* b : boxes) {
    if (std::isfinite(b->lo[d])) ends.insert(b->lo[d]);
    if (std::isfinite(b->hi[d])) ends.insert(b->hi[d]);
  }
  std::vector<double> reps;
  if (ends.empty()) {
    reps.push_back(0.0);
    return reps;
  }
  std::vector<double> sorted(ends.begin(), ends.end());
  reps.push_back(sorted.front() - 1.0);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    reps.push_back(sorted[i]);
    if (i + 1 < sorted.size()) reps.push_back(0.5 * (sorted[i] + sorted[i + 1]));
  }
  reps.push_back(sorted.back() + 1.0);
  return reps;
}

inline constexpr std::uint64_t kMaxArrangementPoints = 2000000;

/// Visit one representative point per arrangement region of the given boxes.
template <typename Fn>
void for_each_arrangement_point(const std::vector<const Box*>& boxes, int dim, Fn&& fn) {
  std::vector<std::vector<double>> reps(dim);
  std::uint64_t total = 1;
  for (int d = 0; d < dim; ++d) {
    reps[d] = dim_representatives(boxes, d);
    total *= reps[d].size();
    if (total > kMaxArrangementPoints)
      throw std::invalid_argument("labeling: region arrangement too large to validate exactly");
  }
  std::vector<std::size_t> idx(dim, 0);
  std::vector<double> point(dim);
  while (true) {
    for (int d = 0; d < dim; ++d) point[d] = reps[d][idx[d]];
    fn(point);
    int d = 0;
    while (d < dim) {
      if (++idx[d] < reps[d].size()) break;
      idx[d] = 0;
      ++d;
    }
    if (d == dim) return;
  }
}

}  // namespace detail

/// Exact containment of one finite box union in another.
inline bool region_subset(const std::vector<Box>& inner, const std::vector<Box>& outer, int dim) {
  std::vector<const Box*> all;
  for (const auto& b : inner) all.push_back(&b);
  for (const auto& b : outer) all.push_back(&b);
  bool ok = true;
  detail::for_each_arrangement_point(all, dim, [&](const std::vector<double>& p) {
    if (region_contains(inner, p) && !region_contains(outer, p)) ok = false;
  });
  return ok;
}

struct Labeling {
  std::vector<std::string> base_atoms;  // original proposition names
  int dim = 0;
  std::vector<LabelingCell> cells;
  Alphabet sigma;  // full powerset alphabet over the cell names

  Labeling() = default;
  Labeling(std::vector<std::string> base, int d, std::vector<LabelingCell> cs)
      : base_atoms(std::move(base)), dim(d), cells(std::move(cs)) {
    if (dim <= 0) throw std::invalid_argument("labeling: dimension must be positive");
    if (cells.empty()) throw std::invalid_argument("labeling: needs at least one cell");
    std::vector<std::string> names;
    std::set<std::string> seen;
    const LetterMask base_bound =
        base_atoms.empty() ? 0u : static_cast<LetterMask>((1u << base_atoms.size()) - 1u);
    for (const auto& c : cells) {
      if (!seen.insert(c.name).second)
        throw std::invalid_argument("labeling: duplicate cell name '" + c.name + "'");
      if ((c.base_letter & ~base_bound) != 0)
        throw std::invalid_argument("labeling: cell letter uses undeclared base atom");
      if (c.boxes.empty())
        throw std::invalid_argument("labeling: cell '" + c.name + "' has no boxes");
      for (const auto& b : c.boxes)
        if (b.dim() != dim)
          throw std::invalid_argument("labeling: box dimension mismatch in cell '" + c.name + "'");
      names.push_back(c.name);
    }
    sigma = full_alphabet(names);
    validate_partition();
  }

  int num_cells() const { return static_cast<int>(cells.size()); }

  /// Cells whose inflated region contains s, as a mask over cell indices.
  LetterMask relaxed_label(const std::vector<double>& s, double r) const {
    if (static_cast<int>(s.size()) != dim)
      throw std::invalid_argument("labeling: state dimension mismatch");
    if (r < 0) throw std::invalid_argument("labeling: relaxation radius must be >= 0");
    LetterMask m = 0;
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (region_contains(cells[i].boxes, s, r)) m |= (1u << i);
    return m;
  }

  /// The partition cell of s (r = 0).
  int cell_of(const std::vector<double>& s) const {
    if (static_cast<int>(s.size()) != dim)
      throw std::invalid_argument("labeling: state dimension mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (region_contains(cells[i].boxes, s)) return static_cast<int>(i);
    throw std::logic_error("labeling: state escaped the partition");
  }

  int cell_index(const std::string& name) const {
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].name == name) return static_cast<int>(i);
    return -1;
  }

  /// Cell atoms for reinterpretation, paired with their base letters.
  std::vector<SigmaAtom> sigma_atoms() const {
    std::vector<SigmaAtom> out;
    for (const auto& c : cells) out.push_back({c.name, c.base_letter});
    return out;
  }

  Alphabet base_alphabet() const { return full_alphabet(base_atoms); }

 private:
  /// Every arrangement point must lie in exactly one cell.
  void validate_partition() const {
    std::vector<const Box*> all;
    for (const auto& c : cells)
      for (const auto& b : c.boxes) all.push_back(&b);
    detail::for_each_arrangement_point(all, dim, [&](const std::vector<double>& p) {
      int hits = 0;
      for (const auto& c : cells)
        if (region_contains(c.boxes, p)) ++hits;
      if (hits != 1) {
        std::string where;
        for (double x : p) where += (where.empty() ? "" : ", ") + std::to_string(x);
        throw std::invalid_argument("labeling: cells must partition the space; point (" + where +
                                    ") lies in " + std::to_string(hits) + " cells");
      }
    });
  }
};

// ----------------------------------------------------------------------------
//  Stage labellings
// ----------------------------------------------------------------------------

/// Replacement region for one cell, used by curriculum stages.
struct CellOverride {
  int cell = -1;
  std::vector<Box> boxes;
};

/// Single-valued stage labelling: overridden cells claim their (enlarged)
/// regions first, remaining states fall through to the base partition.
inline int stage_cell_of(const Labeling& lab, const std::vector<CellOverride>& overrides,
                         const std::vector<double>& s) {
  for (const auto& ov : overrides)
    if (region_contains(ov.boxes, s)) return ov.cell;
  return lab.cell_of(s);
}

/// A letter-producing view of the state space used by products: returns the
/// set of cell atoms assigned to a state.
using LabelFn = std::function<LetterMask(const std::vector<double>&)>;

inline LabelFn make_exact_label_fn(const Labeling& lab) {
  return [&lab](const std::vector<double>& s) -> LetterMask {
    return LetterMask{1} << lab.cell_of(s);
  };
}

inline LabelFn make_relaxed_label_fn(const Labeling& lab, double r) {
  return [&lab, r](const std::vector<double>& s) -> LetterMask {
    return lab.relaxed_label(s, r);
  };
}

inline LabelFn make_stage_label_fn(const Labeling& lab, std::vector<CellOverride> overrides) {
  return [&lab, ov = std::move(overrides)](const std::vector<double>& s) -> LetterMask {
    return LetterMask{1} << stage_cell_of(lab, ov, s);
  };
}

}  // namespace specrl
