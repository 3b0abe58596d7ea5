#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "specrl/automaton.hpp"
#include "specrl/labeling.hpp"
#include "specrl/rl.hpp"

namespace specrl {

// ============================================================================
//  Specification-guided curriculum training
// ============================================================================

/// One curriculum stage: either a relaxation radius (set-valued labels from
/// inflated cells) or explicit region overrides (single-valued labels with
/// enlarged cells claiming states first).  zeta 0 inherits the run value;
/// episodes 0 takes an equal share of the total budget.
struct StageSpec {
  std::string name;
  double radius = 0.0;
  std::vector<CellOverride> overrides;
  double zeta = 0.0;
  long long episodes = 0;
};

struct Curriculum {
  std::vector<StageSpec> stages;

  bool radius_based() const {
    for (const auto& st : stages)
      if (st.radius > 0.0) return true;
    return false;
  }
};

/// Checks the soundness conditions: radii strictly decreasing and ending at
/// 0, or override regions nested per cell toward the base partition (final
/// stage trains on the base regions); resolved zeta values in (0,1) and
/// nondecreasing.
inline void validate_curriculum(const Curriculum& cur, const Labeling& lab, double base_zeta) {
  if (cur.stages.empty()) throw std::invalid_argument("curriculum: needs at least one stage");
  bool any_radius = false, any_override = false;
  for (const auto& st : cur.stages) {
    if (st.radius < 0.0) throw std::invalid_argument("curriculum: negative radius");
    if (st.radius > 0.0) any_radius = true;
    if (!st.overrides.empty()) any_override = true;
    if (st.radius > 0.0 && !st.overrides.empty())
      throw std::invalid_argument("curriculum: a stage cannot mix a radius with overrides");
    if (st.episodes < 0) throw std::invalid_argument("curriculum: negative stage budget");
    for (const auto& ov : st.overrides) {
      if (ov.cell < 0 || ov.cell >= lab.num_cells())
        throw std::invalid_argument("curriculum: override cell index out of range");
      if (ov.boxes.empty()) throw std::invalid_argument("curriculum: override without boxes");
      for (const auto& b : ov.boxes)
        if (b.dim() != lab.dim)
          throw std::invalid_argument("curriculum: override box dimension mismatch");
    }
  }
  if (any_radius && any_override)
    throw std::invalid_argument("curriculum: cannot mix radius stages with override stages");
  if (any_radius) {
    for (std::size_t i = 1; i < cur.stages.size(); ++i)
      if (!(cur.stages[i].radius < cur.stages[i - 1].radius))
        throw std::invalid_argument("curriculum: radii must be strictly decreasing");
    if (cur.stages.back().radius != 0.0)
      throw std::invalid_argument("curriculum: the final stage must use radius 0");
  } else if (any_override) {
    if (!cur.stages.back().overrides.empty())
      throw std::invalid_argument(
          "curriculum: the final stage must train on the base regions (no overrides)");
    auto effective = [&](const StageSpec& st, int cell) -> const std::vector<Box>& {
      for (const auto& ov : st.overrides)
        if (ov.cell == cell) return ov.boxes;
      return lab.cells[cell].boxes;
    };
    for (std::size_t i = 0; i + 1 < cur.stages.size(); ++i) {
      for (int cell = 0; cell < lab.num_cells(); ++cell) {
        const auto& outer = effective(cur.stages[i], cell);
        const auto& inner = effective(cur.stages[i + 1], cell);
        if (&outer == &inner) continue;  // both fall through to the base region
        if (!region_subset(inner, outer, lab.dim))
          throw std::invalid_argument("curriculum: stage " + std::to_string(i + 1) +
                                      " region for cell '" + lab.cells[cell].name +
                                      "' is not contained in stage " + std::to_string(i) + "'s");
      }
    }
  }
  double prev = 0.0;
  for (const auto& st : cur.stages) {
    const double z = st.zeta > 0.0 ? st.zeta : base_zeta;
    if (!(z > 0.0 && z < 1.0))
      throw std::invalid_argument("curriculum: stage zeta must be in (0,1)");
    if (z < prev)
      throw std::invalid_argument("curriculum: stage zeta values must be nondecreasing");
    prev = z;
  }
}

/// The labelling the automaton sees during a stage.
inline LabelFn stage_label_fn(const Labeling& lab, const StageSpec& st) {
  if (!st.overrides.empty()) return make_stage_label_fn(lab, st.overrides);
  if (st.radius > 0.0) return make_relaxed_label_fn(lab, st.radius);
  return make_exact_label_fn(lab);
}

/// Per-stage budgets: stages with explicit episode counts keep them; the
/// rest of the total splits equally over the remaining stages, division
/// remainder on the last of them.
inline std::vector<long long> stage_budgets(const Curriculum& cur, long long total) {
  const std::size_t n = cur.stages.size();
  std::vector<long long> out(n, 0);
  long long remaining = total;
  long long n_auto = 0;
  int last_auto = -1;
  for (std::size_t i = 0; i < n; ++i) {
    if (cur.stages[i].episodes > 0) {
      out[i] = cur.stages[i].episodes;
      remaining -= out[i];
    } else {
      ++n_auto;
      last_auto = static_cast<int>(i);
    }
  }
  if (n_auto == 0) return out;
  const long long share = std::max<long long>(0, remaining) / n_auto;
  for (std::size_t i = 0; i < n; ++i)
    if (cur.stages[i].episodes <= 0) out[i] = share;
  out[last_auto] += std::max<long long>(0, remaining) - share * n_auto;
  return out;
}

struct StageResult {
  std::string name;
  double zeta = 0.0;
  long long episodes = 0;
  double estimate = 0.0;
  Mlp actor;
  Mlp critic;
};

struct GuidedResult {
  std::vector<StageResult> stages;
  Mlp actor;   // networks after the final (base-labelling) stage
  Mlp critic;
};

namespace detail {

inline std::string stage_name(const StageSpec& st, std::size_t i) {
  if (!st.name.empty()) return st.name;
  if (st.radius > 0.0 || st.overrides.empty()) return "r=" + std::to_string(st.radius);
  return "stage" + std::to_string(i);
}

inline constexpr std::uint64_t kStageSeedStream = 0x600000000ULL;

}  // namespace detail

/// Alg. 2: train on the most relaxed labelling first with the full joint
/// update, then per tighter stage re-fit the critic with the actor frozen
/// (a quarter of the stage budget) and resume joint training.  The
/// automaton object is shared by every stage product and never rebuilt.
inline GuidedResult guided_train(const Environment& env, const Ldba& aut, const Labeling& lab,
                                 const Curriculum& cur, const TrainConfig& cfg, double zeta,
                                 BoundMode mode, const MetricsSink& sink = nullptr) {
  validate_curriculum(cur, lab, zeta);
  if (static_cast<int>(aut.alphabet.atoms.size()) != lab.num_cells())
    throw std::invalid_argument("guided: automaton alphabet size differs from the cell count");
  for (int i = 0; i < lab.num_cells(); ++i)
    if (aut.alphabet.atoms[i] != lab.cells[i].name)
      throw std::invalid_argument("guided: automaton atoms must list the labelling cells in order");

  const std::vector<long long> budgets = stage_budgets(cur, cfg.episode_number);
  GuidedResult out;
  out.stages.reserve(cur.stages.size());
  const Mlp* warm_actor = nullptr;
  const Mlp* warm_critic = nullptr;
  for (std::size_t i = 0; i < cur.stages.size(); ++i) {
    const StageSpec& st = cur.stages[i];
    const double stage_zeta = st.zeta > 0.0 ? st.zeta : zeta;
    const AugmentedProduct prod(env, aut, stage_label_fn(lab, st), stage_zeta, mode);
    TrainConfig scfg = cfg;
    scfg.stage_label = detail::stage_name(st, i);
    TrainResult res;
    if (i == 0) {
      scfg.episode_number = budgets[0];
      scfg.phase_label = "joint";
      res = train(prod, scfg, sink);
    } else {
      const long long critic_budget = budgets[i] / 4;
      TrainConfig ccfg = scfg;
      ccfg.episode_number = critic_budget;
      ccfg.actor_lr = 0.0;
      ccfg.phase_label = "critic";
      ccfg.seed = derive_seed(cfg.seed, detail::kStageSeedStream + 2 * i);
      const TrainResult cres = train(prod, ccfg, sink, warm_actor, warm_critic);
      TrainConfig jcfg = scfg;
      jcfg.episode_number = budgets[i] - critic_budget;
      jcfg.phase_label = "joint";
      jcfg.seed = derive_seed(cfg.seed, detail::kStageSeedStream + 2 * i + 1);
      res = train(prod, jcfg, sink, &cres.actor, &cres.critic);
    }
    StageResult sr;
    sr.name = scfg.stage_label;
    sr.zeta = stage_zeta;
    sr.episodes = budgets[i];
    sr.estimate = res.estimate;
    sr.actor = std::move(res.actor);
    sr.critic = std::move(res.critic);
    out.stages.push_back(std::move(sr));
    warm_actor = &out.stages.back().actor;
    warm_critic = &out.stages.back().critic;
  }
  out.actor = out.stages.back().actor;
  out.critic = out.stages.back().critic;
  return out;
}

}  // namespace specrl
