#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "specrl/builtin.hpp"
#include "specrl/env.hpp"
#include "specrl/finite.hpp"
#include "specrl/guided.hpp"
#include "specrl/labeling.hpp"
#include "specrl/ltl.hpp"
#include "specrl/product.hpp"
#include "specrl/rl.hpp"

namespace specrl {

using Json = nlohmann::json;

// ============================================================================
//  Run configuration: parsing, defaults, materialization
// ============================================================================

struct EvaluateConfig {
  long long trajectories = 10000;
  int horizon = 500;
  double epsilon = 0.0147;
  int csv_trajectories = 100;
  std::string checkpoint;  // empty = evaluate freshly initialized networks
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "run_out";
  std::string mode = "lower";
  double zeta = 0.999;

  std::string env_name;  // cartpole | boat | chain | mdp | "" (none)
  CartpoleParams cartpole;
  BoatParams boat;
  int chain_n_trunc = 10000;
  std::string mdp_path;

  std::string labeling_builtin;  // cartpole | boat | "" (custom or none)
  bool has_labeling = false;
  std::vector<std::string> lab_atoms;
  int lab_dim = 0;
  std::vector<LabelingCell> lab_cells;

  std::string formula_text;
  std::string automaton_builtin;
  std::string automaton_path;

  TrainConfig train;

  bool has_curriculum = false;
  std::string curriculum_builtin;
  std::vector<double> curriculum_radii;
  struct StageConfig {
    std::string name;
    double radius = 0.0;
    double zeta = 0.0;
    long long episodes = 0;
    std::vector<std::pair<std::string, std::vector<Box>>> overrides;  // cell name -> boxes
  };
  std::vector<StageConfig> curriculum_stages;

  EvaluateConfig evaluate;

  Json effective;  // the normalized, defaults-filled configuration
};

// ----------------------------------------------------------------------------
//  Strict JSON access
// ----------------------------------------------------------------------------

namespace cfgdetail {

inline std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline void require_object(const Json& j, const std::string& path) {
  if (!j.is_object())
    throw std::invalid_argument("config: '" + path + "' must be an object");
}

inline void reject_unknown(const Json& obj, const std::string& path,
                           std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok)
      throw std::invalid_argument("config: unknown key '" + join_path(path, item.key()) + "'");
  }
}

inline double get_double(const Json& obj, const char* key, double dflt, const std::string& path) {
  if (!obj.contains(key)) return dflt;
  const Json& v = obj.at(key);
  if (!v.is_number())
    throw std::invalid_argument("config: '" + join_path(path, key) + "' must be a number");
  return v.get<double>();
}

inline long long get_integer(const Json& obj, const char* key, long long dflt,
                             const std::string& path) {
  if (!obj.contains(key)) return dflt;
  const Json& v = obj.at(key);
  if (!v.is_number_integer())
    throw std::invalid_argument("config: '" + join_path(path, key) + "' must be an integer");
  return v.get<long long>();
}

inline bool get_bool(const Json& obj, const char* key, bool dflt, const std::string& path) {
  if (!obj.contains(key)) return dflt;
  const Json& v = obj.at(key);
  if (!v.is_boolean())
    throw std::invalid_argument("config: '" + join_path(path, key) + "' must be a boolean");
  return v.get<bool>();
}

inline std::string get_string(const Json& obj, const char* key, const std::string& dflt,
                              const std::string& path) {
  if (!obj.contains(key)) return dflt;
  const Json& v = obj.at(key);
  if (!v.is_string())
    throw std::invalid_argument("config: '" + join_path(path, key) + "' must be a string");
  return v.get<std::string>();
}

inline std::vector<int> get_int_array(const Json& obj, const char* key,
                                      const std::vector<int>& dflt, const std::string& path) {
  if (!obj.contains(key)) return dflt;
  const Json& v = obj.at(key);
  if (!v.is_array())
    throw std::invalid_argument("config: '" + join_path(path, key) + "' must be an array");
  std::vector<int> out;
  for (const auto& e : v) {
    if (!e.is_number_integer())
      throw std::invalid_argument("config: '" + join_path(path, key) +
                                  "' must contain only integers");
    out.push_back(e.get<int>());
  }
  return out;
}

/// Box coordinates admit "inf" / "-inf" strings since JSON has no infinity.
inline double parse_extended_number(const Json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf" || s == "+inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  throw std::invalid_argument("config: '" + path + "' must be a number or \"inf\"/\"-inf\"");
}

inline Json extended_number_to_json(double v) {
  if (v == kInf) return Json("inf");
  if (v == -kInf) return Json("-inf");
  return Json(v);
}

inline Box parse_box(const Json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"lo", "hi"});
  if (!j.contains("lo") || !j.contains("hi") || !j.at("lo").is_array() || !j.at("hi").is_array())
    throw std::invalid_argument("config: '" + path + "' needs 'lo' and 'hi' arrays");
  std::vector<double> lo, hi;
  for (std::size_t i = 0; i < j.at("lo").size(); ++i)
    lo.push_back(parse_extended_number(j.at("lo")[i], path + ".lo"));
  for (std::size_t i = 0; i < j.at("hi").size(); ++i)
    hi.push_back(parse_extended_number(j.at("hi")[i], path + ".hi"));
  try {
    return Box{std::move(lo), std::move(hi)};
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("config: '" + path + "': " + e.what());
  }
}

inline std::vector<Box> parse_boxes(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty())
    throw std::invalid_argument("config: '" + path + "' must be a nonempty array of boxes");
  std::vector<Box> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(parse_box(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

inline Json boxes_to_json(const std::vector<Box>& boxes) {
  Json arr = Json::array();
  for (const auto& b : boxes) {
    Json lo = Json::array(), hi = Json::array();
    for (double v : b.lo) lo.push_back(extended_number_to_json(v));
    for (double v : b.hi) hi.push_back(extended_number_to_json(v));
    arr.push_back(Json{{"lo", lo}, {"hi", hi}});
  }
  return arr;
}

}  // namespace cfgdetail

// ----------------------------------------------------------------------------
//  Parsing
// ----------------------------------------------------------------------------

inline RunConfig parse_run_config(const Json& root) {
  using namespace cfgdetail;
  require_object(root, "(root)");
  reject_unknown(root, "", {"seed", "output_dir", "environment", "labeling", "formula",
                            "automaton", "train", "curriculum", "evaluate"});
  RunConfig cfg;
  {
    const long long seed = get_integer(root, "seed", 1, "");
    if (seed < 0) throw std::invalid_argument("config: 'seed' must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(seed);
  }
  cfg.output_dir = get_string(root, "output_dir", "run_out", "");

  if (root.contains("environment")) {
    const Json& e = root.at("environment");
    require_object(e, "environment");
    reject_unknown(e, "environment", {"name", "params"});
    cfg.env_name = get_string(e, "name", "", "environment");
    Json params = e.contains("params") ? e.at("params") : Json::object();
    require_object(params, "environment.params");
    const std::string ppath = "environment.params";
    if (cfg.env_name == "cartpole") {
      reject_unknown(params, ppath,
                     {"cart_mass", "pole_mass", "pole_length", "gravity", "delta", "force_max",
                      "noise_sigma", "literal_angle_update"});
      CartpoleParams& P = cfg.cartpole;
      P.cart_mass = get_double(params, "cart_mass", P.cart_mass, ppath);
      P.pole_mass = get_double(params, "pole_mass", P.pole_mass, ppath);
      P.pole_length = get_double(params, "pole_length", P.pole_length, ppath);
      P.gravity = get_double(params, "gravity", P.gravity, ppath);
      P.delta = get_double(params, "delta", P.delta, ppath);
      P.force_max = get_double(params, "force_max", P.force_max, ppath);
      P.noise_sigma = get_double(params, "noise_sigma", P.noise_sigma, ppath);
      P.literal_angle_update =
          get_bool(params, "literal_angle_update", P.literal_angle_update, ppath);
    } else if (cfg.env_name == "boat") {
      reject_unknown(params, ppath, {"current_force", "inertia", "v_max", "v_desired", "gain",
                                     "noise_sigma", "y0_min", "y0_max"});
      BoatParams& P = cfg.boat;
      P.current_force = get_double(params, "current_force", P.current_force, ppath);
      P.inertia = get_double(params, "inertia", P.inertia, ppath);
      P.v_max = get_double(params, "v_max", P.v_max, ppath);
      P.v_desired = get_double(params, "v_desired", P.v_desired, ppath);
      P.gain = get_double(params, "gain", P.gain, ppath);
      P.noise_sigma = get_double(params, "noise_sigma", P.noise_sigma, ppath);
      P.y0_min = get_double(params, "y0_min", P.y0_min, ppath);
      P.y0_max = get_double(params, "y0_max", P.y0_max, ppath);
    } else if (cfg.env_name == "chain") {
      reject_unknown(params, ppath, {"n_trunc"});
      cfg.chain_n_trunc = static_cast<int>(get_integer(params, "n_trunc", 10000, ppath));
    } else if (cfg.env_name == "mdp") {
      reject_unknown(params, ppath, {"path"});
      cfg.mdp_path = get_string(params, "path", "", ppath);
      if (cfg.mdp_path.empty())
        throw std::invalid_argument("config: environment 'mdp' needs params.path");
    } else {
      throw std::invalid_argument("config: environment.name must be one of "
                                  "cartpole, boat, chain, mdp");
    }
  }

  if (root.contains("labeling")) {
    const Json& l = root.at("labeling");
    require_object(l, "labeling");
    cfg.has_labeling = true;
    if (l.contains("builtin")) {
      reject_unknown(l, "labeling", {"builtin"});
      cfg.labeling_builtin = get_string(l, "builtin", "", "labeling");
      if (cfg.labeling_builtin != "cartpole" && cfg.labeling_builtin != "boat")
        throw std::invalid_argument("config: labeling.builtin must be 'cartpole' or 'boat'");
    } else {
      reject_unknown(l, "labeling", {"atoms", "dim", "cells"});
      if (!l.contains("atoms") || !l.at("atoms").is_array())
        throw std::invalid_argument("config: labeling.atoms must be an array of names");
      for (const auto& a : l.at("atoms")) {
        if (!a.is_string())
          throw std::invalid_argument("config: labeling.atoms must contain strings");
        cfg.lab_atoms.push_back(a.get<std::string>());
      }
      cfg.lab_dim = static_cast<int>(get_integer(l, "dim", 0, "labeling"));
      if (!l.contains("cells") || !l.at("cells").is_array() || l.at("cells").empty())
        throw std::invalid_argument("config: labeling.cells must be a nonempty array");
      int ci = 0;
      for (const auto& c : l.at("cells")) {
        const std::string cpath = "labeling.cells[" + std::to_string(ci++) + "]";
        require_object(c, cpath);
        reject_unknown(c, cpath, {"name", "letter", "boxes"});
        LabelingCell cell;
        cell.name = get_string(c, "name", "", cpath);
        if (cell.name.empty())
          throw std::invalid_argument("config: '" + cpath + "' needs a name");
        if (!c.contains("letter") || !c.at("letter").is_array())
          throw std::invalid_argument("config: '" + cpath + ".letter' must list base atoms");
        cell.base_letter = 0;
        for (const auto& a : c.at("letter")) {
          if (!a.is_string())
            throw std::invalid_argument("config: '" + cpath + ".letter' must contain strings");
          const std::string name = a.get<std::string>();
          int idx = -1;
          for (std::size_t i = 0; i < cfg.lab_atoms.size(); ++i)
            if (cfg.lab_atoms[i] == name) idx = static_cast<int>(i);
          if (idx < 0)
            throw std::invalid_argument("config: '" + cpath + ".letter' uses undeclared atom '" +
                                        name + "'");
          cell.base_letter |= LetterMask{1} << idx;
        }
        if (!c.contains("boxes"))
          throw std::invalid_argument("config: '" + cpath + "' needs boxes");
        cell.boxes = parse_boxes(c.at("boxes"), cpath + ".boxes");
        cfg.lab_cells.push_back(std::move(cell));
      }
    }
  }

  cfg.formula_text = get_string(root, "formula", "", "");

  if (root.contains("automaton")) {
    const Json& a = root.at("automaton");
    require_object(a, "automaton");
    reject_unknown(a, "automaton", {"builtin", "path"});
    cfg.automaton_builtin = get_string(a, "builtin", "", "automaton");
    cfg.automaton_path = get_string(a, "path", "", "automaton");
    if (cfg.automaton_builtin.empty() == cfg.automaton_path.empty())
      throw std::invalid_argument("config: automaton needs exactly one of 'builtin' or 'path'");
  }

  {
    Json t = root.contains("train") ? root.at("train") : Json::object();
    require_object(t, "train");
    reject_unknown(t, "train",
                   {"zeta", "mode", "episode_number", "horizon", "actor_lr", "critic_lr",
                    "batch_size", "entropy_coef", "invalid_action_mode", "invalid_penalty",
                    "actor_hidden", "critic_hidden", "workers", "shortcut_absorbing",
                    "estimate_samples"});
    cfg.zeta = get_double(t, "zeta", 0.999, "train");
    if (!(cfg.zeta > 0.0 && cfg.zeta < 1.0))
      throw std::invalid_argument("config: train.zeta must be in (0,1)");
    cfg.mode = get_string(t, "mode", "lower", "train");
    bound_mode_from_string(cfg.mode);  // validates
    TrainConfig& tc = cfg.train;
    tc.episode_number = get_integer(t, "episode_number", tc.episode_number, "train");
    tc.horizon = static_cast<int>(get_integer(t, "horizon", tc.horizon, "train"));
    tc.actor_lr = get_double(t, "actor_lr", tc.actor_lr, "train");
    tc.critic_lr = get_double(t, "critic_lr", tc.critic_lr, "train");
    tc.batch_size = static_cast<int>(get_integer(t, "batch_size", tc.batch_size, "train"));
    tc.entropy_coef = get_double(t, "entropy_coef", tc.entropy_coef, "train");
    tc.invalid_action_mode =
        get_string(t, "invalid_action_mode", tc.invalid_action_mode, "train");
    tc.invalid_penalty = get_double(t, "invalid_penalty", tc.invalid_penalty, "train");
    tc.actor_hidden = get_int_array(t, "actor_hidden", tc.actor_hidden, "train");
    tc.critic_hidden = get_int_array(t, "critic_hidden", tc.critic_hidden, "train");
    tc.workers = static_cast<int>(get_integer(t, "workers", tc.workers, "train"));
    tc.shortcut_absorbing = get_bool(t, "shortcut_absorbing", tc.shortcut_absorbing, "train");
    tc.estimate_samples = get_integer(t, "estimate_samples", tc.estimate_samples, "train");
    tc.seed = cfg.seed;
    tc.validate();
  }

  if (root.contains("curriculum")) {
    const Json& c = root.at("curriculum");
    require_object(c, "curriculum");
    cfg.has_curriculum = true;
    const int kinds = (c.contains("builtin") ? 1 : 0) + (c.contains("radii") ? 1 : 0) +
                      (c.contains("stages") ? 1 : 0);
    if (kinds != 1)
      throw std::invalid_argument(
          "config: curriculum needs exactly one of 'builtin', 'radii', 'stages'");
    if (c.contains("builtin")) {
      reject_unknown(c, "curriculum", {"builtin"});
      cfg.curriculum_builtin = get_string(c, "builtin", "", "curriculum");
      if (cfg.curriculum_builtin != "cartpole" && cfg.curriculum_builtin != "boat")
        throw std::invalid_argument("config: curriculum.builtin must be 'cartpole' or 'boat'");
    } else if (c.contains("radii")) {
      reject_unknown(c, "curriculum", {"radii"});
      if (!c.at("radii").is_array() || c.at("radii").empty())
        throw std::invalid_argument("config: curriculum.radii must be a nonempty array");
      for (const auto& r : c.at("radii")) {
        if (!r.is_number())
          throw std::invalid_argument("config: curriculum.radii must contain numbers");
        cfg.curriculum_radii.push_back(r.get<double>());
      }
    } else {
      reject_unknown(c, "curriculum", {"stages"});
      if (!c.at("stages").is_array() || c.at("stages").empty())
        throw std::invalid_argument("config: curriculum.stages must be a nonempty array");
      int si = 0;
      for (const auto& s : c.at("stages")) {
        const std::string spath = "curriculum.stages[" + std::to_string(si++) + "]";
        require_object(s, spath);
        reject_unknown(s, spath, {"name", "radius", "zeta", "episodes", "overrides"});
        RunConfig::StageConfig st;
        st.name = get_string(s, "name", "", spath);
        st.radius = get_double(s, "radius", 0.0, spath);
        st.zeta = get_double(s, "zeta", 0.0, spath);
        st.episodes = get_integer(s, "episodes", 0, spath);
        if (s.contains("overrides")) {
          if (!s.at("overrides").is_array())
            throw std::invalid_argument("config: '" + spath + ".overrides' must be an array");
          int oi = 0;
          for (const auto& o : s.at("overrides")) {
            const std::string opath = spath + ".overrides[" + std::to_string(oi++) + "]";
            require_object(o, opath);
            reject_unknown(o, opath, {"cell", "boxes"});
            const std::string cell = get_string(o, "cell", "", opath);
            if (cell.empty())
              throw std::invalid_argument("config: '" + opath + "' needs a cell name");
            if (!o.contains("boxes"))
              throw std::invalid_argument("config: '" + opath + "' needs boxes");
            st.overrides.emplace_back(cell, parse_boxes(o.at("boxes"), opath + ".boxes"));
          }
        }
        cfg.curriculum_stages.push_back(std::move(st));
      }
    }
  }

  {
    Json e = root.contains("evaluate") ? root.at("evaluate") : Json::object();
    require_object(e, "evaluate");
    reject_unknown(e, "evaluate",
                   {"trajectories", "horizon", "epsilon", "csv_trajectories", "checkpoint"});
    EvaluateConfig& ev = cfg.evaluate;
    ev.trajectories = get_integer(e, "trajectories", ev.trajectories, "evaluate");
    ev.horizon = static_cast<int>(get_integer(e, "horizon", ev.horizon, "evaluate"));
    ev.epsilon = get_double(e, "epsilon", ev.epsilon, "evaluate");
    ev.csv_trajectories =
        static_cast<int>(get_integer(e, "csv_trajectories", ev.csv_trajectories, "evaluate"));
    ev.checkpoint = get_string(e, "checkpoint", ev.checkpoint, "evaluate");
    if (ev.trajectories < 1)
      throw std::invalid_argument("config: evaluate.trajectories must be >= 1");
    if (ev.horizon < 0) throw std::invalid_argument("config: evaluate.horizon must be >= 0");
    if (ev.epsilon < 0) throw std::invalid_argument("config: evaluate.epsilon must be >= 0");
    if (ev.csv_trajectories < 0)
      throw std::invalid_argument("config: evaluate.csv_trajectories must be >= 0");
  }

  // normalized effective configuration (defaults filled in)
  {
    using cfgdetail::boxes_to_json;
    Json eff;
    eff["seed"] = cfg.seed;
    eff["output_dir"] = cfg.output_dir;
    if (!cfg.env_name.empty()) {
      Json params;
      if (cfg.env_name == "cartpole") {
        const CartpoleParams& P = cfg.cartpole;
        params = Json{{"cart_mass", P.cart_mass},       {"pole_mass", P.pole_mass},
                      {"pole_length", P.pole_length},   {"gravity", P.gravity},
                      {"delta", P.delta},               {"force_max", P.force_max},
                      {"noise_sigma", P.noise_sigma},
                      {"literal_angle_update", P.literal_angle_update}};
      } else if (cfg.env_name == "boat") {
        const BoatParams& P = cfg.boat;
        params = Json{{"current_force", P.current_force}, {"inertia", P.inertia},
                      {"v_max", P.v_max},                 {"v_desired", P.v_desired},
                      {"gain", P.gain},                   {"noise_sigma", P.noise_sigma},
                      {"y0_min", P.y0_min},               {"y0_max", P.y0_max}};
      } else if (cfg.env_name == "chain") {
        params = Json{{"n_trunc", cfg.chain_n_trunc}};
      } else {
        params = Json{{"path", cfg.mdp_path}};
      }
      eff["environment"] = Json{{"name", cfg.env_name}, {"params", params}};
    }
    if (cfg.has_labeling) {
      if (!cfg.labeling_builtin.empty()) {
        eff["labeling"] = Json{{"builtin", cfg.labeling_builtin}};
      } else {
        Json cells = Json::array();
        for (const auto& c : cfg.lab_cells) {
          Json letter = Json::array();
          for (std::size_t i = 0; i < cfg.lab_atoms.size(); ++i)
            if ((c.base_letter >> i) & 1u) letter.push_back(cfg.lab_atoms[i]);
          cells.push_back(
              Json{{"name", c.name}, {"letter", letter}, {"boxes", boxes_to_json(c.boxes)}});
        }
        eff["labeling"] =
            Json{{"atoms", cfg.lab_atoms}, {"dim", cfg.lab_dim}, {"cells", cells}};
      }
    }
    if (!cfg.formula_text.empty()) eff["formula"] = cfg.formula_text;
    if (!cfg.automaton_builtin.empty())
      eff["automaton"] = Json{{"builtin", cfg.automaton_builtin}};
    else if (!cfg.automaton_path.empty())
      eff["automaton"] = Json{{"path", cfg.automaton_path}};
    eff["train"] = Json{{"zeta", cfg.zeta},
                        {"mode", cfg.mode},
                        {"episode_number", cfg.train.episode_number},
                        {"horizon", cfg.train.horizon},
                        {"actor_lr", cfg.train.actor_lr},
                        {"critic_lr", cfg.train.critic_lr},
                        {"batch_size", cfg.train.batch_size},
                        {"entropy_coef", cfg.train.entropy_coef},
                        {"invalid_action_mode", cfg.train.invalid_action_mode},
                        {"invalid_penalty", cfg.train.invalid_penalty},
                        {"actor_hidden", cfg.train.actor_hidden},
                        {"critic_hidden", cfg.train.critic_hidden},
                        {"workers", cfg.train.workers},
                        {"shortcut_absorbing", cfg.train.shortcut_absorbing},
                        {"estimate_samples", cfg.train.estimate_samples}};
    if (cfg.has_curriculum) {
      if (!cfg.curriculum_builtin.empty()) {
        eff["curriculum"] = Json{{"builtin", cfg.curriculum_builtin}};
      } else if (!cfg.curriculum_radii.empty()) {
        eff["curriculum"] = Json{{"radii", cfg.curriculum_radii}};
      } else {
        Json stages = Json::array();
        for (const auto& st : cfg.curriculum_stages) {
          Json s;
          if (!st.name.empty()) s["name"] = st.name;
          if (st.radius != 0.0) s["radius"] = st.radius;
          if (st.zeta != 0.0) s["zeta"] = st.zeta;
          if (st.episodes != 0) s["episodes"] = st.episodes;
          if (!st.overrides.empty()) {
            Json ovs = Json::array();
            for (const auto& [cell, boxes] : st.overrides)
              ovs.push_back(Json{{"cell", cell}, {"boxes", boxes_to_json(boxes)}});
            s["overrides"] = ovs;
          }
          if (s.empty()) s = Json::object();
          stages.push_back(s);
        }
        eff["curriculum"] = Json{{"stages", stages}};
      }
    }
    eff["evaluate"] = Json{{"trajectories", cfg.evaluate.trajectories},
                           {"horizon", cfg.evaluate.horizon},
                           {"epsilon", cfg.evaluate.epsilon},
                           {"csv_trajectories", cfg.evaluate.csv_trajectories}};
    if (!cfg.evaluate.checkpoint.empty())
      eff["evaluate"]["checkpoint"] = cfg.evaluate.checkpoint;
    cfg.effective = std::move(eff);
  }
  return cfg;
}

/// Parse a config file (JSON, // comments allowed).
inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  Json root;
  try {
    root = Json::parse(in, nullptr, true, true);
  } catch (const Json::exception& e) {
    throw std::invalid_argument("config: " + path + ": " + e.what());
  }
  return parse_run_config(root);
}

// ----------------------------------------------------------------------------
//  Materialization
// ----------------------------------------------------------------------------

/// Everything a command needs, with owning storage: the environment and
/// label closures hold references into `mdp`/`labeling`, which live here.
/// Movable (the pointees keep their addresses); not copyable.
struct RunSetup {
  RunConfig cfg;
  std::unique_ptr<FiniteMdp> mdp;
  std::unique_ptr<Labeling> labeling;
  std::unique_ptr<Environment> env;
  std::unique_ptr<Ldba> automaton;
  LabelFn label;            // letters consumed by the automaton
  Alphabet check_alphabet;  // letters the formula is checked on
  LabelFn check_label;
  FormulaPtr formula;        // as written
  FormulaPtr formula_pnf;    // positive normal form
  FormulaPtr formula_sigma;  // reinterpreted over the cell alphabet
  Curriculum curriculum;
  BoundMode mode = BoundMode::LowerBound;
};

inline RunSetup materialize(RunConfig cfg) {
  RunSetup s;
  s.mode = bound_mode_from_string(cfg.mode);

  if (cfg.env_name == "cartpole") {
    s.env = std::make_unique<Environment>(make_cartpole(cfg.cartpole));
  } else if (cfg.env_name == "boat") {
    s.env = std::make_unique<Environment>(make_boat(cfg.boat));
  } else if (cfg.env_name == "chain") {
    s.mdp = std::make_unique<FiniteMdp>(chain_mdp(cfg.chain_n_trunc));
    s.env = std::make_unique<Environment>(make_finite_env(*s.mdp));
  } else if (cfg.env_name == "mdp") {
    s.mdp = std::make_unique<FiniteMdp>(load_mdp_file(cfg.mdp_path));
    s.env = std::make_unique<Environment>(make_finite_env(*s.mdp));
  }

  if (cfg.has_labeling) {
    if (cfg.labeling_builtin == "cartpole") {
      s.labeling = std::make_unique<Labeling>(cartpole_labeling());
    } else if (cfg.labeling_builtin == "boat") {
      s.labeling = std::make_unique<Labeling>(boat_labeling());
    } else {
      s.labeling =
          std::make_unique<Labeling>(cfg.lab_atoms, cfg.lab_dim, cfg.lab_cells);
    }
    if (s.env && s.env->state_dim != s.labeling->dim)
      throw std::invalid_argument("config: labeling dimension " +
                                  std::to_string(s.labeling->dim) +
                                  " does not match the environment state dimension " +
                                  std::to_string(s.env->state_dim));
    const Labeling* lab = s.labeling.get();
    s.label = make_exact_label_fn(*lab);
    s.check_alphabet = lab->base_alphabet();
    s.check_label = [lab](const std::vector<double>& x) {
      return lab->cells[lab->cell_of(x)].base_letter;
    };
  } else if (s.mdp) {
    const FiniteMdp* m = s.mdp.get();
    if (m->alphabet.num_letters() > 0) {
      s.label = [m](const std::vector<double>& x) {
        const int idx = static_cast<int>(x[0]);
        const int li = m->state_letter[idx];
        if (li < 0) throw std::runtime_error("mdp state " + std::to_string(idx) + " is unlabelled");
        return m->alphabet.letters[li];
      };
      s.check_alphabet = m->alphabet;
      s.check_label = s.label;
    }
  }

  if (!cfg.automaton_builtin.empty()) {
    if (!s.labeling)
      throw std::invalid_argument("config: builtin automata need a labeling");
    s.automaton =
        std::make_unique<Ldba>(builtin_automaton(cfg.automaton_builtin, *s.labeling));
  } else if (!cfg.automaton_path.empty()) {
    s.automaton = std::make_unique<Ldba>(load_automaton_file(cfg.automaton_path));
  }
  if (s.automaton && s.labeling) {
    if (static_cast<int>(s.automaton->alphabet.atoms.size()) != s.labeling->num_cells())
      throw std::invalid_argument(
          "config: automaton alphabet size differs from the labeling cell count");
    for (int i = 0; i < s.labeling->num_cells(); ++i)
      if (s.automaton->alphabet.atoms[i] != s.labeling->cells[i].name)
        throw std::invalid_argument(
            "config: automaton atoms must list the labeling cells in order");
  }
  if (s.automaton && !s.labeling && s.mdp) {
    if (s.automaton->alphabet.atoms != s.mdp->alphabet.atoms)
      throw std::invalid_argument("config: automaton atoms differ from the MDP atoms");
  }

  if (!cfg.formula_text.empty()) {
    std::set<std::string> allowed;
    if (s.labeling)
      allowed.insert(s.labeling->base_atoms.begin(), s.labeling->base_atoms.end());
    else if (s.mdp && s.mdp->alphabet.num_letters() > 0)
      allowed.insert(s.mdp->alphabet.atoms.begin(), s.mdp->alphabet.atoms.end());
    s.formula = allowed.empty() ? parse_ltl(cfg.formula_text)
                                : parse_ltl(cfg.formula_text, allowed);
    s.formula_pnf = to_pnf(s.formula);
    if (s.labeling)
      s.formula_sigma = interpret_over_alphabet(s.formula_pnf, s.labeling->base_alphabet(),
                                                s.labeling->sigma_atoms());
  }

  if (cfg.has_curriculum) {
    if (!s.labeling)
      throw std::invalid_argument("config: a curriculum needs a labeling");
    if (!cfg.curriculum_builtin.empty()) {
      s.curriculum = cfg.curriculum_builtin == "cartpole" ? cartpole_curriculum(*s.labeling)
                                                          : boat_curriculum(*s.labeling);
    } else if (!cfg.curriculum_radii.empty()) {
      for (double r : cfg.curriculum_radii) {
        StageSpec st;
        st.radius = r;
        s.curriculum.stages.push_back(st);
      }
    } else {
      for (const auto& sc : cfg.curriculum_stages) {
        StageSpec st;
        st.name = sc.name;
        st.radius = sc.radius;
        st.zeta = sc.zeta;
        st.episodes = sc.episodes;
        for (const auto& [cell, boxes] : sc.overrides) {
          const int idx = s.labeling->cell_index(cell);
          if (idx < 0)
            throw std::invalid_argument("config: curriculum override names unknown cell '" +
                                        cell + "'");
          st.overrides.push_back({idx, boxes});
        }
        s.curriculum.stages.push_back(std::move(st));
      }
    }
    validate_curriculum(s.curriculum, *s.labeling, cfg.zeta);
  }

  s.cfg = std::move(cfg);
  return s;
}

}  // namespace specrl
