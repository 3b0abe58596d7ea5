#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "specrl/mlp.hpp"
#include "specrl/product.hpp"

namespace specrl {

// ============================================================================
//  Advantage actor-critic on the augmented product
// ============================================================================

struct TrainConfig {
  long long episode_number = 10000;
  int horizon = 500;  // episode length cap N
  double actor_lr = 8e-4;
  double critic_lr = 8e-4;
  int batch_size = 16;
  double entropy_coef = 0.01;
  std::uint64_t seed = 1;
  std::string invalid_action_mode = "mask";  // "mask" or "penalize"
  double invalid_penalty = 0.1;
  std::vector<int> actor_hidden = {7, 7};
  std::vector<int> critic_hidden = {7};
  int workers = 1;
  bool shortcut_absorbing = true;
  long long estimate_samples = 2000;
  std::string stage_label = "0";      // stamped into metrics rows
  std::string phase_label = "joint";  // stamped into metrics rows

  void validate() const {
    if (episode_number < 0) throw std::invalid_argument("train: episode_number must be >= 0");
    if (horizon < 1) throw std::invalid_argument("train: horizon must be >= 1");
    if (actor_lr < 0 || critic_lr < 0)
      throw std::invalid_argument("train: learning rates must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (entropy_coef < 0) throw std::invalid_argument("train: entropy_coef must be >= 0");
    if (invalid_action_mode != "mask" && invalid_action_mode != "penalize")
      throw std::invalid_argument("train: invalid_action_mode must be 'mask' or 'penalize'");
    if (invalid_penalty < 0) throw std::invalid_argument("train: invalid_penalty must be >= 0");
    if (workers < 1) throw std::invalid_argument("train: workers must be >= 1");
    if (estimate_samples < 1) throw std::invalid_argument("train: estimate_samples must be >= 1");
  }
};

struct EpisodeStep {
  std::vector<double> x;    // encoded product state
  int q = 0;                // automaton component (|Q| = sink)
  int action = 0;           // product action index
  std::uint64_t mask = 0;   // actions the sampler could choose (bit per action)
  bool invalid = false;     // penalize mode only: action rejected, state frozen
};

struct EpisodeRecord {
  std::vector<EpisodeStep> steps;
  bool reached_phi = false;
  double ret = 0.0;  // G in {0,1}, before any penalty shaping
};

// ----------------------------------------------------------------------------
//  State encoding and action sampling
// ----------------------------------------------------------------------------

inline int encode_dim(const AugmentedProduct& prod) {
  return prod.env->state_dim + prod.aut->num_states;
}

/// Policy-network input: per-dimension affine scaling of the continuous
/// state to [-1,1] (clamped), then a one-hot block for the automaton state.
/// The rejecting sink encodes as an all-zero block.
inline std::vector<double> encode_product_state(const AugmentedProduct& prod,
                                                const ProductState& p) {
  const Environment& env = *prod.env;
  std::vector<double> x(encode_dim(prod), 0.0);
  for (int d = 0; d < env.state_dim; ++d) {
    const double lo = env.norm_lo[d], hi = env.norm_hi[d];
    x[d] = std::clamp(2.0 * (p.s[d] - lo) / (hi - lo) - 1.0, -1.0, 1.0);
  }
  if (p.q < prod.aut->num_states) x[env.state_dim + p.q] = 1.0;
  return x;
}

/// Bitmask of the actions valid at p; with masked=false, all product actions.
inline std::uint64_t action_mask(const AugmentedProduct& prod, const ProductState& p,
                                 bool masked) {
  const int n = prod.num_actions();
  if (n > 64) throw std::invalid_argument("rl: more than 64 product actions");
  if (!masked) return n == 64 ? ~0ull : ((1ull << n) - 1ull);
  std::uint64_t m = 0;
  for (int a : valid_product_inputs(prod, p)) m |= 1ull << a;
  return m;
}

/// Softmax restricted to mask bits; masked entries come out exactly 0.
inline std::vector<double> masked_softmax(const std::vector<double>& z, std::uint64_t mask) {
  const int n = static_cast<int>(z.size());
  if (n > 64) throw std::invalid_argument("masked_softmax: more than 64 logits");
  double mx = 0.0;
  bool any = false;
  for (int j = 0; j < n; ++j) {
    if (!((mask >> j) & 1ull)) continue;
    mx = any ? std::max(mx, z[j]) : z[j];
    any = true;
  }
  if (!any) throw std::invalid_argument("masked_softmax: no valid action");
  std::vector<double> p(n, 0.0);
  double sum = 0.0;
  for (int j = 0; j < n; ++j) {
    if (!((mask >> j) & 1ull)) continue;
    p[j] = std::exp(z[j] - mx);
    sum += p[j];
  }
  for (int j = 0; j < n; ++j) p[j] /= sum;
  return p;
}

/// Sample an action index from the masked policy head.
inline int actor_sample(const Mlp& actor, const std::vector<double>& x, std::uint64_t mask,
                        Rng& rng) {
  const std::vector<double> probs = masked_softmax(actor.forward(x), mask);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double u = unif(rng);
  double acc = 0.0;
  int last_valid = -1;
  for (int j = 0; j < static_cast<int>(probs.size()); ++j) {
    if (!((mask >> j) & 1ull)) continue;
    acc += probs[j];
    last_valid = j;
    if (u < acc) return j;
  }
  return last_valid;  // guards rounding slack at u ~ 1
}

// ----------------------------------------------------------------------------
//  Rollouts
// ----------------------------------------------------------------------------

/// Simulate one episode of at most cfg.horizon product steps, ending early
/// when phi is reached.  With shortcut_absorbing, once the automaton
/// component can never change again the remaining steps are collapsed: an
/// accepting self-loop state draws the phi coin for all remaining steps at
/// once, silent self-loop states and the sink end the episode.  Collapsed
/// steps are not recorded.
inline EpisodeRecord rollout(const AugmentedProduct& prod, const Mlp& actor,
                             const TrainConfig& cfg, Rng& rng) {
  const bool masked = cfg.invalid_action_mode == "mask";
  const Ldba& aut = *prod.aut;
  EpisodeRecord ep;
  ProductState p = prod.initial(rng);
  for (int t = 0; t < cfg.horizon; ++t) {
    if (cfg.shortcut_absorbing) {
      if (p.q == prod.sink_state()) break;
      if (aut.absorbing_accepting(p.q)) {
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        ep.reached_phi = unif(rng) >= std::pow(prod.zeta, cfg.horizon - t);
        break;
      }
      if (aut.absorbing_silent(p.q)) break;
    }
    EpisodeStep step;
    step.x = encode_product_state(prod, p);
    step.q = p.q;
    const std::uint64_t valid = action_mask(prod, p, true);
    step.mask = masked ? valid : action_mask(prod, p, false);
    step.action = actor_sample(actor, step.x, step.mask, rng);
    if (!((valid >> step.action) & 1ull)) {
      step.invalid = true;  // freeze: the product state does not move
      ep.steps.push_back(std::move(step));
      continue;
    }
    const ProductStepResult r = product_step(prod, p, step.action, rng);
    ep.steps.push_back(std::move(step));
    p = r.next;
    if (r.reached_phi) {
      ep.reached_phi = true;
      break;
    }
  }
  ep.ret = episode_reward(prod.mode, ep.reached_phi);
  return ep;
}

// ----------------------------------------------------------------------------
//  Batched update
// ----------------------------------------------------------------------------

struct UpdateStats {
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double mean_return = 0.0;
  long long steps = 0;
};

/// Loss and gradient pass for one batch of completed episodes.  Monte-Carlo
/// returns without intra-episode discount: the advantage at every step is
/// G - V(x_t), with G shaped by the invalid-action penalty where it applies.
/// Losses are  mean[(G - V)^2]  and  mean[-A log pi(a|x) - beta H(pi)]  with
/// the advantage treated as a constant; gradients accumulate into
/// `actor_grad` / `critic_grad`, which must be zero-initialized copies of
/// the network shapes.
inline UpdateStats a2c_gradients(const Mlp& actor, const Mlp& critic,
                                 const std::vector<EpisodeRecord>& batch,
                                 const TrainConfig& cfg, Mlp& actor_grad, Mlp& critic_grad) {
  if (batch.empty()) throw std::invalid_argument("a2c_update: empty batch");
  UpdateStats st;
  for (const auto& ep : batch) {
    st.steps += static_cast<long long>(ep.steps.size());
    st.mean_return += ep.ret;
  }
  st.mean_return /= static_cast<double>(batch.size());
  if (st.steps == 0) return st;  // every episode collapsed before its first step
  const double inv_total = 1.0 / static_cast<double>(st.steps);

  Mlp::Cache cache;
  for (const auto& ep : batch) {
    for (const auto& step : ep.steps) {
      const double g = ep.ret - (step.invalid ? cfg.invalid_penalty : 0.0);

      const double v = critic.forward(step.x, &cache)[0];
      const double verr = v - g;
      st.critic_loss += verr * verr;
      critic.backward(cache, {2.0 * verr * inv_total}, critic_grad);

      const std::vector<double> z = actor.forward(step.x, &cache);
      const std::vector<double> pi = masked_softmax(z, step.mask);
      double ent = 0.0;
      for (int j = 0; j < static_cast<int>(pi.size()); ++j)
        if (pi[j] > 0.0) ent -= pi[j] * std::log(pi[j]);
      const double adv = g - v;
      st.actor_loss += -adv * std::log(pi[step.action]) - cfg.entropy_coef * ent;
      st.entropy += ent;

      std::vector<double> dz(z.size(), 0.0);
      for (int j = 0; j < static_cast<int>(z.size()); ++j) {
        if (!((step.mask >> j) & 1ull)) continue;
        const double indicator = j == step.action ? 1.0 : 0.0;
        dz[j] = (adv * (pi[j] - indicator) +
                 cfg.entropy_coef * pi[j] * (std::log(pi[j]) + ent)) *
                inv_total;
      }
      actor.backward(cache, dz, actor_grad);
    }
  }
  st.actor_loss *= inv_total;
  st.critic_loss *= inv_total;
  st.entropy *= inv_total;
  if (!std::isfinite(st.actor_loss) || !std::isfinite(st.critic_loss))
    throw std::runtime_error("a2c_update: non-finite loss, aborting the run");
  return st;
}

/// One synchronous update: gradients from the batch, one optimizer step each.
inline UpdateStats a2c_update(Mlp& actor, Mlp& critic, const std::vector<EpisodeRecord>& batch,
                              const TrainConfig& cfg, Adam& actor_opt, Adam& critic_opt) {
  Mlp actor_grad = Mlp::zeros(actor.sizes);
  Mlp critic_grad = Mlp::zeros(critic.sizes);
  const UpdateStats st = a2c_gradients(actor, critic, batch, cfg, actor_grad, critic_grad);
  if (st.steps == 0) return st;
  actor_opt.step(actor, actor_grad, cfg.actor_lr);
  critic_opt.step(critic, critic_grad, cfg.critic_lr);
  return st;
}

// ----------------------------------------------------------------------------
//  Training driver
// ----------------------------------------------------------------------------

struct MetricsRow {
  std::string stage, phase;
  long long batch = 0;
  long long episodes_done = 0;
  double mean_return = 0.0;
  double actor_loss = 0.0;
  double critic_loss = 0.0;
  double entropy = 0.0;
  double estimate = 0.0;  // critic value averaged over the batch's start states
};

using MetricsSink = std::function<void(const MetricsRow&)>;

struct TrainResult {
  Mlp actor;
  Mlp critic;
  double estimate = 0.0;  // critic value averaged over sampled initial states
  long long episodes = 0;
};

inline double critic_value(const Mlp& critic, const std::vector<double>& x) {
  return critic.forward(x)[0];
}

namespace detail {
inline constexpr std::uint64_t kInitStream = 0x10000000ULL;
inline constexpr std::uint64_t kEpisodeStream = 0x1000000000ULL;
inline constexpr std::uint64_t kEstimateStream = 0x2000000000ULL;
}  // namespace detail

/// Critic value averaged over sampled initial product states: the learned
/// probability bound (maximized phi-probability for UpperBound, complement
/// avoidance for LowerBound).
inline double initial_value_estimate(const AugmentedProduct& prod, const Mlp& critic,
                                     long long samples, std::uint64_t seed) {
  double sum = 0.0;
  for (long long i = 0; i < samples; ++i) {
    Rng rng = make_stream_rng(seed, detail::kEstimateStream + static_cast<std::uint64_t>(i));
    const ProductState p = prod.initial(rng);
    sum += critic_value(critic, encode_product_state(prod, p));
  }
  return sum / static_cast<double>(samples);
}

/// Alg. 1 driver: episode_number episodes in synchronous batches, one update
/// per batch.  Episodes are seeded individually from (seed, global index),
/// so the result is bitwise independent of the worker count.  Optional warm
/// starts reuse previously trained networks (dimensions must match).
inline TrainResult train(const AugmentedProduct& prod, const TrainConfig& cfg,
                         const MetricsSink& sink = nullptr, const Mlp* warm_actor = nullptr,
                         const Mlp* warm_critic = nullptr) {
  cfg.validate();
  const int in_dim = encode_dim(prod);
  const int n_actions = prod.num_actions();
  if (n_actions > 64) throw std::invalid_argument("train: more than 64 product actions");

  std::vector<int> actor_sizes{in_dim};
  for (int h : cfg.actor_hidden) actor_sizes.push_back(h);
  actor_sizes.push_back(n_actions);
  std::vector<int> critic_sizes{in_dim};
  for (int h : cfg.critic_hidden) critic_sizes.push_back(h);
  critic_sizes.push_back(1);

  Rng init_rng = make_stream_rng(cfg.seed, detail::kInitStream);
  TrainResult out;
  out.actor = warm_actor ? *warm_actor : Mlp::xavier(actor_sizes, init_rng);
  out.critic = warm_critic ? *warm_critic : Mlp::xavier(critic_sizes, init_rng);
  if (out.actor.in_dim() != in_dim || out.actor.out_dim() != n_actions)
    throw std::runtime_error("train: actor network shape does not match the product");
  if (out.critic.in_dim() != in_dim || out.critic.out_dim() != 1)
    throw std::runtime_error("train: critic network shape does not match the product");

  Adam actor_opt(out.actor), critic_opt(out.critic);
  long long done = 0, batch_idx = 0;
  while (done < cfg.episode_number) {
    const int b = static_cast<int>(std::min<long long>(cfg.batch_size, cfg.episode_number - done));
    std::vector<EpisodeRecord> batch(b);
    auto run_slice = [&](int wi, int stride) {
      for (int i = wi; i < b; i += stride) {
        Rng rng = make_stream_rng(cfg.seed,
                                  detail::kEpisodeStream + static_cast<std::uint64_t>(done + i));
        batch[i] = rollout(prod, out.actor, cfg, rng);
      }
    };
    const int w = std::min(cfg.workers, b);
    if (w <= 1) {
      run_slice(0, 1);
    } else {
      std::vector<std::thread> threads;
      for (int wi = 0; wi < w; ++wi) threads.emplace_back(run_slice, wi, w);
      for (auto& t : threads) t.join();
    }
    const UpdateStats st = a2c_update(out.actor, out.critic, batch, cfg, actor_opt, critic_opt);
    done += b;
    ++batch_idx;
    if (sink) {
      MetricsRow row;
      row.stage = cfg.stage_label;
      row.phase = cfg.phase_label;
      row.batch = batch_idx;
      row.episodes_done = done;
      row.mean_return = st.mean_return;
      row.actor_loss = st.actor_loss;
      row.critic_loss = st.critic_loss;
      row.entropy = st.entropy;
      double est = 0.0;
      int n_est = 0;
      for (const auto& ep : batch) {
        if (ep.steps.empty()) continue;
        est += critic_value(out.critic, ep.steps.front().x);
        ++n_est;
      }
      row.estimate = n_est > 0 ? est / n_est : 0.0;
      sink(row);
    }
  }
  out.episodes = done;
  out.estimate = initial_value_estimate(prod, out.critic, cfg.estimate_samples, cfg.seed);
  return out;
}

}  // namespace specrl
