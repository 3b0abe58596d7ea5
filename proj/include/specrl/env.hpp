#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "specrl/rng.hpp"

namespace specrl {

// ============================================================================
//  Black-box environments
//
//  A controlled Markov process exposed purely through sampling: initial
//  states, next states under a chosen input, and per-state valid inputs.
//  norm_lo/norm_hi are fixed per-dimension bounds used only for policy input
//  normalisation; they do not constrain the dynamics.
// ============================================================================

struct Environment {
  std::string name;
  int state_dim = 0;
  std::vector<std::string> input_names;
  std::vector<double> norm_lo, norm_hi;
  std::function<std::vector<double>(Rng&)> sample_initial;
  std::function<std::vector<double>(const std::vector<double>&, int, Rng&)> sample_next;
  std::function<std::vector<int>(const std::vector<double>&)> valid_inputs;  // null = all valid
  std::map<std::string, double> params;

  int num_inputs() const { return static_cast<int>(input_names.size()); }

  std::vector<int> valid_inputs_at(const std::vector<double>& s) const {
    if (valid_inputs) {
      auto v = valid_inputs(s);
      if (v.empty()) throw std::runtime_error("environment: no valid input at some state");
      return v;
    }
    std::vector<int> all(input_names.size());
    std::iota(all.begin(), all.end(), 0);
    return all;
  }
};

// ----------------------------------------------------------------------------
//  Cart-pole
//
//  State (s1, s2, s3, s4) = cart position, cart velocity, pole angle, pole
//  angular velocity; input u is a horizontal force.  Euler integration with
//  time step delta and additive Gaussian noise on every dimension.
// ----------------------------------------------------------------------------

struct CartpoleParams {
  double cart_mass = 1.0;    // M
  double pole_mass = 0.1;    // m
  double pole_length = 0.5;  // l
  double gravity = 9.8;
  double delta = 0.02;     // integration step
  double force_max = 10.0;
  double noise_sigma = 0.01;
  // Reproduces the variant that feeds the cart velocity into the angle
  // update (angle' = angle + delta * s2) instead of the angular velocity.
  bool literal_angle_update = false;
};

/// Deterministic cart-pole step (noise-free mean dynamics).
inline std::vector<double> cartpole_step_mean(const std::vector<double>& s, double u,
                                              const CartpoleParams& P) {
  if (s.size() != 4) throw std::invalid_argument("cartpole_step: state must be 4-dimensional");
  const double total_mass = P.cart_mass + P.pole_mass;
  const double sin3 = std::sin(s[2]), cos3 = std::cos(s[2]);
  const double a1 = (u + P.pole_length * s[3] * s[3] * sin3) / total_mass;
  const double a2 = (P.gravity * sin3 - cos3 * a1) /
                    (P.pole_length * (4.0 / 3.0 - P.pole_mass * cos3 * cos3 / total_mass));
  const double a3 = a1 - P.pole_length * a2 * cos3 / total_mass;
  std::vector<double> out(4);
  out[0] = s[0] + P.delta * s[1];
  out[1] = s[1] + P.delta * a3;
  out[2] = s[2] + P.delta * (P.literal_angle_update ? s[1] : s[3]);
  out[3] = s[3] + P.delta * a2;
  return out;
}

namespace detail {

inline double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a < 0) a += 2.0 * M_PI;
  return a - M_PI;
}

inline double clamp(double x, double lo, double hi) { return x < lo ? lo : (x > hi ? hi : x); }

}  // namespace detail

/// Stochastic cart-pole step: mean dynamics plus N(0, sigma^2) on every
/// dimension.  The state is kept numerically bounded (position and
/// velocities clamped, angle wrapped to [-pi, pi)) so that episodes continue
/// past a violation without overflowing.
inline std::vector<double> cartpole_step(const std::vector<double>& s, double u,
                                         const CartpoleParams& P, Rng& rng) {
  auto out = cartpole_step_mean(s, u, P);
  std::normal_distribution<double> noise(0.0, P.noise_sigma);
  for (auto& x : out) x += noise(rng);
  out[0] = detail::clamp(out[0], -10.0, 10.0);
  out[1] = detail::clamp(out[1], -100.0, 100.0);
  out[2] = detail::wrap_angle(out[2]);
  out[3] = detail::clamp(out[3], -100.0, 100.0);
  return out;
}

/// Cart-pole environment: two inputs (push left, push right), initial state
/// uniform in [-0.05, 0.05]^4.
inline Environment make_cartpole(const CartpoleParams& P = {}) {
  Environment env;
  env.name = "cartpole";
  env.state_dim = 4;
  env.input_names = {"push_left", "push_right"};
  env.norm_lo = {-1.5, -3.0, -0.3, -2.5};
  env.norm_hi = {1.5, 3.0, 0.3, 2.5};
  env.params = {{"cart_mass", P.cart_mass},   {"pole_mass", P.pole_mass},
                {"pole_length", P.pole_length}, {"gravity", P.gravity},
                {"delta", P.delta},           {"force_max", P.force_max},
                {"noise_sigma", P.noise_sigma},
                {"literal_angle_update", P.literal_angle_update ? 1.0 : 0.0}};
  env.sample_initial = [](Rng& rng) {
    std::uniform_real_distribution<double> d(-0.05, 0.05);
    return std::vector<double>{d(rng), d(rng), d(rng), d(rng)};
  };
  env.sample_next = [P](const std::vector<double>& s, int input, Rng& rng) {
    const double u = input == 0 ? -P.force_max : P.force_max;
    return cartpole_step(s, u, P, rng);
  };
  return env;
}

// ----------------------------------------------------------------------------
//  Boat driving
//
//  State (x, y, delta, Omega, v, omega) = position, boat angle, angular
//  velocity, speed, rudder angle.  The input is a commanded direction; a
//  proportional controller turns it into a rudder angle clamped to +-45
//  degrees.  A nonlinear stochastic current pushes the boat downstream.
// ----------------------------------------------------------------------------

struct BoatParams {
  double current_force = 1.25;  // f_c
  double inertia = 0.1;         // I
  double v_max = 2.5;
  double v_desired = 1.75;
  double gain = 0.9;  // p
  double noise_sigma = 0.5;
  double y0_min = 60.0, y0_max = 100.0;
};

/// Current strength at horizontal position x with disturbance eta.
inline double boat_current(double x, double eta, const BoatParams& P) {
  return P.current_force * (x / 50.0 - (x / 100.0) * (x / 100.0)) + eta;
}

/// Deterministic boat step (eta = 0); u is the commanded direction in
/// radians.  Update order: rudder, speed, angular velocity, angle, position.
inline std::vector<double> boat_step_mean(const std::vector<double>& s, double u,
                                          const BoatParams& P, double eta = 0.0) {
  if (s.size() != 6) throw std::invalid_argument("boat_step: state must be 6-dimensional");
  const double quarter_pi = M_PI / 4.0;
  std::vector<double> out(6);
  const double omega = detail::clamp(P.gain * (u - s[2]), -quarter_pi, quarter_pi);
  const double v = s[4] + P.inertia * (P.v_desired - s[4]);
  const double Omega = s[3] + (omega - s[3]) * (v / P.v_max);
  const double delta = s[2] + P.inertia * Omega;
  const double x = detail::clamp(s[0] + v * std::cos(delta), 0.0, 200.0);
  const double y = detail::clamp(s[1] - v * std::sin(delta) - boat_current(x, eta, P), 0.0, 200.0);
  out[0] = x;
  out[1] = y;
  out[2] = delta;
  out[3] = Omega;
  out[4] = v;
  out[5] = omega;
  return out;
}

inline std::vector<double> boat_step(const std::vector<double>& s, double u, const BoatParams& P,
                                     Rng& rng) {
  std::normal_distribution<double> noise(0.0, P.noise_sigma);
  return boat_step_mean(s, u, P, noise(rng));
}

/// Boat environment: 12 commanded directions (degrees from southwest to
/// north), start at the left bank with y0 uniform in [y0_min, y0_max].
inline Environment make_boat(const BoatParams& P = {}) {
  static const double kDirectionsDeg[12] = {-100, -90, -75, -60, -45, -30, -15, 0, 15, 45, 75, 90};
  Environment env;
  env.name = "boat";
  env.state_dim = 6;
  for (double d : kDirectionsDeg) {
    env.input_names.push_back("dir_" + std::to_string(static_cast<int>(d)));
  }
  env.norm_lo = {0.0, 0.0, -2.0, -1.0, 0.0, -1.0};
  env.norm_hi = {200.0, 200.0, 2.0, 1.0, 2.5, 1.0};
  env.params = {{"current_force", P.current_force}, {"inertia", P.inertia},
                {"v_max", P.v_max},                 {"v_desired", P.v_desired},
                {"gain", P.gain},                   {"noise_sigma", P.noise_sigma},
                {"y0_min", P.y0_min},               {"y0_max", P.y0_max}};
  env.sample_initial = [P](Rng& rng) {
    std::uniform_real_distribution<double> d(P.y0_min, P.y0_max);
    return std::vector<double>{0.0, d(rng), 0.0, 0.0, 0.0, 0.0};
  };
  env.sample_next = [P](const std::vector<double>& s, int input, Rng& rng) {
    const double u = kDirectionsDeg[input] * M_PI / 180.0;
    return boat_step(s, u, P, rng);
  };
  return env;
}

}  // namespace specrl
