#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "specrl/env.hpp"
#include "specrl/rng.hpp"

using namespace specrl;
using Catch::Approx;

TEST_CASE("cart-pole mean dynamics pins") {
  const CartpoleParams P;

  const auto upright = cartpole_step_mean({0.0, 0.0, 0.0, 0.0}, 10.0, P);
  CHECK(upright[0] == Approx(0.0).margin(1e-15));
  CHECK(upright[1] == Approx(0.31485587583148555).margin(1e-14));
  CHECK(upright[2] == Approx(0.0).margin(1e-15));
  CHECK(upright[3] == Approx(-0.2926829268292683).margin(1e-14));

  const auto tilted = cartpole_step_mean({0.1, -0.2, 0.05, 0.3}, -10.0, P);
  CHECK(tilted[0] == Approx(0.096).margin(1e-14));
  CHECK(tilted[1] == Approx(-0.5215860533415191).margin(1e-13));
  CHECK(tilted[2] == Approx(0.056).margin(1e-14));
  CHECK(tilted[3] == Approx(0.6079641548572852).margin(1e-13));

  CHECK_THROWS_AS(cartpole_step_mean({0.0, 0.0, 0.0}, 10.0, P), std::invalid_argument);
}

TEST_CASE("cart-pole angle update variant") {
  CartpoleParams literal;
  literal.literal_angle_update = true;
  const std::vector<double> s{0.0, 1.0, 0.0, 0.5};
  const auto standard = cartpole_step_mean(s, 0.0, CartpoleParams{});
  const auto variant = cartpole_step_mean(s, 0.0, literal);
  CHECK(standard[2] == Approx(0.02 * 0.5).margin(1e-15));  // angle follows angular velocity
  CHECK(variant[2] == Approx(0.02 * 1.0).margin(1e-15));   // variant feeds the cart velocity
  CHECK(standard[1] == Approx(variant[1]).margin(1e-15));
  CHECK(standard[3] == Approx(variant[3]).margin(1e-15));
}

TEST_CASE("cart-pole stochastic step clamps and wraps") {
  CartpoleParams P;
  P.noise_sigma = 0.0;  // deterministic: noise draws add zero
  Rng rng = make_stream_rng(7, 0);

  const auto clamped = cartpole_step({10.0, 100.0, 0.0, 0.0}, 0.0, P, rng);
  CHECK(clamped[0] == 10.0);  // position would move to 12 without the clamp

  const auto wrapped = cartpole_step({0.0, 0.0, 3.2, 0.0}, 0.0, P, rng);
  CHECK(wrapped[2] == Approx(3.2 - 2.0 * M_PI).margin(1e-12));

  // zero-noise stochastic step equals the mean dynamics
  const std::vector<double> s{0.1, -0.2, 0.05, 0.3};
  const auto mean = cartpole_step_mean(s, -10.0, P);
  const auto stoch = cartpole_step(s, -10.0, P, rng);
  for (int d = 0; d < 4; ++d) CHECK(stoch[d] == Approx(mean[d]).margin(1e-15));
}

TEST_CASE("cart-pole environment wiring") {
  const Environment env = make_cartpole();
  CHECK(env.name == "cartpole");
  CHECK(env.state_dim == 4);
  CHECK(env.num_inputs() == 2);
  CHECK(env.input_names == std::vector<std::string>{"push_left", "push_right"});
  CHECK(env.norm_lo.size() == 4);
  CHECK(env.norm_hi.size() == 4);
  CHECK(env.valid_inputs_at({0.0, 0.0, 0.0, 0.0}) == std::vector<int>{0, 1});

  Rng rng = make_stream_rng(7, 1);
  for (int i = 0; i < 200; ++i) {
    const auto s = env.sample_initial(rng);
    REQUIRE(s.size() == 4);
    for (double x : s) {
      CHECK(x >= -0.05);
      CHECK(x <= 0.05);
    }
  }

  // the two inputs push in opposite directions from rest
  Rng r1 = make_stream_rng(7, 2), r2 = make_stream_rng(7, 2);
  const auto left = env.sample_next({0.0, 0.0, 0.0, 0.0}, 0, r1);
  const auto right = env.sample_next({0.0, 0.0, 0.0, 0.0}, 1, r2);
  CHECK(left[1] < 0.0);
  CHECK(right[1] > 0.0);

  // identical seeds give identical draws
  Rng r3 = make_stream_rng(9, 3), r4 = make_stream_rng(9, 3);
  CHECK(env.sample_next({0.1, 0.0, 0.0, 0.0}, 1, r3) ==
        env.sample_next({0.1, 0.0, 0.0, 0.0}, 1, r4));
}

TEST_CASE("boat current profile") {
  const BoatParams P;
  CHECK(boat_current(0.0, 0.0, P) == Approx(0.0).margin(1e-15));
  CHECK(boat_current(100.0, 0.0, P) == Approx(1.25).margin(1e-15));
  CHECK(boat_current(50.0, 0.0, P) == Approx(0.9375).margin(1e-15));
  CHECK(boat_current(200.0, 0.0, P) == Approx(0.0).margin(1e-12));
  CHECK(boat_current(100.0, 0.3, P) == Approx(1.55).margin(1e-15));
}

TEST_CASE("boat mean dynamics pins") {
  const BoatParams P;

  // straight-ahead command from rest: every trig term is exact
  const auto straight = boat_step_mean({0.0, 80.0, 0.0, 0.0, 0.0, 0.0}, 0.0, P);
  CHECK(straight[0] == Approx(0.175).margin(1e-15));
  CHECK(straight[1] == Approx(79.995628828125).margin(1e-12));
  CHECK(straight[2] == Approx(0.0).margin(1e-15));
  CHECK(straight[3] == Approx(0.0).margin(1e-15));
  CHECK(straight[4] == Approx(0.175).margin(1e-15));
  CHECK(straight[5] == Approx(0.0).margin(1e-15));

  // hard rudder saturates at 45 degrees; update order: rudder, speed,
  // angular velocity, angle
  const double hard = -100.0 * M_PI / 180.0;
  const auto turn = boat_step_mean({0.0, 80.0, 0.0, 0.0, 0.0, 0.0}, hard, P);
  const double quarter_pi = M_PI / 4.0;
  CHECK(turn[5] == Approx(-quarter_pi).margin(1e-15));
  CHECK(turn[4] == Approx(0.175).margin(1e-15));
  CHECK(turn[3] == Approx(-quarter_pi * (0.175 / 2.5)).margin(1e-15));
  CHECK(turn[2] == Approx(0.1 * turn[3]).margin(1e-15));

  // position clamps at the banks
  const auto docked = boat_step_mean({199.9, 100.0, 0.0, 0.0, 2.5, 0.0}, 0.0, P);
  CHECK(docked[0] == 200.0);
  CHECK(docked[4] == Approx(2.425).margin(1e-15));

  CHECK_THROWS_AS(boat_step_mean({0.0, 80.0, 0.0}, 0.0, P), std::invalid_argument);
}

TEST_CASE("boat stochastic step reduces to the mean without noise") {
  BoatParams P;
  P.noise_sigma = 0.0;
  Rng rng = make_stream_rng(11, 0);
  const std::vector<double> s{20.0, 90.0, 0.1, 0.05, 1.0, 0.2};
  const auto mean = boat_step_mean(s, 0.3, P);
  const auto stoch = boat_step(s, 0.3, P, rng);
  for (int d = 0; d < 6; ++d) CHECK(stoch[d] == Approx(mean[d]).margin(1e-15));
}

TEST_CASE("boat environment wiring") {
  const Environment env = make_boat();
  CHECK(env.name == "boat");
  CHECK(env.state_dim == 6);
  CHECK(env.num_inputs() == 12);
  CHECK(env.input_names.front() == "dir_-100");
  CHECK(env.input_names.back() == "dir_90");
  CHECK(env.valid_inputs_at(std::vector<double>(6, 0.0)).size() == 12);

  Rng rng = make_stream_rng(11, 1);
  for (int i = 0; i < 200; ++i) {
    const auto s = env.sample_initial(rng);
    REQUIRE(s.size() == 6);
    CHECK(s[0] == 0.0);
    CHECK(s[1] >= 60.0);
    CHECK(s[1] <= 100.0);
    CHECK(s[2] == 0.0);
    CHECK(s[5] == 0.0);
  }

  Rng r1 = make_stream_rng(11, 2), r2 = make_stream_rng(11, 2);
  const std::vector<double> s{10.0, 80.0, 0.0, 0.0, 1.0, 0.0};
  CHECK(env.sample_next(s, 7, r1) == env.sample_next(s, 7, r2));

  // the downstream current pushes y lower under the straight command
  BoatParams noiseless;
  noiseless.noise_sigma = 0.0;
  const auto mid = boat_step_mean({100.0, 80.0, 0.0, 0.0, 1.75, 0.0}, 0.0, noiseless);
  CHECK(mid[1] < 80.0);
  CHECK(mid[1] == Approx(80.0 - boat_current(mid[0], 0.0, noiseless)).margin(1e-12));
}

TEST_CASE("environments reject states without valid inputs") {
  Environment env = make_cartpole();
  env.valid_inputs = [](const std::vector<double>&) { return std::vector<int>{}; };
  CHECK_THROWS_AS(env.valid_inputs_at({0.0, 0.0, 0.0, 0.0}), std::runtime_error);
}
