#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>
#include <vector>

#include "specrl/builtin.hpp"
#include "specrl/finite.hpp"
#include "specrl/product.hpp"
#include "specrl/rng.hpp"

using namespace specrl;
using Catch::Approx;

namespace {

Ldba aut_from_text(const std::string& text) {
  std::istringstream in(text);
  return load_automaton(in);
}

const char* kFixtureMdp = R"(states 3
initial 0
accepting 1
atoms g
label 1 {g}
trans 0 0 1:0.7 2:0.3
trans 1 0 1:1
trans 2 0 2:1
)";

const char* kEventuallyG = R"(states 2
initial 0
atoms g
deterministic 0 1
0 --{}--> 0
0 --{g}--> 1
1 --{}--> 1 !
1 --{g}--> 1 !
)";

struct Fixture {
  FiniteMdp mdp;
  Environment env;
  Ldba aut;
  LabelFn label;

  Fixture()
      : mdp([] {
          std::istringstream in(kFixtureMdp);
          return load_mdp(in);
        }()),
        env(make_finite_env(mdp)),
        aut(aut_from_text(kEventuallyG)) {
    const FiniteMdp* m = &mdp;
    label = [m](const std::vector<double>& s) -> LetterMask {
      return m->alphabet.letters[m->state_letter[static_cast<int>(s[0])]];
    };
  }
};

}  // namespace

TEST_CASE("product construction validates its inputs") {
  const Fixture fx;
  CHECK_NOTHROW(AugmentedProduct(fx.env, fx.aut, fx.label, 0.9, BoundMode::UpperBound));
  CHECK_THROWS_AS(AugmentedProduct(fx.env, fx.aut, fx.label, 0.0, BoundMode::UpperBound),
                  std::invalid_argument);
  CHECK_THROWS_AS(AugmentedProduct(fx.env, fx.aut, fx.label, 1.0, BoundMode::UpperBound),
                  std::invalid_argument);
  CHECK_THROWS_AS(AugmentedProduct(fx.env, fx.aut, nullptr, 0.9, BoundMode::UpperBound),
                  std::invalid_argument);

  CHECK(bound_mode_from_string("upper") == BoundMode::UpperBound);
  CHECK(bound_mode_from_string("lower") == BoundMode::LowerBound);
  CHECK_THROWS_AS(bound_mode_from_string("mid"), std::invalid_argument);
}

TEST_CASE("the automaton reads the letter of the departed state") {
  const Fixture fx;
  const AugmentedProduct prod(fx.env, fx.aut, fx.label, 0.5, BoundMode::UpperBound);
  Rng rng = make_stream_rng(29, 0);

  // force the 0 -> 1 branch by resampling until it lands there
  ProductState x{{0.0}, 0};
  ProductStepResult r;
  do {
    r = product_step(prod, x, 0, rng);
  } while (r.next.s[0] != 1.0);
  // while standing on state 0 the automaton saw the empty letter: q stays 0
  CHECK(r.next.q == 0);
  CHECK_FALSE(r.accepting_fired);

  // the next step departs state 1, whose letter {g} moves the automaton
  const ProductStepResult r2 = product_step(prod, r.next, 0, rng);
  CHECK(r2.next.q == 1);
  CHECK(r2.next.s[0] == 1.0);
  CHECK_FALSE(r2.accepting_fired);  // the 0 ->{g}-> 1 edge carries no mark

  // from (1, q1) every move fires the accepting self-loop
  const ProductStepResult r3 = product_step(prod, r2.next, 0, rng);
  CHECK(r3.accepting_fired);
  CHECK(r3.next.q == 1);
}

TEST_CASE("undefined letters fall into the absorbing sink") {
  const Fixture fx;
  const Ldba partial = aut_from_text(
      "states 1\ninitial 0\natoms g\ndeterministic 0\n0 --{g}--> 0 !\n");
  const AugmentedProduct prod(fx.env, partial, fx.label, 0.5, BoundMode::UpperBound);
  Rng rng = make_stream_rng(29, 1);

  // state 0 emits the empty letter, which the automaton cannot read
  ProductState x{{0.0}, 0};
  ProductStepResult r = product_step(prod, x, 0, rng);
  CHECK(r.next.q == prod.sink_state());
  CHECK_FALSE(r.accepting_fired);
  CHECK_FALSE(r.reached_phi);

  // the sink absorbs and never fires
  for (int i = 0; i < 5; ++i) {
    r = product_step(prod, r.next, 0, rng);
    CHECK(r.next.q == prod.sink_state());
    CHECK_FALSE(r.accepting_fired);
  }
}

TEST_CASE("eps states admit only jumps and freeze the environment") {
  const Fixture fx;
  const Ldba ldba = aut_from_text(
      "states 3\ninitial 0\natoms g\ndeterministic 1 2\n"
      "0 --{}--> 0\n0 --{g}--> 0\n0 --eps--> 1\n0 --eps--> 2\n"
      "1 --{g}--> 1 !\n2 --{}--> 2 !\n2 --{g}--> 2 !\n");
  const AugmentedProduct prod(fx.env, ldba, fx.label, 0.5, BoundMode::UpperBound);

  CHECK(prod.num_actions() == fx.env.num_inputs() + ldba.num_states);
  CHECK(prod.is_jump_action(1));
  CHECK_FALSE(prod.is_jump_action(0));
  CHECK(prod.jump_target(prod.jump_action(2)) == 2);

  const ProductState x{{0.0}, 0};
  CHECK(valid_product_inputs(prod, x) ==
        std::vector<int>{prod.jump_action(1), prod.jump_action(2)});

  Rng rng = make_stream_rng(29, 2);
  const ProductStepResult r = product_step(prod, x, prod.jump_action(2), rng);
  CHECK(r.next.s == x.s);  // the environment does not move on a jump
  CHECK(r.next.q == 2);
  CHECK_FALSE(r.accepting_fired);
  CHECK_FALSE(r.reached_phi);

  // jumps are rejected away from eps states, bad targets and inputs too
  CHECK_THROWS_AS(product_step(prod, x, 0, rng), std::invalid_argument);
  CHECK_THROWS_AS(product_step(prod, x, prod.jump_action(0), rng), std::invalid_argument);
  CHECK_THROWS_AS(product_step(prod, {r.next.s, 2}, prod.jump_action(1), rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(product_step(prod, {r.next.s, 2}, -1, rng), std::invalid_argument);

  // non-eps states expose the environment inputs
  CHECK(valid_product_inputs(prod, {x.s, 2}) == std::vector<int>{0});
  CHECK(valid_product_inputs(prod, {x.s, prod.sink_state()}) == std::vector<int>{0});
}

TEST_CASE("the termination coin fires at rate one minus zeta") {
  const Fixture fx;
  const Ldba always = universal_automaton(fx.aut.alphabet);
  const double zeta = 0.999;
  const AugmentedProduct prod(fx.env, always, fx.label, zeta, BoundMode::UpperBound);

  long long phi = 0;
  const long long n = 1000000;
  for (long long i = 0; i < n; ++i) {
    Rng rng = make_stream_rng(31, 1000 + i);
    const ProductStepResult r = product_step(prod, {{0.0}, 0}, 0, rng);
    REQUIRE(r.accepting_fired);
    phi += r.reached_phi;
  }
  const double rate = static_cast<double>(phi) / static_cast<double>(n);
  CHECK(rate == Approx(1.0 - zeta).margin(3e-4));
}

TEST_CASE("letters outside the automaton alphabet are runtime errors") {
  const Fixture fx;
  const LabelFn bad = [](const std::vector<double>&) -> LetterMask { return 0b10; };
  const AugmentedProduct prod(fx.env, fx.aut, bad, 0.5, BoundMode::UpperBound);
  Rng rng = make_stream_rng(31, 0);
  CHECK_THROWS_AS(product_step(prod, {{0.0}, 0}, 0, rng), std::runtime_error);
}

TEST_CASE("episode rewards by bound mode") {
  CHECK(episode_reward(BoundMode::UpperBound, true) == 1.0);
  CHECK(episode_reward(BoundMode::UpperBound, false) == 0.0);
  CHECK(episode_reward(BoundMode::LowerBound, true) == 0.0);
  CHECK(episode_reward(BoundMode::LowerBound, false) == 1.0);
}

TEST_CASE("initial product states pair the sampled state with the initial memory") {
  const Fixture fx;
  const AugmentedProduct prod(fx.env, fx.aut, fx.label, 0.5, BoundMode::LowerBound);
  Rng rng = make_stream_rng(31, 7);
  const ProductState x = prod.initial(rng);
  CHECK(x.s == std::vector<double>{0.0});
  CHECK(x.q == fx.aut.initial);
  CHECK(prod.sink_state() == fx.aut.num_states);
  CHECK(prod.num_actions() == fx.env.num_inputs());  // no eps moves, no jump block
  CHECK(prod.letter_of({1.0}) == fx.aut.alphabet.letter_index(0b1));
}
