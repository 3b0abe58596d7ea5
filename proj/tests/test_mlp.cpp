#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "specrl/mlp.hpp"
#include "specrl/rng.hpp"

using namespace specrl;
using Catch::Approx;

namespace {

Mlp random_net(const std::vector<int>& sizes, Rng& rng) {
  Mlp m = Mlp::xavier(sizes, rng);
  std::uniform_real_distribution<double> d(-0.5, 0.5);
  for (int l = 0; l < m.num_layers(); ++l)
    for (auto& x : m.b[l]) x = d(rng);
  return m;
}

std::vector<double*> param_ptrs(Mlp& m) {
  std::vector<double*> out;
  m.for_each_param([&out](double& w) { out.push_back(&w); });
  return out;
}

}  // namespace

TEST_CASE("forward pass wires tanh hidden layers into a linear output") {
  Mlp m = Mlp::zeros({2, 2, 1});
  m.W[0] = {0.5, -0.25, 1.0, 0.75};
  m.b[0] = {0.1, -0.2};
  m.W[1] = {2.0, -1.0};
  m.b[1] = {0.05};

  const std::vector<double> x = {0.4, -0.8};
  const double h0 = std::tanh(0.5 * 0.4 - 0.25 * -0.8 + 0.1);
  const double h1 = std::tanh(1.0 * 0.4 + 0.75 * -0.8 - 0.2);
  const double y = 2.0 * h0 - 1.0 * h1 + 0.05;

  Mlp::Cache cache;
  const std::vector<double> out = m.forward(x, &cache);
  REQUIRE(out.size() == 1);
  CHECK(out[0] == Approx(y).margin(1e-15));

  REQUIRE(cache.act.size() == 3);
  CHECK(cache.act[0] == x);
  CHECK(cache.act[1][0] == Approx(h0).margin(1e-15));
  CHECK(cache.act[1][1] == Approx(h1).margin(1e-15));
  CHECK(cache.act[2][0] == out[0]);

  // a single layer is affine: no activation on the output
  Mlp lin = Mlp::zeros({2, 1});
  lin.W[0] = {3.0, -2.0};
  lin.b[0] = {0.5};
  CHECK(lin.forward({1.0, 1.0})[0] == Approx(1.5).margin(1e-15));

  CHECK_THROWS_AS(m.forward({1.0}), std::invalid_argument);
  CHECK_THROWS_AS(Mlp::zeros({3}), std::invalid_argument);
  CHECK(m.num_params() == 2 * 2 + 2 + 2 * 1 + 1);
  CHECK(m.in_dim() == 2);
  CHECK(m.out_dim() == 1);
}

TEST_CASE("backward gradients match central finite differences") {
  Rng rng = make_stream_rng(11, 0);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const std::vector<int> sizes = {3, 5, 4, 2};

  for (int rep = 0; rep < 20; ++rep) {
    Mlp m = random_net(sizes, rng);
    std::vector<double> x(3), c(2);
    for (auto& v : x) v = d(rng);
    for (auto& v : c) v = d(rng);
    const auto loss = [&](const Mlp& net) {
      const std::vector<double> y = net.forward(x);
      return c[0] * y[0] + c[1] * y[1];
    };

    Mlp grad = Mlp::zeros(sizes);
    Mlp::Cache cache;
    m.forward(x, &cache);
    m.backward(cache, c, grad);

    const std::vector<double*> ps = param_ptrs(m);
    const std::vector<double*> gs = param_ptrs(grad);
    REQUIRE(ps.size() == gs.size());
    const double h = 1e-5;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const double saved = *ps[i];
      *ps[i] = saved + h;
      const double up = loss(m);
      *ps[i] = saved - h;
      const double down = loss(m);
      *ps[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      CAPTURE(rep, i, fd, *gs[i]);
      CHECK(*gs[i] == Approx(fd).epsilon(1e-4).margin(1e-7));
    }
  }
}

TEST_CASE("backward accumulates into the gradient buffer") {
  Rng rng = make_stream_rng(12, 0);
  Mlp m = random_net({2, 3, 2}, rng);
  Mlp::Cache cache;
  m.forward({0.3, -0.7}, &cache);

  Mlp once = Mlp::zeros(m.sizes), twice = Mlp::zeros(m.sizes);
  const std::vector<double> dout = {1.0, -0.5};
  m.backward(cache, dout, once);
  m.backward(cache, dout, twice);
  m.backward(cache, dout, twice);

  const std::vector<double*> a = param_ptrs(once), b = param_ptrs(twice);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*b[i] == 2.0 * *a[i]);
}

TEST_CASE("Adam steps") {
  SECTION("zero learning rate leaves the parameters bitwise unchanged") {
    Rng rng = make_stream_rng(13, 0);
    Mlp m = random_net({2, 3, 1}, rng);
    const Mlp before = m;
    Adam opt(m);
    Mlp grad = Mlp::zeros(m.sizes);
    grad.for_each_param([](double& g) { g = 1.0; });
    opt.step(m, grad, 0.0);
    opt.step(m, grad, 0.0);
    CHECK(mlp_equal(m, before));
    CHECK(opt.t == 2);
  }

  SECTION("a quadratic bowl converges to its minimum") {
    Mlp m = Mlp::zeros({1, 1});  // two parameters: one weight, one bias
    Adam opt(m);
    Mlp grad = Mlp::zeros(m.sizes);
    for (int it = 0; it < 3000; ++it) {
      grad.W[0][0] = 2.0 * (m.W[0][0] - 3.0);
      grad.b[0][0] = 2.0 * (m.b[0][0] + 2.0);
      opt.step(m, grad, 0.05);
    }
    CHECK(m.W[0][0] == Approx(3.0).margin(1e-3));
    CHECK(m.b[0][0] == Approx(-2.0).margin(1e-3));
  }
}

TEST_CASE("checkpoint blocks round trip bitwise") {
  Rng rng = make_stream_rng(14, 0);
  const Mlp m = random_net({4, 7, 3}, rng);
  std::stringstream buf;
  save_mlp(buf, m, "actor");
  const Mlp back = load_mlp(buf, "actor");
  CHECK(mlp_equal(m, back));

  // two blocks in one stream load in order
  std::stringstream two;
  save_mlp(two, m, "actor");
  const Mlp other = random_net({2, 2}, rng);
  save_mlp(two, other, "critic");
  CHECK(mlp_equal(load_mlp(two, "actor"), m));
  CHECK(mlp_equal(load_mlp(two, "critic"), other));
}

TEST_CASE("checkpoint loader rejects malformed blocks") {
  Rng rng = make_stream_rng(15, 0);
  const Mlp m = random_net({2, 2}, rng);
  std::stringstream buf;
  save_mlp(buf, m, "actor");
  const std::string text = buf.str();

  SECTION("wrong block name") {
    std::istringstream in(text);
    CHECK_THROWS_AS(load_mlp(in, "critic"), std::runtime_error);
  }
  SECTION("missing sizes directive") {
    std::istringstream in("mlp actor\nlayer 0\n");
    CHECK_THROWS_AS(load_mlp(in, "actor"), std::runtime_error);
  }
  SECTION("truncated weights") {
    std::istringstream in(text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_mlp(in, "actor"), std::runtime_error);
  }
  SECTION("missing end marker") {
    const std::string cut = text.substr(0, text.rfind("end"));
    std::istringstream in(cut);
    CHECK_THROWS_AS(load_mlp(in, "actor"), std::runtime_error);
  }
  SECTION("layer blocks out of order") {
    std::string bad = text;
    bad.replace(bad.find("layer 0"), 7, "layer 1");
    std::istringstream in(bad);
    CHECK_THROWS_AS(load_mlp(in, "actor"), std::runtime_error);
  }
}

TEST_CASE("Xavier initialisation respects the fan bounds") {
  Rng rng = make_stream_rng(16, 0);
  const Mlp m = Mlp::xavier({4, 6, 2}, rng);
  const double a0 = std::sqrt(6.0 / (4 + 6));
  const double a1 = std::sqrt(6.0 / (6 + 2));
  for (double w : m.W[0]) {
    CHECK(std::abs(w) <= a0);
  }
  for (double w : m.W[1]) {
    CHECK(std::abs(w) <= a1);
  }
  for (int l = 0; l < m.num_layers(); ++l)
    for (double x : m.b[l]) CHECK(x == 0.0);

  // fresh draws differ
  Rng rng2 = make_stream_rng(16, 1);
  CHECK_FALSE(mlp_equal(m, Mlp::xavier({4, 6, 2}, rng2)));
}
