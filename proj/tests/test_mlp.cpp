#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ventbench/mlp.hpp"

using namespace ventbench;

namespace {
// Scalar objective J = g . f(x) used for finite-difference checks.
double objective(const MlpWeights& m, const std::vector<double>& x,
                 const std::vector<double>& g) {
  const auto y = mlp_forward(m, x);
  double j = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) j += g[i] * y[i];
  return j;
}

double max_rel_err(const MlpWeights& net, Rng& rng) {
  std::vector<double> x(static_cast<std::size_t>(net.input_size()));
  for (double& v : x) v = rng.uniform(0.0, 1.0);
  std::vector<double> g(static_cast<std::size_t>(net.output_size()));
  for (double& v : g) v = rng.uniform(-1.0, 1.0);

  MlpActivations acts;
  mlp_forward_cached(net, x, acts);
  MlpGradients grads = MlpGradients::zeros_like(net);
  mlp_gradient(net, acts, g, grads, nullptr);

  const double h = 1e-5;
  double worst = 0.0;
  MlpWeights probe = net;
  for (int l = 0; l < net.layer_count(); ++l) {
    const auto li = static_cast<std::size_t>(l);
    for (std::size_t i = 0; i < net.w[li].size(); ++i) {
      const double keep = probe.w[li][i];
      probe.w[li][i] = keep + h;
      const double jp = objective(probe, x, g);
      probe.w[li][i] = keep - h;
      const double jm = objective(probe, x, g);
      probe.w[li][i] = keep;
      const double fd = (jp - jm) / (2.0 * h);
      const double an = grads.w[li][i];
      if (std::abs(fd) < 1e-7 && std::abs(an) < 1e-7) continue;  // dead path
      worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
    }
    for (std::size_t i = 0; i < net.b[li].size(); ++i) {
      const double keep = probe.b[li][i];
      probe.b[li][i] = keep + h;
      const double jp = objective(probe, x, g);
      probe.b[li][i] = keep - h;
      const double jm = objective(probe, x, g);
      probe.b[li][i] = keep;
      const double fd = (jp - jm) / (2.0 * h);
      const double an = grads.b[li][i];
      if (std::abs(fd) < 1e-7 && std::abs(an) < 1e-7) continue;
      worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
    }
  }
  return worst;
}
}  // namespace

TEST_CASE("zero weights and biases give zero output") {
  Rng rng(1);
  MlpWeights m = mlp_init({5, 4, 3}, rng);
  for (auto& v : m.w) std::fill(v.begin(), v.end(), 0.0);
  for (auto& v : m.b) std::fill(v.begin(), v.end(), 0.0);
  const auto y = mlp_forward(m, {1.0, -2.0, 0.5, 3.0, 0.0});
  for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("a single pass-through unit computes the rectifier") {
  Rng rng(2);
  MlpWeights m = mlp_init({1, 1}, rng);
  m.w[0][0] = 1.0;
  m.b[0][0] = 0.0;
  CHECK(mlp_forward(m, {2.5})[0] == 2.5);
  CHECK(mlp_forward(m, {-1.5})[0] == 0.0);
}

TEST_CASE("the three architectures keep their shapes") {
  Rng rng(3);
  const MlpWeights enc = mlp_init({27, 16, 6}, rng);
  const MlpWeights dec = mlp_init({6, 16, 27}, rng);
  const MlpWeights dyn = mlp_init({12, 8, 6}, rng);
  CHECK(mlp_forward(enc, std::vector<double>(27, 0.5)).size() == 6);
  CHECK(mlp_forward(dec, std::vector<double>(6, 0.5)).size() == 27);
  CHECK(mlp_forward(dyn, std::vector<double>(12, 0.5)).size() == 6);
  CHECK(enc.parameter_count() == 27 * 16 + 16 + 16 * 6 + 6);
  CHECK_THROWS_AS(mlp_forward(enc, std::vector<double>(26, 0.5)),
                  std::invalid_argument);
}

TEST_CASE("analytic gradients match central finite differences") {
  Rng rng(4);
  for (const auto& sizes :
       {std::vector<int>{27, 16, 6}, {6, 16, 27}, {12, 8, 6}}) {
    for (int rep = 0; rep < 5; ++rep) {
      const MlpWeights net = mlp_init(sizes, rng, 0.1);
      REQUIRE(max_rel_err(net, rng) <= 1e-4);
    }
  }
}

TEST_CASE("zero upstream gradient produces zero parameter gradients") {
  Rng rng(5);
  const MlpWeights net = mlp_init({7, 5, 3}, rng);
  std::vector<double> x(7, 0.3);
  MlpActivations acts;
  mlp_forward_cached(net, x, acts);
  MlpGradients grads = MlpGradients::zeros_like(net);
  mlp_gradient(net, acts, std::vector<double>(3, 0.0), grads, nullptr);
  for (const auto& v : grads.w)
    for (double g : v) CHECK(g == 0.0);
}

TEST_CASE("adam leaves parameters alone without gradient signal") {
  Rng rng(6);
  MlpWeights net = mlp_init({4, 3}, rng);
  const MlpWeights before = net;
  AdamState st = AdamState::zeros_like(net);
  adam_step(net, MlpGradients::zeros_like(net), st);
  CHECK(net.w[0] == before.w[0]);
  CHECK(net.b[0] == before.b[0]);
}

TEST_CASE("adam converges to a signed constant step under constant gradient") {
  Rng rng(7);
  MlpWeights net = mlp_init({2, 1}, rng);
  AdamState st = AdamState::zeros_like(net);
  MlpGradients g = MlpGradients::zeros_like(net);
  g.w[0] = {0.37, -1.9};
  const AdamParams p;
  double prev0 = net.w[0][0], prev1 = net.w[0][1];
  for (int t = 0; t < 2000; ++t) {
    adam_step(net, g, st, p);
    if (t > 1900) {
      CHECK(prev0 - net.w[0][0] == Catch::Approx(p.lr).epsilon(1e-3));
      CHECK(prev1 - net.w[0][1] == Catch::Approx(-p.lr).epsilon(1e-3));
    }
    prev0 = net.w[0][0];
    prev1 = net.w[0][1];
  }
}

TEST_CASE("training arithmetic is deterministic under a fixed seed") {
  auto run = [] {
    Rng rng(42);
    MlpWeights net = mlp_init({6, 4, 2}, rng);
    AdamState st = AdamState::zeros_like(net);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> x(6);
      for (double& v : x) v = rng.uniform(0.0, 1.0);
      MlpActivations acts;
      mlp_forward_cached(net, x, acts);
      MlpGradients grads = MlpGradients::zeros_like(net);
      std::vector<double> up(2);
      for (double& v : up) v = rng.uniform(-1.0, 1.0);
      mlp_gradient(net, acts, up, grads, nullptr);
      adam_step(net, grads, st);
    }
    return net;
  };
  const MlpWeights a = run();
  const MlpWeights b = run();
  CHECK(a.w[0] == b.w[0]);
  CHECK(a.w[1] == b.w[1]);
  CHECK(a.b[1] == b.b[1]);
}
