#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "ventbench/bench.hpp"
#include "ventbench/e2c.hpp"

using namespace ventbench;

namespace {
struct Fixture {
  SimParams sim;
  EnvParams env;
  BoundsTable bounds;
  ActionBounds ab;
  NormalizationSpec norm;
};

TransitionDataset tiny_dataset(int patients, int runs, int steps, std::uint64_t seed) {
  Fixture f;
  const Cohort cohort = make_cohort(patients, seed);
  EnvParams ep = f.env;
  ep.horizon = steps;
  return generate_dataset(cohort.patients, runs, steps, seed, f.sim, ep,
                          f.bounds, f.ab);
}
}  // namespace

TEST_CASE("normalization endpoints, inverse and clamping") {
  const NormalizationSpec n;
  ObservedState s;
  for (int i = 0; i < kStateDim; ++i) s[i] = n.s_min[static_cast<std::size_t>(i)];
  auto v = normalize_state(s, n);
  for (double x : v) CHECK(x == 0.0);
  for (int i = 0; i < kStateDim; ++i) s[i] = n.s_max[static_cast<std::size_t>(i)];
  v = normalize_state(s, n);
  for (double x : v) CHECK(x == 1.0);
  // in-range values invert exactly
  for (int i = 0; i < kStateDim; ++i)
    s[i] = 0.25 * n.s_min[static_cast<std::size_t>(i)] + 0.75 * n.s_max[static_cast<std::size_t>(i)];
  const auto back = denormalize_state(normalize_state(s, n), n);
  for (int i = 0; i < kStateDim; ++i)
    CHECK(back[i] == Catch::Approx(s[i]).epsilon(1e-12));
  // out-of-range values clamp
  s[slot::kPao2] = 1e6;
  CHECK(normalize_state(s, n)[slot::kPao2] == 1.0);
  s[slot::kPao2] = -1e6;
  CHECK(normalize_state(s, n)[slot::kPao2] == 0.0);
}

TEST_CASE("dataset sizes follow the episode arithmetic") {
  SECTION("one patient, one run") {
    // cohorts must be even-sized; use two patients and one run instead
    const auto ds = tiny_dataset(2, 1, 96, 5);
    CHECK(ds.triplets.size() == 2 * 95);
    CHECK(ds.episode_count == 2);
  }
  SECTION("triplets never straddle episodes") {
    const auto ds = tiny_dataset(2, 2, 24, 6);
    CHECK(ds.triplets.size() == 4 * 23);
    for (std::size_t i = 1; i < ds.triplets.size(); ++i) {
      if (ds.episode[i] == ds.episode[i - 1]) {
        // consecutive rows of one episode chain: s of row i is s_next of i-1
        CHECK(ds.triplets[i].s.v == ds.triplets[i - 1].s_next.v);
      }
    }
  }
  SECTION("generation is deterministic") {
    const auto a = tiny_dataset(2, 1, 12, 7);
    const auto b = tiny_dataset(2, 1, 12, 7);
    REQUIRE(a.triplets.size() == b.triplets.size());
    for (std::size_t i = 0; i < a.triplets.size(); ++i) {
      REQUIRE(a.triplets[i].s.v == b.triplets[i].s.v);
      REQUIRE(a.triplets[i].a.to_array() == b.triplets[i].a.to_array());
    }
  }
}

TEST_CASE("episode split puts every triplet on exactly one side") {
  const auto ds = tiny_dataset(4, 2, 12, 8);
  const auto split = split_by_episode(ds, 0.25, 99);
  CHECK(split.train.size() + split.val.size() == ds.triplets.size());
  CHECK(split.val.size() == 2 * 11);  // 2 of 8 episodes
  // same seed, same split
  const auto again = split_by_episode(ds, 0.25, 99);
  CHECK(split.val == again.val);
}

TEST_CASE("dataset files round-trip") {
  const auto ds = tiny_dataset(2, 1, 10, 9);
  SECTION("binary") {
    const std::string path = "test_ds_tmp.bin";
    save_dataset_binary(ds, path);
    const auto back = load_dataset_binary(path);
    REQUIRE(back.triplets.size() == ds.triplets.size());
    CHECK(back.episode_count == ds.episode_count);
    for (std::size_t i = 0; i < ds.triplets.size(); ++i) {
      REQUIRE(back.triplets[i].s.v == ds.triplets[i].s.v);
      REQUIRE(back.triplets[i].s_next.v == ds.triplets[i].s_next.v);
      REQUIRE(back.episode[i] == ds.episode[i]);
    }
    std::remove(path.c_str());
  }
  SECTION("csv") {
    const std::string path = "test_ds_tmp.csv";
    save_dataset_csv(ds, path);
    const auto back = load_dataset_csv(path, 9);
    REQUIRE(back.triplets.size() == ds.triplets.size());
    CHECK(back.episode_count == ds.episode_count);
    for (std::size_t i = 0; i < ds.triplets.size(); ++i)
      REQUIRE(back.triplets[i].s.v == ds.triplets[i].s.v);  // %.17g is exact
    std::remove(path.c_str());
  }
  SECTION("bad magic fails loudly") {
    const std::string path = "test_ds_bad.bin";
    std::ofstream(path) << "definitely not a dataset";
    CHECK_THROWS_AS(load_dataset_binary(path), std::runtime_error);
    std::remove(path.c_str());
  }
}

TEST_CASE("autoencoder memorizes a single repeated state") {
  Fixture f;
  TransitionDataset ds;
  ObservedState s;
  for (int i = 0; i < kStateDim; ++i)
    s[i] = 0.3 * f.norm.s_min[static_cast<std::size_t>(i)] +
           0.7 * f.norm.s_max[static_cast<std::size_t>(i)];
  for (int i = 0; i < 256; ++i) {
    ds.triplets.push_back({s, VentilatorAction{}, s});
    ds.episode.push_back(i % 8);
  }
  ds.episode_count = 8;
  TrainParams tp;
  tp.epochs = 150;
  tp.batch = 16;
  const auto res = train_autoencoder(ds, f.norm, tp, 42);
  CHECK(res.val_rmse < 1e-2);
}

TEST_CASE("frozen autoencoder weights survive dynamics training unchanged") {
  Fixture f;
  const auto ds = tiny_dataset(2, 1, 24, 10);
  TrainParams tp;
  tp.epochs = 6;
  const auto ae = train_autoencoder(ds, f.norm, tp, 11);
  const MlpWeights enc_before = ae.encoder;
  const MlpWeights dec_before = ae.decoder;
  const auto dyn = train_latent_dynamics(ds, ae.encoder, ae.decoder, f.norm, tp, 11);
  CHECK(ae.encoder.w == enc_before.w);
  CHECK(ae.encoder.b == enc_before.b);
  CHECK(ae.decoder.w == dec_before.w);
  CHECK(ae.decoder.b == dec_before.b);
  CHECK(dyn.losses.size() == 6);
}

TEST_CASE("identity transitions train down to the reconstruction floor") {
  Fixture f;
  // s_next == s: the best achievable one-step error is the reconstruction error
  auto ds = tiny_dataset(2, 1, 40, 12);
  for (auto& t : ds.triplets) t.s_next = t.s;
  TrainParams tp;
  tp.epochs = 120;
  const auto ae = train_autoencoder(ds, f.norm, tp, 13);
  const auto dyn = train_latent_dynamics(ds, ae.encoder, ae.decoder, f.norm, tp, 13);
  CHECK(dyn.val_rmse < ae.val_rmse * 2.5 + 0.02);
}

TEST_CASE("learned one-step predictions are finite, shaped and deterministic") {
  Fixture f;
  Rng rng(21);
  E2cModel m;
  m.encoder = mlp_init({27, 16, 6}, rng);
  m.decoder = mlp_init({6, 16, 27}, rng);
  m.latent_dynamics = mlp_init({12, 8, 6}, rng);
  m.norm = f.norm;
  const auto prof = PatientProfile{Sex::kFemale, 40, 165.0, 0.5};
  const auto physio = derive_physiology(prof, f.sim);
  const auto s = observe(physio, Environment::initial_action(), f.sim);
  const VentilatorAction a{0.5, 20, 1.0, 15, 8, 0.5};
  const auto p1 = learned_predict(m, s, a);
  const auto p2 = learned_predict(m, s, a);
  CHECK(p1.finite());
  CHECK(p1.v == p2.v);

  // the fast path agrees with the reference network evaluation
  const auto sn = normalize_state(s, m.norm);
  const auto an = normalize_action(a, m.norm);
  auto z = mlp_forward(m.encoder, std::vector<double>(sn.begin(), sn.end()));
  std::vector<double> din(z.begin(), z.end());
  din.insert(din.end(), an.begin(), an.end());
  const auto zn = mlp_forward(m.latent_dynamics, din);
  const auto yn = mlp_forward(m.decoder, zn);
  std::array<double, kStateDim> arr;
  for (int i = 0; i < kStateDim; ++i) arr[static_cast<std::size_t>(i)] = yn[static_cast<std::size_t>(i)];
  const auto ref = denormalize_state(arr, m.norm);
  for (int i = 0; i < kStateDim; ++i) REQUIRE(p1[i] == ref[i]);

  // the transposed inference path is bit-identical too
  LearnedDynamics fast(m);
  Rng arng(23);
  for (int rep = 0; rep < 50; ++rep) {
    const auto act = random_action(arng, ActionBounds{});
    const auto from_fast = fast.predict(s, act);
    const auto from_ref = learned_predict(m, s, act);
    REQUIRE(from_fast.v == from_ref.v);
  }
}

TEST_CASE("model files round-trip and reject corruption") {
  Fixture f;
  Rng rng(22);
  E2cModel m;
  m.encoder = mlp_init({27, 16, 6}, rng);
  m.decoder = mlp_init({6, 16, 27}, rng);
  m.latent_dynamics = mlp_init({12, 8, 6}, rng);
  m.norm = f.norm;
  const std::string path = "test_model_tmp.bin";
  save_model(m, path);
  const E2cModel back = load_model(path);
  CHECK(back.encoder.w == m.encoder.w);
  CHECK(back.decoder.b == m.decoder.b);
  CHECK(back.latent_dynamics.w == m.latent_dynamics.w);
  CHECK(back.norm.s_min == m.norm.s_min);

  // flip a byte in the version field
  std::fstream fs(path, std::ios::in | std::ios::out | std::ios::binary);
  fs.seekp(8);
  const char bad = 99;
  fs.write(&bad, 1);
  fs.close();
  CHECK_THROWS_AS(load_model(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("loss curves serialize") {
  const std::vector<LossPoint> pts = {{0, 0.5, 0.6}, {1, 0.4, 0.5}};
  const std::string path = "test_loss_tmp.csv";
  save_loss_csv(pts, path);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "epoch,train_mse,val_mse");
  CHECK(row.substr(0, 2) == "0,");
  std::remove(path.c_str());
}
