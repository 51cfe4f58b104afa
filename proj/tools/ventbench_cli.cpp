// Command-line front end: cohort generation, transition-data collection,
// model training, benchmark runs and report rendering.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ventbench/bench.hpp"

namespace vb = ventbench;

namespace {

vb::Config load_config_opt(const std::string& path) {
  return path.empty() ? vb::Config{} : vb::Config::load(path);
}

std::vector<vb::PolicyKind> parse_policies(const std::string& csv) {
  std::vector<vb::PolicyKind> out;
  std::string item;
  std::istringstream is(csv);
  while (std::getline(is, item, ',')) {
    if (!item.empty()) out.push_back(vb::policy_from_string(item));
  }
  if (out.empty()) throw std::runtime_error("no policies given");
  return out;
}

vb::ordered_json cohort_to_json(const vb::Cohort& cohort) {
  vb::ordered_json j;
  j["schema_version"] = 1;
  j["seed"] = cohort.seed;
  j["patients"] = vb::ordered_json::array();
  for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
    const auto& p = cohort.patients[i];
    j["patients"].push_back({{"id", i},
                             {"sex", vb::to_string(p.sex)},
                             {"age", p.age},
                             {"height_cm", p.height_cm},
                             {"severity0", p.severity0}});
  }
  return j;
}

int cmd_cohort(const std::string& config_path, int n, std::uint64_t seed,
               const std::string& out_path) {
  const vb::Config cfg = load_config_opt(config_path);
  const vb::Cohort cohort = vb::make_cohort(n, seed, vb::CohortParams::from_config(cfg));
  const vb::ordered_json j = cohort_to_json(cohort);
  if (out_path.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << j.dump(2) << "\n";
  }
  return 0;
}

int cmd_generate_data(const std::string& config_path, int patients, int runs,
                      std::uint64_t seed, const std::string& out_path,
                      const std::string& format) {
  const vb::Config cfg = load_config_opt(config_path);
  const vb::BenchSetup setup = vb::BenchSetup::from_config(cfg);
  const vb::Cohort cohort =
      vb::make_cohort(patients, seed, vb::CohortParams::from_config(cfg));
  const vb::TransitionDataset ds = vb::generate_dataset(
      cohort.patients, runs, setup.bench.steps, seed, setup.sim, setup.env,
      setup.bounds, setup.action_bounds);
  if (format == "bin") {
    vb::save_dataset_binary(ds, out_path);
  } else if (format == "csv") {
    vb::save_dataset_csv(ds, out_path);
  } else {
    throw std::runtime_error("format must be bin or csv");
  }
  std::cout << "wrote " << ds.triplets.size() << " triplets from "
            << ds.episode_count << " episodes to " << out_path << "\n";
  return 0;
}

vb::TransitionDataset load_dataset_any(const std::string& path, int steps) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw std::runtime_error("cannot open dataset: " + path);
  char magic[8] = {};
  probe.read(magic, sizeof magic);
  probe.close();
  if (std::memcmp(magic, vb::kDatasetMagic, sizeof magic) == 0)
    return vb::load_dataset_binary(path);
  return vb::load_dataset_csv(path, steps - 1);
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& model_path, const std::string& loss_dir,
              std::uint64_t seed, int epochs, int batch) {
  const vb::Config cfg = load_config_opt(config_path);
  const vb::BenchSetup setup = vb::BenchSetup::from_config(cfg);
  vb::TrainParams tp = vb::TrainParams::from_config(cfg);
  if (epochs > 0) tp.epochs = epochs;
  if (batch > 0) tp.batch = batch;
  const vb::NormalizationSpec norm = vb::NormalizationSpec::from_config(cfg);

  const vb::TransitionDataset ds = load_dataset_any(data_path, setup.bench.steps);
  std::cout << "training autoencoder on " << ds.triplets.size() << " triplets...\n";
  const vb::AutoencoderResult ae = vb::train_autoencoder(ds, norm, tp, seed);
  std::cout << "autoencoder validation rmse " << ae.val_rmse << "\n";
  std::cout << "training latent dynamics...\n";
  const vb::LatentDynamicsResult dyn =
      vb::train_latent_dynamics(ds, ae.encoder, ae.decoder, norm, tp, seed);
  std::cout << "latent dynamics validation rmse " << dyn.val_rmse
            << " (persistence " << dyn.persistence_rmse << ")\n";

  vb::E2cModel model{ae.encoder, ae.decoder, dyn.latent_dynamics, norm};
  vb::save_model(model, model_path);
  std::cout << "wrote model to " << model_path << "\n";
  if (!loss_dir.empty()) {
    std::filesystem::create_directories(loss_dir);
    vb::save_loss_csv(ae.losses, loss_dir + "/autoencoder_loss.csv");
    vb::save_loss_csv(dyn.losses, loss_dir + "/latent_dynamics_loss.csv");
    std::cout << "wrote loss curves to " << loss_dir << "\n";
  }
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& policies_csv,
            int patients, int steps, double dt_min, int k_exact, int k_learned,
            int horizon, double lambda, std::uint64_t seed,
            const std::string& model_path, const std::string& out_path,
            int jobs, const std::string& traj_dir) {
  vb::Config cfg = load_config_opt(config_path);
  vb::BenchSetup setup = vb::BenchSetup::from_config(cfg);
  if (patients > 0) setup.bench.patients = patients;
  if (steps > 0) setup.bench.steps = steps;
  if (dt_min > 0) { setup.bench.dt_min = dt_min; setup.env.dt_min = dt_min; }
  if (k_exact > 0) setup.bench.smpc_samples = k_exact;
  if (k_learned > 0) setup.bench.e2c_samples = k_learned;
  if (horizon > 0) setup.bench.horizon = horizon;
  if (lambda >= 0) setup.bench.lambda = lambda;
  setup.bench.seed = seed;
  setup.bench.jobs = jobs;

  const std::vector<vb::PolicyKind> kinds = parse_policies(policies_csv);
  const bool needs_model =
      std::any_of(kinds.begin(), kinds.end(), [](vb::PolicyKind k) {
        return k == vb::PolicyKind::kE2cSmpc || k == vb::PolicyKind::kE2cMppi;
      });
  std::unique_ptr<vb::E2cModel> model;
  if (needs_model) {
    if (model_path.empty())
      throw std::runtime_error(
          "e2c policies need a trained model; pass --model-path <file> "
          "(produce one with the train subcommand)");
    model = std::make_unique<vb::E2cModel>(vb::load_model(model_path));
  }

  const vb::Cohort cohort = vb::make_cohort(setup.bench.patients, seed,
                                            vb::CohortParams::from_config(cfg));
  vb::BenchTiming timing;
  vb::BenchmarkReport report =
      vb::run_benchmark(kinds, cohort, setup, model.get(), &timing);
  for (const auto& [k, v] : vb::config_with_defaults(cfg).entries())
    report.config_snapshot[k] = v;

  vb::save_report(report, out_path);
  vb::save_timing(timing, out_path + ".timing.json");
  std::cout << vb::render_report_text(report);
  std::cout << "wrote " << out_path << "\n";

  if (!traj_dir.empty()) {
    std::filesystem::create_directories(traj_dir);
    for (vb::PolicyKind kind : kinds) {
      for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
        const vb::EpisodeTrajectory traj =
            vb::run_policy_episode(kind, cohort.patients[i], i, setup, model.get());
        const std::string stem =
            traj_dir + "/" + vb::to_string(kind) + "_patient" + std::to_string(i);
        vb::save_trajectory_csv(traj, stem + ".csv");
        vb::save_trajectory_summary_json(traj, cohort.patients[i], stem + ".json");
      }
    }
    std::cout << "wrote trajectories to " << traj_dir << "\n";
  }
  return 0;
}

int cmd_report(const std::string& in_path, const std::string& format,
               const std::string& out_path) {
  const vb::BenchmarkReport report = vb::load_report(in_path);
  std::string rendered;
  if (format == "text") rendered = vb::render_report_text(report);
  else if (format == "csv") rendered = vb::render_report_csv(report);
  else throw std::runtime_error("format must be text or csv");
  if (out_path.empty()) {
    std::cout << rendered;
  } else {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << rendered;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ventilator management benchmark"};
  app.require_subcommand(1);

  std::string config_path, out_path, model_path, data_path, loss_dir, traj_dir;
  std::string policies = "random,max-intervention,ardsnet,smpc";
  std::string format = "bin";
  std::string report_format = "text";
  int n = 100, runs = 2, patients = -1, steps = -1, epochs = -1, batch = -1;
  int k_exact = -1, k_learned = -1, horizon = -1, jobs = 0;
  double dt_min = -1.0, lambda = -1.0;
  std::uint64_t seed = 7;

  auto* cohort = app.add_subcommand("cohort", "emit a patient cohort as JSON");
  cohort->add_option("--config", config_path, "config file");
  cohort->add_option("--n", n, "cohort size (even)");
  cohort->add_option("--seed", seed, "cohort seed");
  cohort->add_option("--out", out_path, "output file (default stdout)");

  auto* gen = app.add_subcommand("generate-data",
                                 "collect random-policy transition triplets");
  gen->add_option("--config", config_path, "config file");
  gen->add_option("--patients", n, "cohort size");
  gen->add_option("--runs", runs, "episodes per patient");
  gen->add_option("--seed", seed, "seed");
  gen->add_option("--out", out_path, "output file")->required();
  gen->add_option("--format", format, "bin or csv");

  auto* train = app.add_subcommand("train", "train the learned dynamics model");
  train->add_option("--config", config_path, "config file");
  train->add_option("--data", data_path, "dataset file")->required();
  train->add_option("--out-model", model_path, "model output file")->required();
  train->add_option("--loss-dir", loss_dir, "directory for loss curve CSVs");
  train->add_option("--seed", seed, "training seed");
  train->add_option("--epochs", epochs, "override epoch count");
  train->add_option("--batch", batch, "override batch size");

  auto* run = app.add_subcommand("run", "run the benchmark");
  run->add_option("--config", config_path, "config file");
  run->add_option("--policies", policies, "comma-separated policy list");
  run->add_option("--patients", patients, "cohort size");
  run->add_option("--steps", steps, "decisions per episode");
  run->add_option("--dt-min", dt_min, "minutes per decision");
  run->add_option("--K", k_exact, "samples for exact-model control");
  run->add_option("--K-learned", k_learned, "samples for learned-model control");
  run->add_option("--H", horizon, "control horizon");
  run->add_option("--lambda", lambda, "path-integral inverse temperature");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--model-path", model_path, "trained model file");
  run->add_option("--out", out_path, "report JSON path")->required();
  run->add_option("--jobs", jobs, "worker threads (0 = serial)");
  run->add_option("--trajectories-dir", traj_dir, "also dump per-episode CSVs");

  auto* rep = app.add_subcommand("report", "render a report JSON");
  rep->add_option("--in", data_path, "report JSON")->required();
  rep->add_option("--format", report_format, "text or csv");
  rep->add_option("--out", out_path, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cohort->parsed()) return cmd_cohort(config_path, n, seed, out_path);
    if (gen->parsed())
      return cmd_generate_data(config_path, n, runs, seed, out_path, format);
    if (train->parsed())
      return cmd_train(config_path, data_path, model_path, loss_dir, seed,
                       epochs, batch);
    if (run->parsed())
      return cmd_run(config_path, policies, patients, steps, dt_min, k_exact,
                     k_learned, horizon, lambda, seed, model_path, out_path,
                     jobs, traj_dir);
    if (rep->parsed()) return cmd_report(data_path, report_format, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
