// Command-line front end: channel generation, the optimization schemes,
// dataset labeling, surrogate training, evaluation, and parameter sweeps.
// Exit codes: 0 success, 1 validation error, 2 solver failure.

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rismec/harness.hpp"

namespace {

using namespace rismec;

SystemConfig load_config(const std::string& path) {
  if (path.empty()) {
    SystemConfig config;
    config.finalize();
    config.validate();
    return config;
  }
  return config_from_json(load_json(path));
}

int cmd_gen_channels(const std::string& config_path, std::uint64_t seed,
                     const std::string& out) {
  SystemConfig config = load_config(config_path);
  ChannelSet channels = gen_channels(config, seed);
  save_json(channels_to_json(channels), out);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_solve(const std::string& config_path, std::uint64_t seed,
              const std::string& out, const std::string& scheme,
              const std::string& channels_path, const std::string& models_path) {
  SystemConfig config = load_config(config_path);
  ChannelSet channels = channels_path.empty()
                            ? gen_channels(config, seed)
                            : channels_from_json(load_json(channels_path));
  SurrogateModels models;
  const SurrogateModels* models_ptr = nullptr;
  if (!models_path.empty()) {
    models = surrogates_from_json(load_json(models_path));
    models_ptr = &models;
  }
  Solution sol = run_scheme(scheme, channels, config, models_ptr);
  std::cout << "scheme=" << scheme << " objective_bits=" << sol.objective_bits
            << " converged=" << (sol.converged ? "yes" : "no");
  if (!sol.warning.empty()) std::cout << " warning=\"" << sol.warning << '"';
  std::cout << "\n";
  if (!out.empty()) {
    save_json(solution_to_json(sol), out);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_gen_dataset(const std::string& config_path, std::uint64_t seed,
                    const std::string& out, long count, double sigma_csi,
                    double sigma_loc) {
  SystemConfig config = load_config(config_path);
  Corruption corruption{sigma_csi, sigma_loc};
  Dataset data = gen_dataset(config, count, corruption, seed);
  for (const auto& line : data.skip_log) std::cerr << "skipped: " << line << "\n";
  save_json(dataset_to_json(data), out);
  std::cout << "labeled " << data.sample_seeds.size() << "/" << count
            << " samples, wrote " << out << "\n";
  return 0;
}

int cmd_train(const std::string& out, const std::string& net,
              const std::string& dataset_path, const std::string& models_path,
              int epochs, int batch, std::uint64_t seed,
              const std::string& loss_csv) {
  Dataset data = dataset_from_json(load_json(dataset_path));
  SurrogateModels models;
  if (!models_path.empty()) models = surrogates_from_json(load_json(models_path));
  FitConfig fc;
  fc.epochs = epochs;
  fc.batch_size = batch;
  fc.seed = seed;
  FitResult result = train_surrogate(models, net, data, fc);
  std::cout << "net=" << net << " epochs=" << epochs
            << " best_val_loss=" << result.best_val_loss
            << " best_epoch=" << result.best_epoch << "\n";
  save_json(surrogates_to_json(models), out);
  std::cout << "wrote " << out << "\n";
  if (!loss_csv.empty()) save_loss_csv(result, loss_csv);
  return 0;
}

int cmd_eval(const std::string& out, const std::string& dataset_path,
             const std::string& models_path) {
  Dataset data = dataset_from_json(load_json(dataset_path));
  SurrogateModels models = surrogates_from_json(load_json(models_path));
  SurrogateReport report = evaluate_surrogates(models, data);
  Json j{{"schema", "rismec.eval.v1"},
         {"samples", report.teacher_bits.size()}};
  auto emit = [&](const char* key, const SurrogatePathStats& s) {
    if (!s.present) return;
    j[key] = {{"mean_ratio", s.mean_ratio},
              {"median_ratio", s.median_ratio},
              {"p10_ratio", s.p10_ratio}};
    std::cout << key << ": mean_ratio=" << s.mean_ratio
              << " median_ratio=" << s.median_ratio
              << " p10_ratio=" << s.p10_ratio << "\n";
  };
  emit("csi", report.csi);
  emit("loc", report.loc);
  if (!out.empty()) {
    save_json(j, out);
    std::cout << "wrote " << out << "\n";
  }
  return 0;
}

int cmd_sweep(const std::string& config_path, std::uint64_t seed,
              const std::string& out, const std::string& variable,
              const std::vector<double>& values, int reps,
              const std::vector<std::string>& schemes,
              const std::string& models_path) {
  SweepSpec spec;
  spec.base = load_config(config_path);
  spec.seed = seed;
  spec.variable = variable;
  spec.values = values;
  spec.replications = reps;
  spec.schemes = schemes;
  SurrogateModels models;
  if (!models_path.empty()) {
    models = surrogates_from_json(load_json(models_path));
    spec.models = &models;
  }
  auto rows = run_sweep(spec);
  save_sweep_csv(rows, out);
  std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RIS-aided mobile edge computing: solvers, surrogates, sweeps"};
  app.require_subcommand(1);
  app.fallthrough();  // lets --config/--seed/--out appear after the subcommand

  std::string config_path, out;
  std::uint64_t seed = 0;
  app.add_option("--config", config_path, "JSON config file (defaults used when absent)");
  app.add_option("--seed", seed, "master RNG seed");
  app.add_option("--out", out, "output path");

  auto* gen = app.add_subcommand("gen-channels", "draw UE positions and channels");

  auto* solve = app.add_subcommand("solve", "run one optimization scheme");
  std::string scheme = "bcd", channels_path, models_path;
  solve->add_option("--scheme", scheme, "bcd|zf|equal|no-ris|csi|loc")
      ->check(CLI::IsMember({"bcd", "zf", "equal", "no-ris", "csi", "loc"}));
  solve->add_option("--channels", channels_path, "channel JSON (generated from --seed when absent)");
  solve->add_option("--models", models_path, "surrogate bundle for csi/loc schemes");

  auto* gend = app.add_subcommand("gen-dataset", "label samples with the solver");
  long count = 100;
  double sigma_csi = 0.0, sigma_loc = 0.0;
  gend->add_option("--count", count, "number of samples");
  gend->add_option("--sigma-csi", sigma_csi, "input noise std on channel features");
  gend->add_option("--sigma-loc", sigma_loc, "input noise std on locations, meters");

  auto* train = app.add_subcommand("train", "train one surrogate net");
  std::string net = "csi", dataset_path, train_models_path, loss_csv;
  int epochs = 200, batch = 128;
  train->add_option("--net", net, "csi|loc1|loc2")
      ->check(CLI::IsMember({"csi", "loc1", "loc2"}));
  train->add_option("--dataset", dataset_path, "training dataset JSON")->required();
  train->add_option("--models", train_models_path, "existing bundle to extend");
  train->add_option("--epochs", epochs, "training epochs");
  train->add_option("--batch", batch, "batch size");
  train->add_option("--loss-csv", loss_csv, "write per-epoch loss curves here");

  auto* eval = app.add_subcommand("eval", "score surrogates against the teacher");
  std::string eval_dataset, eval_models;
  eval->add_option("--dataset", eval_dataset, "test dataset JSON")->required();
  eval->add_option("--models", eval_models, "surrogate bundle JSON")->required();

  auto* sweep = app.add_subcommand("sweep", "TCTB versus one scenario variable");
  std::string variable = "E", sweep_models;
  std::vector<double> values;
  std::vector<std::string> schemes{"bcd", "no-ris"};
  int reps = 1;
  sweep->add_option("--variable", variable, "E|M|N|zeta_d|sigma_dx|sigma_dz");
  sweep->add_option("--values", values, "variable values")->required();
  sweep->add_option("--reps", reps, "replications per point");
  sweep->add_option("--schemes", schemes, "schemes to run");
  sweep->add_option("--models", sweep_models, "surrogate bundle for csi/loc schemes");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      if (out.empty()) throw std::invalid_argument("gen-channels needs --out");
      return cmd_gen_channels(config_path, seed, out);
    }
    if (solve->parsed()) {
      return cmd_solve(config_path, seed, out, scheme, channels_path, models_path);
    }
    if (gend->parsed()) {
      if (out.empty()) throw std::invalid_argument("gen-dataset needs --out");
      return cmd_gen_dataset(config_path, seed, out, count, sigma_csi, sigma_loc);
    }
    if (train->parsed()) {
      if (out.empty()) throw std::invalid_argument("train needs --out");
      return cmd_train(out, net, dataset_path, train_models_path, epochs, batch,
                       seed, loss_csv);
    }
    if (eval->parsed()) return cmd_eval(out, eval_dataset, eval_models);
    if (sweep->parsed()) {
      if (out.empty()) throw std::invalid_argument("sweep needs --out");
      return cmd_sweep(config_path, seed, out, variable, values, reps, schemes,
                       sweep_models);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
