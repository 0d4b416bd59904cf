#include "rismec/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>

#include "rismec/baselines.hpp"
#include "rismec/bcd.hpp"

namespace rismec {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  double idx = p * (v.size() - 1);
  long lo = static_cast<long>(std::floor(idx));
  long hi = static_cast<long>(std::ceil(idx));
  double frac = idx - lo;
  return v[lo] * (1 - frac) + v[hi] * frac;
}

void fill_path_stats(SurrogatePathStats& stats,
                     const std::vector<double>& teacher) {
  stats.present = true;
  std::vector<double> ratios(stats.bits.size());
  for (size_t i = 0; i < stats.bits.size(); ++i) {
    ratios[i] = stats.bits[i] / teacher[i];
  }
  double sum = 0.0;
  for (double r : ratios) sum += r;
  stats.mean_ratio = ratios.empty() ? 0.0 : sum / ratios.size();
  stats.median_ratio = percentile(ratios, 0.5);
  stats.p10_ratio = percentile(ratios, 0.1);
}

}  // namespace

RVector solution_labels(const Solution& solution, const SystemConfig& config) {
  const int k = config.k_ris();
  const int n = config.n_ue;
  RVector y(k + n);
  // The phases are labeled as-is: the direct link anchors the global phase,
  // so a common rotation would change the objective rather than remove a
  // redundancy, and the teacher could no longer reproduce its own score.
  for (int i = 0; i < k; ++i) {
    double theta = std::arg(solution.phi(i));
    if (theta < 0) theta += 2.0 * M_PI;
    y(i) = theta / (2.0 * M_PI);
  }
  for (int i = 0; i < n; ++i) y(k + i) = solution.a(i);
  return y;
}

std::uint64_t sample_seed(std::uint64_t dataset_seed, long index) {
  return mix64(dataset_seed ^ mix64(static_cast<std::uint64_t>(index) + 1));
}

Dataset gen_dataset(const SystemConfig& config, long count,
                    const Corruption& corruption, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("gen_dataset: negative count");
  Dataset data;
  data.config = config;
  data.seed = seed;
  data.corruption = corruption;

  const long feat_dim = 2 * (config.m_ant * config.n_ue +
                             config.k_ris() * config.n_ue +
                             config.m_ant * config.k_ris());
  std::vector<RVector> csi_rows, loc_rows, label_rows, target_rows;
  for (long s = 0; s < count; ++s) {
    const std::uint64_t cs_seed = sample_seed(seed, s);
    ChannelSet channels = gen_channels(config, cs_seed);
    Solution sol;
    try {
      sol = bcd_solve(channels, config);
    } catch (const std::exception& e) {
      data.skip_log.push_back("sample " + std::to_string(s) + " (seed " +
                              std::to_string(cs_seed) + "): " + e.what());
      continue;
    }
    data.sample_seeds.push_back(cs_seed);
    data.teacher_bits.push_back(sol.objective_bits);
    RVector clean_csi = csi_features(channels);
    target_rows.push_back(clean_csi);
    label_rows.push_back(solution_labels(sol, config));

    // Corruption streams are per-sample so row s is independent of count.
    std::mt19937_64 noise_rng(mix64(cs_seed ^ 0xc0ffee));
    RVector x = clean_csi;
    if (corruption.sigma_csi > 0) {
      x = corrupt(x.transpose(), corruption.sigma_csi, noise_rng).transpose();
    }
    csi_rows.push_back(x);
    RVector z = location_features(channels);
    if (corruption.sigma_loc > 0) {
      z = corrupt(z.transpose(), corruption.sigma_loc, noise_rng).transpose();
    }
    loc_rows.push_back(z);
  }

  const long kept = static_cast<long>(csi_rows.size());
  data.csi_features.resize(kept, feat_dim);
  data.loc_features.resize(kept, 2 * config.n_ue);
  data.labels.resize(kept, config.k_ris() + config.n_ue);
  data.channel_targets.resize(kept, feat_dim);
  for (long r = 0; r < kept; ++r) {
    data.csi_features.row(r) = csi_rows[r];
    data.loc_features.row(r) = loc_rows[r];
    data.labels.row(r) = label_rows[r];
    data.channel_targets.row(r) = target_rows[r];
  }
  return data;
}

Json dataset_to_json(const Dataset& d) {
  return Json{
      {"schema", "rismec.dataset.v1"},
      {"config", config_to_json(d.config)},
      {"seed", d.seed},
      {"sigma_csi", d.corruption.sigma_csi},
      {"sigma_loc", d.corruption.sigma_loc},
      {"sample_seeds", d.sample_seeds},
      {"csi_features", matrix_to_json(d.csi_features)},
      {"loc_features", matrix_to_json(d.loc_features)},
      {"labels", matrix_to_json(d.labels)},
      {"channel_targets", matrix_to_json(d.channel_targets)},
      {"teacher_bits", d.teacher_bits},
      {"skip_log", d.skip_log},
  };
}

Dataset dataset_from_json(const Json& j) {
  if (j.at("schema").get<std::string>() != "rismec.dataset.v1") {
    throw std::invalid_argument("expected schema 'rismec.dataset.v1'");
  }
  Dataset d;
  d.config = config_from_json(j.at("config"));
  d.seed = j.at("seed").get<std::uint64_t>();
  d.corruption.sigma_csi = j.at("sigma_csi").get<double>();
  d.corruption.sigma_loc = j.at("sigma_loc").get<double>();
  d.sample_seeds = j.at("sample_seeds").get<std::vector<std::uint64_t>>();
  d.csi_features = matrix_from_json(j.at("csi_features"));
  d.loc_features = matrix_from_json(j.at("loc_features"));
  d.labels = matrix_from_json(j.at("labels"));
  d.channel_targets = matrix_from_json(j.at("channel_targets"));
  d.teacher_bits = j.at("teacher_bits").get<std::vector<double>>();
  d.skip_log = j.at("skip_log").get<std::vector<std::string>>();
  return d;
}

FitResult train_surrogate(SurrogateModels& models, const std::string& net,
                          const Dataset& data, const FitConfig& fit_config) {
  if (data.labels.rows() == 0) throw std::invalid_argument("train_surrogate: empty dataset");
  const int feat_dim = static_cast<int>(data.csi_features.cols());
  const int out_dim = static_cast<int>(data.labels.cols());
  FitConfig fc = fit_config;
  if (net == "csi") {
    models.csi_input_scaler = MinMaxScaler::fit(data.csi_features);
    Matrix x = models.csi_input_scaler->transform(data.csi_features);
    MlpModel model = MlpModel::init(csi_net_spec(feat_dim, out_dim), fc.seed);
    fc.loss = LossKind::kMae;
    FitResult result = fit(model, x, data.labels, fc);
    models.csi = std::move(model);
    return result;
  }
  if (net == "loc1") {
    models.loc_input_scaler = MinMaxScaler::fit(data.loc_features);
    models.channel_feature_scaler = MinMaxScaler::fit(data.channel_targets);
    Matrix x = models.loc_input_scaler->transform(data.loc_features);
    Matrix y = models.channel_feature_scaler->transform(data.channel_targets);
    MlpModel model = MlpModel::init(
        loc1_net_spec(static_cast<int>(x.cols()), feat_dim), fc.seed);
    fc.loss = LossKind::kMse;
    FitResult result = fit(model, x, y, fc);
    models.loc1 = std::move(model);
    return result;
  }
  if (net == "loc2") {
    if (!models.loc_input_scaler) {
      models.loc_input_scaler = MinMaxScaler::fit(data.loc_features);
    }
    Matrix x = models.loc_input_scaler->transform(data.loc_features);
    MlpModel model = MlpModel::init(
        loc2_net_spec(static_cast<int>(x.cols()), out_dim), fc.seed);
    fc.loss = LossKind::kMae;
    FitResult result = fit(model, x, data.labels, fc);
    models.loc2 = std::move(model);
    return result;
  }
  throw std::invalid_argument("train_surrogate: unknown net '" + net + "'");
}

SurrogateReport evaluate_surrogates(const SurrogateModels& models,
                                    const Dataset& test) {
  SurrogateReport report;
  report.teacher_bits = test.teacher_bits;
  const bool have_csi = models.csi && models.csi_input_scaler;
  const bool have_loc = models.loc1 && models.loc2 && models.loc_input_scaler &&
                        models.channel_feature_scaler;
  for (long s = 0; s < static_cast<long>(test.sample_seeds.size()); ++s) {
    ChannelSet channels = gen_channels(test.config, test.sample_seeds[s]);
    if (have_csi) {
      Solution sol = infer_solution(models, test.csi_features.row(s),
                                    test.config, &channels);
      report.csi.bits.push_back(tctb(sol, channels, test.config));
    }
    if (have_loc) {
      Solution sol = infer_solution(models, test.loc_features.row(s),
                                    test.config, nullptr);
      report.loc.bits.push_back(tctb(sol, channels, test.config));
    }
  }
  if (have_csi) fill_path_stats(report.csi, report.teacher_bits);
  if (have_loc) fill_path_stats(report.loc, report.teacher_bits);
  return report;
}

Solution run_scheme(const std::string& scheme, const ChannelSet& channels,
                    const SystemConfig& config, const SurrogateModels* models,
                    const Corruption* corruption, std::uint64_t noise_seed) {
  if (scheme == "bcd") return bcd_solve(channels, config);
  if (scheme == "zf") return solve_zf(channels, config);
  if (scheme == "equal") return solve_equal_energy(channels, config);
  if (scheme == "no-ris") return solve_no_ris(channels, config);
  if (scheme == "csi" || scheme == "loc") {
    if (!models) throw std::invalid_argument("scheme '" + scheme + "' needs trained models");
    std::mt19937_64 rng(mix64(noise_seed ^ 0xc0ffee));
    if (scheme == "csi") {
      RVector x = csi_features(channels);
      if (corruption && corruption->sigma_csi > 0) {
        x = corrupt(x.transpose(), corruption->sigma_csi, rng).transpose();
      }
      return infer_solution(*models, x, config, &channels);
    }
    RVector z = location_features(channels);
    if (corruption && corruption->sigma_loc > 0) {
      z = corrupt(z.transpose(), corruption->sigma_loc, rng).transpose();
    }
    Solution sol = infer_solution(*models, z, config, nullptr);
    // The location path beamforms on predicted channels; score on the true ones.
    sol.objective_bits = tctb(sol, channels, config);
    return sol;
  }
  throw std::invalid_argument("unknown scheme '" + scheme + "'");
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  if (spec.replications < 1) throw std::invalid_argument("run_sweep: replications < 1");
  std::vector<SweepRow> rows;
  for (double value : spec.values) {
    SystemConfig config = spec.base;
    Corruption corruption;
    if (spec.variable == "E") {
      config.energy_j.assign(config.n_ue, value);
    } else if (spec.variable == "M") {
      config.m_ant = static_cast<int>(value);
    } else if (spec.variable == "N") {
      config.n_ue = static_cast<int>(value);
      config.energy_j.clear();
      config.cycles_per_bit.clear();
      config.kappa.clear();
    } else if (spec.variable == "zeta_d") {
      config.zeta_d = value;
    } else if (spec.variable == "sigma_dx") {
      corruption.sigma_csi = value;
    } else if (spec.variable == "sigma_dz") {
      corruption.sigma_loc = value;
    } else {
      throw std::invalid_argument("run_sweep: unknown variable '" + spec.variable + "'");
    }
    config.finalize();
    config.validate();

    for (int rep = 0; rep < spec.replications; ++rep) {
      const std::uint64_t cell_seed =
          mix64(spec.seed ^ mix64(std::hash<std::string>{}(spec.variable) ^
                                  std::bit_cast<std::uint64_t>(value)) ^
                mix64(static_cast<std::uint64_t>(rep) + 1));
      ChannelSet channels = gen_channels(config, cell_seed);
      for (const auto& scheme : spec.schemes) {
        SweepRow row{spec.variable, value, rep, scheme, 0.0, 0.0, cell_seed, ""};
        auto t0 = std::chrono::steady_clock::now();
        try {
          Solution sol = run_scheme(scheme, channels, config, spec.models,
                                    &corruption, cell_seed);
          row.tctb_bits = tctb(sol, channels, config);
        } catch (const std::exception& e) {
          row.tctb_bits = std::numeric_limits<double>::quiet_NaN();
          row.note = e.what();
        }
        row.runtime_s = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t0).count();
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

void save_sweep_csv(const std::vector<SweepRow>& rows,
                    const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "schema=rismec.sweep.v1\n";
  out << "variable,value,replication,scheme,tctb_bits,runtime_s,seed,note\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.variable << ',' << r.value << ',' << r.replication << ','
        << r.scheme << ',' << r.tctb_bits << ',' << r.runtime_s << ','
        << r.seed << ',' << r.note << '\n';
  }
}

}  // namespace rismec
