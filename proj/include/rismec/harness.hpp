#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rismec/io.hpp"

namespace rismec {

/// Per-component noise added to the inputs after labeling; labels and the
/// Loc1 channel targets always come from clean channels.
struct Corruption {
  double sigma_csi = 0.0;  // on the channel feature vector
  double sigma_loc = 0.0;  // on the UE coordinates, meters
};

/// Supervised samples labeled by the block-coordinate solver. One row per
/// kept sample; a sample whose solve fails is skipped and logged.
struct Dataset {
  SystemConfig config;
  std::uint64_t seed = 0;
  Corruption corruption;
  std::vector<std::uint64_t> sample_seeds;  // regenerates each channel draw
  Matrix csi_features;      // possibly corrupted inputs for the CSI net
  Matrix loc_features;      // possibly corrupted inputs for the location nets
  Matrix labels;            // [theta/2pi | a], all in [0,1]
  Matrix channel_targets;   // clean channel features, Loc1 regression targets
  std::vector<double> teacher_bits;
  std::vector<std::string> skip_log;
};

/// Label vector for a solved instance: phase angles wrapped to [0,2pi) and
/// divided by 2pi, then the energy splits appended. The phases are not
/// re-rotated: the direct link anchors the global phase, so reassembling the
/// labels reproduces the teacher's objective.
RVector solution_labels(const Solution& solution, const SystemConfig& config);

std::uint64_t sample_seed(std::uint64_t dataset_seed, long index);

Dataset gen_dataset(const SystemConfig& config, long count,
                    const Corruption& corruption, std::uint64_t seed);

Json dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(const Json& j);

/// Fit one of the three nets ("csi", "loc1", "loc2") on the dataset,
/// installing the model and the scalers it needs into `models`.
FitResult train_surrogate(SurrogateModels& models, const std::string& net,
                          const Dataset& data, const FitConfig& fit_config);

struct SurrogatePathStats {
  bool present = false;
  double mean_ratio = 0.0;
  double median_ratio = 0.0;
  double p10_ratio = 0.0;
  std::vector<double> bits;
};

struct SurrogateReport {
  std::vector<double> teacher_bits;
  SurrogatePathStats csi;
  SurrogatePathStats loc;
};

/// Per-sample TCTB of the inferred solutions against the teacher labels.
/// Channels are regenerated from the stored sample seeds; inputs are the
/// dataset's (possibly corrupted) feature rows.
SurrogateReport evaluate_surrogates(const SurrogateModels& models,
                                    const Dataset& test);

struct SweepSpec {
  std::string variable;  // E | M | N | zeta_d | sigma_dx | sigma_dz
  std::vector<double> values;
  int replications = 1;
  std::vector<std::string> schemes;  // bcd zf equal no-ris csi loc
  SystemConfig base;
  std::uint64_t seed = 0;
  const SurrogateModels* models = nullptr;  // needed for csi/loc schemes
};

struct SweepRow {
  std::string variable;
  double value = 0.0;
  int replication = 0;
  std::string scheme;
  double tctb_bits = 0.0;  // NaN on failure
  double runtime_s = 0.0;
  std::uint64_t seed = 0;
  std::string note;
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec);

void save_sweep_csv(const std::vector<SweepRow>& rows,
                    const std::filesystem::path& path);

/// Run one scheme on one instance. Schemes csi/loc require trained models.
Solution run_scheme(const std::string& scheme, const ChannelSet& channels,
                    const SystemConfig& config,
                    const SurrogateModels* models = nullptr,
                    const Corruption* corruption = nullptr,
                    std::uint64_t noise_seed = 0);

}  // namespace rismec
