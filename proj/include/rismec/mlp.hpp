#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rismec/objective.hpp"

namespace rismec {

using Matrix = Eigen::MatrixXd;  // rows = samples, cols = features

enum class Activation { kNone, kElu, kSigmoid };
enum class LossKind { kMae, kMse };

struct LayerSpec {
  int width = 0;
  Activation activation = Activation::kNone;
  bool batch_norm = false;
  double dropout = 0.0;
};

/// Layer list plus input dimension; each hidden block runs
/// dense -> batch norm -> activation -> dropout in that order.
struct MlpSpec {
  int input_dim = 0;
  std::vector<LayerSpec> layers;

  int output_dim() const { return layers.back().width; }
  long parameter_count() const;  // dense w*(fan_in+1) plus 4*width per BN
};

/// Layouts mirroring the three reference networks. `input_dim` for the CSI
/// net is 2(MN+KN+MK); the location nets take 2N inputs.
MlpSpec csi_net_spec(int input_dim, int output_dim);
MlpSpec loc1_net_spec(int input_dim, int output_dim);
MlpSpec loc2_net_spec(int input_dim, int output_dim);

struct DenseParams {
  Matrix w;  // out x in
  RVector b;
  // Adam state, same shapes.
  Matrix m_w, v_w;
  RVector m_b, v_b;
};

struct BatchNormParams {
  RVector scale, shift, running_mean, running_var;
  RVector m_scale, v_scale, m_shift, v_shift;
  double momentum = 0.99;
  double epsilon = 1e-3;
};

struct MlpModel {
  MlpSpec spec;
  std::vector<DenseParams> dense;
  std::vector<std::optional<BatchNormParams>> bn;
  long adam_step = 0;

  static MlpModel init(const MlpSpec& spec, std::uint64_t seed);
};

/// Per-feature affine map of the training range onto [0,1]. A degenerate
/// (constant) column maps to 0 and inverts to the stored minimum.
struct MinMaxScaler {
  RVector min, max;

  static MinMaxScaler fit(const Matrix& data);
  Matrix transform(const Matrix& data) const;
  Matrix inverse_transform(const Matrix& scaled) const;
};

/// Batch forward pass. Dropout (train mode only) draws its masks from `rng`;
/// infer mode is deterministic and uses the BN running statistics.
Matrix forward(const MlpModel& model, const Matrix& x, bool train,
               std::mt19937_64* rng = nullptr);

double loss(const Matrix& pred, const Matrix& target, LossKind kind);

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// One training step: forward in train mode, analytic backward pass through
/// dense/BN/activation/dropout, Adam update with bias correction.
/// Returns the batch loss. Throws on a non-finite loss.
double backward_and_adam_step(MlpModel& model, const Matrix& x,
                              const Matrix& target, LossKind kind,
                              const AdamConfig& adam, std::mt19937_64& rng);

struct FitConfig {
  int batch_size = 128;
  int epochs = 1000;
  double validation_split = 0.2;
  AdamConfig adam;
  LossKind loss = LossKind::kMae;
  std::uint64_t seed = 0;
};

struct FitResult {
  std::vector<double> train_loss;  // one entry per epoch
  std::vector<double> val_loss;
  double best_val_loss = 0.0;
  int best_epoch = -1;
};

/// Deterministic mini-batch training; the model is left at the snapshot with
/// the best validation loss.
FitResult fit(MlpModel& model, const Matrix& x, const Matrix& y,
              const FitConfig& config);

/// Additive zero-mean Gaussian corruption with per-component std `sigma`.
Matrix corrupt(const Matrix& x, double sigma, std::mt19937_64& rng);

/// Trained models plus the scalers needed at inference time.
struct SurrogateModels {
  std::optional<MlpModel> csi;
  std::optional<MlpModel> loc1;
  std::optional<MlpModel> loc2;
  std::optional<MinMaxScaler> csi_input_scaler;
  std::optional<MinMaxScaler> loc_input_scaler;
  std::optional<MinMaxScaler> channel_feature_scaler;  // Loc1 targets
};

/// Flatten a channel set into the CSI feature vector
/// [Re/Im h_d | Re/Im h_r | Re/Im H_AP].
RVector csi_features(const ChannelSet& channels);

/// Rebuild a channel set from the CSI feature vector.
ChannelSet channels_from_features(const RVector& features, const SystemConfig& config);

RVector location_features(const ChannelSet& channels);

/// Map a network output [theta_tilde | a] plus the channels used for
/// beamforming into a full feasible solution: phi_k = exp(j 2 pi theta_k),
/// a clipped to [0, a_cap], W from the closed-form eigen step.
Solution assemble_solution(const RVector& output, const ChannelSet& beamforming_channels,
                           const SystemConfig& config);

/// CSI path: true channel features -> DNN-CSI -> (phi, a); W on the true
/// channels. Location path: DNN-Loc2 -> (phi, a); DNN-Loc1 predicts channel
/// features used only for the beamforming step. Throws when the needed
/// models are missing.
Solution infer_solution(const SurrogateModels& models, const RVector& input,
                        const SystemConfig& config,
                        const ChannelSet* channels_for_csi);

}  // namespace rismec
