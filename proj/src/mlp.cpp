#include "rismec/mlp.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "rismec/bcd.hpp"

namespace rismec {

long MlpSpec::parameter_count() const {
  long total = 0;
  int fan_in = input_dim;
  for (const auto& layer : layers) {
    total += static_cast<long>(layer.width) * (fan_in + 1);
    if (layer.batch_norm) total += 4L * layer.width;
    fan_in = layer.width;
  }
  return total;
}

namespace {

MlpSpec stacked_spec(int input_dim, std::vector<int> widths,
                     std::vector<double> dropout, int output_dim) {
  MlpSpec spec;
  spec.input_dim = input_dim;
  for (size_t i = 0; i < widths.size(); ++i) {
    spec.layers.push_back({widths[i], Activation::kElu, true, dropout[i]});
  }
  spec.layers.push_back({output_dim, Activation::kSigmoid, false, 0.0});
  return spec;
}

}  // namespace

MlpSpec csi_net_spec(int input_dim, int output_dim) {
  return stacked_spec(input_dim, {1024, 512, 256, 128, 128},
                      {0.1, 0.1, 0.1, 0.1, 0.05}, output_dim);
}

MlpSpec loc1_net_spec(int input_dim, int output_dim) {
  return stacked_spec(input_dim, {512, 512, 256, 128, 256},
                      {0.1, 0.1, 0.1, 0.1, 0.05}, output_dim);
}

MlpSpec loc2_net_spec(int input_dim, int output_dim) {
  return stacked_spec(input_dim, {512, 256, 128, 64, 32},
                      {0.1, 0.1, 0.1, 0.1, 0.05}, output_dim);
}

MlpModel MlpModel::init(const MlpSpec& spec, std::uint64_t seed) {
  MlpModel model;
  model.spec = spec;
  std::mt19937_64 rng(seed);
  int fan_in = spec.input_dim;
  for (const auto& layer : spec.layers) {
    DenseParams d;
    const double limit = std::sqrt(3.0 / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    d.w = Matrix::NullaryExpr(layer.width, fan_in, [&]() { return dist(rng); });
    d.b = RVector::Zero(layer.width);
    d.m_w = Matrix::Zero(layer.width, fan_in);
    d.v_w = Matrix::Zero(layer.width, fan_in);
    d.m_b = RVector::Zero(layer.width);
    d.v_b = RVector::Zero(layer.width);
    model.dense.push_back(std::move(d));
    if (layer.batch_norm) {
      BatchNormParams bn;
      bn.scale = RVector::Ones(layer.width);
      bn.shift = RVector::Zero(layer.width);
      bn.running_mean = RVector::Zero(layer.width);
      bn.running_var = RVector::Ones(layer.width);
      bn.m_scale = bn.v_scale = bn.m_shift = bn.v_shift = RVector::Zero(layer.width);
      model.bn.push_back(std::move(bn));
    } else {
      model.bn.push_back(std::nullopt);
    }
    fan_in = layer.width;
  }
  return model;
}

MinMaxScaler MinMaxScaler::fit(const Matrix& data) {
  if (data.rows() == 0) throw std::invalid_argument("MinMaxScaler: empty data");
  MinMaxScaler s;
  s.min = data.colwise().minCoeff();
  s.max = data.colwise().maxCoeff();
  return s;
}

Matrix MinMaxScaler::transform(const Matrix& data) const {
  Matrix out(data.rows(), data.cols());
  for (int c = 0; c < data.cols(); ++c) {
    double range = max(c) - min(c);
    if (range <= 0.0) {
      out.col(c).setZero();  // degenerate column
    } else {
      out.col(c) = (data.col(c).array() - min(c)) / range;
    }
  }
  return out;
}

Matrix MinMaxScaler::inverse_transform(const Matrix& scaled) const {
  Matrix out(scaled.rows(), scaled.cols());
  for (int c = 0; c < scaled.cols(); ++c) {
    double range = max(c) - min(c);
    if (range <= 0.0) {
      out.col(c).setConstant(min(c));
    } else {
      out.col(c) = scaled.col(c).array() * range + min(c);
    }
  }
  return out;
}

namespace {

Matrix apply_activation(const Matrix& z, Activation act) {
  switch (act) {
    case Activation::kNone:
      return z;
    case Activation::kElu:
      return z.unaryExpr([](double v) { return v > 0 ? v : std::expm1(v); });
    case Activation::kSigmoid:
      return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
  return z;
}

// Derivative in terms of the activation output (enough for ELU with
// alpha = 1 and for sigmoid).
Matrix activation_grad_from_output(const Matrix& out, Activation act) {
  switch (act) {
    case Activation::kNone:
      return Matrix::Ones(out.rows(), out.cols());
    case Activation::kElu:
      return out.unaryExpr([](double v) { return v > 0 ? 1.0 : v + 1.0; });
    case Activation::kSigmoid:
      return out.unaryExpr([](double v) { return v * (1.0 - v); });
  }
  return out;
}

struct LayerCache {
  Matrix input;     // X entering the dense layer
  Matrix bn_xhat;   // normalized pre-activation (BN layers)
  RVector bn_inv_std;
  Matrix activated;  // activation output
  Matrix drop_mask;  // inverted-dropout mask, empty when unused
};

Matrix forward_impl(const MlpModel& model, const Matrix& x, bool train,
                    std::mt19937_64* rng, std::vector<LayerCache>* caches,
                    std::vector<std::optional<BatchNormParams>>* bn_mutable) {
  if (x.cols() != model.spec.input_dim) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  Matrix cur = x;
  for (size_t l = 0; l < model.spec.layers.size(); ++l) {
    const LayerSpec& spec = model.spec.layers[l];
    LayerCache cache;
    if (caches) cache.input = cur;
    Matrix z = cur * model.dense[l].w.transpose();
    z.rowwise() += model.dense[l].b.transpose();

    if (model.bn[l]) {
      const BatchNormParams& bn = *model.bn[l];
      if (train) {
        RVector mean = z.colwise().mean();
        Matrix centered = z.rowwise() - mean.transpose();
        RVector var = centered.array().square().colwise().mean();
        RVector inv_std = (var.array() + bn.epsilon).sqrt().inverse();
        Matrix xhat = centered.array().rowwise() * inv_std.transpose().array();
        z = xhat.array().rowwise() * bn.scale.transpose().array();
        z.rowwise() += bn.shift.transpose();
        if (caches) {
          cache.bn_xhat = xhat;
          cache.bn_inv_std = inv_std;
        }
        if (bn_mutable) {
          BatchNormParams& mut = *(*bn_mutable)[l];
          mut.running_mean = bn.momentum * mut.running_mean + (1 - bn.momentum) * mean;
          mut.running_var = bn.momentum * mut.running_var + (1 - bn.momentum) * var;
        }
      } else {
        RVector inv_std = (bn.running_var.array() + bn.epsilon).sqrt().inverse();
        Matrix xhat = (z.rowwise() - bn.running_mean.transpose()).array().rowwise() *
                      inv_std.transpose().array();
        z = xhat.array().rowwise() * bn.scale.transpose().array();
        z.rowwise() += bn.shift.transpose();
      }
    }

    Matrix activated = apply_activation(z, spec.activation);
    if (caches) cache.activated = activated;

    if (train && spec.dropout > 0.0) {
      if (!rng) throw std::invalid_argument("forward: dropout needs an rng in train mode");
      const double keep = 1.0 - spec.dropout;
      std::bernoulli_distribution bern(keep);
      Matrix mask = Matrix::NullaryExpr(activated.rows(), activated.cols(),
                                        [&]() { return bern(*rng) ? 1.0 / keep : 0.0; });
      activated = activated.cwiseProduct(mask);
      if (caches) cache.drop_mask = std::move(mask);
    }
    if (caches) caches->push_back(std::move(cache));
    cur = std::move(activated);
  }
  return cur;
}

void adam_update(Matrix& param, Matrix& m, Matrix& v, const Matrix& grad,
                 const AdamConfig& adam, double bc1, double bc2) {
  m = adam.beta1 * m + (1 - adam.beta1) * grad;
  v = adam.beta2 * v.array().matrix() + (1 - adam.beta2) * grad.array().square().matrix();
  param.array() -= adam.lr * (m.array() / bc1) /
                   ((v.array() / bc2).sqrt() + adam.epsilon);
}

void adam_update(RVector& param, RVector& m, RVector& v, const RVector& grad,
                 const AdamConfig& adam, double bc1, double bc2) {
  m = adam.beta1 * m + (1 - adam.beta1) * grad;
  v = adam.beta2 * v.array().matrix() + (1 - adam.beta2) * grad.array().square().matrix();
  param.array() -= adam.lr * (m.array() / bc1) /
                   ((v.array() / bc2).sqrt() + adam.epsilon);
}

}  // namespace

Matrix forward(const MlpModel& model, const Matrix& x, bool train,
               std::mt19937_64* rng) {
  return forward_impl(model, x, train, rng, nullptr, nullptr);
}

double loss(const Matrix& pred, const Matrix& target, LossKind kind) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw std::invalid_argument("loss: shape mismatch");
  }
  Matrix diff = pred - target;
  if (kind == LossKind::kMae) return diff.cwiseAbs().mean();
  return diff.array().square().mean();
}

double backward_and_adam_step(MlpModel& model, const Matrix& x,
                              const Matrix& target, LossKind kind,
                              const AdamConfig& adam, std::mt19937_64& rng) {
  std::vector<LayerCache> caches;
  Matrix pred = forward_impl(model, x, true, &rng, &caches, &model.bn);
  double batch_loss = loss(pred, target, kind);
  if (!std::isfinite(batch_loss)) {
    throw std::runtime_error("backward_and_adam_step: non-finite loss");
  }

  const double count = static_cast<double>(pred.rows()) * pred.cols();
  Matrix grad;
  if (kind == LossKind::kMae) {
    grad = (pred - target).unaryExpr([](double v) {
      return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
    }) / count;
  } else {
    grad = 2.0 * (pred - target) / count;
  }

  model.adam_step += 1;
  const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(model.adam_step));
  const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(model.adam_step));

  for (int l = static_cast<int>(model.spec.layers.size()) - 1; l >= 0; --l) {
    const LayerSpec& spec = model.spec.layers[l];
    LayerCache& cache = caches[l];

    if (cache.drop_mask.size() > 0) grad = grad.cwiseProduct(cache.drop_mask);
    grad = grad.cwiseProduct(activation_grad_from_output(cache.activated, spec.activation));

    if (model.bn[l]) {
      BatchNormParams& bn = *model.bn[l];
      const double batch = static_cast<double>(grad.rows());
      RVector d_scale = grad.cwiseProduct(cache.bn_xhat).colwise().sum();
      RVector d_shift = grad.colwise().sum();
      Matrix d_xhat = grad.array().rowwise() * bn.scale.transpose().array();
      RVector sum_dxhat = d_xhat.colwise().sum();
      RVector sum_dxhat_xhat = d_xhat.cwiseProduct(cache.bn_xhat).colwise().sum();
      Matrix d_z = (batch * d_xhat).rowwise() - sum_dxhat.transpose();
      d_z -= (cache.bn_xhat.array().rowwise() *
              sum_dxhat_xhat.transpose().array()).matrix();
      d_z = ((d_z / batch).array().rowwise() *
             cache.bn_inv_std.transpose().array()).matrix();
      grad = std::move(d_z);
      adam_update(bn.scale, bn.m_scale, bn.v_scale, d_scale, adam, bc1, bc2);
      adam_update(bn.shift, bn.m_shift, bn.v_shift, d_shift, adam, bc1, bc2);
    }

    DenseParams& dense = model.dense[l];
    Matrix d_w = grad.transpose() * cache.input;
    RVector d_b = grad.colwise().sum();
    Matrix d_input = grad * dense.w;
    adam_update(dense.w, dense.m_w, dense.v_w, d_w, adam, bc1, bc2);
    adam_update(dense.b, dense.m_b, dense.v_b, d_b, adam, bc1, bc2);
    grad = std::move(d_input);
  }
  return batch_loss;
}

FitResult fit(MlpModel& model, const Matrix& x, const Matrix& y,
              const FitConfig& config) {
  if (x.rows() == 0) throw std::invalid_argument("fit: empty dataset");
  if (x.rows() != y.rows()) throw std::invalid_argument("fit: feature/label row mismatch");
  FitResult result;
  if (config.epochs <= 0) return result;

  // Validation split: trailing fraction, not shuffled.
  const long n_val = static_cast<long>(std::floor(config.validation_split * x.rows()));
  const long n_train = x.rows() - n_val;
  if (n_train <= 0) throw std::invalid_argument("fit: no training rows after split");
  Matrix x_train = x.topRows(n_train), y_train = y.topRows(n_train);
  Matrix x_val = x.bottomRows(n_val), y_val = y.bottomRows(n_val);

  std::mt19937_64 shuffle_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x5dee2f6a9c3b1d47ull);
  std::vector<long> order(n_train);
  std::iota(order.begin(), order.end(), 0);

  MlpModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = -1;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    long batches = 0;
    for (long start = 0; start < n_train; start += config.batch_size) {
      long len = std::min<long>(config.batch_size, n_train - start);
      Matrix xb(len, x.cols()), yb(len, y.cols());
      for (long i = 0; i < len; ++i) {
        xb.row(i) = x_train.row(order[start + i]);
        yb.row(i) = y_train.row(order[start + i]);
      }
      epoch_loss += backward_and_adam_step(model, xb, yb, config.loss,
                                           config.adam, dropout_rng);
      ++batches;
    }
    result.train_loss.push_back(epoch_loss / std::max<long>(1, batches));

    double val = n_val > 0
                     ? loss(forward(model, x_val, false), y_val, config.loss)
                     : result.train_loss.back();
    result.val_loss.push_back(val);
    if (val < best_val) {
      best_val = val;
      best_epoch = epoch;
      best = model;
    }
  }
  model = best;
  result.best_val_loss = best_val;
  result.best_epoch = best_epoch;
  return result;
}

Matrix corrupt(const Matrix& x, double sigma, std::mt19937_64& rng) {
  if (sigma < 0) throw std::invalid_argument("corrupt: sigma must be >= 0");
  if (sigma == 0) return x;
  std::normal_distribution<double> gauss(0.0, sigma);
  return x + Matrix::NullaryExpr(x.rows(), x.cols(), [&]() { return gauss(rng); });
}

RVector csi_features(const ChannelSet& channels) {
  const long m = channels.h_d.rows();
  const long n = channels.h_d.cols();
  const long k = channels.h_r.rows();
  RVector f(2 * (m * n + k * n + m * k));
  long idx = 0;
  auto emit = [&](const CMatrix& mat) {
    for (long c = 0; c < mat.cols(); ++c) {
      for (long r = 0; r < mat.rows(); ++r) {
        f(idx++) = mat(r, c).real();
        f(idx++) = mat(r, c).imag();
      }
    }
  };
  emit(channels.h_d);
  emit(channels.h_r);
  emit(channels.h_ap);
  return f;
}

ChannelSet channels_from_features(const RVector& features, const SystemConfig& config) {
  const long m = config.m_ant, n = config.n_ue, k = config.k_ris();
  if (features.size() != 2 * (m * n + k * n + m * k)) {
    throw std::invalid_argument("channels_from_features: dimension mismatch");
  }
  ChannelSet cs;
  cs.h_d.resize(m, n);
  cs.h_r.resize(k, n);
  cs.h_ap.resize(m, k);
  long idx = 0;
  auto fill = [&](CMatrix& mat) {
    for (long c = 0; c < mat.cols(); ++c) {
      for (long r = 0; r < mat.rows(); ++r) {
        double re = features(idx++);
        double im = features(idx++);
        mat(r, c) = Complex(re, im);
      }
    }
  };
  fill(cs.h_d);
  fill(cs.h_r);
  fill(cs.h_ap);
  return cs;
}

RVector location_features(const ChannelSet& channels) {
  RVector z(2 * channels.ue_positions.size());
  for (size_t i = 0; i < channels.ue_positions.size(); ++i) {
    z(2 * i) = channels.ue_positions[i].x();
    z(2 * i + 1) = channels.ue_positions[i].y();
  }
  return z;
}

Solution assemble_solution(const RVector& output,
                           const ChannelSet& beamforming_channels,
                           const SystemConfig& config) {
  const int k = config.k_ris();
  const int n = config.n_ue;
  if (output.size() != k + n) {
    throw std::invalid_argument("assemble_solution: output dimension mismatch");
  }
  Solution sol;
  sol.phi.resize(k);
  for (int i = 0; i < k; ++i) sol.phi(i) = std::polar(1.0, 2.0 * M_PI * output(i));
  sol.a.resize(n);
  for (int i = 0; i < n; ++i) sol.a(i) = std::clamp(output(k + i), 0.0, config.a_cap);
  CMatrix h_eff = effective_channels(beamforming_channels, sol.phi);
  sol.w = beamforming_step(h_eff, sol.a, config);
  sol.objective_bits = tctb(sol, beamforming_channels, config);
  return sol;
}

Solution infer_solution(const SurrogateModels& models, const RVector& input,
                        const SystemConfig& config,
                        const ChannelSet* channels_for_csi) {
  if (channels_for_csi) {
    if (!models.csi || !models.csi_input_scaler) {
      throw std::invalid_argument("infer_solution: CSI model missing");
    }
    Matrix x = models.csi_input_scaler->transform(input.transpose());
    RVector out = forward(*models.csi, x, false).row(0);
    return assemble_solution(out, *channels_for_csi, config);
  }
  if (!models.loc1 || !models.loc2 || !models.loc_input_scaler ||
      !models.channel_feature_scaler) {
    throw std::invalid_argument("infer_solution: location models missing");
  }
  Matrix z = models.loc_input_scaler->transform(input.transpose());
  RVector out = forward(*models.loc2, z, false).row(0);
  RVector feat_scaled = forward(*models.loc1, z, false).row(0);
  RVector feat = models.channel_feature_scaler->inverse_transform(
      feat_scaled.transpose()).row(0);
  ChannelSet predicted = channels_from_features(feat, config);
  return assemble_solution(out, predicted, config);
}

}  // namespace rismec
