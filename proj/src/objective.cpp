#include "rismec/objective.hpp"

#include <cmath>
#include <stdexcept>

namespace rismec {

CMatrix effective_channels(const ChannelSet& channels, const CVector& phi) {
  if (channels.h_r.rows() != phi.size() || channels.h_ap.cols() != phi.size() ||
      channels.h_ap.rows() != channels.h_d.rows() ||
      channels.h_r.cols() != channels.h_d.cols()) {
    throw std::invalid_argument("effective_channels: dimension mismatch");
  }
  return channels.h_ap * phi.asDiagonal() * channels.h_r + channels.h_d;
}

double sinr(int n, const RVector& a, const CMatrix& w, const CMatrix& h_eff,
            const SystemConfig& config) {
  const int n_ue = static_cast<int>(h_eff.cols());
  if (n < 0 || n >= n_ue || a.size() != n_ue || w.cols() != n_ue ||
      w.rows() != h_eff.rows()) {
    throw std::invalid_argument("sinr: dimension mismatch");
  }
  const CVector w_n = w.col(n);
  const double w_norm2 = w_n.squaredNorm();
  if (w_norm2 == 0.0) {
    throw std::invalid_argument("sinr: zero beamformer gives an undefined ratio");
  }
  double signal = a(n) * config.energy_rate(n) * std::norm(w_n.dot(h_eff.col(n)));
  double denom = config.noise_w * w_norm2;
  for (int i = 0; i < n_ue; ++i) {
    if (i == n) continue;
    denom += a(i) * config.energy_rate(i) * std::norm(w_n.dot(h_eff.col(i)));
  }
  return signal / denom;
}

double rate_offload(int n, const RVector& a, const CMatrix& w,
                    const CMatrix& h_eff, const SystemConfig& config) {
  return config.bandwidth_hz * config.slot_s *
         std::log2(1.0 + sinr(n, a, w, h_eff, config));
}

double rate_local(double a_n, int n, const SystemConfig& config) {
  if (a_n >= 1.0) return 0.0;
  const double e_rate = config.energy_rate(n);
  const double f_n = std::cbrt((1.0 - a_n) * e_rate / config.kappa[n]);
  return config.slot_s / config.cycles_per_bit[n] * f_n;
}

double tctb(const Solution& solution, const ChannelSet& channels,
            const SystemConfig& config) {
  const int n_ue = config.n_ue;
  if (solution.phi.size() != config.k_ris() || solution.a.size() != n_ue ||
      solution.w.cols() != n_ue || solution.w.rows() != config.m_ant) {
    throw std::invalid_argument("tctb: solution shape mismatch");
  }
  for (int k = 0; k < solution.phi.size(); ++k) {
    if (std::abs(std::abs(solution.phi(k)) - 1.0) > 1e-9) {
      throw std::invalid_argument("tctb: phi entries must have unit modulus");
    }
  }
  for (int i = 0; i < n_ue; ++i) {
    if (solution.a(i) < -1e-12 || solution.a(i) > 1.0 + 1e-12) {
      throw std::invalid_argument("tctb: energy splits must lie in [0,1]");
    }
    if (solution.w.col(i).squaredNorm() == 0.0) {
      throw std::invalid_argument("tctb: zero beamformer column");
    }
  }
  CMatrix h_eff = effective_channels(channels, solution.phi);
  double total = 0.0;
  for (int i = 0; i < n_ue; ++i) {
    total += rate_offload(i, solution.a, solution.w, h_eff, config);
    total += rate_local(solution.a(i), i, config);
  }
  return total;
}

}  // namespace rismec
