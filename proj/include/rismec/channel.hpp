#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "rismec/numerics.hpp"

namespace rismec {

using Vec3 = Eigen::Vector3d;

/// Scenario constants: counts, budgets, geometry, path loss, Rician
/// parameters and solver tolerances. Defaults follow the reference
/// simulation setup (8 UEs, 8 AP antennas, 8x3 RIS, 5 s slot, 40 MHz,
/// -60 dBm noise, -10 dB reference gain at 1 m).
struct SystemConfig {
  int n_ue = 8;       // N
  int m_ant = 8;      // M
  int k_y = 8;        // RIS grid columns
  int k_z = 3;        // RIS grid rows
  double slot_s = 5.0;       // T
  double bandwidth_hz = 40e6;  // B
  double noise_w = 1e-9;       // sigma^2, -60 dBm
  std::vector<double> energy_j;       // E_n, defaults filled by finalize()
  std::vector<double> cycles_per_bit; // C_n
  std::vector<double> kappa;          // kappa_n
  Vec3 ap_pos{0.0, 20.0, 5.0};
  Vec3 ris_pos{40.0, 0.0, 20.0};
  double area_x0 = 20.0;  // serving square spans [x0, x0+side] x [y0, y0+side]
  double area_y0 = 0.0;   // the square touches the y=0 line holding the RIS
  double area_side = 40.0;
  double l0 = 0.1;   // reference gain, -10 dB
  double d0 = 1.0;   // reference distance, m
  double alpha_d = 3.5;
  double alpha_r = 2.5;
  double alpha_ap = 2.0;
  double ris_element_gain = std::pow(10.0, 0.3);  // 3 dBi per element
  double zeta_r = 1.0;
  double zeta_ap = 1.0;
  double zeta_d = 0.0;
  double eps_bits_rel = 1e-3;   // outer/inner tolerances as a fraction of B*T
  double eps_psi = 1e-4;
  double a_cap = 1.0 - 1e-6;
  int max_outer_iters = 50;
  int max_inner_iters = 30;

  int k_ris() const { return k_y * k_z; }
  double energy_rate(int n) const { return energy_j[n] / slot_s; }  // E_n/T
  double eps_bits() const { return eps_bits_rel * bandwidth_hz * slot_s; }

  /// Fill per-UE vectors that were left empty with the default scalars
  /// (10 J, 200 cycles/bit, 1e-28).
  void finalize();
  /// Throws std::invalid_argument on any violated bound.
  void validate() const;
};

/// The three channel blocks plus the UE drop that generated them.
struct ChannelSet {
  CMatrix h_d;   // M x N, UE -> AP direct
  CMatrix h_r;   // K x N, UE -> RIS
  CMatrix h_ap;  // M x K, RIS -> AP
  std::vector<Vec3> ue_positions;
};

/// ULA response exp(j*pi*(m-1)*sin_angle), half-wavelength spacing.
/// Throws std::invalid_argument when |sin_angle| > 1.
CVector steering_ula(double sin_angle, int m);

/// URA response e_y kron e_z for elevation beta (from the z-axis) and
/// azimuth gamma (in the x-y plane from the x-axis):
/// e_y(k) = exp(j*pi*(k-1)*sin(beta)*sin(gamma)),
/// e_z(k) = exp(j*pi*(k-1)*cos(beta)*sin(gamma)).
CVector steering_ura(double elev, double azim, int k_y, int k_z);

/// extra_gain * l0 * (d/d0)^(-alpha). Throws when d < d0.
double path_loss(double d, double alpha, double l0, double d0,
                 double extra_gain = 1.0);

/// Draw UE positions uniformly in the serving square and generate the three
/// Rician channel blocks. Deterministic per (config, seed).
ChannelSet gen_channels(const SystemConfig& config, std::uint64_t seed);

}  // namespace rismec
