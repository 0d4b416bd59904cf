#include "rismec/channel.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace rismec {

void SystemConfig::finalize() {
  if (energy_j.empty()) energy_j.assign(n_ue, 10.0);
  if (cycles_per_bit.empty()) cycles_per_bit.assign(n_ue, 200.0);
  if (kappa.empty()) kappa.assign(n_ue, 1e-28);
}

void SystemConfig::validate() const {
  auto fail = [](const char* what) { throw std::invalid_argument(what); };
  if (n_ue < 1 || m_ant < 1 || k_y < 1 || k_z < 1) fail("config: counts must be >= 1");
  if (slot_s <= 0 || bandwidth_hz <= 0 || noise_w <= 0) fail("config: T, B, sigma2 must be > 0");
  if (static_cast<int>(energy_j.size()) != n_ue ||
      static_cast<int>(cycles_per_bit.size()) != n_ue ||
      static_cast<int>(kappa.size()) != n_ue) {
    fail("config: per-UE vectors must have length N");
  }
  for (double e : energy_j)
    if (e <= 0) fail("config: energy budgets must be > 0");
  for (double c : cycles_per_bit)
    if (c <= 0) fail("config: cycles/bit must be > 0");
  for (double k : kappa)
    if (k <= 0) fail("config: kappa must be > 0");
  for (double z : {zeta_r, zeta_ap, zeta_d})
    if (z < 0 || z > 1) fail("config: zeta values must lie in [0,1]");
  if (l0 <= 0 || d0 <= 0) fail("config: L0 and d0 must be > 0");
  if (area_side <= 0) fail("config: serving square side must be > 0");
  if (a_cap <= 0 || a_cap > 1) fail("config: a_cap must lie in (0,1]");
}

CVector steering_ula(double sin_angle, int m) {
  if (std::abs(sin_angle) > 1.0) {
    throw std::invalid_argument("steering_ula: |sin_angle| must be <= 1");
  }
  CVector e(m);
  for (int i = 0; i < m; ++i) {
    e(i) = std::polar(1.0, M_PI * i * sin_angle);
  }
  return e;
}

CVector steering_ura(double elev, double azim, int k_y, int k_z) {
  const double py = std::sin(elev) * std::sin(azim);
  const double pz = std::cos(elev) * std::sin(azim);
  CVector ey(k_y), ez(k_z);
  for (int i = 0; i < k_y; ++i) ey(i) = std::polar(1.0, M_PI * i * py);
  for (int i = 0; i < k_z; ++i) ez(i) = std::polar(1.0, M_PI * i * pz);
  CVector e(k_y * k_z);
  for (int iy = 0; iy < k_y; ++iy) {
    for (int iz = 0; iz < k_z; ++iz) {
      e(iy * k_z + iz) = ey(iy) * ez(iz);
    }
  }
  return e;
}

double path_loss(double d, double alpha, double l0, double d0, double extra_gain) {
  if (d0 <= 0 || d < d0) {
    throw std::invalid_argument("path_loss: requires d >= d0 > 0");
  }
  return extra_gain * l0 * std::pow(d / d0, -alpha);
}

namespace {

// Elevation from the z-axis and azimuth in the x-y plane from the x-axis of
// the unit direction `u`.
struct Angles {
  double elev;
  double azim;
};

Angles spherical(const Vec3& u) {
  double z = std::clamp(u.z(), -1.0, 1.0);
  return {std::acos(z), std::atan2(u.y(), u.x())};
}

// The AP ULA lies along the x-axis: the per-element phase progression is the
// direction cosine of the link along that axis.
double ula_dircos(const Vec3& u) { return std::clamp(u.x(), -1.0, 1.0); }

// Per-stream generator: stream 0 = UE drop, 1..3 = the Rayleigh draws of the
// three channel blocks. Parallel callers use distinct master seeds.
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x9e3779b9u};
  return std::mt19937_64(seq);
}

CMatrix rayleigh(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  CMatrix g(rows, cols);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) {
      g(r, c) = Complex(gauss(rng), gauss(rng)) * inv_sqrt2;
    }
  }
  return g;
}

}  // namespace

ChannelSet gen_channels(const SystemConfig& config, std::uint64_t seed) {
  config.validate();
  const int n = config.n_ue;
  const int m = config.m_ant;
  const int k = config.k_ris();

  ChannelSet cs;
  cs.ue_positions.resize(n);
  auto pos_rng = stream_rng(seed, 0);
  std::uniform_real_distribution<double> ux(config.area_x0, config.area_x0 + config.area_side);
  std::uniform_real_distribution<double> uy(config.area_y0, config.area_y0 + config.area_side);
  for (int i = 0; i < n; ++i) {
    double x = ux(pos_rng);
    double y = uy(pos_rng);
    cs.ue_positions[i] = Vec3(x, y, 0.0);
  }

  auto rng_d = stream_rng(seed, 1);
  auto rng_r = stream_rng(seed, 2);
  auto rng_ap = stream_rng(seed, 3);
  CMatrix eta_d = rayleigh(m, n, rng_d);
  CMatrix eta_r = rayleigh(k, n, rng_r);
  CMatrix gamma_ap = rayleigh(m, k, rng_ap);

  cs.h_d = CMatrix(m, n);
  cs.h_r = CMatrix(k, n);

  // RIS -> AP block, rank-one LoS outer product.
  {
    Vec3 diff = config.ris_pos - config.ap_pos;
    double d = diff.norm();
    double loss = path_loss(d, config.alpha_ap, config.l0, config.d0, config.ris_element_gain);
    CVector e_ap = steering_ula(ula_dircos(diff / d), m);
    Vec3 dep = config.ap_pos - config.ris_pos;
    Angles ang = spherical(dep / d);
    CVector e_ris = steering_ura(ang.elev, ang.azim, config.k_y, config.k_z);
    CMatrix los = std::sqrt(loss) * e_ap * e_ris.adjoint();
    cs.h_ap = std::sqrt(config.zeta_ap) * los +
              std::sqrt(1.0 - config.zeta_ap) * std::sqrt(loss) * gamma_ap;
  }

  for (int i = 0; i < n; ++i) {
    const Vec3& ue = cs.ue_positions[i];
    // Direct UE -> AP.
    {
      Vec3 diff = ue - config.ap_pos;
      double d = diff.norm();
      double loss = path_loss(d, config.alpha_d, config.l0, config.d0);
      CVector e = steering_ula(ula_dircos(diff / d), m);
      cs.h_d.col(i) = std::sqrt(config.zeta_d) * std::sqrt(loss) * e +
                      std::sqrt(1.0 - config.zeta_d) * std::sqrt(loss) * eta_d.col(i);
    }
    // UE -> RIS.
    {
      Vec3 diff = ue - config.ris_pos;
      double d = diff.norm();
      double loss = path_loss(d, config.alpha_r, config.l0, config.d0, config.ris_element_gain);
      Angles ang = spherical(diff / d);
      CVector e = steering_ura(ang.elev, ang.azim, config.k_y, config.k_z);
      cs.h_r.col(i) = std::sqrt(config.zeta_r) * std::sqrt(loss) * e +
                      std::sqrt(1.0 - config.zeta_r) * std::sqrt(loss) * eta_r.col(i);
    }
  }
  return cs;
}

}  // namespace rismec
