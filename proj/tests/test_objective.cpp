#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rismec/objective.hpp"
#include "test_support.hpp"

using namespace rismec;
using test::random_complex;
using test::random_unit;

namespace {

SystemConfig make_config(int n_ue, int m_ant, int k_y, int k_z) {
  SystemConfig c;
  c.n_ue = n_ue;
  c.m_ant = m_ant;
  c.k_y = k_y;
  c.k_z = k_z;
  c.finalize();
  c.validate();
  return c;
}

ChannelSet random_channels(const SystemConfig& c, std::mt19937_64& rng) {
  ChannelSet cs;
  cs.h_d = random_complex(c.m_ant, c.n_ue, rng);
  cs.h_r = random_complex(c.k_ris(), c.n_ue, rng);
  cs.h_ap = random_complex(c.m_ant, c.k_ris(), rng);
  cs.ue_positions.assign(c.n_ue, Vec3(30.0, 30.0, 0.0));
  return cs;
}

CVector random_phases(int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  CVector phi(k);
  for (int i = 0; i < k; ++i) phi(i) = std::polar(1.0, ang(rng));
  return phi;
}

}  // namespace

TEST_CASE("effective_channels reduces to the direct link without an AP-RIS path") {
  SystemConfig c = make_config(3, 4, 2, 2);
  std::mt19937_64 rng(1);
  ChannelSet cs = random_channels(c, rng);
  cs.h_ap.setZero();
  CVector phi = random_phases(c.k_ris(), rng);
  CHECK((effective_channels(cs, phi) - cs.h_d).norm() == 0.0);
}

TEST_CASE("effective_channels all-ones single-element case") {
  SystemConfig c = make_config(2, 3, 1, 1);
  ChannelSet cs;
  cs.h_d = CMatrix::Ones(3, 2);
  cs.h_r = CMatrix::Ones(1, 2);
  cs.h_ap = CMatrix::Ones(3, 1);
  CVector phi = CVector::Ones(1);
  CMatrix h = effective_channels(cs, phi);
  for (int m = 0; m < 3; ++m)
    for (int n = 0; n < 2; ++n) CHECK(std::abs(h(m, n) - Complex(2.0, 0.0)) < 1e-14);
}

TEST_CASE("effective_channels matches the explicit summation oracle") {
  SystemConfig c = make_config(3, 4, 3, 2);
  std::mt19937_64 rng(7);
  ChannelSet cs = random_channels(c, rng);
  CVector phi = random_phases(c.k_ris(), rng);
  CMatrix h = effective_channels(cs, phi);
  for (int n = 0; n < c.n_ue; ++n) {
    CVector col = cs.h_d.col(n);
    for (int k = 0; k < c.k_ris(); ++k) col += cs.h_ap.col(k) * phi(k) * cs.h_r(k, n);
    CHECK((h.col(n) - col).norm() < 1e-12 * col.norm());
  }
}

TEST_CASE("sinr single-UE formula and zero-power boundary") {
  SystemConfig c = make_config(1, 3, 1, 1);
  std::mt19937_64 rng(3);
  CMatrix h_eff = random_complex(3, 1, rng);
  CMatrix w = random_complex(3, 1, rng);
  RVector a = RVector::Constant(1, 0.6);
  double p = a(0) * c.energy_rate(0);
  double expected = p * std::norm(w.col(0).dot(h_eff.col(0))) /
                    (c.noise_w * w.col(0).squaredNorm());
  CHECK(sinr(0, a, w, h_eff, c) == doctest::Approx(expected).epsilon(1e-12));
  a(0) = 0.0;
  CHECK(sinr(0, a, w, h_eff, c) == 0.0);
}

TEST_CASE("sinr hand-set two-UE scalar case gives 1/2") {
  SystemConfig c = make_config(2, 1, 1, 1);
  c.noise_w = 1.0;
  c.energy_j = {5.0, 5.0};  // E/T = 1 at T = 5 s
  c.validate();
  CMatrix h_eff = CMatrix::Ones(1, 2);
  CMatrix w = CMatrix::Ones(1, 2);
  RVector a = RVector::Ones(2);
  CHECK(sinr(0, a, w, h_eff, c) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sinr(1, a, w, h_eff, c) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("sinr rejects a zero beamformer and ignores w_n scaling") {
  SystemConfig c = make_config(2, 3, 1, 1);
  std::mt19937_64 rng(11);
  CMatrix h_eff = random_complex(3, 2, rng);
  CMatrix w = random_complex(3, 2, rng);
  RVector a = RVector::Constant(2, 0.5);
  CMatrix w0 = w;
  w0.col(0).setZero();
  CHECK_THROWS_AS(sinr(0, a, w0, h_eff, c), std::invalid_argument);
  double base = sinr(0, a, w, h_eff, c);
  for (int rep = 0; rep < 10; ++rep) {
    Complex scale = random_complex(1, 1, rng)(0, 0);
    CMatrix ws = w;
    ws.col(0) *= scale;
    CHECK(sinr(0, a, ws, h_eff, c) == doctest::Approx(base).epsilon(1e-10));
  }
}

TEST_CASE("rate_offload scalar evaluations") {
  // SINR = 1 engineered: M=1, h=1, w=1, p|h|^2/sigma^2 = 1.
  SystemConfig c = make_config(1, 1, 1, 1);
  c.noise_w = 1.0;
  c.energy_j = {5.0};
  c.validate();
  CMatrix h_eff = CMatrix::Ones(1, 1), w = CMatrix::Ones(1, 1);
  RVector a = RVector::Ones(1);
  CHECK(rate_offload(0, a, w, h_eff, c) == doctest::Approx(2e8).epsilon(1e-12));
  a(0) = 0.0;  // SINR = 0
  CHECK(rate_offload(0, a, w, h_eff, c) == 0.0);

  // SINR = 3 at B = T = 1 gives log2(4) = 2 bits.
  SystemConfig c2 = c;
  c2.bandwidth_hz = 1.0;
  c2.slot_s = 1.0;
  c2.energy_j = {3.0};
  c2.validate();
  RVector a2 = RVector::Ones(1);
  CHECK(rate_offload(0, a2, w, h_eff, c2) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("rate_local scalar evaluations and homogeneity") {
  SystemConfig c = make_config(1, 1, 1, 1);
  CHECK(rate_local(1.0, 0, c) == 0.0);
  // E = 10 J, T = 5 s, C = 200, kappa = 1e-28: f = cbrt(2e28) ~ 2.714e9 Hz.
  CHECK(rate_local(0.0, 0, c) == doctest::Approx(6.786e7).epsilon(1e-3));
  double base = rate_local(0.3, 0, c);
  SystemConfig c4 = c;
  c4.kappa = {4e-28};
  c4.validate();
  CHECK(rate_local(0.3, 0, c4) ==
        doctest::Approx(base * std::pow(4.0, -1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("tctb boundary cases") {
  SystemConfig c = make_config(1, 2, 1, 1);
  std::mt19937_64 rng(13);
  ChannelSet cs = random_channels(c, rng);
  Solution sol;
  sol.phi = CVector::Ones(1);
  sol.a = RVector::Ones(1);
  CMatrix h_eff = effective_channels(cs, sol.phi);
  sol.w = CMatrix(2, 1);
  sol.w.col(0) = h_eff.col(0).normalized();  // MRC
  // All energy offloaded: the local term vanishes.
  CHECK(tctb(sol, cs, c) == doctest::Approx(rate_offload(0, sol.a, sol.w, h_eff, c)));
  // Zero-beamformer rejected.
  Solution bad = sol;
  bad.w.setZero();
  CHECK_THROWS_AS(tctb(bad, cs, c), std::invalid_argument);
}

TEST_CASE("tctb with all energy local is independent of phi and W") {
  SystemConfig c = make_config(3, 4, 2, 2);
  std::mt19937_64 rng(17);
  ChannelSet cs = random_channels(c, rng);
  double expected = 0.0;
  for (int n = 0; n < c.n_ue; ++n) expected += rate_local(0.0, n, c);
  for (int rep = 0; rep < 5; ++rep) {
    Solution sol;
    sol.phi = random_phases(c.k_ris(), rng);
    sol.a = RVector::Zero(c.n_ue);
    sol.w = random_complex(c.m_ant, c.n_ue, rng);
    CHECK(tctb(sol, cs, c) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("tctb matches the term-by-term oracle") {
  SystemConfig c = make_config(4, 3, 2, 2);
  std::mt19937_64 rng(19);
  ChannelSet cs = random_channels(c, rng);
  Solution sol;
  sol.phi = random_phases(c.k_ris(), rng);
  sol.a = RVector::Constant(c.n_ue, 0.0);
  std::uniform_real_distribution<double> ua(0.0, 1.0);
  for (int n = 0; n < c.n_ue; ++n) sol.a(n) = ua(rng);
  sol.w = random_complex(c.m_ant, c.n_ue, rng);
  CMatrix h_eff = effective_channels(cs, sol.phi);
  double expected = 0.0;
  for (int n = 0; n < c.n_ue; ++n) {
    expected += rate_offload(n, sol.a, sol.w, h_eff, c) + rate_local(sol.a(n), n, c);
  }
  CHECK(tctb(sol, cs, c) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected >= 0.0);
  CHECK(std::isfinite(expected));
}

TEST_CASE("tctb validates feasibility") {
  SystemConfig c = make_config(2, 2, 1, 1);
  std::mt19937_64 rng(23);
  ChannelSet cs = random_channels(c, rng);
  Solution sol;
  sol.phi = CVector::Ones(1);
  sol.a = RVector::Constant(2, 0.5);
  sol.w = random_complex(2, 2, rng);
  CHECK_NOTHROW(tctb(sol, cs, c));
  Solution bad = sol;
  bad.phi(0) = Complex(2.0, 0.0);
  CHECK_THROWS_AS(tctb(bad, cs, c), std::invalid_argument);
  bad = sol;
  bad.a(1) = 1.5;
  CHECK_THROWS_AS(tctb(bad, cs, c), std::invalid_argument);
}

TEST_CASE("rate_offload monotone in own split, nonincreasing in interferers") {
  SystemConfig c = make_config(3, 4, 2, 2);
  std::mt19937_64 rng(29);
  ChannelSet cs = random_channels(c, rng);
  CVector phi = random_phases(c.k_ris(), rng);
  CMatrix h_eff = effective_channels(cs, phi);
  CMatrix w = random_complex(c.m_ant, c.n_ue, rng);
  RVector a = RVector::Constant(3, 0.5);
  double base = rate_offload(0, a, w, h_eff, c);
  RVector up = a;
  up(0) = 0.8;
  CHECK(rate_offload(0, up, w, h_eff, c) >= base);
  RVector intf = a;
  intf(1) = 0.9;
  CHECK(rate_offload(0, intf, w, h_eff, c) <= base);
}
