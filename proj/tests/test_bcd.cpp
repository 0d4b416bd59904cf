#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rismec/baselines.hpp"
#include "rismec/bcd.hpp"
#include "test_support.hpp"

using namespace rismec;
using test::random_complex;

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

ChannelSet random_channels(const SystemConfig& c, std::mt19937_64& rng,
                           double scale = 1e-3) {
  // Magnitudes in the same regime as the physical path losses so the rate
  // expressions stay well conditioned against the noise floor.
  ChannelSet cs;
  cs.h_d = scale * random_complex(c.m_ant, c.n_ue, rng);
  cs.h_r = scale * random_complex(c.k_ris(), c.n_ue, rng);
  cs.h_ap = scale * random_complex(c.m_ant, c.k_ris(), rng);
  cs.ue_positions.assign(c.n_ue, Vec3(30.0, 30.0, 0.0));
  return cs;
}

CVector random_phases(int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, 2.0 * M_PI);
  CVector phi(k);
  for (int i = 0; i < k; ++i) phi(i) = std::polar(1.0, ang(rng));
  return phi;
}

RVector random_splits(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ua(0.1, 0.9);
  RVector a(n);
  for (int i = 0; i < n; ++i) a(i) = ua(rng);
  return a;
}

LiftedPhase lift_phi(const CVector& phi) {
  CVector phi_tilde(phi.size() + 1);
  phi_tilde.head(phi.size()) = phi;
  phi_tilde(phi.size()) = Complex(1.0, 0.0);
  return LiftedPhase{phi_tilde * phi_tilde.adjoint()};
}

}  // namespace

TEST_CASE("build_q_matrices satisfies the lifted quadratic identity") {
  SystemConfig c = make_config(3, 4, 2, 2);
  std::mt19937_64 rng(1);
  ChannelSet cs = random_channels(c, rng);
  CMatrix w = random_complex(c.m_ant, c.n_ue, rng);
  auto q = build_q_matrices(cs, w);
  for (int rep = 0; rep < 20; ++rep) {
    CVector phi = random_phases(c.k_ris(), rng);
    CVector phi_tilde(c.k_ris() + 1);
    phi_tilde.head(c.k_ris()) = phi;
    phi_tilde(c.k_ris()) = Complex(1.0, 0.0);
    CMatrix h_eff = effective_channels(cs, phi);
    for (int n = 0; n < c.n_ue; ++n) {
      for (int i = 0; i < c.n_ue; ++i) {
        double quad = (phi_tilde.adjoint() * q[n][i] * phi_tilde).real().value();
        double direct = std::norm(w.col(n).dot(cs.h_d.col(i)));
        double full = std::norm(w.col(n).dot(h_eff.col(i)));
        CHECK(quad + direct == doctest::Approx(full).epsilon(1e-9));
        CHECK((q[n][i] - q[n][i].adjoint()).norm() < 1e-14 * q[n][i].norm());
        CHECK(std::abs(q[n][i](c.k_ris(), c.k_ris())) < 1e-16);
      }
    }
  }
}

TEST_CASE("build_q_matrices zero direct link empties the border") {
  SystemConfig c = make_config(2, 3, 2, 1);
  std::mt19937_64 rng(3);
  ChannelSet cs = random_channels(c, rng);
  cs.h_d.setZero();
  CMatrix w = random_complex(c.m_ant, c.n_ue, rng);
  auto q = build_q_matrices(cs, w);
  const int k = c.k_ris();
  for (int n = 0; n < c.n_ue; ++n) {
    for (int i = 0; i < c.n_ue; ++i) {
      CHECK(q[n][i].row(k).norm() < 1e-16);
      CHECK(q[n][i].col(k).norm() < 1e-16);
    }
  }
}

TEST_CASE("build_q_matrices K=1 hand expansion") {
  SystemConfig c = make_config(1, 2, 1, 1);
  std::mt19937_64 rng(5);
  ChannelSet cs = random_channels(c, rng);
  CMatrix w = random_complex(2, 1, rng);
  auto q = build_q_matrices(cs, w);
  Complex h_ris = (w.col(0).adjoint() * cs.h_ap)(0, 0) * cs.h_r(0, 0);
  Complex h_d = w.col(0).dot(cs.h_d.col(0));
  CHECK(std::abs(q[0][0](0, 0) - Complex(std::norm(h_ris), 0.0)) < 1e-12 * std::norm(h_ris));
  CHECK(std::abs(q[0][0](0, 1) - std::conj(h_ris) * h_d) < 1e-12 * std::abs(h_d));
  CHECK(std::abs(q[0][0](1, 0) - std::conj(h_d) * h_ris) < 1e-12 * std::abs(h_d));
  CHECK(std::abs(q[0][0](1, 1)) < 1e-16);
}

TEST_CASE("f_terms difference equals the per-UE rate at rank-one Psi") {
  SystemConfig c = make_config(3, 3, 2, 2);
  std::mt19937_64 rng(7);
  ChannelSet cs = random_channels(c, rng);
  CMatrix w = random_complex(c.m_ant, c.n_ue, rng);
  RVector a = random_splits(c.n_ue, rng);
  PhaseProblem prob = build_phase_problem(cs, w, a, c);
  for (int rep = 0; rep < 10; ++rep) {
    CVector phi = random_phases(c.k_ris(), rng);
    auto terms = f_terms(lift_phi(phi).psi, prob);
    CMatrix h_eff = effective_channels(cs, phi);
    for (int n = 0; n < c.n_ue; ++n) {
      double rate = std::log2(1.0 + sinr(n, a, w, h_eff, c));
      CHECK(terms[n].first - terms[n].second == doctest::Approx(rate).epsilon(1e-9));
    }
  }
}

TEST_CASE("f_terms single UE has a Psi-independent interference term") {
  SystemConfig c = make_config(1, 2, 2, 1);
  std::mt19937_64 rng(9);
  ChannelSet cs = random_channels(c, rng);
  CMatrix w = random_complex(2, 1, rng);
  RVector a = RVector::Constant(1, 0.7);
  PhaseProblem prob = build_phase_problem(cs, w, a, c);
  double expected_f2 = std::log2(c.noise_w * w.col(0).squaredNorm());
  for (int rep = 0; rep < 5; ++rep) {
    auto terms = f_terms(lift_phi(random_phases(c.k_ris(), rng)).psi, prob);
    CHECK(terms[0].second == doctest::Approx(expected_f2).epsilon(1e-12));
  }
}

TEST_CASE("phase surrogate is tight at the anchor and minorizes elsewhere") {
  SystemConfig c = make_config(3, 3, 2, 2);
  std::mt19937_64 rng(11);
  ChannelSet cs = random_channels(c, rng);
  CMatrix w = random_complex(c.m_ant, c.n_ue, rng);
  RVector a = random_splits(c.n_ue, rng);
  PhaseProblem prob = build_phase_problem(cs, w, a, c);
  for (int rep = 0; rep < 100; ++rep) {
    CMatrix anchor = lift_phi(random_phases(c.k_ris(), rng)).psi;
    CMatrix other = lift_phi(random_phases(c.k_ris(), rng)).psi;
    double obj_anchor = phase_objective_bits(anchor, prob, c);
    CHECK(phase_surrogate_bits(anchor, anchor, prob, c) ==
          doctest::Approx(obj_anchor).epsilon(1e-9));
    CHECK(phase_surrogate_bits(other, anchor, prob, c) <=
          phase_objective_bits(other, prob, c) + 1e-9 * std::abs(obj_anchor));
  }
}

TEST_CASE("solve_p11 never lowers the surrogate and keeps feasibility") {
  SystemConfig c = make_config(3, 3, 2, 2);
  std::mt19937_64 rng(13);
  ChannelSet cs = random_channels(c, rng);
  CMatrix w = random_complex(c.m_ant, c.n_ue, rng);
  RVector a = random_splits(c.n_ue, rng);
  PhaseProblem prob = build_phase_problem(cs, w, a, c);
  for (int rep = 0; rep < 5; ++rep) {
    LiftedPhase anchor = lift_phi(random_phases(c.k_ris(), rng));
    // rho = 0 isolates the surrogate ascent from the rank-one penalty.
    bool improved = false;
    LiftedPhase next = solve_p11(prob, anchor, c, &improved, 0.0);
    CHECK(phase_surrogate_bits(next.psi, anchor.psi, prob, c) >=
          phase_surrogate_bits(anchor.psi, anchor.psi, prob, c) - 1e-6);
    // Approximate feasibility of the loosely projected iterate.
    auto pairs = hermitian_eig(CMatrix(0.5 * (next.psi + next.psi.adjoint())));
    CHECK(pairs.back().value >= -2e-3);
    for (int k = 0; k < next.psi.rows(); ++k) {
      CHECK(std::abs(next.psi(k, k) - Complex(1.0, 0.0)) < 2e-3);
    }
  }
}

TEST_CASE("extract_phi recovers an exact rank-one lift") {
  SystemConfig c = make_config(2, 2, 2, 2);
  std::mt19937_64 rng(17);
  CVector phi = random_phases(c.k_ris(), rng);
  CVector rec = extract_phi(lift_phi(phi), c);
  for (int k = 0; k < c.k_ris(); ++k) {
    CHECK(std::abs(rec(k)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(rec(k) - phi(k)) < 1e-10);
  }
}

TEST_CASE("extract_phi rejects the identity and survives small perturbations") {
  SystemConfig c = make_config(2, 2, 2, 2);
  CHECK_THROWS_AS(extract_phi(LiftedPhase{CMatrix::Identity(5, 5)}, c),
                  std::invalid_argument);

  std::mt19937_64 rng(19);
  ChannelSet cs = random_channels(c, rng);
  CMatrix w = random_complex(c.m_ant, c.n_ue, rng);
  RVector a = random_splits(c.n_ue, rng);
  PhaseProblem prob = build_phase_problem(cs, w, a, c);
  CVector phi = random_phases(c.k_ris(), rng);
  LiftedPhase exact = lift_phi(phi);
  CMatrix noise = test::random_hermitian(c.k_ris() + 1, rng);
  LiftedPhase near{project_psd_unit_diag(exact.psi + 1e-6 * noise)};
  CVector rec = extract_phi(near, c);
  double v_exact = phase_objective_bits(lift_phi(phi).psi, prob, c);
  double v_rec = phase_objective_bits(lift_phi(rec).psi, prob, c);
  CHECK(std::abs(v_rec - v_exact) < 1e-3 * std::abs(v_exact));
}

TEST_CASE("dc_phase_step inner trace is nondecreasing and the result near rank one") {
  SystemConfig c = make_config(2, 2, 2, 1);
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 8; ++rep) {
    ChannelSet cs = random_channels(c, rng);
    CMatrix w = random_complex(c.m_ant, c.n_ue, rng);
    RVector a = random_splits(c.n_ue, rng);
    PhaseStepResult out = dc_phase_step(lift_phi(random_phases(c.k_ris(), rng)),
                                        cs, w, a, c);
    for (size_t l = 1; l < out.inner_trace_bits.size(); ++l) {
      CHECK(out.inner_trace_bits[l] >= out.inner_trace_bits[l - 1] - 1e-6);
    }
    CHECK(out.psi.rank_residual() <= c.eps_psi);
    for (int k = 0; k < c.k_ris(); ++k) {
      CHECK(std::abs(out.phi(k)) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("dc_phase_step without an AP-RIS path leaves the objective unchanged") {
  SystemConfig c = make_config(2, 3, 2, 1);
  std::mt19937_64 rng(29);
  ChannelSet cs = random_channels(c, rng);
  cs.h_ap.setZero();
  CMatrix w = random_complex(c.m_ant, c.n_ue, rng);
  RVector a = random_splits(c.n_ue, rng);
  PhaseProblem prob = build_phase_problem(cs, w, a, c);
  LiftedPhase anchor = lift_phi(CVector::Ones(c.k_ris()));
  double before = phase_objective_bits(anchor.psi, prob, c);
  PhaseStepResult out = dc_phase_step(anchor, cs, w, a, c);
  double after = phase_objective_bits(lift_phi(out.phi).psi, prob, c);
  CHECK(after == doctest::Approx(before).epsilon(1e-9));
}

TEST_CASE("phase_polish is monotone in the true objective") {
  SystemConfig c = make_config(3, 3, 2, 2);
  std::mt19937_64 rng(31);
  ChannelSet cs = random_channels(c, rng);
  CMatrix w = random_complex(c.m_ant, c.n_ue, rng);
  RVector a = random_splits(c.n_ue, rng);
  PhaseProblem prob = build_phase_problem(cs, w, a, c);
  for (int rep = 0; rep < 5; ++rep) {
    CVector phi = random_phases(c.k_ris(), rng);
    CVector polished = phase_polish(phi, cs, w, a, c);
    CHECK(phase_objective_bits(lift_phi(polished).psi, prob, c) >=
          phase_objective_bits(lift_phi(phi).psi, prob, c) - 1e-9);
    for (int k = 0; k < c.k_ris(); ++k) {
      CHECK(std::abs(polished(k)) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("beamforming_step single UE returns the matched filter") {
  SystemConfig c = make_config(1, 4, 1, 1);
  std::mt19937_64 rng(37);
  CMatrix h_eff = 1e-3 * random_complex(4, 1, rng);
  RVector a = RVector::Constant(1, 0.5);
  CMatrix w = beamforming_step(h_eff, a, c);
  CHECK(std::abs(w.col(0).normalized().dot(h_eff.col(0).normalized())) ==
        doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("beamforming_step attains the generalized eigenvalue SINR and dominates samples") {
  SystemConfig c = make_config(3, 4, 1, 1);
  std::mt19937_64 rng(41);
  CMatrix h_eff = 1e-3 * random_complex(4, 3, rng);
  RVector a = random_splits(3, rng);
  CMatrix w = beamforming_step(h_eff, a, c);
  for (int n = 0; n < 3; ++n) {
    double p_n = a(n) * c.energy_rate(n);
    CMatrix theta_n = p_n * h_eff.col(n) * h_eff.col(n).adjoint();
    CMatrix theta_rest = c.noise_w * CMatrix::Identity(4, 4);
    for (int i = 0; i < 3; ++i) {
      if (i != n) theta_rest += a(i) * c.energy_rate(i) * h_eff.col(i) * h_eff.col(i).adjoint();
    }
    double lam = generalized_max_eigvec(theta_n, theta_rest).value;
    double s = sinr(n, a, w, h_eff, c);
    CHECK(s == doctest::Approx(lam).epsilon(1e-8));
    for (int rep = 0; rep < 300; ++rep) {
      CMatrix trial = w;
      trial.col(n) = test::random_unit(4, rng);
      CHECK(sinr(n, a, trial, h_eff, c) <= s * (1.0 + 1e-8) + 1e-12);
    }
  }
}

TEST_CASE("dc_energy_step single UE matches a 1-D golden-section oracle") {
  SystemConfig c = make_config(1, 3, 1, 1);
  std::mt19937_64 rng(43);
  CMatrix h_eff = 1e-3 * random_complex(3, 1, rng);
  CMatrix w(3, 1);
  w.col(0) = h_eff.col(0).normalized();
  EnergyStepResult out = dc_energy_step(h_eff, w, RVector::Constant(1, 0.5), c);

  auto value = [&](double a) {
    RVector av = RVector::Constant(1, a);
    return rate_offload(0, av, w, h_eff, c) + rate_local(a, 0, c);
  };
  double lo = 0.0, hi = c.a_cap;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = value(x1), f2 = value(x2);
  while (hi - lo > 1e-8) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = value(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = value(x1);
    }
  }
  double a_star = 0.5 * (lo + hi);
  CHECK(std::abs(out.a(0) - a_star) < 1e-4);
  CHECK(value(out.a(0)) >= value(a_star) - 1e-6 * std::abs(value(a_star)));
}

TEST_CASE("dc_energy_step pushes everything local when offloading is hopeless") {
  SystemConfig c = make_config(2, 3, 1, 1);
  c.noise_w = 1e12;  // offload rate effectively zero
  c.validate();
  std::mt19937_64 rng(47);
  CMatrix h_eff = 1e-3 * random_complex(3, 2, rng);
  CMatrix w = random_complex(3, 2, rng);
  EnergyStepResult out = dc_energy_step(h_eff, w, RVector::Constant(2, 0.5), c);
  CHECK(out.a(0) < 1e-3);
  CHECK(out.a(1) < 1e-3);
}

TEST_CASE("dc_energy_step inner trace is nondecreasing") {
  SystemConfig c = make_config(3, 3, 1, 1);
  std::mt19937_64 rng(53);
  for (int rep = 0; rep < 20; ++rep) {
    CMatrix h_eff = 1e-3 * random_complex(3, 3, rng);
    CMatrix w = random_complex(3, 3, rng);
    EnergyStepResult out = dc_energy_step(h_eff, w, random_splits(3, rng), c);
    for (size_t m = 1; m < out.inner_trace_bits.size(); ++m) {
      CHECK(out.inner_trace_bits[m] >= out.inner_trace_bits[m - 1] - 1e-6);
    }
    for (int n = 0; n < 3; ++n) {
      CHECK(out.a(n) >= 0.0);
      CHECK(out.a(n) <= c.a_cap);
    }
  }
}

TEST_CASE("bcd_solve outer trace is nondecreasing and below the upper envelope") {
  SystemConfig c = make_config(2, 2, 2, 1);
  std::mt19937_64 rng(59);
  for (int rep = 0; rep < 5; ++rep) {
    ChannelSet cs = gen_channels(c, 100 + rep);
    Solution sol = bcd_solve(cs, c);
    REQUIRE(sol.trace.size() >= 2);
    for (size_t i = 1; i < sol.trace.size(); ++i) {
      CHECK(sol.trace[i] >= sol.trace[i - 1] - 1e-6);
    }
    double bound = objective_upper_bound(cs, c);
    for (double v : sol.trace) CHECK(v <= bound);
    CHECK(sol.objective_bits == doctest::Approx(tctb(sol, cs, c)).epsilon(1e-12));
  }
}

TEST_CASE("bcd_solve equals the no-RIS baseline when the reflected path is absent") {
  SystemConfig c = make_config(2, 3, 2, 1);
  c.zeta_d = 0.0;
  ChannelSet cs = gen_channels(c, 7);
  cs.h_ap.setZero();
  Solution full = bcd_solve(cs, c);
  Solution base = solve_no_ris(cs, c);
  CHECK(full.objective_bits ==
        doctest::Approx(base.objective_bits).epsilon(1e-6));
}

TEST_CASE("bcd_solve honors an explicit initialization") {
  SystemConfig c = make_config(2, 2, 2, 1);
  ChannelSet cs = gen_channels(c, 11);
  Solution warm = bcd_solve(cs, c);
  BcdOptions opts;
  opts.init = warm;
  Solution again = bcd_solve(cs, c, opts);
  // Restarting from an optimum cannot lose ground.
  CHECK(again.objective_bits >= warm.objective_bits - 1e-6);
}
