#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "rismec/objective.hpp"

namespace rismec {

/// Lifted phase variable Psi = phi_tilde phi_tilde^H, (K+1)x(K+1) Hermitian
/// PSD with unit diagonal; the auxiliary scalar sits in the last coordinate.
struct LiftedPhase {
  CMatrix psi;

  /// trace(Psi) - ||Psi||_s, zero exactly at rank one.
  double rank_residual() const;
};

/// The phase subproblem after lifting: quadratic-form matrices, direct-link
/// powers and effective noise for each (n, i) pair at fixed (W, a).
struct PhaseProblem {
  std::vector<std::vector<CMatrix>> q;  // q[n][i], (K+1)x(K+1) Hermitian
  Eigen::MatrixXd hd2;                  // |w_n^H h_d,i|^2
  RVector noise;                        // sigma^2 ||w_n||^2
  RVector p;                            // a_n E_n / T
};

/// Q_{n,i} assembled from h_r,n,i^RIS = w_n^H H_AP diag(h_r,i) and
/// h_d,n,i = w_n^H h_d,i; Hermitian with zero bottom-right entry.
std::vector<std::vector<CMatrix>> build_q_matrices(const ChannelSet& channels,
                                                   const CMatrix& w);

PhaseProblem build_phase_problem(const ChannelSet& channels, const CMatrix& w,
                                 const RVector& a, const SystemConfig& config);

/// Per-UE concave pair (F1_n, F2_n) in log2 units; their difference is
/// log2(1 + SINR_n) at the phase recovered from a rank-one Psi.
std::vector<std::pair<double, double>> f_terms(const CMatrix& psi,
                                               const PhaseProblem& prob);

/// B*T * sum_n (F1_n - F2_n), the phase-step objective in bits.
double phase_objective_bits(const CMatrix& psi, const PhaseProblem& prob,
                            const SystemConfig& config);

/// B*T * sum_n (F1_n - F2hat_n(.; anchor)), the linearized surrogate in bits.
double phase_surrogate_bits(const CMatrix& psi, const CMatrix& anchor,
                            const PhaseProblem& prob, const SystemConfig& config);

/// One convex approximation round: projected gradient ascent on the
/// linearized surrogate plus the rank-one penalty rho * <z1 z1^H, Psi> over
/// {PSD, unit diagonal}. The unit diagonal fixes trace(Psi), so the penalty
/// is the DC linearization of -(trace - ||Psi||_s). Returns a point whose
/// penalized surrogate is never below the anchor's; falls back to the anchor
/// on stagnation. rho < 0 selects an automatic scale from the surrogate
/// gradient at the anchor.
LiftedPhase solve_p11(const PhaseProblem& prob, const LiftedPhase& anchor,
                      const SystemConfig& config, bool* improved = nullptr,
                      double rho = -1.0);

/// Recover the unit-modulus phase vector from a near-rank-one Psi.
/// Throws std::invalid_argument when the rank-one residual exceeds eps_psi
/// or the auxiliary scalar is degenerate.
CVector extract_phi(const LiftedPhase& psi, const SystemConfig& config);

/// Diagnostic row emitted by the solver when a trace sink is installed.
struct TraceRow {
  int outer_iter;
  int step;        // 1 = phase, 2 = beamforming, 3 = energy, 0 = outer total
  int inner_iter;  // 0 for outer rows
  double objective_bits;
  double rank_residual;
};

struct PhaseStepResult {
  LiftedPhase psi;
  CVector phi;
  std::vector<double> inner_trace_bits;  // R1^(l)
};

/// DC loop for the phase block: iterate solve_p11 from the previous lifted
/// iterate until |R1^(l) - R1^(l-1)| < eps_1, then extract phi.
PhaseStepResult dc_phase_step(const LiftedPhase& psi_prev,
                              const ChannelSet& channels, const CMatrix& w,
                              const RVector& a, const SystemConfig& config);

/// Cyclic coordinate ascent on the true objective over the unit-modulus
/// phases at fixed (W, a); monotone, used to polish the lifted-step extract.
CVector phase_polish(const CVector& phi, const ChannelSet& channels,
                     const CMatrix& w, const RVector& a,
                     const SystemConfig& config);

/// Closed-form receive beamformers: column n is the leading generalized
/// eigenvector of (Theta_n, Theta_{-n}); a UE with zero transmit power gets
/// its matched filter.
CMatrix beamforming_step(const CMatrix& h_eff, const RVector& a,
                         const SystemConfig& config);

struct EnergyStepResult {
  RVector a;
  std::vector<double> inner_trace_bits;  // R3^(m)
};

/// DC loop for the energy block: projected gradient ascent on the concave
/// surrogate over [0, a_cap]^N until |R3^(m) - R3^(m-1)| < eps_3.
EnergyStepResult dc_energy_step(const CMatrix& h_eff, const CMatrix& w,
                                const RVector& a_prev, const SystemConfig& config);

struct BcdOptions {
  bool skip_phase_step = false;   // no-RIS baseline
  bool fix_energy = false;        // equal-energy baseline
  std::optional<Solution> init;
  std::vector<TraceRow>* trace_sink = nullptr;
};

/// Three-step block coordinate descent on (phi, W, a). The outer objective
/// trace is nondecreasing; stops when |R_chi - R_{chi-1}| < eps or the outer
/// iteration cap is hit (best iterate returned with a warning).
Solution bcd_solve(const ChannelSet& channels, const SystemConfig& config,
                   const BcdOptions& options = {});

/// Computable upper envelope: interference-free offloading at full power
/// plus full local computing, summed over UEs.
double objective_upper_bound(const ChannelSet& channels, const SystemConfig& config);

}  // namespace rismec
