#include "rismec/baselines.hpp"

#include <cmath>

namespace rismec {

CMatrix zf_beamformers(const CMatrix& h_eff, bool* used_pinv) {
  const int n_ue = static_cast<int>(h_eff.cols());
  CMatrix gram = h_eff.adjoint() * h_eff;
  Eigen::FullPivLU<CMatrix> lu(gram);
  lu.setThreshold(1e-10);
  if (lu.isInvertible()) {
    if (used_pinv) *used_pinv = false;
    return h_eff * lu.inverse();
  }
  // Rank-deficient Gram matrix (covers M < N): minimum-norm pseudo-inverse.
  if (used_pinv) *used_pinv = true;
  CMatrix pinv = h_eff.completeOrthogonalDecomposition().pseudoInverse();  // N x M
  CMatrix w = pinv.adjoint();
  // A fully nulled column would make the SINR undefined; fall back to the
  // matched filter for it.
  for (int n = 0; n < n_ue; ++n) {
    if (w.col(n).norm() < 1e-14) w.col(n) = h_eff.col(n).normalized();
  }
  return w;
}

namespace {

// Golden-section maximization of a unimodal function on [lo, hi].
double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

RVector zf_energy_split(const CMatrix& w_zf, const SystemConfig& config) {
  const int n_ue = config.n_ue;
  RVector a(n_ue);
  const double bt = config.bandwidth_hz * config.slot_s;
  for (int n = 0; n < n_ue; ++n) {
    const double w_norm2 = w_zf.col(n).squaredNorm();
    const double e_rate = config.energy_rate(n);
    auto objective = [&](double a_n) {
      double off = bt * std::log2(1.0 + a_n * e_rate / (config.noise_w * w_norm2));
      return off + rate_local(a_n, n, config);
    };
    a(n) = golden_max(objective, 0.0, config.a_cap, 1e-6);
  }
  return a;
}

Solution solve_zf(const ChannelSet& channels, const SystemConfig& config) {
  config.validate();
  const int n_ue = config.n_ue;
  CVector phi = CVector::Ones(config.k_ris());
  RVector a = RVector::Constant(n_ue, 0.5);
  CMatrix w = zf_beamformers(effective_channels(channels, phi));

  Solution best;
  best.objective_bits = -1.0;
  double r_prev = 0.0;
  bool converged = false;
  Solution cur;
  for (int chi = 1; chi <= config.max_outer_iters; ++chi) {
    PhaseStepResult ps = dc_phase_step(
        LiftedPhase{[&] {
          CVector pt(config.k_ris() + 1);
          pt.head(config.k_ris()) = phi;
          pt(config.k_ris()) = Complex(1.0, 0.0);
          return CMatrix(pt * pt.adjoint());
        }()},
        channels, w, a, config);
    phi = ps.phi;
    CMatrix h_eff = effective_channels(channels, phi);
    w = zf_beamformers(h_eff);
    a = zf_energy_split(w, config);

    cur.phi = phi;
    cur.a = a;
    cur.w = w;
    double r = tctb(cur, channels, config);
    cur.objective_bits = r;
    cur.trace.push_back(r);
    if (r > best.objective_bits) {
      std::vector<double> trace = cur.trace;
      best = cur;
      best.trace = std::move(trace);
    }
    if (chi > 1 && std::abs(r - r_prev) < config.eps_bits()) {
      converged = true;
      break;
    }
    r_prev = r;
  }
  best.trace = cur.trace;
  best.converged = converged;
  if (!converged) best.warning = "outer iteration cap reached";
  return best;
}

Solution solve_no_ris(const ChannelSet& channels, const SystemConfig& config) {
  ChannelSet blocked = channels;
  blocked.h_ap.setZero();
  BcdOptions options;
  options.skip_phase_step = true;
  Solution sol = bcd_solve(blocked, config, options);
  sol.phi = CVector::Ones(config.k_ris());
  return sol;
}

Solution solve_equal_energy(const ChannelSet& channels, const SystemConfig& config) {
  BcdOptions options;
  options.fix_energy = true;
  Solution sol = bcd_solve(channels, config, options);
  return sol;
}

}  // namespace rismec
