#pragma once

#include <string>
#include <vector>

#include "rismec/channel.hpp"

namespace rismec {

/// A candidate (phi, a, W) with its objective value and, for solver output,
/// the per-outer-iteration objective trace.
struct Solution {
  CVector phi;            // K unit-modulus reflecting coefficients
  RVector a;              // N energy splits in [0,1]
  CMatrix w;              // M x N receive beamformers, column n for UE n
  double objective_bits = 0.0;
  std::vector<double> trace;  // outer-iteration objective values, bits
  bool converged = true;
  std::string warning;
};

/// Column n = H_AP diag(phi) h_r,n + h_d,n.
CMatrix effective_channels(const ChannelSet& channels, const CVector& phi);

/// Uplink SINR of UE n after the receive filter w_n. Throws on a zero w_n.
double sinr(int n, const RVector& a, const CMatrix& w, const CMatrix& h_eff,
            const SystemConfig& config);

/// Offloaded bits B*T*log2(1 + SINR_n) over the slot.
double rate_offload(int n, const RVector& a, const CMatrix& w,
                    const CMatrix& h_eff, const SystemConfig& config);

/// Locally computed bits (T/C_n) * cbrt((1-a_n) E_n / (T kappa_n)).
double rate_local(double a_n, int n, const SystemConfig& config);

/// Validates feasibility (|phi_k| = 1, a in the box, nonzero beamformers)
/// and returns the total completed task-input bits.
double tctb(const Solution& solution, const ChannelSet& channels,
            const SystemConfig& config);

}  // namespace rismec
