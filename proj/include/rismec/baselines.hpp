#pragma once

#include "rismec/bcd.hpp"

namespace rismec {

/// ZF bank W = H (H^H H)^-1; falls back to the Moore-Penrose pseudo-inverse
/// (with `used_pinv` set) when H^H H is rank deficient, which covers M < N.
CMatrix zf_beamformers(const CMatrix& h_eff, bool* used_pinv = nullptr);

/// Per-UE 1-D maximization of the interference-free offload rate plus the
/// local-computing rate over [0, a_cap], golden-section to 1e-6.
RVector zf_energy_split(const CMatrix& w_zf, const SystemConfig& config);

/// Full BCD with ZF receive beamforming substituted for the eigen step.
Solution solve_zf(const ChannelSet& channels, const SystemConfig& config);

/// Direct offloading without the RIS: the reflected path is removed and the
/// phase step skipped; phi is reported as the all-ones placeholder.
Solution solve_no_ris(const ChannelSet& channels, const SystemConfig& config);

/// Equal energy allocation: a_n = 0.5 fixed, phase and beamforming steps
/// alternate with the same tolerances.
Solution solve_equal_energy(const ChannelSet& channels, const SystemConfig& config);

}  // namespace rismec
