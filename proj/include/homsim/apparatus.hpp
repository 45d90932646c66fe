// apparatus.hpp
// Physical model of the fiber Hong-Ou-Mandel interferometer. Per generated
// pair, the coincidence probability as a function of the two input
// polarization states, the optical delay, and the instrument imperfections:
//
//   p(delay) = eta1 eta2 [ (T^2 + R^2) - 2 T R v_m g(delay) F ]
//
// with F = Tr(rho1' rho2) the overlap of the phase-shifted arm-1 state with
// the arm-2 state, v_m the non-polarization mode overlap, and
// g(delay) = exp(-(delay / L_c)^2) the dip envelope. Dark counts enter as a
// rate in the Monte Carlo layer, not here.

#pragma once

#include <homsim/qcore.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace homsim {

struct ApparatusParams {
  double transmittance = 0.5;     // beam-splitter intensity transmittance T
  double mode_overlap = 0.992;    // indistinguishability factor v_m
  double arm_phase_deg = 39.4;    // effective fiber phase shift on arm 1
  double eta1 = 0.51;             // detector quantum efficiencies
  double eta2 = 0.51;
  double pair_rate_hz = 25400.0;  // photon-pair generation rate
  double dark_coinc_hz = 0.0;     // accidental coincidence background
  double dip_width_um = 60.0;     // 1/e half-width of the dip envelope
  double shoulder_delay_um = 200.0;

  void validate() const {
    if (!(transmittance > 0.0 && transmittance < 1.0))
      throw std::domain_error("ApparatusParams: transmittance outside (0, 1)");
    if (!(mode_overlap >= 0.0 && mode_overlap <= 1.0))
      throw std::domain_error("ApparatusParams: mode_overlap outside [0, 1]");
    if (!is_finite(arm_phase_deg))
      throw std::domain_error("ApparatusParams: non-finite arm phase");
    if (!(eta1 >= 0.0 && eta1 <= 1.0) || !(eta2 >= 0.0 && eta2 <= 1.0))
      throw std::domain_error("ApparatusParams: detector efficiency outside [0, 1]");
    if (!(pair_rate_hz >= 0.0) || !is_finite(pair_rate_hz))
      throw std::domain_error("ApparatusParams: negative pair rate");
    if (!(dark_coinc_hz >= 0.0) || !is_finite(dark_coinc_hz))
      throw std::domain_error("ApparatusParams: negative dark rate");
    if (!(dip_width_um > 0.0))
      throw std::domain_error("ApparatusParams: dip width must be positive");
    if (!is_finite(shoulder_delay_um))
      throw std::domain_error("ApparatusParams: non-finite shoulder delay");
  }

  // Balanced lossless coupler with no arm phase; pair rate chosen so the
  // shoulder still sits near 3300 coincidences per second.
  static ApparatusParams ideal() {
    ApparatusParams p;
    p.transmittance = 0.5;
    p.mode_overlap = 1.0;
    p.arm_phase_deg = 0.0;
    p.eta1 = p.eta2 = 1.0;
    p.pair_rate_hz = 6600.0;
    p.dark_coinc_hz = 0.0;
    return p;
  }
};

struct DelaySample {
  double delay_um = 0.0;
};

/// Gaussian dip envelope g(delay) = exp(-(delay / L_c)^2).
inline double envelope(const ApparatusParams& params, double delay_um) {
  params.validate();
  if (!is_finite(delay_um)) throw std::domain_error("envelope: non-finite delay");
  const double x = delay_um / params.dip_width_um;
  return std::exp(-x * x);
}

/// Per-generated-pair coincidence probability at the given stage delay.
inline double coincidence_prob(const ApparatusParams& params,
                               const QubitDensity& rho1, const QubitDensity& rho2,
                               double delay_um) {
  params.validate();
  const double f =
      overlap(apply_arm_phase(rho1, deg_to_rad(params.arm_phase_deg)), rho2);
  const double t = params.transmittance;
  const double r = 1.0 - t;
  const double classical = t * t + r * r;
  const double interference =
      2.0 * t * r * params.mode_overlap * envelope(params, delay_um) * f;
  return params.eta1 * params.eta2 * std::max(classical - interference, 0.0);
}

/// Shoulder (no-interference) coincidence probability eta1 eta2 (T^2 + R^2).
/// coincidence_prob at the shoulder delay differs from this only by the
/// envelope leakage, below 1e-4 for the default geometry.
inline double shoulder_prob(const ApparatusParams& params) {
  params.validate();
  const double t = params.transmittance;
  const double r = 1.0 - t;
  return params.eta1 * params.eta2 * (t * t + r * r);
}

/// Factor compressing raw overlap estimates: v_m 2TR / (T^2 + R^2).
inline double effective_visibility(const ApparatusParams& params) {
  params.validate();
  const double t = params.transmittance;
  const double r = 1.0 - t;
  return params.mode_overlap * 2.0 * t * r / (t * t + r * r);
}

/// Pointwise coincidence probabilities over a delay scan.
inline std::vector<double> dip_curve(const ApparatusParams& params,
                                     const QubitDensity& rho1,
                                     const QubitDensity& rho2,
                                     const std::vector<DelaySample>& delays) {
  std::vector<double> out;
  out.reserve(delays.size());
  for (const DelaySample& d : delays)
    out.push_back(coincidence_prob(params, rho1, rho2, d.delay_um));
  return out;
}

}  // namespace homsim
