// mcsim.hpp
// Seeded Monte Carlo coincidence counting. One-second measurement periods
// draw Poisson counts around the apparatus model's mean rate; mixed states
// can be realized either exactly (density matrix) or the way the experiment
// did it, by holding one pure component of the mixture per period.

#pragma once

#include <homsim/apparatus.hpp>
#include <homsim/qcore.hpp>
#include <homsim/rng.hpp>

#include <cstdint>
#include <stdexcept>
#include <variant>
#include <vector>

namespace homsim {

// One interferometer arm: a fixed linear polarization angle, or the
// three-component mixture with weight p on |V>.
struct PureAngle {
  double theta_rad = 0.0;
};
struct MixedWeight {
  double p = 0.0;
};
using ArmState = std::variant<PureAngle, MixedWeight>;

enum class MixingMode { DensityMatrix, PerPeriodComponent };

struct Preparation {
  ArmState arm1;  // carries the apparatus arm phase
  ArmState arm2;
  MixingMode mixing = MixingMode::DensityMatrix;

  static Preparation pure_pair(double theta1_rad, double theta2_rad) {
    return {PureAngle{theta1_rad}, PureAngle{theta2_rad}, MixingMode::DensityMatrix};
  }
  static Preparation mixed_pair(double p_a, double p_b,
                                MixingMode mode = MixingMode::DensityMatrix) {
    return {MixedWeight{p_a}, MixedWeight{p_b}, mode};
  }
  // Fidelity runs: mixture in arm 1, pure reference in arm 2.
  static Preparation mixed_vs_pure(double p, double theta_rad,
                                   MixingMode mode = MixingMode::DensityMatrix) {
    return {MixedWeight{p}, PureAngle{theta_rad}, mode};
  }
  // Multimeter runs: program state in arm 1, data state in arm 2.
  static Preparation program_data(double theta_prog_rad, double theta_data_rad) {
    return {PureAngle{theta_prog_rad}, PureAngle{theta_data_rad},
            MixingMode::DensityMatrix};
  }

  void validate() const {
    auto check = [](const ArmState& arm) {
      if (const auto* pure = std::get_if<PureAngle>(&arm)) {
        if (!is_finite(pure->theta_rad))
          throw std::domain_error("Preparation: non-finite angle");
      } else {
        const double p = std::get<MixedWeight>(arm).p;
        if (!is_finite(p) || p < 0.0 || p > 1.0)
          throw std::domain_error("Preparation: mixture weight outside [0, 1]");
      }
    };
    check(arm1);
    check(arm2);
  }
};

struct CountRecord {
  std::int64_t period_index = 0;
  double delay_um = 0.0;
  double duration_s = 1.0;
  std::int64_t coincidences = 0;
};

struct CountSeries {
  std::vector<CountRecord> dip;
  std::vector<CountRecord> shoulder;
  ApparatusParams params_snapshot;
  Preparation prep_snapshot;
  std::uint64_t seed = 0;
  std::uint64_t base_stream_id = 0;
};

namespace detail {

// Mixture component draw: |V> with weight p, |X> (+45 deg) and |Y> (-45 deg)
// with weight (1-p)/2 each. One uniform per mixed arm per period.
inline double draw_component_angle(double p, std::mt19937_64& eng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double x = u(eng);
  if (x < p) return 0.0;
  if (x < p + 0.5 * (1.0 - p)) return M_PI / 4.0;
  return -M_PI / 4.0;
}

inline QubitDensity resolve_arm(const ArmState& arm, MixingMode mixing,
                                std::mt19937_64& eng) {
  if (const auto* pure = std::get_if<PureAngle>(&arm))
    return density(pure_from_angles(pure->theta_rad, 0.0));
  const double p = std::get<MixedWeight>(arm).p;
  if (mixing == MixingMode::DensityMatrix) return mixed_state(p);
  return density(pure_from_angles(draw_component_angle(p, eng), 0.0));
}

inline std::int64_t poisson_draw(double mu, std::mt19937_64& eng) {
  if (mu <= 0.0) return 0;
  std::poisson_distribution<std::int64_t> dist(mu);
  return dist(eng);
}

}  // namespace detail

/// One measurement period at a fixed delay. Component draws (if any) happen
/// first, then the Poisson count, all from the stream's engine.
inline CountRecord simulate_period(const ApparatusParams& params,
                                   const Preparation& prep, double delay_um,
                                   double duration_s, const RngStream& stream,
                                   std::int64_t period_index = 0) {
  params.validate();
  prep.validate();
  if (!(duration_s > 0.0))
    throw std::domain_error("simulate_period: duration must be positive");

  std::mt19937_64 eng = stream.engine();
  const QubitDensity rho1 = detail::resolve_arm(prep.arm1, prep.mixing, eng);
  const QubitDensity rho2 = detail::resolve_arm(prep.arm2, prep.mixing, eng);
  const double p = coincidence_prob(params, rho1, rho2, delay_um);
  const double mu =
      params.pair_rate_hz * duration_s * p + params.dark_coinc_hz * duration_s;
  return CountRecord{period_index, delay_um, duration_s,
                     detail::poisson_draw(mu, eng)};
}

/// Dip (delay 0) plus shoulder acquisition over n periods. Period k uses
/// sub-streams 2k (dip) and 2k+1 (shoulder) of the base stream, so the
/// result depends only on (seed, inputs), never on scheduling.
inline CountSeries run_measurement(const ApparatusParams& params,
                                   const Preparation& prep, int n_periods,
                                   const RngStream& base, double period_s = 1.0) {
  if (n_periods < 1)
    throw std::domain_error("run_measurement: need at least one period");
  if (base.stream_id > 0xffffffffull)
    throw std::domain_error("run_measurement: base stream id exceeds 32 bits");

  CountSeries series;
  series.params_snapshot = params;
  series.prep_snapshot = prep;
  series.seed = base.seed;
  series.base_stream_id = base.stream_id;
  series.dip.reserve(n_periods);
  series.shoulder.reserve(n_periods);
  const auto point = static_cast<std::uint32_t>(base.stream_id);
  for (int k = 0; k < n_periods; ++k) {
    series.dip.push_back(simulate_period(
        params, prep, 0.0, period_s,
        derive_stream(base.seed, point, 2 * static_cast<std::uint32_t>(k)), k));
    series.shoulder.push_back(simulate_period(
        params, prep, params.shoulder_delay_um, period_s,
        derive_stream(base.seed, point, 2 * static_cast<std::uint32_t>(k) + 1), k));
  }
  return series;
}

}  // namespace homsim
