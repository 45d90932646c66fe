// estimate.hpp
// Recovers the reported quantities from coincidence-count series: overlap,
// purity, spectrum, entropy, Hilbert-Schmidt distance, and the multimeter
// outcome statistics, each with a standard error.
//
// The overlap estimator is the normalized dip/shoulder ratio
//   F_hat = 1 - C0 / C200
// on per-unit-time totals, with Poisson error propagation
//   se = sqrt(C0/C200^2 + C0^2/C200^3)
// on the raw totals. Raw overlap estimates are reported unclamped; clamping
// happens only where a downstream formula needs a valid domain, and every
// clamp is flagged.

#pragma once

#include <homsim/mcsim.hpp>
#include <homsim/qcore.hpp>
#include <homsim/rng.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace homsim {

enum class ErrorMethod { PoissonPropagation, Bootstrap };

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  ErrorMethod method = ErrorMethod::PoissonPropagation;
  std::int64_t n_periods = 0;
  bool clamped = false;
};

struct OutcomeProbs {
  Estimate p_one;  // coincidence ("one")
  Estimate p_two;  // single-detector ("two"); p_one + p_two = 1 by construction
};

struct MultimeterResult {
  OutcomeProbs same;  // program and data identical
  OutcomeProbs orth;  // data orthogonal to program
  Estimate fidelity;
};

namespace detail {

struct Totals {
  double dip_counts = 0.0;
  double dip_seconds = 0.0;
  double shoulder_counts = 0.0;
  double shoulder_seconds = 0.0;
};

inline Totals totals_of(const CountSeries& series) {
  if (series.dip.empty())
    throw std::runtime_error("estimate: no dip records");
  if (series.shoulder.empty())
    throw std::runtime_error("estimate: no shoulder records");
  Totals t;
  for (const CountRecord& r : series.dip) {
    t.dip_counts += static_cast<double>(r.coincidences);
    t.dip_seconds += r.duration_s;
  }
  for (const CountRecord& r : series.shoulder) {
    t.shoulder_counts += static_cast<double>(r.coincidences);
    t.shoulder_seconds += r.duration_s;
  }
  if (t.shoulder_counts <= 0.0)
    throw std::runtime_error("estimate: zero shoulder counts, normalization undefined");
  return t;
}

// Standard error of C0/C200 by Poisson propagation, including the duration
// rescaling when dip and shoulder acquisition times differ.
inline double ratio_std_error(const Totals& t) {
  const double c0 = t.dip_counts;
  const double c200 = t.shoulder_counts;
  const double scale = t.shoulder_seconds / t.dip_seconds;
  return scale * std::sqrt(c0 / (c200 * c200) + c0 * c0 / (c200 * c200 * c200));
}

inline double ratio_value(const Totals& t) {
  return (t.dip_counts / t.dip_seconds) / (t.shoulder_counts / t.shoulder_seconds);
}

}  // namespace detail

/// Overlap estimate F_hat = 1 - C0/C200 from one dip+shoulder series.
/// The value is intentionally NOT clamped to [0, 1].
inline Estimate overlap_estimate(const CountSeries& series) {
  const auto t = detail::totals_of(series);
  Estimate e;
  e.value = 1.0 - detail::ratio_value(t);
  e.std_error = detail::ratio_std_error(t);
  e.method = ErrorMethod::PoissonPropagation;
  e.n_periods = static_cast<std::int64_t>(series.dip.size());
  return e;
}

/// Purity estimate: the same ratio, taken on a series whose two arms were
/// prepared in the same state.
inline Estimate purity_estimate(const CountSeries& series) {
  return overlap_estimate(series);
}

/// Eigenvalue estimates from a purity estimate. The purity is clamped into
/// [1/2, 1] before inverting; at the lower boundary the derivative diverges
/// and the error is reported as the 0.5 cap with the clamped flag set.
inline std::pair<Estimate, Estimate> spectrum_estimate(const Estimate& p) {
  const double clamped_value = std::clamp(p.value, 0.5, 1.0);
  const bool moved = clamped_value != p.value;

  Estimate l1, l2;
  l1.method = l2.method = p.method;
  l1.n_periods = l2.n_periods = p.n_periods;

  if (p.value <= 0.5 + 1e-9) {
    l1.value = l2.value = 0.5;
    l1.std_error = l2.std_error = 0.5;
    l1.clamped = l2.clamped = true;
    return {l1, l2};
  }

  const double root = std::sqrt(2.0 * clamped_value - 1.0);
  l1.value = 0.5 * (1.0 + root);
  l2.value = 0.5 * (1.0 - root);
  l1.std_error = l2.std_error = p.std_error / (2.0 * root);
  l1.clamped = l2.clamped = moved;
  return {l1, l2};
}

/// Entropy -sum lambda ln lambda with first-order error |ln(l1/l2)| se(l1).
inline Estimate entropy_estimate(const std::pair<Estimate, Estimate>& spectrum) {
  const double l1 = spectrum.first.value;
  const double l2 = spectrum.second.value;
  auto term = [](double l) { return l > 0.0 ? -l * std::log(l) : 0.0; };

  Estimate e;
  e.value = term(l1) + term(l2);
  e.method = spectrum.first.method;
  e.n_periods = spectrum.first.n_periods;
  e.clamped = spectrum.first.clamped;
  // Floor the eigenvalues inside the log so a boundary spectrum still maps a
  // finite input error to a finite (if large) entropy error.
  const double floor = 1e-12;
  e.std_error = std::abs(std::log(std::max(l1, floor) / std::max(l2, floor))) *
                spectrum.first.std_error;
  return e;
}

/// Hilbert-Schmidt distance from the two purities and the cross overlap:
/// d_hat = sqrt(max(0, (P_A + P_B - 2 F_AB)/2)), flagged when the radicand
/// had to be clamped.
inline Estimate hs_distance_from_estimates(const Estimate& pa,
                                           const Estimate& pb,
                                           const Estimate& f) {
  const double radicand = 0.5 * (pa.value + pb.value - 2.0 * f.value);
  const double var_r = 0.25 * (pa.std_error * pa.std_error +
                               pb.std_error * pb.std_error) +
                       f.std_error * f.std_error;
  const double sigma_r = std::sqrt(var_r);

  Estimate e;
  e.method = ErrorMethod::PoissonPropagation;
  e.n_periods = f.n_periods;
  e.clamped = radicand < 0.0;
  e.value = std::sqrt(std::max(radicand, 0.0));
  // Near zero the sqrt derivative diverges; report the resolvable scale.
  e.std_error = e.value > sigma_r ? sigma_r / (2.0 * e.value) : std::sqrt(sigma_r);
  return e;
}

/// Distance from the three raw runs (A,A), (B,B), (A,B).
inline Estimate hs_distance_estimate(const CountSeries& run_aa,
                                     const CountSeries& run_bb,
                                     const CountSeries& run_ab) {
  return hs_distance_from_estimates(purity_estimate(run_aa),
                                    purity_estimate(run_bb),
                                    overlap_estimate(run_ab));
}

namespace detail {

// p_one = C0 / (2 C200): the shoulder rate is half the impinging-pair rate,
// so 2 C200 normalizes the coincidence rate per pair.
inline Estimate p_one_estimate(const CountSeries& series) {
  const auto t = totals_of(series);
  Estimate e;
  e.value = 0.5 * ratio_value(t);
  e.std_error = 0.5 * ratio_std_error(t);
  e.method = ErrorMethod::PoissonPropagation;
  e.n_periods = static_cast<std::int64_t>(series.dip.size());
  return e;
}

inline OutcomeProbs outcome_probs(const CountSeries& series) {
  OutcomeProbs probs;
  probs.p_one = p_one_estimate(series);
  probs.p_two = probs.p_one;
  probs.p_two.value = 1.0 - probs.p_one.value;
  return probs;
}

}  // namespace detail

/// Multimeter evaluation from an identical-states series and an
/// orthogonal-states series: F = [p_two(same) + p_one(orth)] / 2.
inline MultimeterResult multimeter_evaluate(const CountSeries& series_same,
                                            const CountSeries& series_orth) {
  MultimeterResult r;
  r.same = detail::outcome_probs(series_same);
  r.orth = detail::outcome_probs(series_orth);
  r.fidelity.value = 0.5 * (r.same.p_two.value + r.orth.p_one.value);
  r.fidelity.std_error =
      0.5 * std::hypot(r.same.p_one.std_error, r.orth.p_one.std_error);
  r.fidelity.method = ErrorMethod::PoissonPropagation;
  r.fidelity.n_periods = r.same.p_one.n_periods;
  return r;
}

/// Bootstrap standard error of a statistic over the series: periods are
/// resampled with replacement, dip and shoulder independently.
template <class Statistic>
double bootstrap_stderr(const CountSeries& series, Statistic&& statistic,
                        int n_resamples, const RngStream& stream) {
  if (n_resamples < 100)
    throw std::domain_error("bootstrap_stderr: need at least 100 resamples");
  if (series.dip.empty() || series.shoulder.empty())
    throw std::runtime_error("bootstrap_stderr: empty series");

  std::mt19937_64 eng = stream.engine();
  std::uniform_int_distribution<std::size_t> pick_dip(0, series.dip.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_shoulder(
      0, series.shoulder.size() - 1);

  CountSeries resampled = series;
  std::vector<double> values;
  values.reserve(n_resamples);
  for (int b = 0; b < n_resamples; ++b) {
    for (std::size_t i = 0; i < series.dip.size(); ++i)
      resampled.dip[i] = series.dip[pick_dip(eng)];
    for (std::size_t i = 0; i < series.shoulder.size(); ++i)
      resampled.shoulder[i] = series.shoulder[pick_shoulder(eng)];
    values.push_back(statistic(resampled));
  }

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= values.size();
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (values.size() - 1));
}

/// Overlap estimate whose error comes from the bootstrap instead of Poisson
/// propagation; used where per-period preparation noise adds variance the
/// propagation formula cannot see.
inline Estimate overlap_estimate_bootstrap(const CountSeries& series,
                                           int n_resamples,
                                           const RngStream& stream) {
  Estimate e = overlap_estimate(series);
  e.std_error = bootstrap_stderr(
      series, [](const CountSeries& s) { return overlap_estimate(s).value; },
      n_resamples, stream);
  e.method = ErrorMethod::Bootstrap;
  return e;
}

/// Divide an overlap-type estimate by a known effective visibility.
inline Estimate visibility_corrected(Estimate e, double v_eff) {
  if (!(v_eff > 0.0) || v_eff > 1.0)
    throw std::domain_error("visibility_corrected: v_eff outside (0, 1]");
  e.value /= v_eff;
  e.std_error /= v_eff;
  return e;
}

}  // namespace homsim
