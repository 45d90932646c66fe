// experiment.hpp
// One driver per reproducible measurement. Each driver expands a scan grid,
// simulates the required count series with counter-based random streams
// (stream id = grid index, or grid index times the number of series per
// point), runs the estimators, and returns plain row structs. Scan points
// may be evaluated on several threads; every index writes only its own
// output slot, so results do not depend on the thread count.

#pragma once

#include <homsim/config.hpp>
#include <homsim/estimate.hpp>
#include <homsim/fit.hpp>
#include <homsim/mcsim.hpp>
#include <homsim/qcore.hpp>

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace homsim {

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (threads < 1)
    throw std::domain_error("parallel_for: thread count must be >= 1");
  if (threads == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const std::size_t workers = std::min<std::size_t>(threads, n);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Default scan grids (also recorded in the run manifest).
inline std::vector<double> default_overlap_thetas_deg() {
  std::vector<double> g;
  for (int d = 0; d <= 90; d += 5) g.push_back(static_cast<double>(d));
  return g;
}
inline std::vector<double> default_phase_thetas_deg() {
  std::vector<double> g;
  for (int d = 0; d <= 180; d += 10) g.push_back(static_cast<double>(d));
  return g;
}
inline std::vector<double> default_weight_grid() {
  std::vector<double> g;
  for (int k = 0; k <= 10; ++k) g.push_back(0.1 * static_cast<double>(k));
  return g;
}
inline std::vector<std::pair<double, double>> default_weight_pairs() {
  return {{0.2, 0.4}, {0.2, 0.6}, {0.2, 0.8}, {0.4, 0.6}, {0.4, 0.8}, {0.6, 0.8}};
}
inline std::vector<double> default_program_thetas_deg() {
  return {0.0, -45.0, 45.0};
}
inline std::vector<double> dip_delay_grid(int n_points = 81) {
  if (n_points < 2)
    throw std::domain_error("dip_delay_grid: need at least 2 points");
  std::vector<double> g;
  g.reserve(n_points);
  const double step = 400.0 / (n_points - 1);
  for (int k = 0; k < n_points; ++k) g.push_back(-200.0 + step * k);
  return g;
}

namespace detail {

inline Estimate maybe_corrected(Estimate e,
                                const std::optional<double>& visibility) {
  return visibility ? visibility_corrected(e, *visibility) : e;
}

// Bounds-check a grid index so stream ids stay inside the 32-bit scan-point
// field even with several series per point.
inline std::uint32_t stream_point(std::size_t index, std::size_t per_point,
                                  std::size_t sub) {
  const std::size_t id = index * per_point + sub;
  if (id > 0xffffffffull)
    throw std::domain_error("experiment: scan too large for stream id space");
  return static_cast<std::uint32_t>(id);
}

}  // namespace detail

struct DipRow {
  double delay_um = 0.0;
  double rate_hz = 0.0;
  double rate_err = 0.0;
};

/// Coincidence rate versus delay for two identical vertically polarized
/// inputs, one row per delay point.
inline std::vector<DipRow> run_dip_scan(const RunConfig& config,
                                        const std::vector<double>& delays_um,
                                        int threads = 1) {
  config.validate();
  if (delays_um.empty()) throw std::domain_error("run_dip_scan: empty grid");
  const ApparatusParams params = config.apparatus();
  const Preparation prep = Preparation::pure_pair(0.0, 0.0);

  std::vector<DipRow> rows(delays_um.size());
  parallel_for(delays_um.size(), threads, [&](std::size_t i) {
    double counts = 0.0, seconds = 0.0;
    for (int k = 0; k < config.periods; ++k) {
      const CountRecord r = simulate_period(
          params, prep, delays_um[i], config.period_s,
          derive_stream(config.seed, detail::stream_point(i, 1, 0),
                        static_cast<std::uint32_t>(k)),
          k);
      counts += static_cast<double>(r.coincidences);
      seconds += r.duration_s;
    }
    rows[i] = {delays_um[i], counts / seconds, std::sqrt(counts) / seconds};
  });
  return rows;
}

struct OverlapRow {
  double theta_deg = 0.0;
  double f_est = 0.0;
  double f_err = 0.0;
  double f_theory = 0.0;
};

/// Overlap of |V> with a pure state at polarizer angle theta; the arm phase
/// is inert because arm 1 stays in a basis state.
inline std::vector<OverlapRow> run_pure_overlap(
    const RunConfig& config, const std::vector<double>& thetas_deg,
    int threads = 1, std::optional<double> correct_visibility = std::nullopt) {
  config.validate();
  if (thetas_deg.empty()) throw std::domain_error("run_pure_overlap: empty grid");
  const ApparatusParams params = config.apparatus();

  std::vector<OverlapRow> rows(thetas_deg.size());
  parallel_for(thetas_deg.size(), threads, [&](std::size_t i) {
    const double theta = deg_to_rad(thetas_deg[i]);
    const CountSeries series = run_measurement(
        params, Preparation::pure_pair(0.0, theta), config.periods,
        RngStream{config.seed, detail::stream_point(i, 1, 0)}, config.period_s);
    const Estimate f =
        detail::maybe_corrected(overlap_estimate(series), correct_visibility);
    const double c = std::cos(theta);
    rows[i] = {thetas_deg[i], f.value, f.std_error, c * c};
  });
  return rows;
}

struct FitSummary {
  Sin2Fit fit;
  bool phi_ok = false;
  double phi_deg = 0.0;
  double phi_err_deg = 0.0;
  std::string phi_note;  // set when no phase could be extracted
};

namespace detail {

// Fit a + b sin^2(2 theta) and invert |b| to a phase. Falls back to the
// unit-weight fit when any point carries a zero error (noiseless corners).
inline FitSummary phase_fit(const std::vector<ScanPoint>& points,
                            bool negate_b) {
  bool weighted = true;
  for (const ScanPoint& p : points) weighted = weighted && p.f_err > 0.0;

  FitSummary s;
  s.fit = fit_sin2(points, weighted);
  try {
    const auto [phi, err] =
        phi_from_b(negate_b ? -s.fit.b : s.fit.b, s.fit.b_err);
    s.phi_ok = true;
    s.phi_deg = phi;
    s.phi_err_deg = err;
  } catch (const std::domain_error& e) {
    s.phi_note = e.what();
  }
  return s;
}

}  // namespace detail

struct PhaseScanResult {
  std::vector<OverlapRow> parallel;       // both polarizers at theta
  std::vector<OverlapRow> perpendicular;  // second polarizer at theta + 90 deg
  FitSummary fit_parallel;                // b < 0, phase from -b
  FitSummary fit_perpendicular;           // b > 0, phase from b
  FitSummary fit_pooled;  // union of perpendicular and (1 - parallel) points
};

/// Equal-angle and crossed-angle overlap scans plus the three phase fits.
inline PhaseScanResult run_parallel_perp(
    const RunConfig& config, const std::vector<double>& thetas_deg,
    int threads = 1, std::optional<double> correct_visibility = std::nullopt) {
  config.validate();
  if (thetas_deg.size() < 3)
    throw std::domain_error("run_parallel_perp: need at least 3 angles");
  const ApparatusParams params = config.apparatus();
  const double phi_rad = deg_to_rad(config.arm_phase_deg);

  PhaseScanResult result;
  result.parallel.resize(thetas_deg.size());
  result.perpendicular.resize(thetas_deg.size());
  parallel_for(thetas_deg.size(), threads, [&](std::size_t i) {
    const double theta = deg_to_rad(thetas_deg[i]);
    const auto [f_par_th, f_perp_th] = theory_parallel_perp(theta, phi_rad);

    const CountSeries par = run_measurement(
        params, Preparation::pure_pair(theta, theta), config.periods,
        RngStream{config.seed, detail::stream_point(i, 2, 0)}, config.period_s);
    const CountSeries perp = run_measurement(
        params, Preparation::pure_pair(theta, theta + M_PI / 2.0),
        config.periods, RngStream{config.seed, detail::stream_point(i, 2, 1)},
        config.period_s);

    const Estimate f_par =
        detail::maybe_corrected(overlap_estimate(par), correct_visibility);
    const Estimate f_perp =
        detail::maybe_corrected(overlap_estimate(perp), correct_visibility);
    result.parallel[i] = {thetas_deg[i], f_par.value, f_par.std_error, f_par_th};
    result.perpendicular[i] = {thetas_deg[i], f_perp.value, f_perp.std_error,
                               f_perp_th};
  });

  std::vector<ScanPoint> par_pts, perp_pts, pooled;
  for (const OverlapRow& r : result.parallel)
    par_pts.push_back({deg_to_rad(r.theta_deg), r.f_est, r.f_err});
  for (const OverlapRow& r : result.perpendicular)
    perp_pts.push_back({deg_to_rad(r.theta_deg), r.f_est, r.f_err});
  pooled = perp_pts;
  for (const ScanPoint& p : par_pts)
    pooled.push_back({p.theta_rad, 1.0 - p.f_est, p.f_err});

  result.fit_parallel = detail::phase_fit(par_pts, true);
  result.fit_perpendicular = detail::phase_fit(perp_pts, false);
  result.fit_pooled = detail::phase_fit(pooled, false);
  return result;
}

struct FidelityRow {
  double p = 0.0;
  double f_est_v = 0.0;
  double f_err_v = 0.0;
  double f_th_v = 0.0;  // (1 + p) / 2
  double f_est_a = 0.0;
  double f_err_a = 0.0;
  double f_th_a = 0.0;  // 1/2 for every p
};

/// Fidelity of the p-weighted mixture against the pure references |V> and
/// |A> (+45 deg), two runs per grid point.
inline std::vector<FidelityRow> run_fidelity(
    const RunConfig& config, const std::vector<double>& p_grid, int threads = 1,
    std::optional<double> correct_visibility = std::nullopt,
    MixingMode mixing = MixingMode::DensityMatrix) {
  config.validate();
  if (p_grid.empty()) throw std::domain_error("run_fidelity: empty grid");
  const ApparatusParams params = config.apparatus();

  std::vector<FidelityRow> rows(p_grid.size());
  parallel_for(p_grid.size(), threads, [&](std::size_t i) {
    const double p = p_grid[i];
    const CountSeries v_run = run_measurement(
        params, Preparation::mixed_vs_pure(p, 0.0, mixing), config.periods,
        RngStream{config.seed, detail::stream_point(i, 2, 0)}, config.period_s);
    const CountSeries a_run = run_measurement(
        params, Preparation::mixed_vs_pure(p, M_PI / 4.0, mixing),
        config.periods, RngStream{config.seed, detail::stream_point(i, 2, 1)},
        config.period_s);
    const Estimate fv =
        detail::maybe_corrected(overlap_estimate(v_run), correct_visibility);
    const Estimate fa =
        detail::maybe_corrected(overlap_estimate(a_run), correct_visibility);
    rows[i] = {p,        fv.value, fv.std_error, 0.5 * (1.0 + p),
               fa.value, fa.std_error, 0.5};
  });
  return rows;
}

struct PurityRow {
  double p = 0.0;
  double purity_est = 0.0;
  double purity_err = 0.0;
  double purity_th = 0.0;  // (1 + p^2) / 2
  double lambda1 = 0.0;
  double lambda1_err = 0.0;
  double lambda2 = 0.0;
  double lambda2_err = 0.0;
  bool clamped = false;
  double entropy = 0.0;
  double entropy_err = 0.0;
};

/// Purity of the p-weighted mixture from a twin-preparation run, with the
/// inferred eigenvalues and von Neumann entropy.
inline std::vector<PurityRow> run_purity(
    const RunConfig& config, const std::vector<double>& p_grid, int threads = 1,
    std::optional<double> correct_visibility = std::nullopt,
    MixingMode mixing = MixingMode::DensityMatrix) {
  config.validate();
  if (p_grid.empty()) throw std::domain_error("run_purity: empty grid");
  const ApparatusParams params = config.apparatus();

  std::vector<PurityRow> rows(p_grid.size());
  parallel_for(p_grid.size(), threads, [&](std::size_t i) {
    const double p = p_grid[i];
    const CountSeries series = run_measurement(
        params, Preparation::mixed_pair(p, p, mixing), config.periods,
        RngStream{config.seed, detail::stream_point(i, 1, 0)}, config.period_s);
    const Estimate purity =
        detail::maybe_corrected(purity_estimate(series), correct_visibility);
    const auto spectrum = spectrum_estimate(purity);
    const Estimate entropy = entropy_estimate(spectrum);
    rows[i] = {p,
               purity.value,
               purity.std_error,
               0.5 * (1.0 + p * p),
               spectrum.first.value,
               spectrum.first.std_error,
               spectrum.second.value,
               spectrum.second.std_error,
               spectrum.first.clamped,
               entropy.value,
               entropy.std_error};
  });
  return rows;
}

struct MixedRow {
  double p_a = 0.0;
  double p_b = 0.0;
  double f_est = 0.0;
  double f_err = 0.0;
  double f_th = 0.0;  // (1 + pA pB) / 2
  double d_est = 0.0;
  double d_err = 0.0;
  double d_th = 0.0;  // |pA - pB| / 2
};

/// Overlap and Hilbert-Schmidt distance of two mixtures, three runs per
/// pair: (A,A), (B,B), (A,B).
inline std::vector<MixedRow> run_mixed_table(
    const RunConfig& config, const std::vector<std::pair<double, double>>& pairs,
    int threads = 1, std::optional<double> correct_visibility = std::nullopt,
    MixingMode mixing = MixingMode::DensityMatrix) {
  config.validate();
  if (pairs.empty()) throw std::domain_error("run_mixed_table: empty pair list");
  const ApparatusParams params = config.apparatus();

  std::vector<MixedRow> rows(pairs.size());
  parallel_for(pairs.size(), threads, [&](std::size_t i) {
    const auto [pa, pb] = pairs[i];
    const CountSeries run_aa = run_measurement(
        params, Preparation::mixed_pair(pa, pa, mixing), config.periods,
        RngStream{config.seed, detail::stream_point(i, 3, 0)}, config.period_s);
    const CountSeries run_bb = run_measurement(
        params, Preparation::mixed_pair(pb, pb, mixing), config.periods,
        RngStream{config.seed, detail::stream_point(i, 3, 1)}, config.period_s);
    const CountSeries run_ab = run_measurement(
        params, Preparation::mixed_pair(pa, pb, mixing), config.periods,
        RngStream{config.seed, detail::stream_point(i, 3, 2)}, config.period_s);

    const Estimate f =
        detail::maybe_corrected(overlap_estimate(run_ab), correct_visibility);
    const Estimate d = hs_distance_from_estimates(
        detail::maybe_corrected(purity_estimate(run_aa), correct_visibility),
        detail::maybe_corrected(purity_estimate(run_bb), correct_visibility),
        f);
    rows[i] = {pa,      pb,          f.value,     f.std_error,
               0.5 * (1.0 + pa * pb), d.value, d.std_error,
               0.5 * std::abs(pa - pb)};
  });
  return rows;
}

struct MultimeterRow {
  double theta_deg = 0.0;
  double p_one_same = 0.0;
  double p_one_orth = 0.0;
  double fidelity_est = 0.0;
  double fidelity_err = 0.0;
  double fidelity_ideal = 0.75;
};

/// Programmable-measurement figure of merit: for each program angle, one run
/// with data = program and one with data orthogonal to it. The preparation
/// compensates the arm phase, so the run uses the config with the phase
/// zeroed; all other imperfections stay in effect.
inline std::vector<MultimeterRow> run_multimeter(
    const RunConfig& config, const std::vector<double>& program_thetas_deg,
    int threads = 1) {
  config.validate();
  if (program_thetas_deg.empty())
    throw std::domain_error("run_multimeter: empty angle list");
  ApparatusParams params = config.apparatus();
  params.arm_phase_deg = 0.0;

  std::vector<MultimeterRow> rows(program_thetas_deg.size());
  parallel_for(program_thetas_deg.size(), threads, [&](std::size_t i) {
    const double theta = deg_to_rad(program_thetas_deg[i]);
    const CountSeries same = run_measurement(
        params, Preparation::program_data(theta, theta), config.periods,
        RngStream{config.seed, detail::stream_point(i, 2, 0)}, config.period_s);
    const CountSeries orth = run_measurement(
        params, Preparation::program_data(theta, theta + M_PI / 2.0),
        config.periods, RngStream{config.seed, detail::stream_point(i, 2, 1)},
        config.period_s);
    const MultimeterResult r = multimeter_evaluate(same, orth);
    rows[i] = {program_thetas_deg[i], r.same.p_one.value, r.orth.p_one.value,
               r.fidelity.value,      r.fidelity.std_error, 0.75};
  });
  return rows;
}

}  // namespace homsim
