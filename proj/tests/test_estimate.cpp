#include <homsim/estimate.hpp>
#include <homsim/mcsim.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "test_support.hpp"

using namespace homsim;
using Catch::Matchers::WithinAbs;

namespace {

// Hand-assembled series with unit durations unless stated otherwise.
CountSeries make_series(const std::vector<std::int64_t>& dip,
                        const std::vector<std::int64_t>& shoulder,
                        double dip_dur = 1.0, double shoulder_dur = 1.0) {
  CountSeries s;
  for (std::size_t k = 0; k < dip.size(); ++k)
    s.dip.push_back({static_cast<std::int64_t>(k), 0.0, dip_dur, dip[k]});
  for (std::size_t k = 0; k < shoulder.size(); ++k)
    s.shoulder.push_back(
        {static_cast<std::int64_t>(k), 200.0, shoulder_dur, shoulder[k]});
  return s;
}

}  // namespace

TEST_CASE("overlap_estimate reproduces the counting-ratio definition") {
  // C0 = 30 over 2 s, C200 = 200 over 2 s: ratio 0.15, estimate 0.85.
  const CountSeries s = make_series({10, 20}, {100, 100});
  const Estimate f = overlap_estimate(s);
  CHECK_THAT(f.value, WithinAbs(0.85, 1e-15));
  // Propagated error recomputed from raw totals with plain arithmetic.
  const double c0 = 30.0, c200 = 200.0;
  const double se =
      std::sqrt(c0 / (c200 * c200) + c0 * c0 / (c200 * c200 * c200));
  CHECK_THAT(f.std_error, WithinAbs(se, 1e-15));
  CHECK(f.method == ErrorMethod::PoissonPropagation);
  CHECK(f.n_periods == 2);
  CHECK_FALSE(f.clamped);

  // purity is the same statistic on a same-state run.
  CHECK(purity_estimate(s).value == f.value);
}

TEST_CASE("overlap_estimate normalizes per unit time") {
  // Dip periods half as long as shoulder periods: rates are 30/1 and 100/1,
  // so the estimate uses 0.3, and the error picks up the duration ratio.
  const CountSeries s = make_series({10, 20}, {100, 100}, 0.5, 1.0);
  const Estimate f = overlap_estimate(s);
  CHECK_THAT(f.value, WithinAbs(0.7, 1e-15));
  const double c0 = 30.0, c200 = 200.0;
  const double se = 2.0 * std::sqrt(c0 / (c200 * c200) +
                                    c0 * c0 / (c200 * c200 * c200));
  CHECK_THAT(f.std_error, WithinAbs(se, 1e-15));
}

TEST_CASE("overlap_estimate leaves out-of-range values unclamped") {
  // More dip than shoulder counts: a negative estimate must survive.
  const CountSeries s = make_series({300}, {200});
  const Estimate f = overlap_estimate(s);
  CHECK_THAT(f.value, WithinAbs(-0.5, 1e-15));
  CHECK_FALSE(f.clamped);
}

TEST_CASE("overlap_estimate rejects unusable series") {
  CHECK_THROWS_AS(overlap_estimate(make_series({}, {100})), std::runtime_error);
  CHECK_THROWS_AS(overlap_estimate(make_series({10}, {})), std::runtime_error);
  CHECK_THROWS_AS(overlap_estimate(make_series({10}, {0})), std::runtime_error);
}

TEST_CASE("spectrum_estimate inverts the purity relation") {
  Estimate p;
  p.value = 0.68;
  p.std_error = 0.012;
  p.n_periods = 100;
  const auto [l1, l2] = spectrum_estimate(p);
  CHECK_THAT(l1.value, WithinAbs(0.8, 1e-12));
  CHECK_THAT(l2.value, WithinAbs(0.2, 1e-12));
  // d(lambda)/dP = 1 / (2 sqrt(2P - 1)) = 1 / 1.2 here.
  CHECK_THAT(l1.std_error, WithinAbs(0.012 / 1.2, 1e-12));
  CHECK(l1.std_error == l2.std_error);
  CHECK_FALSE(l1.clamped);
  CHECK(l1.n_periods == 100);

  // Round trip: purity of the recovered spectrum is the input purity.
  CHECK_THAT(l1.value * l1.value + l2.value * l2.value, WithinAbs(0.68, 1e-12));
}

TEST_CASE("spectrum_estimate clamps boundary and out-of-range purities") {
  Estimate low;
  low.value = 0.43;  // statistically possible below the physical floor
  low.std_error = 0.05;
  const auto [a1, a2] = spectrum_estimate(low);
  CHECK(a1.clamped);
  CHECK_THAT(a1.value, WithinAbs(0.5, 1e-15));
  CHECK_THAT(a2.value, WithinAbs(0.5, 1e-15));
  CHECK_THAT(a1.std_error, WithinAbs(0.5, 1e-15));  // derivative diverges: cap

  Estimate high;
  high.value = 1.03;
  high.std_error = 0.02;
  const auto [b1, b2] = spectrum_estimate(high);
  CHECK(b1.clamped);
  CHECK_THAT(b1.value, WithinAbs(1.0, 1e-15));
  CHECK_THAT(b2.value, WithinAbs(0.0, 1e-15));
  CHECK_THAT(b1.std_error, WithinAbs(0.01, 1e-15));
}

TEST_CASE("entropy_estimate evaluates the spectral entropy") {
  Estimate p;
  p.value = 0.68;
  p.std_error = 0.012;
  const auto spectrum = spectrum_estimate(p);
  const Estimate h = entropy_estimate(spectrum);
  // -0.8 ln 0.8 - 0.2 ln 0.2, frozen from an independent evaluation.
  CHECK_THAT(h.value, WithinAbs(0.5004024235381879, 1e-12));
  CHECK_THAT(h.std_error,
             WithinAbs(std::log(4.0) * spectrum.first.std_error, 1e-12));

  // Pure spectrum: zero entropy, no NaN from the 0 ln 0 limit.
  Estimate pure;
  pure.value = 1.0;
  pure.std_error = 0.0;
  const Estimate h0 = entropy_estimate(spectrum_estimate(pure));
  CHECK_THAT(h0.value, WithinAbs(0.0, 1e-15));
  CHECK(std::isfinite(h0.std_error));
}

TEST_CASE("hs_distance_estimate combines three runs") {
  // P_A = 0.54, P_B = 0.58, F = 0.54: radicand 0.02, distance sqrt(0.02).
  const CountSeries aa = make_series({46}, {100});
  const CountSeries bb = make_series({42}, {100});
  const CountSeries ab = make_series({46}, {100});
  const Estimate d = hs_distance_estimate(aa, bb, ab);
  CHECK_THAT(d.value, WithinAbs(std::sqrt(0.02), 1e-12));
  CHECK_FALSE(d.clamped);
  CHECK(std::isfinite(d.std_error));
  CHECK(d.std_error > 0.0);

  // Pulled negative by noise: value pinned at zero and reported as clamped.
  const CountSeries ab_big = make_series({30}, {100});
  const Estimate d0 = hs_distance_estimate(aa, bb, ab_big);
  CHECK(d0.clamped);
  CHECK_THAT(d0.value, WithinAbs(0.0, 1e-15));
  CHECK(std::isfinite(d0.std_error));
}

TEST_CASE("multimeter_evaluate splits and recombines outcome rates") {
  // same run: p_one = 50 / (2 * 100) = 0.25; orth run: p_one = 0.75.
  const CountSeries same = make_series({50}, {100});
  const CountSeries orth = make_series({150}, {100});
  const MultimeterResult r = multimeter_evaluate(same, orth);
  CHECK_THAT(r.same.p_one.value, WithinAbs(0.25, 1e-15));
  CHECK_THAT(r.same.p_two.value, WithinAbs(0.75, 1e-15));
  CHECK_THAT(r.orth.p_one.value, WithinAbs(0.75, 1e-15));
  CHECK_THAT(r.fidelity.value, WithinAbs(0.75, 1e-15));
  CHECK_THAT(r.same.p_one.std_error,
             WithinAbs(0.5 * overlap_estimate(same).std_error, 1e-15));
  CHECK_THAT(
      r.fidelity.std_error,
      WithinAbs(0.5 * std::hypot(r.same.p_one.std_error, r.orth.p_one.std_error),
                1e-15));
}

TEST_CASE("detector efficiency cancels from the expectation of the ratio") {
  // Counts set to exact expected values for F = 1/2 at two efficiencies.
  // eta = 1: dip mu 10000, shoulder mu 20000; eta1 = eta2 = 0.5 scales both
  // by 0.25. The ratio estimator must return the same number to 1e-15.
  const Estimate full = overlap_estimate(make_series({10000}, {20000}));
  const Estimate quarter = overlap_estimate(make_series({2500}, {5000}));
  CHECK_THAT(full.value, WithinAbs(0.5, 1e-15));
  CHECK_THAT(std::abs(full.value - quarter.value), WithinAbs(0.0, 1e-15));
}

TEST_CASE("bootstrap error agrees with propagation where Poisson holds") {
  const ApparatusParams params;
  const Preparation prep = Preparation::pure_pair(0.4, 0.8);
  const CountSeries series = run_measurement(params, prep, 200, RngStream{77, 0});

  const Estimate prop = overlap_estimate(series);
  const Estimate boot =
      overlap_estimate_bootstrap(series, 400, RngStream{77, 9001});
  CHECK(boot.method == ErrorMethod::Bootstrap);
  CHECK(boot.value == prop.value);
  CHECK(boot.std_error > 0.8 * prop.std_error);
  CHECK(boot.std_error < 1.2 * prop.std_error);

  CHECK_THROWS_AS(bootstrap_stderr(
                      series,
                      [](const CountSeries& s) { return overlap_estimate(s).value; },
                      50, RngStream{1, 0}),
                  std::domain_error);
}

TEST_CASE("bootstrap sees the preparation noise that propagation misses") {
  // Per-period component draws at p = 0 make the dip rate swing between 0
  // and half the pair rate; the Poisson formula is blind to that.
  const ApparatusParams ideal = ApparatusParams::ideal();
  const CountSeries comps = run_measurement(
      ideal, Preparation::mixed_pair(0.0, 0.0, MixingMode::PerPeriodComponent),
      200, RngStream{88, 0});
  const Estimate prop = overlap_estimate(comps);
  const double boot = bootstrap_stderr(
      comps, [](const CountSeries& s) { return overlap_estimate(s).value; },
      400, RngStream{88, 9001});
  CHECK(boot > 5.0 * prop.std_error);
}

TEST_CASE("mixing modes agree within combined uncertainties") {
  const ApparatusParams ideal = ApparatusParams::ideal();
  for (double p : {0.0, 0.5, 1.0}) {
    const CountSeries avg = run_measurement(
        ideal, Preparation::mixed_pair(p, p, MixingMode::DensityMatrix), 200,
        RngStream{404, 0});
    const CountSeries comps = run_measurement(
        ideal, Preparation::mixed_pair(p, p, MixingMode::PerPeriodComponent),
        200, RngStream{404, 1});
    const Estimate fa = overlap_estimate(avg);
    const Estimate fc =
        overlap_estimate_bootstrap(comps, 400, RngStream{404, 9001});
    const double tol =
        4.0 * std::sqrt(fa.std_error * fa.std_error +
                        fc.std_error * fc.std_error) +
        1e-12;
    INFO("p = " << p);
    CHECK_THAT(fa.value, WithinAbs(fc.value, tol));
    // Both sit near the analytic purity (1 + p^2) / 2.
    CHECK_THAT(fa.value, WithinAbs(0.5 * (1.0 + p * p),
                                   4.0 * fa.std_error + 1e-12));
  }
}

TEST_CASE("visibility_corrected rescales value and error") {
  Estimate e;
  e.value = 0.4984;
  e.std_error = 0.002;
  const Estimate c = visibility_corrected(e, 0.9968);
  CHECK_THAT(c.value, WithinAbs(0.5, 1e-12));
  CHECK_THAT(c.std_error, WithinAbs(0.002 / 0.9968, 1e-15));
  CHECK_THROWS_AS(visibility_corrected(e, 0.0), std::domain_error);
  CHECK_THROWS_AS(visibility_corrected(e, 1.5), std::domain_error);
}
