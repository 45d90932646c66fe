// expcli: command-line front end for the coincidence-interference toolkit.
// One subcommand per reproducible measurement; every run writes its scan
// artifacts plus a manifest.json that pins the exact command, configuration,
// and seed. Artifacts are byte-stable: the same invocation always produces
// the same files, regardless of --threads.

#include <homsim/config.hpp>
#include <homsim/csvio.hpp>
#include <homsim/experiment.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
using namespace homsim;

namespace {

std::vector<double> parse_double_list(const std::string& text,
                                      const std::string& what) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string field = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(field, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != field.size() || field.empty())
      throw std::runtime_error(what + ": expected a comma-separated list of " +
                               "numbers, got '" + field + "'");
    out.push_back(v);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::runtime_error(what + ": empty list");
  return out;
}

std::vector<std::pair<double, double>> parse_pair_list(const std::string& text) {
  std::vector<std::pair<double, double>> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    const std::string field = text.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    const std::size_t colon = field.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("--pairs: expected 'pA:pB' entries, got '" +
                               field + "'");
    const auto a = parse_double_list(field.substr(0, colon), "--pairs");
    const auto b = parse_double_list(field.substr(colon + 1), "--pairs");
    if (a.size() != 1 || b.size() != 1)
      throw std::runtime_error("--pairs: expected 'pA:pB' entries, got '" +
                               field + "'");
    out.emplace_back(a[0], b[0]);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::runtime_error("--pairs: empty list");
  return out;
}

std::string join_doubles(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += format_double(values[i]);
  }
  return out;
}

std::string join_pairs(const std::vector<std::pair<double, double>>& pairs) {
  std::string out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (i) out.push_back(',');
    out += format_double(pairs[i].first);
    out.push_back(':');
    out += format_double(pairs[i].second);
  }
  return out;
}

void require_unit_interval(const std::vector<double>& grid,
                           const std::string& what) {
  for (double v : grid)
    if (!(v >= 0.0 && v <= 1.0))
      throw std::runtime_error(what + ": weights must lie in [0, 1], got " +
                               format_double(v));
}

MixingMode parse_mixing(const std::string& name) {
  if (name == "density") return MixingMode::DensityMatrix;
  if (name == "per-period") return MixingMode::PerPeriodComponent;
  throw std::runtime_error("--mixing: expected 'density' or 'per-period', got '" +
                           name + "'");
}

const char* mixing_name(MixingMode m) {
  return m == MixingMode::DensityMatrix ? "density" : "per-period";
}

// Options shared by every subcommand. --seed/--periods/--format override the
// config file; --out overrides where artifacts land; --threads never changes
// the artifact bytes.
struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> periods;
  std::string out_dir;
  std::optional<std::string> format;
  std::optional<double> correct_visibility;
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_visibility = true) {
  cmd->add_option("--config", opts.config_path,
                  "Config file, one 'key = value' per line");
  cmd->add_option("--seed", opts.seed, "Random seed (overrides config)");
  cmd->add_option("--periods", opts.periods,
                  "Measurement periods per scan point (overrides config)");
  cmd->add_option("--out", opts.out_dir,
                  "Output directory (overrides config output_dir)");
  cmd->add_option("--format", opts.format, "Artifact format: csv or json");
  if (with_visibility)
    cmd->add_option("--correct-visibility", opts.correct_visibility,
                    "Divide overlap-type estimates by this effective visibility");
  cmd->add_option("--threads", opts.threads, "Worker threads over scan points")
      ->check(CLI::PositiveNumber);
}

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg =
      opts.config_path.empty() ? RunConfig{} : load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.periods) cfg.periods = *opts.periods;
  if (opts.format) cfg.format = parse_format(*opts.format);
  if (opts.correct_visibility &&
      (!(*opts.correct_visibility > 0.0) || *opts.correct_visibility > 1.0))
    throw std::runtime_error("--correct-visibility: value outside (0, 1]");
  cfg.validate();
  return cfg;
}

fs::path resolve_out_dir(const CommonOpts& opts, const RunConfig& cfg) {
  const fs::path dir = opts.out_dir.empty() ? fs::path(cfg.output_dir)
                                            : fs::path(opts.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw std::runtime_error("cannot create output directory '" + dir.string() +
                             "': " + ec.message());
  return dir;
}

std::string visibility_suffix(const CommonOpts& opts) {
  return opts.correct_visibility
             ? " --correct-visibility " + format_double(*opts.correct_visibility)
             : "";
}

nlohmann::json estimate_to_json(const Estimate& e) {
  nlohmann::json j;
  j["clamped"] = e.clamped;
  j["method"] = e.method == ErrorMethod::Bootstrap ? "bootstrap"
                                                   : "poisson_propagation";
  j["n_periods"] = e.n_periods;
  j["std_error"] = e.std_error;
  j["value"] = e.value;
  return j;
}

nlohmann::json fit_to_json(const FitSummary& s) {
  nlohmann::json j;
  j["a"] = s.fit.a;
  j["a_err"] = s.fit.a_err;
  j["b"] = s.fit.b;
  j["b_err"] = s.fit.b_err;
  j["chi2"] = s.fit.chi2;
  j["n_points"] = s.fit.n_points;
  if (s.phi_ok) {
    j["phi_deg"] = s.phi_deg;
    j["phi_err_deg"] = s.phi_err_deg;
  } else {
    j["phi_deg"] = nullptr;
    j["phi_err_deg"] = nullptr;
    j["phi_note"] = s.phi_note;
  }
  return j;
}

void cmd_dip(const CommonOpts& opts, int delay_points) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = resolve_out_dir(opts, cfg);
  const auto rows = run_dip_scan(cfg, dip_delay_grid(delay_points), opts.threads);

  ScanTable t;
  t.columns = {"delay_um", "mean_coincidence_rate_hz", "stderr"};
  for (const DipRow& r : rows)
    t.rows.push_back({r.delay_um, r.rate_hz, r.rate_err});

  const std::string name = write_table(t, dir, "dip", cfg.format);
  write_manifest("dip --delay-points " + std::to_string(delay_points), cfg,
                 {name}, dir);
}

void cmd_pure_overlap(const CommonOpts& opts, std::vector<double> thetas_deg) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = resolve_out_dir(opts, cfg);
  if (thetas_deg.empty()) thetas_deg = default_overlap_thetas_deg();
  const auto rows = run_pure_overlap(cfg, thetas_deg, opts.threads,
                                     opts.correct_visibility);

  ScanTable t;
  t.columns = {"theta_deg", "f_est", "f_err", "f_theory"};
  for (const OverlapRow& r : rows)
    t.rows.push_back({r.theta_deg, r.f_est, r.f_err, r.f_theory});

  const std::string name = write_table(t, dir, "pure_overlap", cfg.format);
  write_manifest("pure-overlap --thetas-deg " + join_doubles(thetas_deg) +
                     visibility_suffix(opts),
                 cfg, {name}, dir);
}

void cmd_parallel_perp(const CommonOpts& opts, std::vector<double> thetas_deg) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = resolve_out_dir(opts, cfg);
  if (thetas_deg.empty()) thetas_deg = default_phase_thetas_deg();
  const PhaseScanResult result =
      run_parallel_perp(cfg, thetas_deg, opts.threads, opts.correct_visibility);

  auto to_table = [](const std::vector<OverlapRow>& rows) {
    ScanTable t;
    t.columns = {"theta_deg", "f_est", "f_err", "f_theory"};
    for (const OverlapRow& r : rows)
      t.rows.push_back({r.theta_deg, r.f_est, r.f_err, r.f_theory});
    return t;
  };
  std::vector<std::string> artifacts;
  artifacts.push_back(
      write_table(to_table(result.parallel), dir, "parallel", cfg.format));
  artifacts.push_back(write_table(to_table(result.perpendicular), dir,
                                  "perpendicular", cfg.format));

  nlohmann::json fits;
  fits["parallel"] = fit_to_json(result.fit_parallel);
  fits["perpendicular"] = fit_to_json(result.fit_perpendicular);
  fits["pooled"] = fit_to_json(result.fit_pooled);
  homsim::detail::write_file(dir / "parallel_perp_fit.json", fits.dump(2) + "\n");
  artifacts.push_back("parallel_perp_fit.json");

  write_manifest("parallel-perp --thetas-deg " + join_doubles(thetas_deg) +
                     visibility_suffix(opts),
                 cfg, artifacts, dir);
}

void cmd_fidelity(const CommonOpts& opts, std::vector<double> p_grid,
                  MixingMode mixing) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = resolve_out_dir(opts, cfg);
  if (p_grid.empty()) p_grid = default_weight_grid();
  require_unit_interval(p_grid, "--p-grid");
  const auto rows =
      run_fidelity(cfg, p_grid, opts.threads, opts.correct_visibility, mixing);

  ScanTable t;
  t.columns = {"p",        "f_est_V", "f_err_V", "f_th_V",
               "f_est_A", "f_err_A", "f_th_A"};
  for (const FidelityRow& r : rows)
    t.rows.push_back(
        {r.p, r.f_est_v, r.f_err_v, r.f_th_v, r.f_est_a, r.f_err_a, r.f_th_a});

  const std::string name = write_table(t, dir, "fidelity", cfg.format);
  write_manifest("fidelity --p-grid " + join_doubles(p_grid) + " --mixing " +
                     mixing_name(mixing) + visibility_suffix(opts),
                 cfg, {name}, dir);
}

void cmd_purity(const CommonOpts& opts, std::vector<double> p_grid,
                MixingMode mixing) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = resolve_out_dir(opts, cfg);
  if (p_grid.empty()) p_grid = default_weight_grid();
  require_unit_interval(p_grid, "--p-grid");
  const auto rows =
      run_purity(cfg, p_grid, opts.threads, opts.correct_visibility, mixing);

  ScanTable t;
  t.columns = {"p",           "purity_est",  "purity_err", "purity_th",
               "lambda1",     "lambda1_err", "lambda2",    "lambda2_err",
               "clamped_flag", "entropy",    "entropy_err"};
  for (const PurityRow& r : rows)
    t.rows.push_back({r.p, r.purity_est, r.purity_err, r.purity_th, r.lambda1,
                      r.lambda1_err, r.lambda2, r.lambda2_err,
                      static_cast<std::int64_t>(r.clamped ? 1 : 0), r.entropy,
                      r.entropy_err});

  const std::string name = write_table(t, dir, "purity", cfg.format);
  write_manifest("purity --p-grid " + join_doubles(p_grid) + " --mixing " +
                     mixing_name(mixing) + visibility_suffix(opts),
                 cfg, {name}, dir);
}

void cmd_mixed_table(const CommonOpts& opts,
                     std::vector<std::pair<double, double>> pairs,
                     MixingMode mixing) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = resolve_out_dir(opts, cfg);
  if (pairs.empty()) pairs = default_weight_pairs();
  for (const auto& [pa, pb] : pairs)
    require_unit_interval({pa, pb}, "--pairs");
  const auto rows =
      run_mixed_table(cfg, pairs, opts.threads, opts.correct_visibility, mixing);

  ScanTable t;
  t.columns = {"p_a", "p_b", "f_est", "f_err", "f_th", "d_est", "d_err", "d_th"};
  for (const MixedRow& r : rows)
    t.rows.push_back({r.p_a, r.p_b, r.f_est, r.f_err, r.f_th, r.d_est, r.d_err,
                      r.d_th});

  const std::string name = write_table(t, dir, "mixed_table", cfg.format);
  write_manifest("mixed-table --pairs " + join_pairs(pairs) + " --mixing " +
                     mixing_name(mixing) + visibility_suffix(opts),
                 cfg, {name}, dir);
}

void cmd_multimeter(const CommonOpts& opts, std::vector<double> thetas_deg) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = resolve_out_dir(opts, cfg);
  if (thetas_deg.empty()) thetas_deg = default_program_thetas_deg();
  const auto rows = run_multimeter(cfg, thetas_deg, opts.threads);

  ScanTable t;
  t.columns = {"theta_deg",    "p_one_same",   "p_one_orth",
               "fidelity_est", "fidelity_err", "fidelity_ideal"};
  for (const MultimeterRow& r : rows)
    t.rows.push_back({r.theta_deg, r.p_one_same, r.p_one_orth, r.fidelity_est,
                      r.fidelity_err, r.fidelity_ideal});

  const std::string name = write_table(t, dir, "multimeter", cfg.format);
  write_manifest("multimeter --program-thetas-deg " + join_doubles(thetas_deg),
                 cfg, {name}, dir);
}

void cmd_ingest(const CommonOpts& opts, const std::string& counts_path) {
  const RunConfig cfg = resolve_config(opts);
  const fs::path dir = resolve_out_dir(opts, cfg);
  const CountSeries series = ingest_counts(counts_path);

  const Estimate overlap_raw = overlap_estimate(series);
  const Estimate overlap =
      opts.correct_visibility
          ? visibility_corrected(overlap_raw, *opts.correct_visibility)
          : overlap_raw;
  const auto spectrum = spectrum_estimate(overlap);
  const Estimate entropy = entropy_estimate(spectrum);

  nlohmann::json j;
  j["overlap"] = estimate_to_json(overlap);
  // Same-state interpretation: the ratio read as a purity, with the derived
  // eigenvalues and entropy. Meaningful only when both arms carried the
  // same preparation.
  j["purity_view"]["entropy"] = estimate_to_json(entropy);
  j["purity_view"]["lambda1"] = estimate_to_json(spectrum.first);
  j["purity_view"]["lambda2"] = estimate_to_json(spectrum.second);
  j["purity_view"]["purity"] = estimate_to_json(overlap);
  homsim::detail::write_file(dir / "estimates.json", j.dump(2) + "\n");

  write_manifest("ingest --counts " + counts_path + visibility_suffix(opts),
                 cfg, {"estimates.json"}, dir);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Two-photon interference experiments: simulation, estimation, artifacts"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  CommonOpts o_dip, o_po, o_pp, o_fid, o_pur, o_mix, o_mm, o_ing;
  int delay_points = 81;
  std::string theta_list, pp_theta_list, fid_grid, pur_grid, pair_list,
      mm_theta_list, mixing_fid = "density", mixing_pur = "density",
      mixing_mix = "density", counts_path;

  CLI::App* dip = app.add_subcommand(
      "dip", "Coincidence rate versus delay for identical inputs");
  add_common(dip, o_dip, /*with_visibility=*/false);
  dip->add_option("--delay-points", delay_points,
                  "Points on the [-200, 200] um delay grid")
      ->check(CLI::Range(2, 100000));
  dip->callback([&] { cmd_dip(o_dip, delay_points); });

  CLI::App* po = app.add_subcommand(
      "pure-overlap", "Overlap of |V> with a rotated pure state");
  add_common(po, o_po);
  po->add_option("--thetas-deg", theta_list,
                 "Comma-separated polarizer angles (default 0..90 step 5)");
  po->callback([&] {
    cmd_pure_overlap(o_po, theta_list.empty()
                               ? std::vector<double>{}
                               : parse_double_list(theta_list, "--thetas-deg"));
  });

  CLI::App* pp = app.add_subcommand(
      "parallel-perp", "Equal and crossed polarizer scans with phase fits");
  add_common(pp, o_pp);
  pp->add_option("--thetas-deg", pp_theta_list,
                 "Comma-separated polarizer angles (default 0..180 step 10)");
  pp->callback([&] {
    cmd_parallel_perp(o_pp,
                      pp_theta_list.empty()
                          ? std::vector<double>{}
                          : parse_double_list(pp_theta_list, "--thetas-deg"));
  });

  CLI::App* fid = app.add_subcommand(
      "fidelity", "Mixture fidelity against the pure references |V> and |A>");
  add_common(fid, o_fid);
  fid->add_option("--p-grid", fid_grid,
                  "Comma-separated mixture weights (default 0..1 step 0.1)");
  fid->add_option("--mixing", mixing_fid,
                  "Mixture realization: density or per-period");
  fid->callback([&] {
    cmd_fidelity(o_fid,
                 fid_grid.empty() ? std::vector<double>{}
                                  : parse_double_list(fid_grid, "--p-grid"),
                 parse_mixing(mixing_fid));
  });

  CLI::App* pur = app.add_subcommand(
      "purity", "Mixture purity, eigenvalues, and entropy from twin runs");
  add_common(pur, o_pur);
  pur->add_option("--p-grid", pur_grid,
                  "Comma-separated mixture weights (default 0..1 step 0.1)");
  pur->add_option("--mixing", mixing_pur,
                  "Mixture realization: density or per-period");
  pur->callback([&] {
    cmd_purity(o_pur,
               pur_grid.empty() ? std::vector<double>{}
                                : parse_double_list(pur_grid, "--p-grid"),
               parse_mixing(mixing_pur));
  });

  CLI::App* mix = app.add_subcommand(
      "mixed-table", "Overlap and distance for pairs of mixtures");
  add_common(mix, o_mix);
  mix->add_option("--pairs", pair_list,
                  "Comma-separated pA:pB pairs (default six standard rows)");
  mix->add_option("--mixing", mixing_mix,
                  "Mixture realization: density or per-period");
  mix->callback([&] {
    cmd_mixed_table(o_mix,
                    pair_list.empty()
                        ? std::vector<std::pair<double, double>>{}
                        : parse_pair_list(pair_list),
                    parse_mixing(mixing_mix));
  });

  CLI::App* mm = app.add_subcommand(
      "multimeter", "Programmable fidelity meter figure of merit");
  add_common(mm, o_mm, /*with_visibility=*/false);
  mm->add_option("--program-thetas-deg", mm_theta_list,
                 "Comma-separated program angles (default 0,-45,45)");
  mm->callback([&] {
    cmd_multimeter(o_mm, mm_theta_list.empty()
                             ? std::vector<double>{}
                             : parse_double_list(mm_theta_list,
                                                 "--program-thetas-deg"));
  });

  CLI::App* ing = app.add_subcommand(
      "ingest", "Estimate overlap and purity from an external counts CSV");
  add_common(ing, o_ing);
  ing->add_option("--counts", counts_path, "Counts CSV file")->required();
  ing->callback([&] { cmd_ingest(o_ing, counts_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "expcli: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
