#include <homsim/config.hpp>
#include <homsim/csvio.hpp>
#include <homsim/estimate.hpp>
#include <homsim/experiment.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "test_support.hpp"

using namespace homsim;
using namespace homsim::testing;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace fs = std::filesystem;

TEST_CASE("config parser applies defaults, overrides, and comments") {
  std::istringstream empty("");
  const RunConfig d = parse_config(empty);
  CHECK(d.seed == 1);
  CHECK(d.periods == 100);
  CHECK_THAT(d.period_s, WithinAbs(1.0, 0.0));
  CHECK_THAT(d.transmittance, WithinAbs(0.5, 0.0));
  CHECK_THAT(d.mode_overlap, WithinAbs(0.992, 0.0));
  CHECK_THAT(d.arm_phase_deg, WithinAbs(39.4, 0.0));
  CHECK_THAT(d.eta1, WithinAbs(0.51, 0.0));
  CHECK_THAT(d.eta2, WithinAbs(0.51, 0.0));
  CHECK_THAT(d.pair_rate_hz, WithinAbs(25400.0, 0.0));
  CHECK_THAT(d.dark_coinc_hz, WithinAbs(0.0, 0.0));
  CHECK_THAT(d.dip_width_um, WithinAbs(60.0, 0.0));
  CHECK_THAT(d.shoulder_delay_um, WithinAbs(200.0, 0.0));
  CHECK(d.format == OutputFormat::Csv);

  std::istringstream in(
      "# apparatus for the afternoon run\n"
      "seed = 77\n"
      "periods = 50   # short scan\n"
      "transmittance = 0.52\n"
      "\n"
      "format = json\n"
      "output_dir = scratch\n");
  const RunConfig c = parse_config(in);
  CHECK(c.seed == 77);
  CHECK(c.periods == 50);
  CHECK_THAT(c.transmittance, WithinAbs(0.52, 0.0));
  CHECK(c.format == OutputFormat::Json);
  CHECK(c.output_dir == "scratch");
  // untouched keys keep their defaults
  CHECK_THAT(c.mode_overlap, WithinAbs(0.992, 0.0));
}

TEST_CASE("config parser rejects malformed input with line numbers") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
  };

  CHECK_THROWS_WITH(parse("seed = 1\npariods = 10\n"),
                    ContainsSubstring("line 2") &&
                        ContainsSubstring("unknown key 'pariods'"));
  CHECK_THROWS_WITH(parse("transmittance 0.5\n"),
                    ContainsSubstring("line 1") &&
                        ContainsSubstring("key = value"));
  CHECK_THROWS_WITH(parse("eta1 = fast\n"),
                    ContainsSubstring("line 1") &&
                        ContainsSubstring("expected a number"));
  CHECK_THROWS_WITH(parse("seed = -3\n"),
                    ContainsSubstring("non-negative integer"));
  CHECK_THROWS_AS(parse("periods = 0\n"), std::domain_error);
  CHECK_THROWS_AS(parse("periods = 2000000\n"), std::runtime_error);
  CHECK_THROWS_AS(parse("transmittance = 1.5\n"), std::domain_error);
}

TEST_CASE("counts CSV round-trips a simulated series exactly") {
  const CountSeries series =
      run_measurement(ApparatusParams{}, Preparation::mixed_pair(0.3, 0.7), 25,
                      RngStream{9, 4});
  const auto dir = make_temp_dir("roundtrip");
  const auto path = dir / "counts.csv";
  write_counts_csv(series, path);

  const CountSeries back = ingest_counts(path);
  REQUIRE(back.dip.size() == series.dip.size());
  REQUIRE(back.shoulder.size() == series.shoulder.size());
  for (std::size_t k = 0; k < series.dip.size(); ++k) {
    CHECK(back.dip[k].period_index == series.dip[k].period_index);
    CHECK(back.dip[k].delay_um == series.dip[k].delay_um);
    CHECK(back.dip[k].duration_s == series.dip[k].duration_s);
    CHECK(back.dip[k].coincidences == series.dip[k].coincidences);
  }
  for (std::size_t k = 0; k < series.shoulder.size(); ++k) {
    CHECK(back.shoulder[k].delay_um == series.shoulder[k].delay_um);
    CHECK(back.shoulder[k].coincidences == series.shoulder[k].coincidences);
  }

  // Estimates computed from the file match the in-memory path bit for bit.
  const Estimate direct = overlap_estimate(series);
  const Estimate via_file = overlap_estimate(back);
  CHECK(direct.value == via_file.value);
  CHECK(direct.std_error == via_file.std_error);

  // Writing the re-ingested series reproduces the file bytes.
  const auto path2 = dir / "counts2.csv";
  write_counts_csv(back, path2);
  CHECK(slurp(path) == slurp(path2));

  fs::remove_all(dir);
}

TEST_CASE("counts ingestion pinpoints malformed rows") {
  const auto dir = make_temp_dir("badcounts");
  auto write = [&dir](const std::string& name, const std::string& text) {
    std::ofstream(dir / name, std::ios::binary) << text;
    return dir / name;
  };
  const std::string header = "period_index,delay_um,duration_s,coincidences\n";

  CHECK_THROWS_WITH(ingest_counts(write("h.csv", "period,delay\n0,0\n")),
                    ContainsSubstring("line 1") &&
                        ContainsSubstring("expected header"));
  CHECK_THROWS_WITH(ingest_counts(write("w.csv", header + "0,0,1\n")),
                    ContainsSubstring("line 2") &&
                        ContainsSubstring("expected 4 columns"));
  CHECK_THROWS_WITH(
      ingest_counts(write("i.csv", header + "0,0,1,12.5\n")),
      ContainsSubstring("line 2") && ContainsSubstring("coincidences"));
  CHECK_THROWS_WITH(
      ingest_counts(write("n.csv", header + "0,0,1,5\n1,0,1,-2\n1,200,1,5\n")),
      ContainsSubstring("line 3") && ContainsSubstring("negative count"));
  CHECK_THROWS_WITH(
      ingest_counts(write("d.csv", header + "0,0,0,5\n")),
      ContainsSubstring("duration_s") && ContainsSubstring("positive"));
  CHECK_THROWS_WITH(ingest_counts(write("s.csv", header + "0,200,1,5\n")),
                    ContainsSubstring("no dip records"));
  CHECK_THROWS_WITH(ingest_counts(write("p.csv", header + "0,0,1,5\n")),
                    ContainsSubstring("no shoulder records"));

  fs::remove_all(dir);
}

TEST_CASE("doubles serialize in shortest round-trip form") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(200.0) == "200");
  CHECK(format_double(-0.5) == "-0.5");
  CHECK(format_double(0.30000000000000004) == "0.30000000000000004");
  const double v = 0.7472808604407102;
  CHECK(std::stod(format_double(v)) == v);
}

TEST_CASE("scan tables render stable CSV and JSON") {
  ScanTable t;
  t.columns = {"x", "count"};
  t.rows.push_back({0.5, std::int64_t{3}});
  t.rows.push_back({-1.25, std::int64_t{0}});
  CHECK(render_csv(t) == "x,count\n0.5,3\n-1.25,0\n");

  const auto j = nlohmann::json::parse(render_json(t));
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 2);
  CHECK(j[0]["x"].get<double>() == 0.5);
  CHECK(j[0]["count"].get<std::int64_t>() == 3);

  ScanTable bad = t;
  bad.rows.push_back({1.0});
  CHECK_THROWS_AS(render_csv(bad), std::logic_error);
}

TEST_CASE("manifest bytes are deterministic with alphabetical keys") {
  RunConfig cfg;
  cfg.seed = 11;
  const std::string a = render_manifest("dip --delay-points 81", cfg, {"dip.csv"});
  const std::string b = render_manifest("dip --delay-points 81", cfg, {"dip.csv"});
  CHECK(a == b);

  const auto j = nlohmann::json::parse(a);
  CHECK(j["command"] == "dip --delay-points 81");
  CHECK(j["seed"] == 11);
  CHECK(j["tool_version"] == kToolVersion);
  CHECK(j["artifact_files"][0] == "dip.csv");
  CHECK(j["config_snapshot"]["pair_rate_hz"].get<double>() == 25400.0);
  // Top-level keys appear alphabetically in the serialized text.
  CHECK(a.find("\"artifact_files\"") < a.find("\"command\""));
  CHECK(a.find("\"command\"") < a.find("\"config_snapshot\""));
  CHECK(a.find("\"config_snapshot\"") < a.find("\"seed\""));
  CHECK(a.find("\"seed\"") < a.find("\"tool_version\""));
}

TEST_CASE("cli: scan run produces artifacts, manifest, and sane values") {
  REQUIRE_FALSE(cli_binary().empty());
  const auto dir = make_temp_dir("cli_po");

  const int rc = run_cli("pure-overlap --out '" + dir.string() +
                         "' --seed 5 --periods 40 --thetas-deg 0,45,90");
  REQUIRE(rc == 0);
  REQUIRE(fs::exists(dir / "pure_overlap.csv"));
  REQUIRE(fs::exists(dir / "manifest.json"));

  std::ifstream csv(dir / "pure_overlap.csv");
  std::string line;
  REQUIRE(std::getline(csv, line));
  CHECK(line == "theta_deg,f_est,f_err,f_theory");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 3);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["command"] == "pure-overlap --thetas-deg 0,45,90");
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["config_snapshot"]["periods"] == 40);
  CHECK(manifest["artifact_files"] ==
        nlohmann::json::array({"pure_overlap.csv"}));

  fs::remove_all(dir);
}

TEST_CASE("cli: repeated runs are byte-identical, seeds change bytes") {
  REQUIRE_FALSE(cli_binary().empty());
  const auto d1 = make_temp_dir("cli_det1");
  const auto d2 = make_temp_dir("cli_det2");
  const auto d3 = make_temp_dir("cli_det3");

  const std::string args = "purity --p-grid 0.4,0.8 --periods 30 --seed 21 --out ";
  REQUIRE(run_cli(args + "'" + d1.string() + "'") == 0);
  REQUIRE(run_cli(args + "'" + d2.string() + "'") == 0);
  CHECK(slurp(d1 / "purity.csv") == slurp(d2 / "purity.csv"));
  CHECK(slurp(d1 / "manifest.json") == slurp(d2 / "manifest.json"));

  REQUIRE(run_cli("purity --p-grid 0.4,0.8 --periods 30 --seed 22 --out '" +
                  d3.string() + "'") == 0);
  CHECK(slurp(d1 / "purity.csv") != slurp(d3 / "purity.csv"));

  fs::remove_all(d1);
  fs::remove_all(d2);
  fs::remove_all(d3);
}

TEST_CASE("cli: ingest matches the library estimate and applies correction") {
  REQUIRE_FALSE(cli_binary().empty());
  const auto dir = make_temp_dir("cli_ingest");
  const CountSeries series =
      run_measurement(ApparatusParams{}, Preparation::mixed_pair(0.6, 0.6), 50,
                      RngStream{31, 0});
  write_counts_csv(series, dir / "counts.csv");

  REQUIRE(run_cli("ingest --counts '" + (dir / "counts.csv").string() +
                  "' --out '" + dir.string() + "'") == 0);
  const auto est = nlohmann::json::parse(slurp(dir / "estimates.json"));
  const Estimate expect = overlap_estimate(series);
  CHECK(est["overlap"]["value"].get<double>() == expect.value);
  CHECK(est["overlap"]["std_error"].get<double>() == expect.std_error);
  CHECK(est["overlap"]["n_periods"] == 50);
  CHECK(est["purity_view"]["lambda1"]["value"].get<double>() ==
        spectrum_estimate(expect).first.value);

  // Visibility correction divides straight through.
  REQUIRE(run_cli("ingest --counts '" + (dir / "counts.csv").string() +
                  "' --correct-visibility 0.992 --out '" + dir.string() +
                  "'") == 0);
  const auto corrected = nlohmann::json::parse(slurp(dir / "estimates.json"));
  CHECK_THAT(corrected["overlap"]["value"].get<double>(),
             WithinAbs(expect.value / 0.992, 1e-15));

  fs::remove_all(dir);
}

TEST_CASE("cli: failures exit nonzero with a one-line diagnostic") {
  REQUIRE_FALSE(cli_binary().empty());
  const auto dir = make_temp_dir("cli_fail");
  const auto log = dir / "log.txt";

  // Unknown config key.
  std::ofstream(dir / "bad.cfg") << "vltage = 3\n";
  CHECK(run_cli("dip --config '" + (dir / "bad.cfg").string() + "' --out '" +
                    dir.string() + "'",
                log) == 1);
  CHECK_THAT(slurp(log), ContainsSubstring("unknown key 'vltage'"));

  // Unknown subcommand and unknown flag are CLI parse errors.
  CHECK(run_cli("frobnicate", log) != 0);
  CHECK(run_cli("dip --no-such-flag", log) != 0);

  // Out-of-range physics parameter.
  CHECK(run_cli("purity --p-grid 0.5,1.5 --out '" + dir.string() + "'", log) ==
        1);
  CHECK_THAT(slurp(log), ContainsSubstring("[0, 1]"));

  fs::remove_all(dir);
}

TEST_CASE("cli: json format writes the same data as json artifacts") {
  REQUIRE_FALSE(cli_binary().empty());
  const auto dir = make_temp_dir("cli_json");
  REQUIRE(run_cli("mixed-table --format json --periods 20 --pairs 0.2:0.4 "
                  "--out '" +
                  dir.string() + "'") == 0);
  REQUIRE(fs::exists(dir / "mixed_table.json"));
  CHECK_FALSE(fs::exists(dir / "mixed_table.csv"));
  const auto rows = nlohmann::json::parse(slurp(dir / "mixed_table.json"));
  REQUIRE(rows.is_array());
  REQUIRE(rows.size() == 1);
  CHECK_THAT(rows[0]["f_th"].get<double>(), WithinAbs(0.54, 1e-12));
  CHECK_THAT(rows[0]["d_th"].get<double>(), WithinAbs(0.1, 1e-12));
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["artifact_files"] ==
        nlohmann::json::array({"mixed_table.json"}));
  fs::remove_all(dir);
}
