#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "jointstab/errors.hpp"
#include "jointstab/harness.hpp"

using namespace jointstab;

namespace {

// Tiny configuration: milliseconds per run, still exercising the full path.
SweepConfig tiny_config() {
  SweepConfig cfg;
  cfg.dims = Dimensions{3, 2, 1, 1};
  cfg.t_values = {6};
  cfg.k_values = {2};
  cfg.sigma_g_values = {0.3};
  cfg.sigma_eta_values = {1.0};
  cfg.r_values = {0.25};
  cfg.n_seeds = 1;
  cfg.master_seed = 11;
  cfg.fit.restarts = 2;
  return cfg;
}

int count_occurrences(const std::string& text, const std::string& needle) {
  int count = 0;
  for (size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

SummaryRow summary_point(int T, int k, double sg, double se, double r,
                         const std::string& method, double mean, double err) {
  SummaryRow s;
  s.T = T;
  s.k = k;
  s.sigma_g = sg;
  s.sigma_eta = se;
  s.r = r;
  s.method = method;
  s.n_seeds = 10;
  s.mean_fraction = mean;
  s.stderr_fraction = err;
  return s;
}

}  // namespace

TEST_CASE("run_sweep: singleton grids produce exactly one row pair") {
  const auto rows = run_sweep(tiny_config());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].method == "joint");
  CHECK(rows[1].method == "individual");
  CHECK(rows[0].T == 6);
  CHECK(rows[0].seed == 0);
}

TEST_CASE("run_sweep: row count is grid x seeds x methods") {
  auto cfg = tiny_config();
  cfg.t_values = {4, 6};
  cfg.r_values = {0.25, 1.0};
  cfg.n_seeds = 2;
  const auto rows = run_sweep(cfg);
  CHECK(rows.size() == 2 * 2 * 2 * 2);  // |grid| = 4, seeds = 2, methods = 2
}

TEST_CASE("run_sweep: byte-identical reruns, independent of thread count") {
  auto cfg = tiny_config();
  cfg.t_values = {4, 6};
  cfg.n_seeds = 2;
  cfg.threads = 1;
  const std::string csv_single = rows_to_csv(run_sweep(cfg));
  cfg.threads = 4;
  const std::string csv_multi = rows_to_csv(run_sweep(cfg));
  CHECK(csv_single == csv_multi);
  const std::string csv_again = rows_to_csv(run_sweep(cfg));
  CHECK(csv_single == csv_again);
}

TEST_CASE("run_sweep: rows come out in grid, method, seed order") {
  auto cfg = tiny_config();
  cfg.t_values = {6, 4};  // intentionally unsorted
  cfg.n_seeds = 2;
  const auto rows = run_sweep(cfg);
  REQUIRE(rows.size() == 8);
  CHECK(rows[0].T == 4);
  CHECK(rows[0].method == "joint");
  CHECK(rows[0].seed == 0);
  CHECK(rows[1].seed == 1);
  CHECK(rows[2].method == "individual");
  CHECK(rows[4].T == 6);
}

TEST_CASE("run_sweep validates the configuration") {
  auto cfg = tiny_config();
  cfg.t_values.clear();
  CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
  cfg = tiny_config();
  cfg.n_seeds = 0;
  CHECK_THROWS_AS(run_sweep(cfg), std::invalid_argument);
}

TEST_CASE("aggregate: hand-checked mean and standard error") {
  std::vector<SweepResultRow> rows(2);
  for (int s = 0; s < 2; ++s) {
    rows[s].T = 10;
    rows[s].k = 3;
    rows[s].sigma_g = 0.3;
    rows[s].sigma_eta = 2.0;
    rows[s].r = 0.25;
    rows[s].method = "joint";
    rows[s].seed = s;
  }
  rows[0].fraction_stabilized = 0.4;
  rows[1].fraction_stabilized = 0.6;
  const auto summary = aggregate(rows);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].mean_fraction == doctest::Approx(0.5));
  // sample std = 0.1414... / sqrt(2) -> 0.1
  CHECK(summary[0].stderr_fraction == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(summary[0].n_seeds == 2);
  CHECK_FALSE(summary[0].single_seed);
}

TEST_CASE("aggregate: equal fractions give zero stderr; one seed is flagged") {
  std::vector<SweepResultRow> rows(3);
  for (int s = 0; s < 3; ++s) {
    rows[s].T = 5;
    rows[s].method = "individual";
    rows[s].seed = s;
    rows[s].fraction_stabilized = 0.7;
  }
  auto summary = aggregate(rows);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].stderr_fraction == 0.0);

  rows.resize(1);
  summary = aggregate(rows);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].single_seed);
  CHECK(summary[0].stderr_fraction == 0.0);
  CHECK_THROWS_AS(aggregate({}), std::invalid_argument);
}

TEST_CASE("CSV header is the frozen contract") {
  CHECK(std::string(kSweepCsvHeader) ==
        "T,k,sigma_g,sigma_eta,r,method,seed,fraction_stabilized,mean_rho,"
        "wall_time_ms");
  CHECK(rows_to_csv({}) == std::string(kSweepCsvHeader) + "\n");
}

TEST_CASE("CSV single row matches the contract byte for byte") {
  SweepResultRow row;
  row.T = 15;
  row.k = 4;
  row.sigma_g = 0.3;
  row.sigma_eta = 2.0;
  row.r = 0.25;
  row.method = "joint";
  row.seed = 7;
  row.fraction_stabilized = 0.85;
  row.mean_rho = 0.9123456789;
  row.wall_time_ms = 0.0;
  CHECK(rows_to_csv({row}) ==
        std::string(kSweepCsvHeader) +
            "\n15,4,0.3,2,0.25,joint,7,0.85,0.9123456789,0\n");
}

TEST_CASE("CSV emit/parse round trip is a fixed point") {
  auto cfg = tiny_config();
  cfg.t_values = {4, 6};
  cfg.n_seeds = 2;
  const auto rows = run_sweep(cfg);
  const std::string text = rows_to_csv(rows);
  const auto parsed = parse_rows_csv(text);
  REQUIRE(parsed.size() == rows.size());
  CHECK(rows_to_csv(parsed) == text);
  for (size_t i = 0; i < rows.size(); ++i) {
    CHECK(parsed[i].T == rows[i].T);
    CHECK(parsed[i].method == rows[i].method);
    CHECK(parsed[i].seed == rows[i].seed);
  }
}

TEST_CASE("CSV parser rejects malformed documents") {
  CHECK_THROWS_AS(parse_rows_csv("bogus header\n"), IoError);
  CHECK_THROWS_AS(
      parse_rows_csv(std::string(kSweepCsvHeader) + "\n1,2,3\n"), IoError);
  CHECK_THROWS_AS(parse_rows_csv(std::string(kSweepCsvHeader) +
                                 "\n15,4,0.3,2,0.25,mystery,7,0.85,0.9,0\n"),
                  IoError);
}

TEST_CASE("emit_csv writes files and reports I/O failures") {
  const std::string path = "/tmp/jointstab_test_rows.csv";
  SweepResultRow row;
  row.method = "joint";
  emit_csv({row}, path);
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header == kSweepCsvHeader);
  std::remove(path.c_str());
  CHECK_THROWS_AS(emit_csv({row}, "/nonexistent-dir/rows.csv"), IoError);
}

TEST_CASE("plot script: one panel per swept sigma_g, solid and dashed curves") {
  std::vector<SummaryRow> summary;
  for (double sg : {0.3, 0.6, 0.9, 1.2}) {
    for (int k : {3, 4, 5}) {
      for (const char* method : {"joint", "individual"}) {
        for (int T : {5, 10, 15}) {
          summary.push_back(summary_point(T, k, sg, 2.0, 0.25, method, 0.5, 0.05));
        }
      }
    }
  }
  const std::string script = plot_script_text(summary);
  CHECK(count_occurrences(script, "set title") == 4);
  // 4 panels x (3 k values x 2 methods) curves
  CHECK(count_occurrences(script, "yerrorlines") == 24);
  CHECK(count_occurrences(script, "dt 2") == 12);  // dashed = individual
  CHECK(script.find("set xlabel 'T'") != std::string::npos);
}

TEST_CASE("plot script: r sweep puts r on the x axis, panels per T") {
  std::vector<SummaryRow> summary;
  for (int T : {15, 25}) {
    for (int k : {3, 4, 5}) {
      for (const char* method : {"joint", "individual"}) {
        for (double r : {0.25, 1.0, 4.0}) {
          summary.push_back(summary_point(T, k, 0.3, 2.0, r, method, 0.6, 0.02));
        }
      }
    }
  }
  const std::string script = plot_script_text(summary);
  CHECK(count_occurrences(script, "set title") == 2);
  CHECK(script.find("set xlabel 'r'") != std::string::npos);
  CHECK(script.find("T = 15") != std::string::npos);
  CHECK(script.find("T = 25") != std::string::npos);
}

TEST_CASE("plot script: single point still plots two error-barred curves") {
  std::vector<SummaryRow> summary = {
      summary_point(10, 3, 0.3, 2.0, 0.25, "joint", 0.8, 0.1),
      summary_point(10, 3, 0.3, 2.0, 0.25, "individual", 0.5, 0.1)};
  const std::string script = plot_script_text(summary);
  CHECK(count_occurrences(script, "set title") == 1);
  CHECK(count_occurrences(script, "yerrorlines") == 2);
  CHECK_THROWS_AS(plot_script_text({}), std::invalid_argument);
}

TEST_CASE("sweep config round-trips through JSON") {
  const std::string path = "/tmp/jointstab_test_config.json";
  {
    std::ofstream out(path);
    out << R"({
      "dims": {"m": 20, "dx": 6, "du": 3, "ell": 3},
      "sigma_xi": 2.0,
      "t_values": [5, 10, 15],
      "k_values": [4],
      "sigma_g_values": [0.3],
      "sigma_eta_values": [2.0],
      "r_values": [0.25],
      "n_seeds": 10,
      "master_seed": 99,
      "fit": {"restarts": 5, "ridge": 1e-10}
    })";
  }
  const SweepConfig cfg = load_sweep_config(path);
  CHECK(cfg.dims.m == 20);
  CHECK(cfg.dims.ell == 3);
  CHECK(cfg.t_values == std::vector<int>{5, 10, 15});
  CHECK(cfg.n_seeds == 10);
  CHECK(cfg.master_seed == 99);
  CHECK(cfg.fit.restarts == 5);
  CHECK(cfg.rho_min == 1.2);  // untouched default
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_sweep_config("/nonexistent.json"), IoError);
}
