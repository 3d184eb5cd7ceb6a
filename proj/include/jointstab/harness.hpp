#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "jointstab/dimensions.hpp"
#include "jointstab/estimator.hpp"

namespace jointstab {

// Monte Carlo sweep over (T, k, sigma_g, sigma_eta, r) x seeds x methods.
// Defaults mirror the full-scale experiment; desk_scale() shrinks it so the
// suite fits CI runtimes.
struct SweepConfig {
  Dimensions dims{100, 10, 6, 5};
  double rho_min = 1.2;
  double rho_max = 1.5;
  double sigma_xi = 2.0;

  std::vector<int> t_values{5, 10, 15, 20, 25, 30, 40};
  std::vector<int> k_values{4};
  std::vector<double> sigma_g_values{0.3};
  std::vector<double> sigma_eta_values{2.0};
  std::vector<double> r_values{0.25};

  int n_seeds = 10;
  std::uint64_t master_seed = 0;
  bool regenerate_ensemble_per_seed = true;
  // Fill wall_time_ms with measured durations. Off by default: timings are
  // nondeterministic and would break byte-identical reruns of the CSV.
  bool record_timings = false;
  int threads = 0;  // 0 = hardware concurrency

  FitOptions fit;
  std::string output_path;

  SweepConfig& desk_scale() {
    dims = Dimensions{20, 6, 3, 3};
    return *this;
  }
};

struct SweepResultRow {
  int T = 0;
  int k = 0;
  double sigma_g = 0.0;
  double sigma_eta = 0.0;
  double r = 0.0;
  std::string method;  // "joint" or "individual"
  std::uint64_t seed = 0;
  double fraction_stabilized = 0.0;
  double mean_rho = 0.0;
  double wall_time_ms = 0.0;
};

struct SummaryRow {
  int T = 0;
  int k = 0;
  double sigma_g = 0.0;
  double sigma_eta = 0.0;
  double r = 0.0;
  std::string method;
  int n_seeds = 0;
  double mean_fraction = 0.0;
  double stderr_fraction = 0.0;  // sample std / sqrt(n_seeds); 0 if n = 1
  bool single_seed = false;
};

// One row per (grid point x method x seed); joint and individual rows of a
// (grid point, seed) share one trajectory dataset. Rows come back in the
// deterministic emission order (grid-lexicographic, method, seed) regardless
// of the worker thread count.
std::vector<SweepResultRow> run_sweep(const SweepConfig& cfg);

// Mean fraction +/- standard error per (grid point, method), in the same
// deterministic order.
std::vector<SummaryRow> aggregate(const std::vector<SweepResultRow>& rows);

inline constexpr const char* kSweepCsvHeader =
    "T,k,sigma_g,sigma_eta,r,method,seed,fraction_stabilized,mean_rho,wall_time_ms";

void emit_csv(const std::vector<SweepResultRow>& rows, const std::string& path);
std::string rows_to_csv(const std::vector<SweepResultRow>& rows);
std::vector<SweepResultRow> parse_rows_csv(const std::string& text);

void emit_summary_csv(const std::vector<SummaryRow>& summary,
                      const std::string& path);

// Gnuplot script: one panel per swept parameter value, solid error-barred
// curves for the joint method and dashed for the individual baseline. The
// x-axis is r when the r grid has several values, T otherwise.
void emit_plot_script(const std::vector<SummaryRow>& summary,
                      const std::string& path);
std::string plot_script_text(const std::vector<SummaryRow>& summary);

// JSON config file loader; missing keys keep their defaults.
SweepConfig load_sweep_config(const std::string& path);

}  // namespace jointstab
