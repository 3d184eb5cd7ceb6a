#include "jointstab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include <json.hpp>

#include "jointstab/algorithm.hpp"
#include "jointstab/ensemble.hpp"
#include "jointstab/errors.hpp"

namespace jointstab {

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct GridPoint {
  int T;
  int k;
  double sigma_g;
  double sigma_eta;
  double r;
};

std::vector<GridPoint> sorted_grid(const SweepConfig& cfg) {
  auto t_values = cfg.t_values;
  auto k_values = cfg.k_values;
  auto sigma_g_values = cfg.sigma_g_values;
  auto sigma_eta_values = cfg.sigma_eta_values;
  auto r_values = cfg.r_values;
  std::sort(t_values.begin(), t_values.end());
  std::sort(k_values.begin(), k_values.end());
  std::sort(sigma_g_values.begin(), sigma_g_values.end());
  std::sort(sigma_eta_values.begin(), sigma_eta_values.end());
  std::sort(r_values.begin(), r_values.end());

  std::vector<GridPoint> grid;
  for (int T : t_values)
    for (int k : k_values)
      for (double sg : sigma_g_values)
        for (double se : sigma_eta_values)
          for (double r : r_values) grid.push_back({T, k, sg, se, r});
  return grid;
}

void validate_sweep(const SweepConfig& cfg) {
  validate(cfg.dims);
  if (cfg.t_values.empty() || cfg.k_values.empty() || cfg.sigma_g_values.empty() ||
      cfg.sigma_eta_values.empty() || cfg.r_values.empty()) {
    throw std::invalid_argument("SweepConfig: all grids must be nonempty");
  }
  if (cfg.n_seeds < 1) {
    throw std::invalid_argument("SweepConfig: n_seeds must be >= 1");
  }
}

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

}  // namespace

std::vector<SweepResultRow> run_sweep(const SweepConfig& cfg) {
  validate_sweep(cfg);
  const std::vector<GridPoint> grid = sorted_grid(cfg);
  const int n = cfg.n_seeds;

  // Ensembles depend only on the seed index, never on the grid point, so a
  // seed's joint/individual comparisons stay paired across the whole grid.
  std::vector<Ensemble> ensembles;
  const int distinct = cfg.regenerate_ensemble_per_seed ? n : 1;
  ensembles.reserve(distinct);
  for (int s = 0; s < distinct; ++s) {
    ensembles.push_back(generate_ensemble(cfg.dims, cfg.rho_min, cfg.rho_max,
                                          cfg.sigma_xi,
                                          derive_seed(cfg.master_seed, 1, s)));
  }

  struct Job {
    int grid_index;
    int seed_index;
  };
  std::vector<Job> jobs;
  jobs.reserve(grid.size() * n);
  for (int g = 0; g < static_cast<int>(grid.size()); ++g)
    for (int s = 0; s < n; ++s) jobs.push_back({g, s});

  // Emission order: grid-lexicographic, then method (joint before
  // individual), then seed.
  std::vector<SweepResultRow> rows(jobs.size() * 2);
  const auto row_slot = [&](int g, bool individual, int s) {
    return static_cast<size_t>(g) * 2 * n + (individual ? n : 0) + s;
  };

  const auto run_job = [&](const Job& job) {
    const GridPoint& point = grid[job.grid_index];
    const Ensemble& ensemble =
        ensembles[cfg.regenerate_ensemble_per_seed ? job.seed_index : 0];

    AlgorithmConfig run_cfg{
        point.T,
        point.k,
        point.sigma_g,
        point.sigma_eta,
        CostMatrices::scaled_identity(cfg.dims.dx, cfg.dims.du, point.r),
        cfg.fit,
        derive_seed(cfg.master_seed, 2, job.seed_index),
        std::nullopt};

    using Clock = std::chrono::steady_clock;
    const auto joint_start = Clock::now();
    StabilizationOutcome joint = run_algorithm1(ensemble, run_cfg);
    const auto joint_end = Clock::now();
    StabilizationOutcome individual =
        run_individual_baseline(ensemble, joint.dataset, run_cfg);
    const auto individual_end = Clock::now();

    const auto ms = [](auto a, auto b) {
      return std::chrono::duration<double, std::milli>(b - a).count();
    };

    SweepResultRow base;
    base.T = point.T;
    base.k = point.k;
    base.sigma_g = point.sigma_g;
    base.sigma_eta = point.sigma_eta;
    base.r = point.r;
    base.seed = static_cast<std::uint64_t>(job.seed_index);

    SweepResultRow& joint_row = rows[row_slot(job.grid_index, false, job.seed_index)];
    joint_row = base;
    joint_row.method = "joint";
    joint_row.fraction_stabilized = joint.fraction_stabilized;
    joint_row.mean_rho = mean_of(joint.closed_loop_rho);
    joint_row.wall_time_ms = cfg.record_timings ? ms(joint_start, joint_end) : 0.0;

    SweepResultRow& ind_row = rows[row_slot(job.grid_index, true, job.seed_index)];
    ind_row = base;
    ind_row.method = "individual";
    ind_row.fraction_stabilized = individual.fraction_stabilized;
    ind_row.mean_rho = mean_of(individual.closed_loop_rho);
    ind_row.wall_time_ms = cfg.record_timings ? ms(joint_end, individual_end) : 0.0;
  };

  int workers = cfg.threads > 0 ? cfg.threads
                                : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min<int>(workers, static_cast<int>(jobs.size())));
  if (workers == 1) {
    for (const Job& job : jobs) run_job(job);
  } else {
    // Jobs write disjoint row slots, so scheduling order cannot change the
    // output.
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t idx = next.fetch_add(1); idx < jobs.size();
             idx = next.fetch_add(1)) {
          run_job(jobs[idx]);
        }
      });
    }
    for (auto& thread : pool) thread.join();
  }
  return rows;
}

std::vector<SummaryRow> aggregate(const std::vector<SweepResultRow>& rows) {
  if (rows.empty()) {
    throw std::invalid_argument("aggregate: no rows");
  }
  // Rows arrive grouped by (grid point, method) with seeds adjacent; keep
  // first-appearance order.
  std::vector<SummaryRow> summary;
  std::vector<std::vector<double>> fractions;
  std::map<std::tuple<int, int, double, double, double, std::string>, size_t> index;
  for (const auto& row : rows) {
    const auto key = std::make_tuple(row.T, row.k, row.sigma_g, row.sigma_eta,
                                     row.r, row.method);
    auto [it, inserted] = index.try_emplace(key, summary.size());
    if (inserted) {
      SummaryRow s;
      s.T = row.T;
      s.k = row.k;
      s.sigma_g = row.sigma_g;
      s.sigma_eta = row.sigma_eta;
      s.r = row.r;
      s.method = row.method;
      summary.push_back(s);
      fractions.emplace_back();
    }
    fractions[it->second].push_back(row.fraction_stabilized);
  }
  for (size_t g = 0; g < summary.size(); ++g) {
    const auto& f = fractions[g];
    const int n = static_cast<int>(f.size());
    const double mean = mean_of(f);
    summary[g].n_seeds = n;
    summary[g].mean_fraction = mean;
    summary[g].single_seed = n == 1;
    const bool all_equal =
        std::all_of(f.begin(), f.end(), [&](double x) { return x == f.front(); });
    if (n > 1 && !all_equal) {
      double ss = 0.0;
      for (double x : f) ss += (x - mean) * (x - mean);
      const double sample_std = std::sqrt(ss / (n - 1));
      summary[g].stderr_fraction = sample_std / std::sqrt(static_cast<double>(n));
    } else {
      summary[g].stderr_fraction = 0.0;
    }
  }
  return summary;
}

std::string rows_to_csv(const std::vector<SweepResultRow>& rows) {
  std::string out = kSweepCsvHeader;
  out += '\n';
  for (const auto& row : rows) {
    out += std::to_string(row.T) + ',' + std::to_string(row.k) + ',' +
           fmt_real(row.sigma_g) + ',' + fmt_real(row.sigma_eta) + ',' +
           fmt_real(row.r) + ',' + row.method + ',' + std::to_string(row.seed) +
           ',' + fmt_real(row.fraction_stabilized) + ',' + fmt_real(row.mean_rho) +
           ',' + fmt_real(row.wall_time_ms) + '\n';
  }
  return out;
}

void emit_csv(const std::vector<SweepResultRow>& rows, const std::string& path) {
  std::ofstream file(path);
  if (!file) throw IoError("cannot open for writing: " + path);
  file << rows_to_csv(rows);
  if (!file) throw IoError("write failed: " + path);
}

std::vector<SweepResultRow> parse_rows_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kSweepCsvHeader) {
    throw IoError("sweep CSV: missing or unexpected header");
  }
  std::vector<SweepResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string field;
    std::vector<std::string> parts;
    while (std::getline(fields, field, ',')) parts.push_back(field);
    if (parts.size() != 10) {
      throw IoError("sweep CSV: expected 10 fields, got line: " + line);
    }
    SweepResultRow row;
    try {
      row.T = std::stoi(parts[0]);
      row.k = std::stoi(parts[1]);
      row.sigma_g = std::stod(parts[2]);
      row.sigma_eta = std::stod(parts[3]);
      row.r = std::stod(parts[4]);
      row.method = parts[5];
      row.seed = std::stoull(parts[6]);
      row.fraction_stabilized = std::stod(parts[7]);
      row.mean_rho = std::stod(parts[8]);
      row.wall_time_ms = std::stod(parts[9]);
    } catch (const std::exception& e) {
      throw IoError(std::string("sweep CSV: bad field: ") + e.what());
    }
    if (row.method != "joint" && row.method != "individual") {
      throw IoError("sweep CSV: unknown method: " + row.method);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void emit_summary_csv(const std::vector<SummaryRow>& summary,
                      const std::string& path) {
  std::ofstream file(path);
  if (!file) throw IoError("cannot open for writing: " + path);
  file << "T,k,sigma_g,sigma_eta,r,method,n_seeds,mean_fraction,"
          "stderr_fraction,single_seed\n";
  for (const auto& s : summary) {
    file << s.T << ',' << s.k << ',' << fmt_real(s.sigma_g) << ','
         << fmt_real(s.sigma_eta) << ',' << fmt_real(s.r) << ',' << s.method
         << ',' << s.n_seeds << ',' << fmt_real(s.mean_fraction) << ','
         << fmt_real(s.stderr_fraction) << ',' << (s.single_seed ? 1 : 0)
         << '\n';
  }
  if (!file) throw IoError("write failed: " + path);
}

namespace {

template <typename T>
std::vector<T> distinct_sorted(const std::vector<SummaryRow>& summary,
                               T SummaryRow::* member) {
  std::vector<T> values;
  for (const auto& s : summary) values.push_back(s.*member);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

struct PanelKey {
  std::string label;
  std::vector<const SummaryRow*> rows;
};

}  // namespace

std::string plot_script_text(const std::vector<SummaryRow>& summary) {
  if (summary.empty()) {
    throw std::invalid_argument("plot script: summary is empty");
  }
  const auto t_values = distinct_sorted(summary, &SummaryRow::T);
  const auto k_values = distinct_sorted(summary, &SummaryRow::k);
  const auto sg_values = distinct_sorted(summary, &SummaryRow::sigma_g);
  const auto se_values = distinct_sorted(summary, &SummaryRow::sigma_eta);
  const auto r_values = distinct_sorted(summary, &SummaryRow::r);

  // x-axis: r when the r grid was swept, otherwise T. Panels cover every
  // other parameter that takes several values; curves distinguish k and
  // method (solid joint, dashed individual).
  const bool x_is_r = r_values.size() > 1;

  struct PanelSpec {
    std::string label;
    std::vector<const SummaryRow*> rows;
  };
  std::vector<PanelSpec> panels;
  auto panel_label = [&](const SummaryRow& s) {
    std::string label;
    auto append = [&label](const std::string& part) {
      if (!label.empty()) label += ", ";
      label += part;
    };
    if (x_is_r) {
      if (t_values.size() > 1) append("T = " + std::to_string(s.T));
    } else if (r_values.size() > 1) {
      append("r = " + fmt_real(s.r));
    }
    if (sg_values.size() > 1) append("sigma_g = " + fmt_real(s.sigma_g));
    if (se_values.size() > 1) append("sigma_eta = " + fmt_real(s.sigma_eta));
    if (label.empty()) label = "stabilization rate";
    return label;
  };
  for (const auto& s : summary) {
    const std::string label = panel_label(s);
    auto it = std::find_if(panels.begin(), panels.end(),
                           [&](const PanelSpec& p) { return p.label == label; });
    if (it == panels.end()) {
      panels.push_back({label, {}});
      it = std::prev(panels.end());
    }
    it->rows.push_back(&s);
  }

  const int cols = panels.size() > 1 ? 2 : 1;
  const int panel_rows = (static_cast<int>(panels.size()) + cols - 1) / cols;

  std::string out;
  out += "# Stabilized fraction vs " + std::string(x_is_r ? "r" : "T") + "\n";
  out += "# Solid: joint estimator. Dashed: per-system least squares.\n";
  out += "set terminal pngcairo size " + std::to_string(700 * cols) + "," +
         std::to_string(500 * panel_rows) + "\n";
  out += "set output 'sweep.png'\n";
  out += "set multiplot layout " + std::to_string(panel_rows) + "," +
         std::to_string(cols) + "\n";
  out += "set yrange [-0.05:1.05]\n";
  out += "set key bottom right\n";
  out += "set xlabel '" + std::string(x_is_r ? "r" : "T") + "'\n";
  out += "set ylabel 'fraction stabilized'\n";

  int block = 0;
  for (const auto& panel : panels) {
    std::vector<std::string> plot_clauses;
    for (size_t ki = 0; ki < k_values.size(); ++ki) {
      for (const char* method : {"joint", "individual"}) {
        std::vector<const SummaryRow*> curve;
        for (const SummaryRow* s : panel.rows) {
          if (s->k == k_values[ki] && s->method == method) curve.push_back(s);
        }
        if (curve.empty()) continue;
        std::sort(curve.begin(), curve.end(),
                  [&](const SummaryRow* a, const SummaryRow* b) {
                    return x_is_r ? a->r < b->r : a->T < b->T;
                  });
        const std::string name = "$data" + std::to_string(block++);
        out += name + " << EOD\n";
        for (const SummaryRow* s : curve) {
          out += (x_is_r ? fmt_real(s->r) : std::to_string(s->T)) + " " +
                 fmt_real(s->mean_fraction) + " " + fmt_real(s->stderr_fraction) +
                 "\n";
        }
        out += "EOD\n";
        const bool dashed = std::string(method) == "individual";
        plot_clauses.push_back(name + " using 1:2:3 with yerrorlines lc " +
                               std::to_string(ki + 1) + " dt " +
                               (dashed ? "2" : "1") + " title '" + method +
                               " k=" + std::to_string(k_values[ki]) + "'");
      }
    }
    out += "set title '" + panel.label + "'\n";
    out += "plot ";
    for (size_t c = 0; c < plot_clauses.size(); ++c) {
      if (c) out += ", \\\n     ";
      out += plot_clauses[c];
    }
    out += "\n";
  }
  out += "unset multiplot\n";
  return out;
}

void emit_plot_script(const std::vector<SummaryRow>& summary,
                      const std::string& path) {
  std::ofstream file(path);
  if (!file) throw IoError("cannot open for writing: " + path);
  file << plot_script_text(summary);
  if (!file) throw IoError("write failed: " + path);
}

SweepConfig load_sweep_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("config parse error: ") + e.what());
  }
  SweepConfig cfg;
  try {
    if (doc.contains("dims")) {
      const auto& d = doc["dims"];
      if (d.contains("m")) cfg.dims.m = d["m"].get<int>();
      if (d.contains("dx")) cfg.dims.dx = d["dx"].get<int>();
      if (d.contains("du")) cfg.dims.du = d["du"].get<int>();
      if (d.contains("ell")) cfg.dims.ell = d["ell"].get<int>();
    }
    if (doc.contains("rho_min")) cfg.rho_min = doc["rho_min"].get<double>();
    if (doc.contains("rho_max")) cfg.rho_max = doc["rho_max"].get<double>();
    if (doc.contains("sigma_xi")) cfg.sigma_xi = doc["sigma_xi"].get<double>();
    if (doc.contains("t_values")) cfg.t_values = doc["t_values"].get<std::vector<int>>();
    if (doc.contains("k_values")) cfg.k_values = doc["k_values"].get<std::vector<int>>();
    if (doc.contains("sigma_g_values"))
      cfg.sigma_g_values = doc["sigma_g_values"].get<std::vector<double>>();
    if (doc.contains("sigma_eta_values"))
      cfg.sigma_eta_values = doc["sigma_eta_values"].get<std::vector<double>>();
    if (doc.contains("r_values"))
      cfg.r_values = doc["r_values"].get<std::vector<double>>();
    if (doc.contains("n_seeds")) cfg.n_seeds = doc["n_seeds"].get<int>();
    if (doc.contains("master_seed"))
      cfg.master_seed = doc["master_seed"].get<std::uint64_t>();
    if (doc.contains("regenerate_ensemble_per_seed"))
      cfg.regenerate_ensemble_per_seed =
          doc["regenerate_ensemble_per_seed"].get<bool>();
    if (doc.contains("record_timings"))
      cfg.record_timings = doc["record_timings"].get<bool>();
    if (doc.contains("threads")) cfg.threads = doc["threads"].get<int>();
    if (doc.contains("fit")) {
      const auto& f = doc["fit"];
      if (f.contains("max_outer_iterations"))
        cfg.fit.max_outer_iterations = f["max_outer_iterations"].get<int>();
      if (f.contains("loss_tolerance"))
        cfg.fit.loss_tolerance = f["loss_tolerance"].get<double>();
      if (f.contains("restarts")) cfg.fit.restarts = f["restarts"].get<int>();
      if (f.contains("ridge")) cfg.fit.ridge = f["ridge"].get<double>();
    }
    if (doc.contains("output_path"))
      cfg.output_path = doc["output_path"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("config parse error: ") + e.what());
  }
  return cfg;
}

}  // namespace jointstab
