#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hrcopt/ga.hpp"
#include "hrcopt/gp.hpp"
#include "hrcopt/scene_io.hpp"
#include "hrcopt/simulator.hpp"

namespace hrcopt {

// ---------------------------------------------------------------------------
// Continuous vs non-continuous recovery comparison
// ---------------------------------------------------------------------------

struct ProcessTimes {
  double t_recovery = 1.0;       // T_r
  double t_manufacturing = 1.0;  // T_m
  double dt_recovery = 0.0;      // increase of the recovery duration
  double dt_manufacturing = 0.0; // increase of the manufacturing duration
  int n_recovery = 3;            // number of completed recovery processes

  void validate() const {
    if (!(t_recovery > 0.0 && t_manufacturing > 0.0))
      throw ConfigError("process times: T_r and T_m must be positive");
    if (dt_recovery < 0.0 || dt_manufacturing < 0.0)
      throw ConfigError("process times: duration increases must be >= 0");
    if (n_recovery < 1) throw ConfigError("process times: n_recovery must be >= 1");
  }
};

struct AppendixVerdict {
  bool continuous_better = false;
  double margin = 0.0;    // T_r T_m - dT_r dT_m
  double n_m = 0.0;       // manufacturing count, non-continuous process
  double n_m_prime = 0.0; // manufacturing count, continuous process
};

/// Decides whether the continuous recovery process beats the non-continuous
/// one: margin = T_r T_m - dT_r dT_m, continuous wins iff margin > 0. The
/// equivalent direct counts n_m and n'_m are reported alongside.
inline AppendixVerdict appendix_condition(const ProcessTimes& t) {
  t.validate();
  AppendixVerdict v;
  v.margin = t.t_recovery * t.t_manufacturing - t.dt_recovery * t.dt_manufacturing;
  v.continuous_better = v.margin > 0.0;
  const double horizon = t.n_recovery * (t.t_recovery + t.dt_recovery);
  v.n_m = (horizon - t.n_recovery * t.t_recovery) / t.t_manufacturing;
  v.n_m_prime = horizon / (t.t_manufacturing + t.dt_manufacturing);
  return v;
}

// ---------------------------------------------------------------------------
// Run manifests
// ---------------------------------------------------------------------------

struct ManifestInfo {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;  // (label, path)
  std::vector<std::string> outputs;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> params;
};

/// Side file `<out>.manifest.json` tying every output to its command, seed
/// and input hashes. Timestamps live only here, never in data files.
inline void write_manifest(const std::filesystem::path& primary_output, const ManifestInfo& info) {
  json j;
  j["format"] = "hrcopt-manifest/1";
  j["command"] = info.command;
  j["seed"] = info.seed;
  json inputs = json::object();
  for (const auto& [label, path] : info.inputs) {
    json entry;
    entry["path"] = path;
    entry["fnv1a64"] = hex64(file_content_hash(path));
    inputs[label] = entry;
  }
  j["inputs"] = inputs;
  j["outputs"] = info.outputs;
  json params = json::object();
  for (const auto& [k, v] : info.params) params[k] = v;
  j["params"] = params;
  const auto now = std::chrono::system_clock::now();
  j["timestamp_unix"] = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  detail::write_file(primary_output.string() + ".manifest.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Pipeline commands (shared by the CLI and the acceptance suite)
// ---------------------------------------------------------------------------

inline std::vector<SampleRecord> cmd_sample(const std::filesystem::path& scene_path, int n_samples,
                                            int n_trials, std::uint64_t seed,
                                            const std::filesystem::path& out_path, int jobs = 1) {
  const SceneConfig scene = load_scene(scene_path);
  DatasetWriter writer(out_path, scene.n_manufacturing(), scene.priority.l_max);
  const auto rows = collect_dataset(scene, n_samples, n_trials, seed, jobs,
                                    [&](const SampleRecord& rec) { writer.write(rec); });
  ManifestInfo info;
  info.command = "sample";
  info.inputs = {{"scene", scene_path.string()}};
  info.outputs = {out_path.string()};
  info.seed = seed;
  info.params = {{"n_samples", std::to_string(n_samples)}, {"n_trials", std::to_string(n_trials)}};
  write_manifest(out_path, info);
  return rows;
}

struct FitPaths {
  std::filesystem::path product_model;
  std::filesystem::path risk_model;
};

inline std::pair<GpModel, GpModel> cmd_fit(const std::filesystem::path& dataset_path,
                                           const FitPaths& out, std::uint64_t seed) {
  const Dataset ds = load_dataset(dataset_path);
  if (ds.rows.size() < 2) throw ConfigError("fit: dataset needs at least 2 rows");
  GpFitOptions opt;
  opt.seed = seed;
  GpModel product = fit_gp(ds.thresholds_matrix(), ds.productivity(), opt);
  opt.seed = derive_seed(seed, 1);
  GpModel risk = fit_gp(ds.thresholds_matrix(), ds.risk(), opt);
  save_gp_model(product, "productivity", out.product_model);
  save_gp_model(risk, "risk", out.risk_model);
  ManifestInfo info;
  info.command = "fit";
  info.inputs = {{"dataset", dataset_path.string()}};
  info.outputs = {out.product_model.string(), out.risk_model.string()};
  info.seed = seed;
  write_manifest(out.product_model, info);
  return {std::move(product), std::move(risk)};
}

inline void save_result(const OptimizationResult& result, double t_lim, double zeta, double l_max,
                        const GaConfig& ga, const std::filesystem::path& path) {
  json j;
  j["format"] = "hrcopt-result/1";
  j["t_lim"] = t_lim;
  j["zeta"] = zeta;
  j["l_max"] = l_max;
  j["feasible"] = result.feasible;
  j["thresholds_star"] = std::vector<double>(result.thresholds_star.data(),
                                             result.thresholds_star.data() + result.thresholds_star.size());
  j["predicted_product"] = result.predicted_product;
  j["predicted_risk_bound"] = result.predicted_risk_bound;
  json cfg;
  cfg["population_size"] = ga.population_size;
  cfg["generations"] = ga.generations;
  cfg["crossover_rate"] = ga.crossover_rate;
  cfg["mutation_rate"] = ga.mutation_rate;
  cfg["mutation_std"] = ga.mutation_std;
  cfg["tournament_size"] = ga.tournament_size;
  cfg["seed"] = ga.seed;
  j["ga"] = cfg;
  json hist = json::array();
  for (const auto& h : result.history) {
    json row;
    row["objective"] = h.best_objective;
    row["violation"] = h.best_violation;
    row["feasible"] = h.best_feasible;
    hist.push_back(row);
  }
  j["history"] = hist;
  detail::write_file(path, j.dump(2) + "\n");
}

struct StoredResult {
  OptimizationResult result;
  double t_lim = 0.0;
  double zeta = 0.0;
  double l_max = 0.5;
};

inline StoredResult load_result(const std::filesystem::path& path) {
  json j = json::parse(detail::read_file(path));
  detail::check_format(j, "hrcopt-result/1", path.string());
  StoredResult out;
  out.t_lim = detail::num(j, "t_lim", path.string());
  out.zeta = detail::num(j, "zeta", path.string());
  out.l_max = detail::num(j, "l_max", path.string());
  out.result.feasible = j.at("feasible").get<bool>();
  out.result.thresholds_star =
      detail::vecn(detail::require(j, "thresholds_star", path.string()), path.string());
  out.result.predicted_product = detail::num(j, "predicted_product", path.string());
  out.result.predicted_risk_bound = detail::num(j, "predicted_risk_bound", path.string());
  return out;
}

inline OptimizationResult cmd_optimize(const FitPaths& models, double t_lim, double zeta,
                                       double l_max, const GaConfig& ga,
                                       const std::filesystem::path& out_path) {
  const GpModel product = load_gp_model(models.product_model);
  const GpModel risk = load_gp_model(models.risk_model);
  const OptimizationResult result = optimize_thresholds(
      [&](const Eigen::VectorXd& x) { return product.predict(x).first; },
      [&](const Eigen::VectorXd& x) { return risk.upper_bound(x, zeta); }, t_lim, l_max,
      product.dim(), ga);
  save_result(result, t_lim, zeta, l_max, ga, out_path);
  ManifestInfo info;
  info.command = "optimize";
  info.inputs = {{"product_model", models.product_model.string()},
                 {"risk_model", models.risk_model.string()}};
  info.outputs = {out_path.string()};
  info.seed = ga.seed;
  info.params = {{"t_lim", format_double(t_lim)}, {"zeta", format_double(zeta)}};
  write_manifest(out_path, info);
  return result;
}

inline SampleRecord cmd_evaluate(const std::filesystem::path& scene_path,
                                 const std::filesystem::path& result_path, int n_trials,
                                 std::uint64_t seed, const std::filesystem::path& out_path,
                                 int jobs = 1) {
  const SceneConfig scene = load_scene(scene_path);
  const StoredResult stored = load_result(result_path);
  const SampleRecord rec =
      evaluate_solution(scene, stored.result.thresholds_star, n_trials, seed, jobs);
  json j;
  j["format"] = "hrcopt-assessment/1";
  j["t_lim"] = stored.t_lim;
  j["zeta"] = stored.zeta;
  j["thresholds"] = std::vector<double>(rec.thresholds.data(),
                                        rec.thresholds.data() + rec.thresholds.size());
  j["productivity_mean"] = rec.x_product;
  j["productivity_sd"] = rec.sd_product;
  j["risk_mean"] = rec.x_risk;
  j["risk_sd"] = rec.sd_risk;
  j["n_trials"] = rec.n_trials;
  j["discarded"] = rec.discarded_trials;
  j["seed"] = rec.seed;
  detail::write_file(out_path, j.dump(2) + "\n");
  ManifestInfo info;
  info.command = "evaluate";
  info.inputs = {{"scene", scene_path.string()}, {"result", result_path.string()}};
  info.outputs = {out_path.string()};
  info.seed = seed;
  info.params = {{"n_trials", std::to_string(n_trials)}};
  write_manifest(out_path, info);
  return rec;
}

inline BenchmarkResult cmd_benchmark(const std::filesystem::path& scene_path, int n_trials,
                                     std::uint64_t seed, const std::filesystem::path& out_path,
                                     int jobs = 1) {
  const SceneConfig scene = load_scene(scene_path);
  const BenchmarkResult bench = benchmark_modes(scene, n_trials, seed, jobs);
  json j;
  j["format"] = "hrcopt-benchmark/1";
  j["n_trials"] = n_trials;
  j["seed"] = seed;
  json rows = json::array();
  auto emit = [&](const std::string& name, const SampleRecord& rec, bool with_productivity) {
    json row;
    row["condition"] = name;
    if (with_productivity) {
      row["productivity_mean"] = rec.x_product;
      row["productivity_sd"] = rec.sd_product;
    } else {
      row["productivity_mean"] = nullptr;
      row["productivity_sd"] = nullptr;
    }
    row["risk_mean"] = rec.x_risk;
    row["risk_sd"] = rec.sd_risk;
    row["discarded"] = rec.discarded_trials;
    rows.push_back(row);
  };
  emit("non_continuous", bench.non_continuous, false);
  emit("always_recovery", bench.always_recovery, true);
  emit("always_manufacturing", bench.always_manufacturing, true);
  j["rows"] = rows;
  detail::write_file(out_path, j.dump(2) + "\n");
  ManifestInfo info;
  info.command = "benchmark";
  info.inputs = {{"scene", scene_path.string()}};
  info.outputs = {out_path.string()};
  info.seed = seed;
  info.params = {{"n_trials", std::to_string(n_trials)}};
  write_manifest(out_path, info);
  return bench;
}

// ---------------------------------------------------------------------------
// Plot-data export
// ---------------------------------------------------------------------------

/// Scatter of the dataset plus GP mean/sigma band grids. 1-D datasets get a
/// dense grid; higher dimensions get per-axis slices through the median of
/// the remaining axes.
inline void export_plot_data(const Dataset& ds, const GpModel& product, const GpModel& risk,
                             const std::filesystem::path& out_dir, int grid_points = 200) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream scatter(out_dir / "scatter.csv", std::ios::binary | std::ios::trunc);
    if (!scatter) throw IoError("cannot write scatter.csv");
    scatter << "# format: hrcopt-scatter/1\n";
    for (int i = 0; i < ds.n_m; ++i) scatter << "l_bar_" << (i + 1) << ",";
    scatter << "x_product,x_risk\n";
    for (const auto& rec : ds.rows) {
      for (int i = 0; i < ds.n_m; ++i) scatter << format_double(rec.thresholds[i]) << ",";
      scatter << format_double(rec.x_product) << "," << format_double(rec.x_risk) << "\n";
    }
  }
  const Eigen::MatrixXd x = ds.thresholds_matrix();
  for (int axis = 0; axis < ds.n_m; ++axis) {
    Eigen::VectorXd base(ds.n_m);
    for (int k = 0; k < ds.n_m; ++k) {
      Eigen::VectorXd col = x.col(k);
      std::sort(col.data(), col.data() + col.size());
      base[k] = col[col.size() / 2];  // median of the other axes
    }
    const std::string name = ds.n_m == 1 ? "gp_band.csv"
                                         : "gp_band_axis" + std::to_string(axis + 1) + ".csv";
    std::ofstream band(out_dir / name, std::ios::binary | std::ios::trunc);
    if (!band) throw IoError("cannot write " + name);
    band << "# format: hrcopt-gp-band/1\n";
    band << "l_bar,mu_product,sigma_product,mu_risk,sigma_risk\n";
    for (int gidx = 0; gidx < grid_points; ++gidx) {
      Eigen::VectorXd q = base;
      q[axis] = ds.l_max * gidx / (grid_points - 1);
      const auto [mp, sp] = product.predict(q);
      const auto [mr, sr] = risk.predict(q);
      band << format_double(q[axis]) << "," << format_double(mp) << "," << format_double(sp)
           << "," << format_double(mr) << "," << format_double(sr) << "\n";
    }
    if (ds.n_m == 1) break;
  }
}

/// t_lim vs optimized-threshold curves from a set of result files.
inline void export_tlim_curve(const std::vector<std::filesystem::path>& result_files,
                              const std::filesystem::path& out_file) {
  std::vector<StoredResult> results;
  for (const auto& f : result_files) results.push_back(load_result(f));
  std::sort(results.begin(), results.end(),
            [](const StoredResult& a, const StoredResult& b) { return a.t_lim < b.t_lim; });
  std::ofstream out(out_file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + out_file.string() + "'");
  out << "# format: hrcopt-tlim-curve/1\n";
  if (results.empty()) return;
  const int dim = static_cast<int>(results[0].result.thresholds_star.size());
  out << "t_lim,zeta";
  for (int i = 0; i < dim; ++i) out << ",l_bar_star_" << (i + 1);
  out << ",predicted_product,predicted_risk_bound,feasible\n";
  for (const auto& r : results) {
    out << format_double(r.t_lim) << "," << format_double(r.zeta);
    for (int i = 0; i < dim; ++i) out << "," << format_double(r.result.thresholds_star[i]);
    out << "," << format_double(r.result.predicted_product) << ","
        << format_double(r.result.predicted_risk_bound) << "," << (r.result.feasible ? 1 : 0)
        << "\n";
  }
}

/// One trial replayed with trajectory logging, written as a delimited trace.
inline void export_trial_trace(const SceneConfig& scene, const Eigen::VectorXd& thresholds,
                               std::uint64_t seed, const std::filesystem::path& out_file) {
  TrialOptions opt;
  opt.log_trajectory = true;
  const TrialResult trial = run_trial(scene, thresholds, seed, opt);
  std::ofstream out(out_file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + out_file.string() + "'");
  out << "# format: hrcopt-trace/1\n";
  const int n_m = scene.n_manufacturing();
  out << "t";
  for (int i = 0; i < n_m + 1; ++i)
    out << ",ee" << i << "_x,ee" << i << "_y,ee" << i << "_z";
  for (int i = 0; i < n_m; ++i) out << ",l_" << (i + 1) << ",p_" << (i + 1);
  out << ",min_pair_distance\n";
  for (const auto& row : trial.trajectory) {
    out << format_double(row.t);
    for (const auto& ee : row.ee)
      out << "," << format_double(ee.x()) << "," << format_double(ee.y()) << ","
          << format_double(ee.z());
    for (int i = 0; i < n_m; ++i) out << "," << format_double(row.l[i]) << "," << row.p[i];
    out << "," << format_double(row.min_pair_distance) << "\n";
  }
}

}  // namespace hrcopt
