// Command-line front end for the priority-optimization pipeline: dataset
// sampling, surrogate fitting, threshold optimization, assessment runs,
// benchmark modes, the continuous-process check, and plot-data export.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hrcopt/pipeline.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"hrcopt: multi-robot motion-priority simulation and optimization"};
  app.require_subcommand(1);

  std::string scene_path, out_path, dataset_path;
  std::string product_model = "gp_product.json", risk_model = "gp_risk.json";
  std::uint64_t seed = 0;
  int jobs = 0;  // 0 = all hardware threads
  int n_samples = 50, n_trials = 100;
  double t_lim = 3.0, zeta = 0.0, l_max = 0.5;
  hrcopt::GaConfig ga;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "root random seed");
    cmd->add_option("--jobs", jobs, "worker threads (0 = all cores)");
  };

  CLI::App* sample = app.add_subcommand("sample", "collect a productivity/risk dataset");
  sample->add_option("--scene", scene_path, "scene config file")->required();
  sample->add_option("--out", out_path, "output dataset file")->required();
  sample->add_option("--n-samples", n_samples, "threshold samples to draw");
  sample->add_option("--n-trials", n_trials, "trials per sample");
  add_common(sample);

  CLI::App* fit = app.add_subcommand("fit", "fit GP surrogates to a dataset");
  fit->add_option("--dataset", dataset_path, "dataset file")->required();
  fit->add_option("--out-product", product_model, "productivity model output");
  fit->add_option("--out-risk", risk_model, "risk model output");
  fit->add_option("--seed", seed, "restart seed");

  CLI::App* optimize = app.add_subcommand("optimize", "find thresholds maximizing productivity");
  optimize->add_option("--product-model", product_model, "productivity model")->required();
  optimize->add_option("--risk-model", risk_model, "risk model")->required();
  optimize->add_option("--out", out_path, "result file")->required();
  optimize->add_option("--t-lim", t_lim, "risk time limit (s)")->required();
  optimize->add_option("--zeta", zeta, "regression confidence gain");
  optimize->add_option("--l-max", l_max, "threshold upper bound (m)");
  optimize->add_option("--ga-population", ga.population_size, "GA population size");
  optimize->add_option("--ga-generations", ga.generations, "GA generations");
  optimize->add_option("--ga-crossover-rate", ga.crossover_rate, "GA crossover rate");
  optimize->add_option("--ga-mutation-rate", ga.mutation_rate, "GA per-gene mutation rate");
  optimize->add_option("--ga-mutation-std", ga.mutation_std, "GA mutation std (fraction of box)");
  optimize->add_option("--ga-tournament", ga.tournament_size, "GA tournament size");
  optimize->add_option("--seed", seed, "GA seed");

  CLI::App* evaluate = app.add_subcommand("evaluate", "re-simulate an optimized threshold set");
  evaluate->add_option("--scene", scene_path, "scene config file")->required();
  evaluate->add_option("--result", dataset_path, "optimization result file")->required();
  evaluate->add_option("--out", out_path, "assessment output file")->required();
  evaluate->add_option("--n-trials", n_trials, "assessment trials");
  add_common(evaluate);

  CLI::App* benchmark = app.add_subcommand("benchmark", "run the three reference conditions");
  benchmark->add_option("--scene", scene_path, "scene config file")->required();
  benchmark->add_option("--out", out_path, "benchmark output file")->required();
  benchmark->add_option("--n-trials", n_trials, "trials per condition");
  add_common(benchmark);

  hrcopt::ProcessTimes pt;
  CLI::App* appendix = app.add_subcommand("appendix", "continuous vs non-continuous check");
  appendix->add_option("--t-r", pt.t_recovery, "recovery duration T_r (s)")->required();
  appendix->add_option("--t-m", pt.t_manufacturing, "manufacturing duration T_m (s)")->required();
  appendix->add_option("--dt-r", pt.dt_recovery, "recovery duration increase (s)")->required();
  appendix->add_option("--dt-m", pt.dt_manufacturing, "manufacturing duration increase (s)")->required();
  appendix->add_option("--n-r", pt.n_recovery, "number of recovery processes");

  std::vector<std::string> result_files;
  std::string out_dir = "plots";
  std::vector<double> trace_thresholds;
  std::uint64_t trace_seed = 0;
  bool want_trace = false;
  CLI::App* plots = app.add_subcommand("export-plots", "emit plot-ready delimited files");
  plots->add_option("--dataset", dataset_path, "dataset file");
  plots->add_option("--product-model", product_model, "productivity model");
  plots->add_option("--risk-model", risk_model, "risk model");
  plots->add_option("--results", result_files, "result files for the t_lim curve");
  plots->add_option("--scene", scene_path, "scene file (for a trial trace)");
  plots->add_option("--trace-thresholds", trace_thresholds, "thresholds for the trial trace");
  plots->add_option("--trace-seed", trace_seed, "seed for the trial trace");
  plots->add_flag("--trace", want_trace, "also export one trial trajectory");
  plots->add_option("--out-dir", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed()) {
      const auto rows = hrcopt::cmd_sample(scene_path, n_samples, n_trials, seed, out_path, jobs);
      std::cout << "wrote " << rows.size() << " dataset rows to " << out_path << "\n";
    } else if (fit->parsed()) {
      hrcopt::FitPaths paths{product_model, risk_model};
      const auto [product, risk] = hrcopt::cmd_fit(dataset_path, paths, seed);
      std::cout << "productivity model: lml=" << hrcopt::format_double(product.log_marginal_likelihood())
                << " -> " << product_model << "\n";
      std::cout << "risk model:         lml=" << hrcopt::format_double(risk.log_marginal_likelihood())
                << " -> " << risk_model << "\n";
    } else if (optimize->parsed()) {
      hrcopt::FitPaths paths{product_model, risk_model};
      ga.seed = seed;
      const auto result = hrcopt::cmd_optimize(paths, t_lim, zeta, l_max, ga, out_path);
      std::cout << "thresholds*:";
      for (int i = 0; i < result.thresholds_star.size(); ++i)
        std::cout << " " << hrcopt::format_double(result.thresholds_star[i]);
      std::cout << "\npredicted productivity " << hrcopt::format_double(result.predicted_product)
                << ", risk bound " << hrcopt::format_double(result.predicted_risk_bound)
                << (result.feasible ? "" : "  [INFEASIBLE]") << "\n";
      if (!result.feasible) return 2;
    } else if (evaluate->parsed()) {
      const auto rec = hrcopt::cmd_evaluate(scene_path, dataset_path, n_trials, seed, out_path, jobs);
      std::cout << "productivity " << hrcopt::format_double(rec.x_product) << " +- "
                << hrcopt::format_double(rec.sd_product) << ", risk "
                << hrcopt::format_double(rec.x_risk) << " +- "
                << hrcopt::format_double(rec.sd_risk) << " (" << rec.discarded_trials
                << " discarded)\n";
    } else if (benchmark->parsed()) {
      const auto bench = hrcopt::cmd_benchmark(scene_path, n_trials, seed, out_path, jobs);
      auto line = [&](const std::string& name, const hrcopt::SampleRecord& rec, bool with_prod) {
        std::cout << name << ": productivity ";
        if (with_prod)
          std::cout << hrcopt::format_double(rec.x_product) << " +- "
                    << hrcopt::format_double(rec.sd_product);
        else
          std::cout << "-";
        std::cout << ", risk " << hrcopt::format_double(rec.x_risk) << " +- "
                  << hrcopt::format_double(rec.sd_risk) << "\n";
      };
      line("non-continuous       ", bench.non_continuous, false);
      line("always-recovery      ", bench.always_recovery, true);
      line("always-manufacturing ", bench.always_manufacturing, true);
    } else if (appendix->parsed()) {
      const auto v = hrcopt::appendix_condition(pt);
      std::cout << "margin T_r*T_m - dT_r*dT_m = " << hrcopt::format_double(v.margin) << "\n";
      std::cout << "n_m (non-continuous) = " << hrcopt::format_double(v.n_m)
                << ", n_m' (continuous) = " << hrcopt::format_double(v.n_m_prime) << "\n";
      std::cout << (v.continuous_better ? "continuous process is better"
                                        : "continuous process is NOT better")
                << "\n";
    } else if (plots->parsed()) {
      fs::create_directories(out_dir);
      if (!dataset_path.empty()) {
        const auto ds = hrcopt::load_dataset(dataset_path);
        const auto product = hrcopt::load_gp_model(product_model);
        const auto risk = hrcopt::load_gp_model(risk_model);
        hrcopt::export_plot_data(ds, product, risk, out_dir);
        std::cout << "wrote scatter + GP band grids to " << out_dir << "\n";
      }
      if (!result_files.empty()) {
        std::vector<fs::path> files(result_files.begin(), result_files.end());
        hrcopt::export_tlim_curve(files, fs::path(out_dir) / "tlim_curve.csv");
        std::cout << "wrote t_lim curve (" << files.size() << " results)\n";
      }
      if (want_trace) {
        if (scene_path.empty()) throw hrcopt::ConfigError("--trace requires --scene");
        const auto scene = hrcopt::load_scene(scene_path);
        Eigen::VectorXd thr = Eigen::VectorXd::Zero(scene.n_manufacturing());
        for (std::size_t i = 0; i < trace_thresholds.size() && i < static_cast<std::size_t>(thr.size()); ++i)
          thr[static_cast<int>(i)] = trace_thresholds[i];
        hrcopt::export_trial_trace(scene, thr, trace_seed, fs::path(out_dir) / "trace.csv");
        std::cout << "wrote trial trace\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
