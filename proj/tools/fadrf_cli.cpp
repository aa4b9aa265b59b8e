// Command-line driver: simulate, estimate, cv, adrf, ate, benchmark.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fadrf/errors.hpp"
#include "fadrf/io.hpp"
#include "fadrf/parallel.hpp"
#include "fadrf/simlab.hpp"
#include "fadrf/tuning.hpp"

namespace {

using namespace fadrf;

struct DataArgs {
  std::string curves;
  std::string table;
  std::string outcome = "y";
  std::vector<std::string> covariates;

  void attach(CLI::App* cmd) {
    cmd->add_option("--curves", curves, "functional CSV (first row = grid)")->required();
    cmd->add_option("--table", table, "tabular CSV with header")->required();
    cmd->add_option("--outcome", outcome, "outcome column name");
    cmd->add_option("--covariates", covariates, "covariate column names (default: all others)")
        ->delimiter(',');
  }
  Dataset load() const { return load_dataset({curves, table, outcome, covariates}); }
};

struct CvArgs {
  int folds = 10;
  std::uint64_t seed = 1;
  std::vector<double> h_grid;
  std::vector<int> k_grid;
  std::vector<int> q_grid;

  void attach(CLI::App* cmd) {
    cmd->add_option("--folds", folds, "number of CV folds")->check(CLI::Range(2, 1000000));
    cmd->add_option("--seed", seed, "fold assignment seed");
    cmd->add_option("--h-grid", h_grid, "bandwidth candidates")->delimiter(',');
    cmd->add_option("--k-grid", k_grid, "sieve size candidates")->delimiter(',');
    cmd->add_option("--q-grid", q_grid, "truncation candidates")->delimiter(',');
  }
  CvConfig config(RhoFamily rho) const {
    CvConfig c;
    c.folds = folds;
    c.seed = seed;
    c.h_grid = h_grid;
    c.k_grid = k_grid;
    c.q_grid = q_grid;
    c.rho = rho;
    return c;
  }
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool uses_weights(Method m) { return m == Method::fsw || m == Method::doubly_robust; }

AdrfFit fit_method(const Dataset& data, Method method, double h, int k, int q, RhoFamily rho) {
  auto model = std::make_shared<const FpcaModel>(fpca(data.z(), q));
  switch (method) {
    case Method::naive: return fit_naive(data, model, q);
    case Method::fsw: return fit_fsw(data, model, estimate_weights(data, h, k, rho), q);
    case Method::outcome_regression: return fit_or(data, model, q);
    case Method::doubly_robust: {
      const AdrfFit outcome = fit_or(data, model, q);
      return fit_dr(data, model, outcome, estimate_weights(data, h, k, rho), q);
    }
  }
  throw Error(ErrorCategory::parameter, "unknown method");
}

void print_fit_summary(const AdrfFit& fit) {
  std::cout << "method " << method_name(fit.method) << "\n";
  std::cout << "q " << fit.tuning.q << "\n";
  if (fit.tuning.h) std::cout << "h " << fmt(*fit.tuning.h) << "\n";
  if (fit.tuning.k) std::cout << "k " << *fit.tuning.k << "\n";
  std::cout << "a_hat " << fmt(fit.a_hat) << "\n";
  if (fit.theta_hat) {
    std::cout << "theta_hat";
    for (double v : *fit.theta_hat) std::cout << ' ' << fmt(v);
    std::cout << "\n";
  }
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(',', start);
    out.push_back(s.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

int report_error(std::string_view category, const std::string& message) {
  std::string line = message;
  for (char& c : line)
    if (c == '\n' || c == '\r') c = ' ';
  std::cerr << "error: " << category << ": " << line << std::endl;
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Average dose-response functional estimation for functional treatments"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (overrides FADRF_THREADS)")
      ->check(CLI::PositiveNumber);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "write a simulated dataset to CSV files");
  std::string sim_model = "i";
  SimModel sim;
  std::string sim_curves, sim_table, sim_truth;
  sim_cmd->add_option("--model", sim_model, "simulation model: i, ii, iii or iv");
  sim_cmd->add_option("--n", sim.n, "sample size");
  sim_cmd->add_option("--seed", sim.seed, "random seed");
  sim_cmd->add_option("--grid-points", sim.grid_points, "grid resolution on [0,1]");
  sim_cmd->add_flag("--independent", sim.independent_covariates,
                    "draw covariates independently of the treatment curves");
  sim_cmd->add_option("--out-curves", sim_curves, "functional CSV output")->required();
  sim_cmd->add_option("--out-table", sim_table, "tabular CSV output")->required();
  sim_cmd->add_option("--out-truth", sim_truth, "true slope as t,value CSV");

  // estimate
  auto* est_cmd = app.add_subcommand("estimate", "fit an ADRF");
  est_cmd->set_help_flag("--help", "Print this help message and exit");
  DataArgs est_data;
  est_data.attach(est_cmd);
  std::string est_method = "fsw", est_rho = "et", est_out;
  std::optional<double> est_h;
  std::optional<int> est_k, est_q;
  bool est_cv = false;
  CvArgs est_cvargs;
  est_cmd->add_option("--method", est_method, "naive, fsw, or, dr");
  est_cmd->add_option("--rho", est_rho, "dual family: et, el, cu");
  est_cmd->add_option("--h", est_h, "bandwidth");
  est_cmd->add_option("--k", est_k, "sieve size");
  est_cmd->add_option("--q", est_q, "truncation");
  est_cmd->add_flag("--cv", est_cv, "select tuning parameters by cross-validation");
  est_cvargs.attach(est_cmd);
  est_cmd->add_option("--out", est_out, "write the fit document here");

  // cv
  auto* cv_cmd = app.add_subcommand("cv", "print the cross-validation loss table");
  DataArgs cv_data;
  cv_data.attach(cv_cmd);
  std::string cv_method = "fsw", cv_rho = "et";
  CvArgs cv_args;
  cv_cmd->add_option("--method", cv_method, "naive, fsw, or, dr");
  cv_cmd->add_option("--rho", cv_rho, "dual family: et, el, cu");
  cv_args.attach(cv_cmd);

  // adrf
  auto* adrf_cmd = app.add_subcommand("adrf", "evaluate a saved fit at curves");
  std::string adrf_fit, adrf_curves;
  adrf_cmd->add_option("--fit", adrf_fit, "fit document")->required();
  adrf_cmd->add_option("--curves", adrf_curves, "functional CSV of query curves")->required();

  // ate
  auto* ate_cmd = app.add_subcommand("ate", "treatment effect between paired curves");
  std::string ate_fit, ate_z1, ate_z2;
  ate_cmd->add_option("--fit", ate_fit, "fit document")->required();
  ate_cmd->add_option("--curves1", ate_z1, "functional CSV of z1 curves")->required();
  ate_cmd->add_option("--curves2", ate_z2, "functional CSV of z2 curves")->required();

  // benchmark
  auto* bench_cmd = app.add_subcommand("benchmark", "Monte Carlo ISE table");
  std::string bench_models = "i,ii,iii,iv", bench_methods = "fsw,or,dr,naive";
  std::vector<int> bench_sizes{200, 500};
  int bench_reps = 200;
  std::uint64_t bench_seed = 20240601;
  bool bench_csv = false;
  std::string bench_out;
  bench_cmd->add_option("--models", bench_models, "comma-separated models");
  bench_cmd->add_option("--sizes", bench_sizes, "comma-separated sample sizes")->delimiter(',');
  bench_cmd->add_option("--methods", bench_methods, "comma-separated methods");
  bench_cmd->add_option("--reps", bench_reps, "replications per design")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--seed", bench_seed, "base seed (replication r uses seed + r)");
  bench_cmd->add_flag("--csv", bench_csv, "emit CSV instead of the aligned table");
  bench_cmd->add_option("--out", bench_out, "also write the report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::Error& e) {
    return report_error("usage", e.what()) + 1;
  }

  try {
    if (threads > 0) set_thread_count(threads);

    if (*sim_cmd) {
      sim.id = parse_model(sim_model);
      const SimulatedData data = generate(sim);
      write_dataset(data.data, sim_curves, sim_table);
      if (!sim_truth.empty()) {
        std::ofstream out(sim_truth);
        if (!out) throw Error(ErrorCategory::io, "cannot open '" + sim_truth + "' for writing");
        out << "t,value\n";
        const Eigen::VectorXd& t = data.b_true.grid()->points();
        for (Eigen::Index j = 0; j < t.size(); ++j) out << fmt(t[j]) << ',' << fmt(data.b_true.values()[j]) << '\n';
        if (!out) throw Error(ErrorCategory::io, "failed writing '" + sim_truth + "'");
      }
    } else if (*est_cmd) {
      const Method method = parse_method(est_method);
      const RhoFamily rho = RhoFamily::parse(est_rho);
      const Dataset data = est_data.load();
      double h = 0.0;
      int k = 0, q = 0;
      if (est_cv) {
        if (est_h || est_k || est_q) {
          throw Error(ErrorCategory::parameter, "--cv cannot be combined with --h, --k or --q");
        }
        const TuningResult tuned = select_tuning(data, est_cvargs.config(rho), method);
        h = tuned.h;
        k = tuned.k;
        q = tuned.q;
      } else {
        if (!est_q) throw Error(ErrorCategory::parameter, "--q is required without --cv");
        q = *est_q;
        if (uses_weights(method)) {
          if (!est_h || !est_k) {
            throw Error(ErrorCategory::parameter, "--h and --k are required for method " + est_method);
          }
          h = *est_h;
          k = *est_k;
        }
      }
      const AdrfFit fit = fit_method(data, method, h, k, q, rho);
      print_fit_summary(fit);
      if (!est_out.empty()) write_fit(fit, est_out);
    } else if (*cv_cmd) {
      const Method method = parse_method(cv_method);
      const Dataset data = cv_data.load();
      const TuningResult tuned = select_tuning(data, cv_args.config(RhoFamily::parse(cv_rho)), method);
      std::cout << "h,k,q,loss,error\n";
      for (const TuningCandidate& c : tuned.table) {
        std::cout << fmt(c.h) << ',' << c.k << ',' << c.q << ',' << fmt(c.loss) << ','
                  << (c.error.empty() ? "" : "\"" + c.error + "\"") << '\n';
      }
      std::cout << "# selected h=" << fmt(tuned.h) << " k=" << tuned.k << " q=" << tuned.q
                << " loss=" << fmt(tuned.loss) << '\n';
    } else if (*adrf_cmd) {
      const AdrfFit fit = read_fit(adrf_fit);
      const CurveSet z = read_curves(adrf_curves);
      std::cout << "index,adrf\n";
      for (int i = 0; i < z.count(); ++i) std::cout << i << ',' << fmt(adrf_eval(fit, z.curve(i))) << '\n';
    } else if (*ate_cmd) {
      const AdrfFit fit = read_fit(ate_fit);
      const CurveSet z1 = read_curves(ate_z1);
      const CurveSet z2 = read_curves(ate_z2);
      if (z1.count() != z2.count()) {
        throw Error(ErrorCategory::alignment, "curve files hold " + std::to_string(z1.count()) +
                                                  " and " + std::to_string(z2.count()) + " curves");
      }
      std::cout << "index,ate\n";
      for (int i = 0; i < z1.count(); ++i) std::cout << i << ',' << fmt(ate(fit, z1.curve(i), z2.curve(i))) << '\n';
    } else if (*bench_cmd) {
      BenchmarkConfig config;
      config.models.clear();
      for (const std::string& m : split_list(bench_models)) config.models.push_back(parse_model(m));
      config.methods.clear();
      for (const std::string& m : split_list(bench_methods)) config.methods.push_back(parse_method(m));
      config.sizes = bench_sizes;
      config.replications = bench_reps;
      config.base_seed = bench_seed;
      const BenchmarkReport report = run_benchmark(config);
      const std::string text = bench_csv ? format_report_csv(report) : format_report(report);
      std::cout << text;
      if (!bench_out.empty()) {
        std::ofstream out(bench_out);
        out << text;
        if (!out) throw Error(ErrorCategory::io, "failed writing '" + bench_out + "'");
      }
    }
  } catch (const Error& e) {
    return report_error(category_name(e.category()), e.what());
  } catch (const std::exception& e) {
    return report_error("internal", e.what());
  }
  return 0;
}
