#include "fadrf/simlab.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "fadrf/errors.hpp"
#include "fadrf/parallel.hpp"

namespace fadrf {

namespace {

constexpr double kMaxNaShare = 0.05;

enum Stream : std::uint32_t { kScores = 1, kCovariateNoise = 2, kOutcomeNoise = 3, kIndependentX = 4 };

std::mt19937_64 stream(std::uint64_t seed, Stream id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32), static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd normals(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = dist(rng);
  return out;
}

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
}

}  // namespace

std::string_view model_name(SimModelId id) noexcept {
  switch (id) {
    case SimModelId::i: return "i";
    case SimModelId::ii: return "ii";
    case SimModelId::iii: return "iii";
    case SimModelId::iv: return "iv";
  }
  return "?";
}

SimModelId parse_model(std::string_view name) {
  if (name == "i" || name == "1") return SimModelId::i;
  if (name == "ii" || name == "2") return SimModelId::ii;
  if (name == "iii" || name == "3") return SimModelId::iii;
  if (name == "iv" || name == "4") return SimModelId::iv;
  throw Error(ErrorCategory::parameter, "unknown simulation model '" + std::string(name) + "'");
}

Eigen::VectorXd kl_coefficient_sds() {
  Eigen::VectorXd sd(6);
  sd << 4.0, 2.0 * std::sqrt(3.0), 2.0 * std::sqrt(2.0), 2.0, 1.0, 1.0 / std::sqrt(2.0);
  return sd;
}

Eigen::MatrixXd fourier_basis(const Grid& grid) {
  const Eigen::VectorXd& t = grid.points();
  Eigen::MatrixXd phi(t.size(), 6);
  for (int m = 1; m <= 3; ++m) {
    for (Eigen::Index r = 0; r < t.size(); ++r) {
      const double arg = 2.0 * m * std::numbers::pi * t[r];
      phi(r, 2 * m - 2) = std::numbers::sqrt2 * std::sin(arg);
      phi(r, 2 * m - 1) = std::numbers::sqrt2 * std::cos(arg);
    }
  }
  return phi;
}

FunctionalSample true_slope(const GridPtr& grid) {
  const Eigen::MatrixXd phi = fourier_basis(*grid);
  Eigen::VectorXd coef(6);
  coef << 2.0, 1.0, 0.5, 0.5, 0.0, 0.0;
  return FunctionalSample(grid, phi * coef);
}

SimulatedData generate(const SimModel& model) {
  if (model.n < 20) throw Error(ErrorCategory::parameter, "simulation needs n >= 20");
  const int n = model.n;
  const GridPtr grid = Grid::uniform(0.0, 1.0, model.grid_points);
  const Eigen::MatrixXd phi = fourier_basis(*grid);

  auto score_rng = stream(model.seed, kScores);
  auto x_rng = stream(model.seed, kCovariateNoise);
  auto y_rng = stream(model.seed, kOutcomeNoise);
  const Eigen::MatrixXd u = normals(score_rng, n, 6);
  const Eigen::MatrixXd eps1 = normals(x_rng, n, 1) * model.covariate_noise_sd;
  const Eigen::VectorXd eps2 = normals(y_rng, n, 1).col(0) * model.outcome_noise_sd;
  Eigen::MatrixXd ux = u.leftCols(2);
  if (model.independent_covariates) {
    auto ind_rng = stream(model.seed, kIndependentX);
    ux = normals(ind_rng, n, 2);
  }

  const Eigen::MatrixXd coefficients = u * kl_coefficient_sds().asDiagonal();
  CurveSet z(grid, coefficients * phi.transpose());
  FunctionalSample b = true_slope(grid);

  Eigen::VectorXd bz(n);
  for (int i = 0; i < n; ++i) bz[i] = inner_product(*grid, b.values(), z.values().row(i).transpose());

  Eigen::MatrixXd x;
  Eigen::VectorXd y(n);
  std::optional<Eigen::VectorXd> theta;
  switch (model.id) {
    case SimModelId::i:
    case SimModelId::ii:
      x = ux.col(0) + eps1.col(0);
      break;
    case SimModelId::iii:
    case SimModelId::iv:
      x.resize(n, 2);
      x.col(0) = (ux.col(0).array() + 1.0).square().matrix() + eps1.col(0);
      x.col(1) = ux.col(1);
      break;
  }
  for (int i = 0; i < n; ++i) {
    double g = 0.0;
    switch (model.id) {
      case SimModelId::i: g = 2.0 * x(i, 0); break;
      case SimModelId::ii: g = 3.0 * x(i, 0) * x(i, 0) + 1.5 * std::sin(x(i, 0)); break;
      case SimModelId::iii: g = 2.0 * x(i, 0) + 2.0 * x(i, 1); break;
      case SimModelId::iv:
        g = 2.0 * x(i, 0) + 2.0 * std::cos(x(i, 0)) + 5.5 * std::sin(x(i, 1));
        break;
    }
    y[i] = 1.0 + bz[i] + g + eps2[i];
  }
  if (model.id == SimModelId::i) theta = Eigen::VectorXd::Constant(1, 2.0);
  if (model.id == SimModelId::iii) theta = Eigen::VectorXd::Constant(2, 2.0);

  Dataset data(std::move(z), std::move(x), std::move(y));
  return SimulatedData{std::move(data), std::move(b), 1.0, std::move(theta), coefficients};
}

double ise(const FunctionalSample& b_hat, const FunctionalSample& b_true) {
  require_same_grid(*b_hat.grid(), *b_true.grid());
  const Eigen::VectorXd diff = b_hat.values() - b_true.values();
  return inner_product(*b_hat.grid(), diff, diff);
}

const BenchmarkCell& BenchmarkReport::cell(SimModelId model, int n, Method method) const {
  for (const BenchmarkCell& c : cells) {
    if (c.model == model && c.n == n && c.method == method) return c;
  }
  throw Error(ErrorCategory::parameter, "benchmark report has no such cell");
}

namespace {

Replication run_replication(SimModelId id, int n, std::uint64_t seed, const BenchmarkConfig& config) {
  Replication rep;
  rep.seed = seed;
  rep.fits.resize(config.methods.size());
  SimModel model;
  model.id = id;
  model.n = n;
  model.seed = seed;
  model.grid_points = config.grid_points;
  const SimulatedData sim = generate(model);

  auto fail_all = [&](const std::string& why) {
    rep.error = why;
    for (ReplicationFit& f : rep.fits) {
      f.ise = std::nan("");
      f.error = why;
    }
  };
  try {
    CvConfig cv = config.cv;
    cv.seed = seed;
    const TuningResult tuned = select_tuning(sim.data, cv, Method::fsw);
    rep.h = tuned.h;
    rep.k = tuned.k;
    rep.q = tuned.q;
  } catch (const std::exception& e) {
    fail_all(e.what());
    return rep;
  }

  std::shared_ptr<const FpcaModel> model_fpca;
  try {
    model_fpca = std::make_shared<const FpcaModel>(fpca(sim.data.z(), rep.q));
  } catch (const std::exception& e) {
    fail_all(e.what());
    return rep;
  }
  std::optional<WeightFit> weights;
  std::string weight_error;
  std::optional<AdrfFit> or_fit;
  std::string or_error;
  auto need_weights = [&] {
    if (!weights && weight_error.empty()) {
      try {
        weights = estimate_weights(sim.data, rep.h, rep.k, config.cv.rho, config.cv.solver);
      } catch (const std::exception& e) {
        weight_error = e.what();
      }
    }
    if (!weights) throw Error(ErrorCategory::convergence, weight_error);
    return *weights;
  };
  auto need_or = [&] {
    if (!or_fit && or_error.empty()) {
      try {
        or_fit = fit_or(sim.data, model_fpca, rep.q, config.backfit);
      } catch (const std::exception& e) {
        or_error = e.what();
      }
    }
    if (!or_fit) throw Error(ErrorCategory::convergence, or_error);
    return *or_fit;
  };

  for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
    ReplicationFit& out = rep.fits[mi];
    try {
      std::optional<AdrfFit> fit;
      switch (config.methods[mi]) {
        case Method::naive: fit = fit_naive(sim.data, model_fpca, rep.q); break;
        case Method::fsw: fit = fit_fsw(sim.data, model_fpca, need_weights(), rep.q); break;
        case Method::outcome_regression: fit = need_or(); break;
        case Method::doubly_robust:
          fit = fit_dr(sim.data, model_fpca, need_or(), need_weights(), rep.q);
          break;
      }
      out.ise = ise(fit->b_curve, sim.b_true);
      out.a_hat = fit->a_hat;
      out.theta_hat = fit->theta_hat;
      out.converged = fit->converged;
    } catch (const std::exception& e) {
      out.ise = std::nan("");
      out.error = e.what();
    }
  }
  return rep;
}

}  // namespace

BenchmarkReport run_benchmark(const BenchmarkConfig& config) {
  if (config.replications < 1) throw Error(ErrorCategory::parameter, "replications must be >= 1");
  BenchmarkReport report;
  report.methods = config.methods;
  for (SimModelId id : config.models) {
    for (int n : config.sizes) {
      BenchmarkRun run{id, n, std::vector<Replication>(static_cast<std::size_t>(config.replications))};
      parallel_for(config.replications, [&](int r) {
        run.replications[static_cast<std::size_t>(r)] =
            run_replication(id, n, config.base_seed + static_cast<std::uint64_t>(r), config);
      });
      for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
        std::vector<double> values;
        int unconverged = 0;
        for (const Replication& rep : run.replications) {
          const double v = rep.fits[mi].ise;
          if (std::isfinite(v)) values.push_back(100.0 * v);
          if (!rep.fits[mi].converged) ++unconverged;
        }
        BenchmarkCell cell{id, n, config.methods[mi], std::nan(""), std::nan(""), config.replications,
                           config.replications - static_cast<int>(values.size()), unconverged};
        if (!values.empty()) mean_sd(values, cell.mean_ise100, cell.sd_ise100);
        report.cells.push_back(cell);
      }
      report.runs.push_back(std::move(run));
    }
  }
  for (const BenchmarkCell& c : report.cells) {
    if (c.failures > kMaxNaShare * c.replications) {
      std::ostringstream msg;
      msg << c.failures << " of " << c.replications << " fits failed for model (" << model_name(c.model)
          << "), n = " << c.n << ", method " << method_name(c.method);
      for (const BenchmarkRun& run : report.runs) {
        if (run.model != c.model || run.n != c.n) continue;
        for (const Replication& rep : run.replications) {
          for (const ReplicationFit& f : rep.fits) {
            if (!f.error.empty()) {
              msg << "; first error: " << f.error;
              throw Error(ErrorCategory::benchmark, msg.str());
            }
          }
        }
      }
      throw Error(ErrorCategory::benchmark, msg.str());
    }
  }
  return report;
}

std::string format_report(const BenchmarkReport& report) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %5s  %-6s %12s %12s %6s %4s %7s\n", "model", "n", "method",
                "mean ISE*100", "sd ISE*100", "reps", "NA", "capped");
  out << line;
  for (const BenchmarkCell& c : report.cells) {
    std::snprintf(line, sizeof line, "%-6s %5d  %-6s %12.2f %12.2f %6d %4d %7d\n",
                  std::string(model_name(c.model)).c_str(), c.n,
                  std::string(method_name(c.method)).c_str(), c.mean_ise100, c.sd_ise100,
                  c.replications, c.failures, c.unconverged);
    out << line;
  }
  return out.str();
}

std::string format_report_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "model,n,method,mean_ise100,sd_ise100,replications,failures,capped\n";
  char line[200];
  for (const BenchmarkCell& c : report.cells) {
    std::snprintf(line, sizeof line, "%s,%d,%s,%.17g,%.17g,%d,%d,%d\n",
                  std::string(model_name(c.model)).c_str(), c.n,
                  std::string(method_name(c.method)).c_str(), c.mean_ise100, c.sd_ise100,
                  c.replications, c.failures, c.unconverged);
    out << line;
  }
  return out.str();
}

}  // namespace fadrf
