#include "fadrf/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <tuple>

#include "fadrf/errors.hpp"
#include "fadrf/fda_core.hpp"
#include "fadrf/parallel.hpp"
#include "fadrf/sieve.hpp"

namespace fadrf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxHeldOutFailureShare = 0.05;

// Uniform draw in [0, bound] by rejection, independent of the standard
// library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t range = bound + 1;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t v;
  do v = rng(); while (v >= limit);
  return v % range;
}

/// Everything about one training/held-out split that does not depend on
/// (h, k, q).
struct FoldSplit {
  std::vector<int> train;
  std::vector<int> test;
  std::unique_ptr<Dataset> train_data;
  std::shared_ptr<const FpcaModel> fpca;
  Eigen::MatrixXd test_scores;  // held-out scores on the training basis
  Eigen::VectorXd mean_proj;    // <phi_j, mean_train>
  Eigen::MatrixXd train_dist;
  Eigen::MatrixXd test_dist;  // test x train
  std::optional<Standardizer> standardizer;
  Eigen::MatrixXd train_x_st;
  Eigen::MatrixXd test_x_st;
  Eigen::MatrixXd test_x;
  Eigen::VectorXd test_y;
};

std::vector<FoldSplit> make_splits(const Dataset& data, std::span<const int> folds, int max_q,
                                   bool need_weights) {
  const int n = data.size();
  if (static_cast<int>(folds.size()) != n) {
    throw Error(ErrorCategory::alignment, "fold labels do not match the dataset size");
  }
  const int L = folds.empty() ? 0 : *std::max_element(folds.begin(), folds.end()) + 1;
  const Eigen::MatrixXd all_dist = need_weights ? pairwise_distances(data.z()) : Eigen::MatrixXd();
  std::vector<FoldSplit> splits;
  for (int l = 0; l < L; ++l) {
    FoldSplit s;
    for (int i = 0; i < n; ++i) (folds[i] == l ? s.test : s.train).push_back(i);
    if (s.test.empty()) continue;
    if (s.train.size() < 2) {
      throw Error(ErrorCategory::fold_size, "training fold " + std::to_string(l) + " has fewer than 2 observations");
    }
    s.train_data = std::make_unique<Dataset>(data.subset(s.train));
    const int m = data.grid()->size();
    const int J = std::min({max_q, static_cast<int>(s.train.size()), m});
    s.fpca = std::make_shared<const FpcaModel>(fpca(s.train_data->z(), J));
    s.test_scores = pc_scores(*s.fpca, data.z().subset(s.test));
    s.mean_proj = s.fpca->mean_projections();
    const auto nt = static_cast<Eigen::Index>(s.test.size());
    s.test_x.resize(nt, data.covariates());
    s.test_y.resize(nt);
    for (Eigen::Index r = 0; r < nt; ++r) {
      s.test_x.row(r) = data.x().row(s.test[static_cast<std::size_t>(r)]);
      s.test_y[r] = data.y()[s.test[static_cast<std::size_t>(r)]];
    }
    if (need_weights) {
      const auto ntr = static_cast<Eigen::Index>(s.train.size());
      s.train_dist.resize(ntr, ntr);
      for (Eigen::Index a = 0; a < ntr; ++a)
        for (Eigen::Index b = 0; b < ntr; ++b)
          s.train_dist(a, b) = all_dist(s.train[static_cast<std::size_t>(a)], s.train[static_cast<std::size_t>(b)]);
      s.test_dist.resize(nt, ntr);
      for (Eigen::Index a = 0; a < nt; ++a)
        for (Eigen::Index b = 0; b < ntr; ++b)
          s.test_dist(a, b) = all_dist(s.test[static_cast<std::size_t>(a)], s.train[static_cast<std::size_t>(b)]);
      Standardized st = standardize(s.train_data->x());
      s.train_x_st = std::move(st.values);
      s.test_x_st = st.standardizer.apply(s.test_x);
      s.standardizer.emplace(std::move(st.standardizer));
    }
    splits.push_back(std::move(s));
  }
  return splits;
}

struct FoldWeights {
  WeightFit train;
  HeldOutWeights test;
};

FoldWeights fold_weights(const FoldSplit& s, double h, int k, RhoFamily rho,
                         const SolverOptions& solver) {
  if (2 * k > static_cast<int>(s.train.size())) {
    throw Error(ErrorCategory::fold_size, "training fold of size " + std::to_string(s.train.size()) +
                                              " is too small for sieve size k = " + std::to_string(k));
  }
  const SieveDesign design = sieve_design(s.train_x_st, k);
  WeightFit train = estimate_weights(s.train_dist, design, h, rho, solver);
  const Eigen::MatrixXd test_nu = design.evaluate(s.test_x_st);
  HeldOutWeights test = held_out_weights(s.test_dist, design, test_nu, h, rho, solver);
  const auto failed = std::count(test.converged.begin(), test.converged.end(), 0);
  if (failed > kMaxHeldOutFailureShare * static_cast<double>(s.test.size())) {
    throw ConvergenceError(std::to_string(failed) + " held-out local duals failed to converge",
                           kInf);
  }
  return FoldWeights{std::move(train), std::move(test)};
}

/// a + sum_{j<=q} b_j (<phi_j, mean> + xi_ij) for every held-out row.
Eigen::VectorXd held_out_linear(const FoldSplit& s, const AdrfFit& fit) {
  const auto q = fit.b_coeffs.size();
  Eigen::VectorXd out(s.test_scores.rows());
  for (Eigen::Index r = 0; r < out.size(); ++r) {
    double v = fit.a_hat;
    for (Eigen::Index j = 0; j < q; ++j) v += fit.b_coeffs[j] * (s.mean_proj[j] + s.test_scores(r, j));
    out[r] = v;
  }
  return out;
}

bool q_fits(const FoldSplit& s, int q) { return q >= 1 && q <= s.fpca->positive_rank(); }

int max_of(std::span<const int> v) { return v.empty() ? 1 : *std::max_element(v.begin(), v.end()); }

}  // namespace

std::vector<int> make_folds(int n, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCategory::parameter, "need at least 2 folds");
  if (n < folds) {
    throw Error(ErrorCategory::fold_size, "cannot split " + std::to_string(n) + " observations into " +
                                              std::to_string(folds) + " folds");
  }
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(bounded(rng, static_cast<std::uint64_t>(i)));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<int> label(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) label[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r % folds;
  return label;
}

double median_pairwise_distance(const Eigen::Ref<const Eigen::MatrixXd>& distances) {
  const auto n = distances.rows();
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) v.push_back(distances(i, j));
  if (v.empty()) throw Error(ErrorCategory::empty_input, "need at least two curves for a median distance");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(v.begin(), mid);
  return 0.5 * (lower + upper);
}

CvConfig resolve_cv_config(const Dataset& data, CvConfig config) {
  if (config.folds < 2) throw Error(ErrorCategory::parameter, "need at least 2 folds");
  const int p = data.covariates();
  if (config.h_grid.empty()) {
    const double med = median_pairwise_distance(pairwise_distances(data.z()));
    for (double mult : {0.25, 0.5, 1.0, 2.0}) config.h_grid.push_back(mult * med);
  }
  if (config.k_grid.empty()) config.k_grid = {p + 1, 2 * p + 1, 3 * p + 1};
  if (config.q_grid.empty()) config.q_grid = {1, 2, 3, 4, 5, 6, 7, 8};
  for (double h : config.h_grid) {
    if (!(h > 0.0)) throw Error(ErrorCategory::parameter, "bandwidth candidates must be positive");
  }
  for (int k : config.k_grid) {
    if (!valid_sieve_size(k, p)) {
      throw Error(ErrorCategory::parameter, "sieve size " + std::to_string(k) + " invalid for p = " + std::to_string(p));
    }
  }
  for (int q : config.q_grid) {
    if (q < 1) throw Error(ErrorCategory::parameter, "truncation candidates must be >= 1");
  }
  return config;
}

namespace {

std::vector<double> fsw_losses(const std::vector<FoldSplit>& splits, double h, int k,
                               std::span<const int> qs, RhoFamily rho, const SolverOptions& solver) {
  std::vector<double> loss(qs.size(), 0.0);
  for (const FoldSplit& s : splits) {
    const FoldWeights fw = fold_weights(s, h, k, rho, solver);
    const Eigen::VectorXd y_pi_test = s.test_y.cwiseProduct(fw.test.pi);
    for (std::size_t c = 0; c < qs.size(); ++c) {
      if (!std::isfinite(loss[c])) continue;
      if (!q_fits(s, qs[c])) {
        loss[c] = kInf;
        continue;
      }
      const AdrfFit fit = fit_fsw(*s.train_data, s.fpca, fw.train, qs[c]);
      loss[c] += (y_pi_test - held_out_linear(s, fit)).squaredNorm();
    }
  }
  return loss;
}

}  // namespace

std::vector<double> cv_losses_fsw(const Dataset& data, double h, int k, std::span<const int> qs,
                                  std::span<const int> folds, RhoFamily rho,
                                  const SolverOptions& solver) {
  return fsw_losses(make_splits(data, folds, max_of(qs), true), h, k, qs, rho, solver);
}

double cv_loss_fsw(const Dataset& data, double h, int k, int q, std::span<const int> folds,
                   RhoFamily rho, const SolverOptions& solver) {
  const int qs[] = {q};
  const double loss = cv_losses_fsw(data, h, k, qs, folds, rho, solver)[0];
  if (!std::isfinite(loss)) {
    throw Error(ErrorCategory::rank, "truncation q = " + std::to_string(q) + " exceeds a training fold's covariance rank");
  }
  return loss;
}

namespace {

double or_loss(const std::vector<FoldSplit>& splits, int q, const BackfitOptions& backfit) {
  double loss = 0.0;
  for (const FoldSplit& s : splits) {
    if (!q_fits(s, q)) {
      throw Error(ErrorCategory::rank, "truncation q = " + std::to_string(q) + " exceeds a training fold's covariance rank");
    }
    const AdrfFit fit = fit_or(*s.train_data, s.fpca, q, backfit);
    const Eigen::VectorXd pred = held_out_linear(s, fit) + s.test_x * *fit.theta_hat;
    loss += (s.test_y - pred).squaredNorm();
  }
  return loss;
}

}  // namespace

double cv_loss_or(const Dataset& data, int q, std::span<const int> folds,
                  const BackfitOptions& backfit) {
  return or_loss(make_splits(data, folds, q, false), q, backfit);
}

namespace {

std::vector<double> dr_losses(const std::vector<FoldSplit>& splits, double h, int k,
                              std::span<const int> qs, RhoFamily rho, const SolverOptions& solver,
                              const BackfitOptions& backfit) {
  std::vector<double> loss(qs.size(), 0.0);
  for (const FoldSplit& s : splits) {
    const FoldWeights fw = fold_weights(s, h, k, rho, solver);
    const Eigen::VectorXd xbar = s.test_x.colwise().mean();
    for (std::size_t c = 0; c < qs.size(); ++c) {
      if (!std::isfinite(loss[c])) continue;
      if (!q_fits(s, qs[c])) {
        loss[c] = kInf;
        continue;
      }
      const AdrfFit or_fit = fit_or(*s.train_data, s.fpca, qs[c], backfit);
      const AdrfFit dr_fit = fit_dr(*s.train_data, s.fpca, or_fit, fw.train, qs[c]);
      const Eigen::VectorXd& theta = *or_fit.theta_hat;
      // E_{-l}(Y | X_j, Z_i) averaged over the held-out covariates j of fold l.
      const Eigen::VectorXd or_z = held_out_linear(s, or_fit);
      const Eigen::VectorXd fitted = or_z + s.test_x * theta;
      const Eigen::VectorXd pseudo = (s.test_y - fitted).cwiseProduct(fw.test.pi) +
                                     (or_z.array() + theta.dot(xbar)).matrix();
      loss[c] += (pseudo - held_out_linear(s, dr_fit)).squaredNorm();
    }
  }
  return loss;
}

}  // namespace

std::vector<double> cv_losses_dr(const Dataset& data, double h, int k, std::span<const int> qs,
                                 std::span<const int> folds, RhoFamily rho,
                                 const SolverOptions& solver, const BackfitOptions& backfit) {
  return dr_losses(make_splits(data, folds, max_of(qs), true), h, k, qs, rho, solver, backfit);
}

double cv_loss_dr(const Dataset& data, double h, int k, int q, std::span<const int> folds,
                  RhoFamily rho, const SolverOptions& solver, const BackfitOptions& backfit) {
  const int qs[] = {q};
  const double loss = cv_losses_dr(data, h, k, qs, folds, rho, solver, backfit)[0];
  if (!std::isfinite(loss)) {
    throw Error(ErrorCategory::rank, "truncation q = " + std::to_string(q) + " exceeds a training fold's covariance rank");
  }
  return loss;
}

TuningResult select_tuning(const Dataset& data, const CvConfig& raw_config, Method method) {
  const CvConfig config = resolve_cv_config(data, raw_config);
  const std::vector<int> folds = make_folds(data.size(), config.folds, config.seed);
  std::vector<TuningCandidate> table;
  const std::vector<FoldSplit> splits = make_splits(
      data, folds, max_of(config.q_grid), method != Method::outcome_regression);

  if (method == Method::outcome_regression) {
    table.resize(config.q_grid.size());
    parallel_for(static_cast<int>(config.q_grid.size()), [&](int c) {
      TuningCandidate& cand = table[static_cast<std::size_t>(c)];
      cand.q = config.q_grid[static_cast<std::size_t>(c)];
      try {
        cand.loss = or_loss(splits, cand.q, config.backfit);
      } catch (const std::exception& e) {
        cand.loss = kInf;
        cand.error = e.what();
      }
    });
  } else {
    struct Pair { double h; int k; };
    std::vector<Pair> pairs;
    for (int k : config.k_grid)
      for (double h : config.h_grid) pairs.push_back({h, k});
    const auto nq = config.q_grid.size();
    table.resize(pairs.size() * nq);
    parallel_for(static_cast<int>(pairs.size()), [&](int pi) {
      const Pair pr = pairs[static_cast<std::size_t>(pi)];
      auto slot = [&](std::size_t c) -> TuningCandidate& { return table[static_cast<std::size_t>(pi) * nq + c]; };
      for (std::size_t c = 0; c < nq; ++c) {
        slot(c).h = pr.h;
        slot(c).k = pr.k;
        slot(c).q = config.q_grid[c];
      }
      try {
        const std::vector<double> losses =
            method == Method::doubly_robust
                ? dr_losses(splits, pr.h, pr.k, config.q_grid, config.rho, config.solver, config.backfit)
                : fsw_losses(splits, pr.h, pr.k, config.q_grid, config.rho, config.solver);
        for (std::size_t c = 0; c < nq; ++c) {
          slot(c).loss = losses[c];
          if (!std::isfinite(losses[c])) slot(c).error = "truncation exceeds a training fold's covariance rank";
        }
      } catch (const std::exception& e) {
        for (std::size_t c = 0; c < nq; ++c) {
          slot(c).loss = kInf;
          slot(c).error = e.what();
        }
      }
    });
  }

  const TuningCandidate* best = nullptr;
  for (const TuningCandidate& c : table) {
    if (!std::isfinite(c.loss)) continue;
    if (!best || c.loss < best->loss ||
        (c.loss == best->loss &&
         std::tie(c.q, c.k, c.h) < std::tie(best->q, best->k, best->h))) {
      best = &c;
    }
  }
  if (!best) {
    std::string msg = "every tuning candidate failed";
    int shown = 0;
    for (const TuningCandidate& c : table) {
      if (shown++ == 3) break;
      msg += "; (h=" + std::to_string(c.h) + ", k=" + std::to_string(c.k) + ", q=" + std::to_string(c.q) + "): " + c.error;
    }
    throw Error(ErrorCategory::tuning, msg);
  }
  TuningResult result{best->h, best->k, best->q, best->loss, {}};
  result.table = std::move(table);
  return result;
}

}  // namespace fadrf
