#include "fadrf/fsw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fadrf/errors.hpp"
#include "fadrf/parallel.hpp"

namespace fadrf {

namespace {

// Share of points whose local dual may fail before a weight fit is rejected.
constexpr double kMaxFailureShare = 0.05;
constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;

double clip_weight(double raw) {
  if (std::isnan(raw)) return WeightFit::kMaxWeight;
  return std::clamp(raw, WeightFit::kMinWeight, WeightFit::kMaxWeight);
}

}  // namespace

RhoFamily RhoFamily::parse(std::string_view name) {
  if (name == "exponential-tilting" || name == "et") return RhoFamily(RhoKind::exponential_tilting);
  if (name == "empirical-likelihood" || name == "el") return RhoFamily(RhoKind::empirical_likelihood);
  if (name == "continuous-updating" || name == "cu") return RhoFamily(RhoKind::continuous_updating);
  throw Error(ErrorCategory::parameter, "unknown rho family '" + std::string(name) + "'");
}

std::string_view RhoFamily::name() const noexcept {
  switch (kind_) {
    case RhoKind::exponential_tilting: return "exponential-tilting";
    case RhoKind::empirical_likelihood: return "empirical-likelihood";
    case RhoKind::continuous_updating: return "continuous-updating";
  }
  return "unknown";
}

double RhoFamily::value(double v) const noexcept {
  switch (kind_) {
    case RhoKind::exponential_tilting: return -std::exp(-v - 1.0);
    case RhoKind::empirical_likelihood:
      return v > 0.0 ? std::log(v) + 1.0 : -std::numeric_limits<double>::infinity();
    case RhoKind::continuous_updating: return -0.5 * (1.0 - v) * (1.0 - v);
  }
  return 0.0;
}

double RhoFamily::first(double v) const noexcept {
  switch (kind_) {
    case RhoKind::exponential_tilting: return std::exp(-v - 1.0);
    case RhoKind::empirical_likelihood: return 1.0 / v;
    case RhoKind::continuous_updating: return 1.0 - v;
  }
  return 0.0;
}

double RhoFamily::second(double v) const noexcept {
  switch (kind_) {
    case RhoKind::exponential_tilting: return -std::exp(-v - 1.0);
    case RhoKind::empirical_likelihood: return -1.0 / (v * v);
    case RhoKind::continuous_updating: return -1.0;
  }
  return 0.0;
}

bool RhoFamily::in_domain(double v) const noexcept {
  return kind_ != RhoKind::empirical_likelihood || v > 0.0;
}

double RhoFamily::unit_weight_argument() const noexcept {
  switch (kind_) {
    case RhoKind::exponential_tilting: return -1.0;
    case RhoKind::empirical_likelihood: return 1.0;
    case RhoKind::continuous_updating: return 0.0;
  }
  return 0.0;
}

Eigen::MatrixXd cross_distances(const CurveSet& a, const CurveSet& b) {
  require_same_grid(*a.grid(), *b.grid());
  const Eigen::VectorXd& w = a.grid()->weights();
  const Eigen::MatrixXd& za = a.values();
  const Eigen::MatrixXd& zb = b.values();
  Eigen::MatrixXd d(za.rows(), zb.rows());
  for (Eigen::Index i = 0; i < za.rows(); ++i) {
    for (Eigen::Index j = 0; j < zb.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index t = 0; t < w.size(); ++t) {
        const double diff = za(i, t) - zb(j, t);
        s += w[t] * diff * diff;
      }
      d(i, j) = std::sqrt(s);
    }
  }
  return d;
}

Eigen::MatrixXd pairwise_distances(const CurveSet& curves) {
  const Eigen::VectorXd& w = curves.grid()->weights();
  const Eigen::MatrixXd& z = curves.values();
  const auto n = z.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index t = 0; t < w.size(); ++t) {
        const double diff = z(i, t) - z(j, t);
        s += w[t] * diff * diff;
      }
      d(i, j) = d(j, i) = std::sqrt(s);
    }
  }
  return d;
}

Eigen::MatrixXd pairwise_distances(std::span<const FunctionalSample> samples) {
  return pairwise_distances(CurveSet(samples));
}

Eigen::VectorXd kernel_weights(const Eigen::Ref<const Eigen::VectorXd>& distances, double h,
                               int exclude) {
  if (!(h > 0.0)) throw Error(ErrorCategory::parameter, "bandwidth h must be positive");
  const auto n = distances.size();
  Eigen::VectorXd u(n);
  double umin = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < n; ++j) {
    const double r = distances[j] / h;
    u[j] = r * r;
    if (j != exclude) umin = std::min(umin, u[j]);
  }
  if (!std::isfinite(umin)) {
    throw Error(ErrorCategory::precondition, "kernel neighborhood is empty");
  }
  // Shifting by the smallest exponent leaves the normalized weights unchanged
  // and keeps the largest one at exp(0).
  Eigen::VectorXd w(n);
  for (Eigen::Index j = 0; j < n; ++j) w[j] = j == exclude ? 0.0 : std::exp(umin - u[j]);
  return w / w.sum();
}

double local_dual_objective(const Eigen::Ref<const Eigen::VectorXd>& eta,
                            const Eigen::Ref<const Eigen::MatrixXd>& nu,
                            const Eigen::Ref<const Eigen::VectorXd>& w,
                            const Eigen::Ref<const Eigen::VectorXd>& target, RhoFamily rho) {
  const Eigen::VectorXd s = nu * eta;
  double total = 0.0;
  for (Eigen::Index j = 0; j < s.size(); ++j) {
    if (w[j] > 0.0) total += w[j] * rho.value(s[j]);
  }
  return total - eta.dot(target);
}

Eigen::VectorXd local_dual_gradient(const Eigen::Ref<const Eigen::VectorXd>& eta,
                                    const Eigen::Ref<const Eigen::MatrixXd>& nu,
                                    const Eigen::Ref<const Eigen::VectorXd>& w,
                                    const Eigen::Ref<const Eigen::VectorXd>& target,
                                    RhoFamily rho) {
  const Eigen::VectorXd s = nu * eta;
  Eigen::VectorXd c(s.size());
  for (Eigen::Index j = 0; j < s.size(); ++j) c[j] = w[j] > 0.0 ? w[j] * rho.first(s[j]) : 0.0;
  return nu.transpose() * c - target;
}

LocalDualSolution solve_local_dual(const Eigen::Ref<const Eigen::MatrixXd>& nu,
                                   const Eigen::Ref<const Eigen::VectorXd>& w,
                                   const Eigen::Ref<const Eigen::VectorXd>& target, RhoFamily rho,
                                   const SolverOptions& options) {
  const auto k = nu.cols();
  const auto n = nu.rows();
  if (w.size() != n || target.size() != k) {
    throw Error(ErrorCategory::alignment, "local dual dimensions disagree");
  }

  // Start from the uniform weight along the constant direction.
  Eigen::Index anchor = 0;
  while (anchor < n && !(w[anchor] > 0.0)) ++anchor;
  if (anchor == n) throw Error(ErrorCategory::precondition, "local dual has no neighbors");
  LocalDualSolution sol;
  sol.eta = Eigen::VectorXd::Zero(k);
  const double c0 = nu(anchor, 0);
  const double unit = rho.unit_weight_argument();
  bool constant_first = c0 != 0.0;
  for (Eigen::Index j = 0; j < n && constant_first; ++j) constant_first = !(w[j] > 0.0) || nu(j, 0) == c0;
  if (constant_first) {
    sol.eta[0] = unit / c0;
  } else {
    // General sieve: weighted least-squares fit of the constant unit-weight argument.
    const Eigen::VectorXd sw = w.cwiseSqrt();
    const Eigen::MatrixXd a = sw.asDiagonal() * nu;
    sol.eta = a.colPivHouseholderQr().solve(sw * unit);
  }

  // Objective, gradient and curvature at one point share a single pass over
  // the neighbors (one exponential per neighbor for exponential tilting).
  struct Point {
    Eigen::VectorXd eta, s, first, curv, grad;
    double f = 0.0;
  };
  auto evaluate = [&](Point& p) {
    p.s.noalias() = nu * p.eta;
    p.first.resize(n);
    p.curv.resize(n);
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!(w[j] > 0.0)) {
        p.first[j] = p.curv[j] = 0.0;
        continue;
      }
      const double v = p.s[j];
      double val, d1, d2;
      switch (rho.kind()) {
        case RhoKind::exponential_tilting: {
          const double e = std::exp(-v - 1.0);
          val = -e, d1 = e, d2 = -e;
          break;
        }
        case RhoKind::empirical_likelihood:
          if (!(v > 0.0)) return false;
          val = std::log(v) + 1.0, d1 = 1.0 / v, d2 = -d1 * d1;
          break;
        default:
          val = -0.5 * (1.0 - v) * (1.0 - v), d1 = 1.0 - v, d2 = -1.0;
          break;
      }
      total += w[j] * val;
      p.first[j] = w[j] * d1;
      p.curv[j] = -w[j] * d2;
    }
    p.f = total - p.eta.dot(target);
    if (!std::isfinite(p.f)) return false;
    p.grad.noalias() = nu.transpose() * p.first;
    p.grad -= target;
    return true;
  };

  Point cur;
  cur.eta = sol.eta;
  if (!evaluate(cur)) {
    sol.gradient_norm = std::numeric_limits<double>::infinity();
    return sol;
  }
  Point cand;
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::MatrixXd neg_hessian(k, k);
  Eigen::MatrixXd scaled(n, k);
  for (int iter = 0;; ++iter) {
    sol.eta = cur.eta;
    sol.gradient_norm = cur.grad.lpNorm<Eigen::Infinity>();
    sol.iterations = iter;
    if (sol.gradient_norm <= options.tolerance) {
      sol.converged = true;
      return sol;
    }
    if (iter == options.max_iterations) return sol;

    scaled = nu.array().colwise() * cur.curv.array();
    neg_hessian.noalias() = nu.transpose() * scaled;
    double damping = 0.0;
    for (;;) {
      llt.compute(neg_hessian + damping * Eigen::MatrixXd::Identity(k, k));
      if (llt.info() == Eigen::Success) break;
      damping = damping == 0.0 ? options.initial_damping : damping * 10.0;
      if (damping > options.max_damping) return sol;
    }
    const Eigen::VectorXd step = llt.solve(cur.grad);
    const double slope = cur.grad.dot(step);

    bool accepted = false;
    double t = 1.0;
    for (int halving = 0; halving < kMaxHalvings; ++halving, t *= 0.5) {
      cand.eta = cur.eta + t * step;
      if (!evaluate(cand)) continue;
      bool ok = cand.f >= cur.f + kArmijo * t * slope;
      if (!ok && cand.f >= cur.f - 1e-13 * (1.0 + std::abs(cur.f))) {
        // Near the optimum the objective change drowns in rounding; fall
        // back to requiring a smaller gradient.
        ok = cand.grad.lpNorm<Eigen::Infinity>() < sol.gradient_norm;
      }
      if (ok) {
        std::swap(cur, cand);
        accepted = true;
        break;
      }
    }
    if (!accepted) return sol;
  }
}

LocalDualSolution fit_local_weight(int i, const Eigen::Ref<const Eigen::MatrixXd>& distances,
                                   const SieveDesign& design, double h, RhoFamily rho,
                                   const SolverOptions& options) {
  const auto n = design.matrix.rows();
  if (distances.rows() != n || distances.cols() != n) {
    throw Error(ErrorCategory::alignment, "distance matrix does not match the sieve design");
  }
  if (n < 2) throw Error(ErrorCategory::precondition, "leave-one-out set is empty");
  if (i < 0 || i >= n) throw Error(ErrorCategory::parameter, "observation index out of range");
  const Eigen::VectorXd w = kernel_weights(distances.col(i), h, i);
  const Eigen::VectorXd target =
      (design.matrix.colwise().sum().transpose() - design.matrix.row(i).transpose()) /
      static_cast<double>(n - 1);
  LocalDualSolution sol = solve_local_dual(design.matrix, w, target, rho, options);
  if (!sol.converged) {
    throw ConvergenceError("local dual at observation " + std::to_string(i) +
                               " did not converge (gradient sup-norm " +
                               std::to_string(sol.gradient_norm) + ")",
                           sol.gradient_norm);
  }
  return sol;
}

int WeightFit::failures() const noexcept {
  return static_cast<int>(std::count(converged.begin(), converged.end(), 0));
}

WeightFit estimate_weights(const Eigen::Ref<const Eigen::MatrixXd>& distances,
                           const SieveDesign& design, double h, RhoFamily rho,
                           const SolverOptions& options) {
  const int n = static_cast<int>(design.matrix.rows());
  if (distances.rows() != n || distances.cols() != n) {
    throw Error(ErrorCategory::alignment, "distance matrix does not match the sieve design");
  }
  if (n < 2) throw Error(ErrorCategory::precondition, "leave-one-out set is empty");
  if (!(h > 0.0)) throw Error(ErrorCategory::parameter, "bandwidth h must be positive");

  WeightFit fit;
  fit.h = h;
  fit.k = design.k;
  fit.rho = rho;
  fit.pi.resize(n);
  fit.raw_pi.resize(n);
  fit.eta.resize(n, design.k);
  fit.gradient_norm.resize(n);
  fit.iterations.resize(n);
  fit.converged.assign(static_cast<std::size_t>(n), 0);
  fit.clipped.assign(static_cast<std::size_t>(n), 0);

  const Eigen::VectorXd total = design.matrix.colwise().sum().transpose();
  parallel_for(n, [&](int i) {
    const Eigen::VectorXd w = kernel_weights(distances.col(i), h, i);
    const Eigen::VectorXd target =
        (total - design.matrix.row(i).transpose()) / static_cast<double>(n - 1);
    const LocalDualSolution sol = solve_local_dual(design.matrix, w, target, rho, options);
    const double raw = rho.first(design.matrix.row(i).dot(sol.eta));
    fit.eta.row(i) = sol.eta.transpose();
    fit.raw_pi[i] = raw;
    fit.pi[i] = clip_weight(raw);
    fit.clipped[static_cast<std::size_t>(i)] = fit.pi[i] != raw;
    fit.gradient_norm[i] = sol.gradient_norm;
    fit.iterations[i] = sol.iterations;
    fit.converged[static_cast<std::size_t>(i)] = sol.converged;
  });

  const int failed = fit.failures();
  if (failed > kMaxFailureShare * n) {
    std::string which;
    int listed = 0;
    for (int i = 0; i < n && listed < 5; ++i) {
      if (!fit.converged[static_cast<std::size_t>(i)]) {
        which += (listed++ ? ", " : "") + std::to_string(i);
      }
    }
    throw ConvergenceError(std::to_string(failed) + " of " + std::to_string(n) +
                               " local duals failed to converge (first: " + which + ")",
                           fit.gradient_norm.maxCoeff());
  }
  return fit;
}

WeightFit estimate_weights(const Dataset& data, double h, int k, RhoFamily rho,
                           const SolverOptions& options) {
  const Standardized st = standardize(data.x());
  const SieveDesign design = sieve_design(st.values, k);
  const Eigen::MatrixXd d = pairwise_distances(data.z());
  return estimate_weights(d, design, h, rho, options);
}

HeldOutWeights held_out_weights(const Eigen::Ref<const Eigen::MatrixXd>& distances,
                                const SieveDesign& train_design,
                                const Eigen::Ref<const Eigen::MatrixXd>& test_nu, double h,
                                RhoFamily rho, const SolverOptions& options) {
  const auto n_test = distances.rows();
  if (distances.cols() != train_design.matrix.rows() || test_nu.rows() != n_test ||
      test_nu.cols() != train_design.k) {
    throw Error(ErrorCategory::alignment, "held-out weight inputs have inconsistent shapes");
  }
  HeldOutWeights out;
  out.pi.resize(n_test);
  out.raw_pi.resize(n_test);
  out.converged.assign(static_cast<std::size_t>(n_test), 0);
  const Eigen::VectorXd target = train_design.matrix.colwise().mean().transpose();
  parallel_for(static_cast<int>(n_test), [&](int r) {
    const Eigen::VectorXd w = kernel_weights(distances.row(r).transpose(), h);
    const LocalDualSolution sol = solve_local_dual(train_design.matrix, w, target, rho, options);
    const double raw = rho.first(test_nu.row(r).dot(sol.eta));
    out.raw_pi[r] = raw;
    out.pi[r] = clip_weight(raw);
    out.converged[static_cast<std::size_t>(r)] = sol.converged;
  });
  return out;
}

}  // namespace fadrf
