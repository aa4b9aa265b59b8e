#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "fadrf/errors.hpp"
#include "fadrf/fda_core.hpp"
#include "fadrf/simlab.hpp"
#include "oracles.hpp"
#include "properties.hpp"

using namespace fadrf;

namespace {

const double kPi = 3.14159265358979323846;

Eigen::VectorXd eval(const GridPtr& g, double (*f)(double)) {
  Eigen::VectorXd v(g->size());
  for (int j = 0; j < g->size(); ++j) v[j] = f(g->points()[j]);
  return v;
}

int category(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return static_cast<int>(e.category());
  }
  return -1;
}

}  // namespace

TEST_CASE("grid validation") {
  CHECK(category([] { Grid(Eigen::Vector3d(0, 0.5, 0.5)); }) == static_cast<int>(ErrorCategory::grid));
  CHECK(category([] { Grid(Eigen::Vector3d(0, 1, 0.5)); }) == static_cast<int>(ErrorCategory::grid));
  CHECK(category([] { Grid(Eigen::VectorXd::Zero(1)); }) == static_cast<int>(ErrorCategory::grid));
  CHECK(category([] { Grid(Eigen::Vector2d(0, NAN)); }) == static_cast<int>(ErrorCategory::grid));
  const GridPtr g = Grid::uniform(0, 1, 5);
  CHECK(g->weights().sum() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g->weights()[0] == doctest::Approx(0.125));
  CHECK(g->weights()[2] == doctest::Approx(0.25));
}

TEST_CASE("inner product examples") {
  const GridPtr g = Grid::uniform(0, 1, 101);
  const Eigen::VectorXd s = eval(g, [](double t) { return std::sqrt(2.0) * std::sin(2 * kPi * t); });
  CHECK(std::abs(inner_product(*g, s, s) - 1.0) < 1e-3);

  const Eigen::VectorXd one = Eigen::VectorXd::Ones(101);
  CHECK(inner_product(*g, one, 3.25 * one) == doctest::Approx(3.25).epsilon(1e-15));

  std::mt19937_64 rng(7);
  // Trapezoid error is about h^2/12 times the jump in f' across [0, 1], so
  // the coefficient of t^i is damped by (i+1)^2 to keep that jump small.
  std::uniform_real_distribution<double> ud(-1.0, 1.0);
  const GridPtr fine = Grid::uniform(0, 1, 201);
  auto poly = [](const std::vector<double>& c, double t) {
    double v = 0;
    for (int i = static_cast<int>(c.size()) - 1; i >= 0; --i) v = v * t + c[static_cast<std::size_t>(i)];
    return v;
  };
  auto derivative = [](const std::vector<double>& c) {
    std::vector<double> d;
    for (std::size_t i = 1; i < c.size(); ++i) d.push_back(static_cast<double>(i) * c[i]);
    return d;
  };
  auto product = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> c(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
    return c;
  };
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(6), b(6);
    for (int i = 0; i < 6; ++i) a[i] = ud(rng) / ((i + 1) * (i + 1)), b[i] = ud(rng) / ((i + 1) * (i + 1));
    Eigen::VectorXd f(201), h(201);
    for (int j = 0; j < 201; ++j) f[j] = poly(a, fine->points()[j]), h[j] = poly(b, fine->points()[j]);
    const double ref = oracle::simpson([&](double t) { return poly(a, t) * poly(b, t); }, 0.0, 1.0, 10000);
    const double got = inner_product(*fine, f, h);
    CHECK(std::abs(got - ref) < 1e-5);
  }
  // Undamped coefficients: the error equals the Euler-Maclaurin prediction.
  std::normal_distribution<double> nd;
  const double step = 1.0 / 200;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> a(6), b(6);
    for (int i = 0; i < 6; ++i) a[i] = nd(rng), b[i] = nd(rng);
    const std::vector<double> p = product(a, b), d1 = derivative(p), d3 = derivative(derivative(d1));
    Eigen::VectorXd f(201), h(201);
    for (int j = 0; j < 201; ++j) f[j] = poly(a, fine->points()[j]), h[j] = poly(b, fine->points()[j]);
    const double ref = oracle::simpson([&](double t) { return poly(p, t); }, 0.0, 1.0, 10000);
    const double predicted = step * step / 12 * (poly(d1, 1) - poly(d1, 0)) -
                             std::pow(step, 4) / 720 * (poly(d3, 1) - poly(d3, 0));
    CHECK(std::abs(inner_product(*fine, f, h) - ref - predicted) < 1e-9 * std::max(1.0, std::abs(ref)));
  }
}

TEST_CASE("inner product rejects mismatched grids") {
  const GridPtr a = Grid::uniform(0, 1, 11), b = Grid::uniform(0, 1, 12);
  const FunctionalSample f(a, Eigen::VectorXd::Ones(11)), h(b, Eigen::VectorXd::Ones(12));
  CHECK(category([&] { inner_product(f, h); }) == static_cast<int>(ErrorCategory::grid_mismatch));
  // Equal points on distinct grid objects are accepted.
  const GridPtr a2 = Grid::uniform(0, 1, 11);
  CHECK(inner_product(f, FunctionalSample(a2, Eigen::VectorXd::Ones(11))) == doctest::Approx(1.0));
}

TEST_CASE("mean function") {
  const GridPtr g = Grid::uniform(0, 1, 21);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(21, -3, 5);
  const std::vector<FunctionalSample> pair{FunctionalSample(g, v), FunctionalSample(g, -v)};
  CHECK(mean_function(pair).values().cwiseAbs().maxCoeff() == 0.0);
  const std::vector<FunctionalSample> copies(7, FunctionalSample(g, v * 0.1));
  CHECK((mean_function(copies).values() - v * 0.1).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(category([] { mean_function(std::vector<FunctionalSample>{}); }) ==
        static_cast<int>(ErrorCategory::empty_input));

  SimModel m;
  m.n = 2000;
  m.seed = 11;
  const SimulatedData d = generate(m);
  CHECK(mean_function(d.data.z()).values().cwiseAbs().maxCoeff() < 0.3);
}

TEST_CASE("fpca examples") {
  const GridPtr g = Grid::uniform(0, 1, 31);
  const Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(31, 0, 1).array().square();
  Eigen::MatrixXd same(5, 31);
  for (int i = 0; i < 5; ++i) same.row(i) = v.transpose();
  const FpcaModel flat = fpca(CurveSet(g, same), 3);
  CHECK(flat.eigenvalues.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(flat.positive_rank() == 0);

  Eigen::MatrixXd two(2, 31);
  two.row(0) = v.transpose();
  two.row(1) = (v.array() * -1.0 + 0.5).matrix().transpose();
  const FpcaModel m2 = fpca(CurveSet(g, two), 2);
  CHECK(m2.eigenvalues[0] > 0);
  CHECK(m2.eigenvalues[1] == 0.0);
  CHECK(m2.positive_rank() == 1);

  CHECK(category([&] { fpca(CurveSet(g, two), 3); }) == static_cast<int>(ErrorCategory::parameter));
  CHECK(category([&] { fpca(CurveSet(g, two), 0); }) == static_cast<int>(ErrorCategory::parameter));
  Eigen::MatrixXd bad = two;
  bad(1, 3) = NAN;
  CHECK(category([&] { fpca(CurveSet(g, bad), 1); }) == static_cast<int>(ErrorCategory::data));
}

TEST_CASE("fpca sign convention") {
  std::mt19937_64 rng(3);
  const GridPtr g = props::random_grid(rng, 40);
  const FpcaModel m = fpca(props::random_curves(rng, g, 30), 4);
  for (int j = 0; j < 4; ++j) {
    Eigen::Index at;
    m.eigenfunctions.col(j).cwiseAbs().maxCoeff(&at);
    CHECK(m.eigenfunctions(at, j) > 0);
  }
}

TEST_CASE("fpca recovers generator spectrum") {
  SimModel sm;
  sm.n = 2000;
  sm.seed = 5;
  const SimulatedData d = generate(sm);
  const FpcaModel m = fpca(d.data.z(), 6);
  const double truth[6] = {16, 12, 8, 4, 1, 0.5};
  for (int j = 0; j < 6; ++j) CHECK(std::abs(m.eigenvalues[j] / truth[j] - 1) < 0.1);
}

TEST_CASE("fpca matches an independent Jacobi decomposition") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const GridPtr g = props::random_grid(rng, 25);
    const CurveSet c = props::random_curves(rng, g, 40);
    const FpcaModel m = fpca(c, 4);
    const oracle::Fpca o = oracle::fpca(c.values(), oracle::trapezoid_weights(g->points()));
    for (int j = 0; j < 4; ++j) {
      CHECK(m.eigenvalues[j] == doctest::Approx(o.values[j]).epsilon(1e-9));
      const double d1 = (m.eigenfunctions.col(j) - o.functions.col(j)).cwiseAbs().maxCoeff();
      const double d2 = (m.eigenfunctions.col(j) + o.functions.col(j)).cwiseAbs().maxCoeff();
      CHECK(std::min(d1, d2) < 1e-6);
    }
  }
}

TEST_CASE("pc_scores examples") {
  std::mt19937_64 rng(23);
  const GridPtr g = Grid::uniform(0, 1, 51);
  const CurveSet c = props::random_curves(rng, g, 50);
  const FpcaModel m = fpca(c, 4);
  CHECK(pc_scores(m, m.mean).cwiseAbs().maxCoeff() < 1e-12);
  const FunctionalSample shifted(g, m.mean.values() + m.eigenfunctions.col(0));
  Eigen::VectorXd unit = Eigen::VectorXd::Zero(4);
  unit[0] = 1;
  CHECK((pc_scores(m, shifted) - unit).cwiseAbs().maxCoeff() < 1e-8);

  SimModel sm;
  sm.n = 100;
  const SimulatedData train = generate(sm);
  sm.seed = 99;
  const SimulatedData test = generate(sm);
  const FpcaModel mm = fpca(train.data.z(), 5);
  const Eigen::VectorXd w = oracle::trapezoid_weights(mm.grid()->points());
  for (int i = 0; i < 10; ++i) {
    const FunctionalSample z = test.data.z().curve(i);
    const Eigen::VectorXd s = pc_scores(mm, z);
    for (int j = 0; j < 5; ++j) {
      double ref = 0;
      for (int r = 0; r < w.size(); ++r) ref += w[r] * (z.values()[r] - mm.mean.values()[r]) * mm.eigenfunctions(r, j);
      CHECK(std::abs(s[j] - ref) < 1e-10);
    }
  }
  const FunctionalSample wrong(Grid::uniform(0, 1, 52), Eigen::VectorXd::Zero(52));
  CHECK(category([&] { pc_scores(m, wrong); }) == static_cast<int>(ErrorCategory::grid_mismatch));
}
