#include "doctest.h"

#include <random>

#include "fadrf/errors.hpp"
#include "fadrf/sieve.hpp"

using namespace fadrf;

namespace {

ErrorCategory category_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("no error raised");
  return ErrorCategory::io;
}

}  // namespace

TEST_CASE("standardize maps extremes to the unit interval") {
  Eigen::MatrixXd x(3, 2);
  x << 0, 5, 1, -2, 3, 7;
  const Standardized st = standardize(x);
  CHECK(st.values(0, 0) == -1.0);
  CHECK(st.values(2, 0) == 1.0);
  CHECK(st.values(1, 0) == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
  CHECK(st.values(1, 1) == -1.0);
  CHECK(st.values(2, 1) == 1.0);

  Eigen::MatrixXd outside(2, 2);
  outside << 9, 7, -9, -2;
  const Eigen::MatrixXd mapped = st.standardizer.apply(outside);
  CHECK(mapped(0, 0) == Standardizer::kClip);
  CHECK(mapped(1, 0) == -Standardizer::kClip);
  CHECK(mapped(0, 1) == 1.0);

  Eigen::MatrixXd flat(3, 1);
  flat << 2, 2, 2;
  CHECK(category_of([&] { standardize(flat); }) == ErrorCategory::degenerate_covariate);
}

TEST_CASE("legendre values") {
  const Eigen::VectorXd v = legendre_values(0.5, 3);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == 0.5);
  CHECK(v[2] == doctest::Approx(-0.125));
  CHECK(v[3] == doctest::Approx((5 * 0.125 - 1.5) / 2));
  const Eigen::VectorXd e = legendre_values(1.0, 6);
  CHECK((e.array() - 1.0).abs().maxCoeff() < 1e-14);
}

TEST_CASE("raw design row") {
  Eigen::MatrixXd x(1, 1);
  x << 0.5;
  const Eigen::MatrixXd raw = raw_legendre_design(x, 3);
  CHECK(raw(0, 0) == 1.0);
  CHECK(raw(0, 1) == 0.5);
  CHECK(raw(0, 2) == doctest::Approx(-0.125));

  Eigen::MatrixXd x2(1, 2);
  x2 << 0.5, -0.2;
  const Eigen::MatrixXd raw2 = raw_legendre_design(x2, 5);
  CHECK(raw2(0, 1) == 0.5);
  CHECK(raw2(0, 2) == -0.2);
  CHECK(raw2(0, 3) == doctest::Approx(-0.125));
  CHECK(raw2(0, 4) == doctest::Approx((3 * 0.04 - 1) / 2));
}

TEST_CASE("sieve validity") {
  CHECK(valid_sieve_size(1, 3));
  CHECK(valid_sieve_size(7, 3));
  CHECK_FALSE(valid_sieve_size(6, 3));
  CHECK_FALSE(valid_sieve_size(0, 1));
  Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 2);
  CHECK(category_of([&] { sieve_design(x, 4); }) == ErrorCategory::parameter);
  CHECK(category_of([&] { sieve_design(x, 7); }) == ErrorCategory::parameter);
}

TEST_CASE("collinear raw design is rejected") {
  // Two identical covariates give identical Legendre columns.
  Eigen::MatrixXd x(20, 2);
  x.col(0) = Eigen::VectorXd::LinSpaced(20, -1, 1);
  x.col(1) = x.col(0);
  CHECK(category_of([&] { sieve_design(x, 3); }) == ErrorCategory::collinearity);
}

TEST_CASE("orthonormal design") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1, 1);
  Eigen::MatrixXd x(200, 2);
  for (int i = 0; i < 200; ++i) x(i, 0) = u(rng), x(i, 1) = u(rng);
  const SieveDesign d = sieve_design(x, 5);
  const Eigen::MatrixXd gram = d.matrix.transpose() * d.matrix / 200.0;
  CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((d.evaluate(x) - d.matrix).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((d.matrix.col(0).array() - 1.0).abs().maxCoeff() < 1e-12);

  // Feeding an already orthonormal design back in leaves it unchanged.
  Eigen::MatrixXd grid(4, 1);
  grid << -1, -1.0 / 3, 1.0 / 3, 1;
  const SieveDesign base = sieve_design(grid, 2);
  CHECK(base.transform.rows() == 2);
  const Eigen::MatrixXd gram2 = base.matrix.transpose() * base.matrix / 4.0;
  CHECK((gram2 - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  const Eigen::MatrixXd raw = raw_legendre_design(grid, 2);
  const Eigen::VectorXd scale = (raw.transpose() * raw / 4.0).diagonal().cwiseSqrt();
  Eigen::MatrixXd normalized = raw;
  for (int c = 0; c < 2; ++c) normalized.col(c) /= scale[c];
  CHECK((base.matrix.cwiseAbs() - normalized.cwiseAbs()).cwiseAbs().maxCoeff() < 1e-12);
}
