#include <doctest.h>

#include <cmath>

#include "imed/glm.hpp"
#include "imed/rng.hpp"
#include "support/test_oracles.hpp"

using namespace imed;
using imed::testing::Frame;

TEST_SUITE_BEGIN("glm");

TEST_CASE("build_design: intercept and product columns") {
  Frame frame;
  frame.add("m1", {1, 2, 4});
  frame.add("m2", {3, 4, 5});

  const auto ones = build_design(frame, {TermSpec::intercept()});
  CHECK(ones.rows() == 3);
  CHECK(ones.cols() == 1);
  CHECK(ones.col(0).isOnes());

  const auto prod = build_design(frame, {TermSpec{"m1", "m2"}});
  CHECK(prod(0, 0) == 3);
  CHECK(prod(1, 0) == 8);
  CHECK(prod(2, 0) == 20);

  CHECK_THROWS_AS(build_design(frame, {TermSpec{"missing"}}), DataError);
}

TEST_CASE("with_intercept rejects duplicate terms") {
  CHECK_THROWS_AS(with_intercept({TermSpec{"m1", "m2"}, TermSpec{"m2", "m1"}}),
                  DataError);
  CHECK_THROWS_AS(with_intercept({TermSpec{"m1", "m1"}}), DataError);
}

TEST_CASE("least squares: intercept-only mean and variance") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  Eigen::VectorXd y(3);
  y << 1, 2, 3;
  const auto fit = fit_least_squares(X, y);
  CHECK(fit.coefficients[0] == doctest::Approx(2.0));
  CHECK(fit.residual_variance == doctest::Approx(1.0));
}

TEST_CASE("least squares: exact interpolation has zero residual variance") {
  Eigen::MatrixXd X(2, 2);
  X << 1, 0, 1, 1;
  Eigen::VectorXd y(2);
  y << 0, 1;
  const auto fit = fit_least_squares(X, y);
  CHECK(fit.coefficients[0] == doctest::Approx(0.0));
  CHECK(fit.coefficients[1] == doctest::Approx(1.0));
  CHECK(fit.residual_variance == doctest::Approx(0.0));
}

TEST_CASE("least squares: weighted mean") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd y(2), w(2);
  y << 0, 1;
  w << 1, 3;
  const auto fit = fit_least_squares(X, y, &w);
  CHECK(fit.coefficients[0] == doctest::Approx(0.75));
}

TEST_CASE("least squares rejects negative weights and rank deficiency") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(3, 1);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd w(3);
  w << 1, -1, 1;
  CHECK_THROWS_AS(fit_least_squares(X, y, &w), DataError);

  Eigen::MatrixXd Xd(3, 2);
  Xd << 1, 2, 1, 2, 1, 2;  // collinear
  CHECK_THROWS_AS(fit_least_squares(Xd, y), EstimationError);
}

TEST_CASE("logistic: intercept-only fits the logit of the mean") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Ones(4, 1);
  Eigen::VectorXd y(4);
  y << 0, 1, 0, 1;
  CHECK(fit_logistic(X, y).coefficients[0] == doctest::Approx(0.0));

  y << 1, 1, 1, 0;
  CHECK(fit_logistic(X, y).coefficients[0] ==
        doctest::Approx(1.0986122886681098).epsilon(1e-9));

  Eigen::MatrixXd X2 = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd frac(2);
  frac << 0.2, 0.4;
  CHECK(fit_logistic(X2, frac).coefficients[0] ==
        doctest::Approx(logit(0.3)).epsilon(1e-12));
}

TEST_CASE("logistic matches the independent Newton oracle") {
  auto stream = rng::stream(2024, {});
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 20 + static_cast<int>(stream.next_index(31));
    const int k = 1 + static_cast<int>(stream.next_index(4));
    Eigen::MatrixXd X(n, k);
    X.col(0).setOnes();
    for (int j = 1; j < k; ++j) {
      for (int i = 0; i < n; ++i) X(i, j) = stream.next_normal();
    }
    Eigen::VectorXd beta_true(k);
    for (int j = 0; j < k; ++j) beta_true[j] = 0.5 * stream.next_normal();
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      y[i] = stream.next_bernoulli(expit(X.row(i).dot(beta_true))) ? 1.0 : 0.0;
    }
    FittedGlm fit;
    Eigen::VectorXd oracle;
    try {
      fit = fit_logistic(X, y);
      oracle = imed::testing::newton_logistic(X, y);
    } catch (const EstimationError&) {
      continue;  // separated draw; both sides reject
    }
    if (!fit.converged) continue;
    CHECK((fit.coefficients - oracle).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("least squares matches the QR oracle") {
  auto stream = rng::stream(99, {});
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 10 + static_cast<int>(stream.next_index(40));
    const int k = 1 + static_cast<int>(stream.next_index(4));
    Eigen::MatrixXd X(n, k);
    X.col(0).setOnes();
    for (int j = 1; j < k; ++j) {
      for (int i = 0; i < n; ++i) X(i, j) = stream.next_normal();
    }
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y[i] = stream.next_normal();
    const auto fit = fit_least_squares(X, y);
    const auto oracle = imed::testing::qr_wls(X, y);
    CHECK((fit.coefficients - oracle).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("logistic score equations vanish at the fit") {
  auto stream = rng::stream(31, {});
  const int n = 80;
  Eigen::MatrixXd X(n, 3);
  X.col(0).setOnes();
  for (int i = 0; i < n; ++i) {
    X(i, 1) = stream.next_normal();
    X(i, 2) = stream.next_uniform();
  }
  Eigen::VectorXd y(n), w(n);
  for (int i = 0; i < n; ++i) {
    y[i] = stream.next_bernoulli(expit(0.3 * X(i, 1))) ? 1.0 : 0.0;
    w[i] = 0.5 + stream.next_uniform();
  }
  auto fit = fit_logistic(X, y, &w);
  fit.spec.link = Link::logit;
  CHECK(max_score(fit, X, y, &w) < 1e-8);
}

TEST_CASE("rescaling weights leaves coefficients unchanged") {
  auto stream = rng::stream(55, {});
  const int n = 60;
  Eigen::MatrixXd X(n, 2);
  X.col(0).setOnes();
  for (int i = 0; i < n; ++i) X(i, 1) = stream.next_normal();
  Eigen::VectorXd y(n), w(n);
  for (int i = 0; i < n; ++i) {
    y[i] = stream.next_normal();
    w[i] = stream.next_uniform() + 0.1;
  }
  const Eigen::VectorXd w10 = 10.0 * w;
  const auto a = fit_least_squares(X, y, &w);
  const auto b = fit_least_squares(X, y, &w10);
  CHECK((a.coefficients - b.coefficients).cwiseAbs().maxCoeff() < 1e-10);

  Eigen::VectorXd yb(n);
  for (int i = 0; i < n; ++i) yb[i] = stream.next_bernoulli(0.4) ? 1.0 : 0.0;
  const auto c = fit_logistic(X, yb, &w);
  const auto d = fit_logistic(X, yb, &w10);
  CHECK((c.coefficients - d.coefficients).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("predict on both scales") {
  Frame frame;
  frame.add("x", {1, 1});

  FittedGlm ident;
  ident.spec.link = Link::identity;
  ident.spec.terms = {TermSpec::intercept()};
  ident.coefficients = Eigen::VectorXd::Constant(1, 2.0);
  CHECK(predict(ident, frame, PredictScale::response)[0] == doctest::Approx(2.0));

  FittedGlm logi;
  logi.spec.link = Link::logit;
  logi.spec.terms = {TermSpec::intercept()};
  logi.coefficients = Eigen::VectorXd::Zero(1);
  CHECK(predict(logi, frame, PredictScale::response)[0] == doctest::Approx(0.5));

  FittedGlm two;
  two.spec.link = Link::logit;
  two.spec.terms = {TermSpec::intercept(), TermSpec{"x"}};
  two.coefficients = Eigen::VectorXd::Ones(2);
  CHECK(predict(two, frame, PredictScale::link)[0] == doctest::Approx(2.0));
  CHECK(predict(two, frame, PredictScale::response)[0] ==
        doctest::Approx(0.88079707797788).epsilon(1e-9));
}

TEST_CASE("perfect separation raises an error") {
  Eigen::MatrixXd X(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = i < 3 ? -1.0 - 0.1 * i : 1.0 + 0.1 * i;
    y[i] = i < 3 ? 0.0 : 1.0;
  }
  CHECK_THROWS_WITH_AS(fit_logistic(X, y), doctest::Contains("separation"),
                       EstimationError);
}

TEST_SUITE_END();
