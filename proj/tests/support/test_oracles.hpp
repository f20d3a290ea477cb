// Independent numerical oracles used only by tests. These deliberately take
// different algorithmic routes from the library code they check.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "imed/dataset.hpp"
#include "imed/math.hpp"

namespace imed::testing {

/// Dense Newton-Raphson for the (quasi-)binomial score equations, solved with
/// a full-pivot LU at each step. Independent of the library IRLS path.
inline Eigen::VectorXd newton_logistic(const Eigen::MatrixXd& X,
                                       const Eigen::VectorXd& y,
                                       const Eigen::VectorXd* w_in = nullptr,
                                       int max_iter = 200) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  Eigen::VectorXd w = w_in ? *w_in : Eigen::VectorXd::Ones(n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd mu(n), v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = expit(X.row(i).dot(beta));
      v[i] = w[i] * mu[i] * (1.0 - mu[i]);
    }
    const Eigen::VectorXd grad =
        X.transpose() * (w.array() * (y - mu).array()).matrix();
    const Eigen::MatrixXd hess = X.transpose() * v.asDiagonal() * X;
    const Eigen::VectorXd step = hess.fullPivLu().solve(grad);
    beta += step;
    if (grad.cwiseAbs().maxCoeff() < 1e-12 &&
        step.cwiseAbs().maxCoeff() < 1e-12) {
      break;
    }
  }
  return beta;
}

/// Weighted least squares through a column-pivoted QR of the scaled system.
inline Eigen::VectorXd qr_wls(const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y,
                              const Eigen::VectorXd* w_in = nullptr) {
  const Eigen::VectorXd w =
      w_in ? *w_in : Eigen::VectorXd::Ones(X.rows());
  const Eigen::MatrixXd Xw = w.array().sqrt().matrix().asDiagonal() * X;
  const Eigen::VectorXd yw = w.array().sqrt().matrix().asDiagonal() * y;
  return Xw.colPivHouseholderQr().solve(yw);
}

/// Sort-and-interpolate quantile written out directly.
inline double sort_quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double pos = p * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] * (1.0 - (pos - lo)) + v[lo + 1] * (pos - lo);
}

/// Minimal named-column row source for design-builder tests.
struct Frame {
  std::unordered_map<std::string, Eigen::VectorXd> data;
  Eigen::Index n = 0;

  void add(const std::string& name, std::vector<double> values) {
    n = static_cast<Eigen::Index>(values.size());
    data[name] = Eigen::Map<Eigen::VectorXd>(values.data(), n);
  }
  Eigen::Index rows() const { return n; }
  const Eigen::VectorXd& column(const std::string& name) const {
    return data.at(name);
  }
};

/// Two-mediator, one-covariate dataset assembled from column values.
inline ObservedDataset make_dataset(
    const std::vector<double>& y, const std::vector<double>& a,
    const std::vector<double>& m1, const std::vector<double>& m2,
    const std::vector<double>& l,
    VariableKind outcome_kind = VariableKind::continuous) {
  VariableSchema schema;
  schema.outcome_name = "y";
  schema.outcome_kind = outcome_kind;
  schema.exposure_name = "a";
  schema.mediator_names = {"m1", "m2"};
  schema.mediator_kinds = {VariableKind::continuous, VariableKind::continuous};
  schema.covariate_names = {"l"};
  auto vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()).eval();
  };
  return ObservedDataset(schema, {vec(y), vec(a), vec(m1), vec(m2), vec(l)});
}

}  // namespace imed::testing
