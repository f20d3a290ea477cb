#include "imed/glm.hpp"

#include <algorithm>
#include <cmath>

namespace imed {

std::string TermSpec::name() const {
  if (factors.empty()) return "1";
  std::string out = factors[0];
  for (std::size_t i = 1; i < factors.size(); ++i) out += ":" + factors[i];
  return out;
}

bool TermSpec::same_as(const TermSpec& other) const {
  if (factors.size() != other.factors.size()) return false;
  std::vector<std::string> a = factors, b = other.factors;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return a == b;
}

std::vector<TermSpec> with_intercept(std::vector<TermSpec> terms) {
  std::vector<TermSpec> out;
  out.reserve(terms.size() + 1);
  out.push_back(TermSpec::intercept());
  for (auto& t : terms) out.push_back(std::move(t));
  for (std::size_t j = 0; j < out.size(); ++j) {
    std::vector<std::string> f = out[j].factors;
    std::sort(f.begin(), f.end());
    if (std::adjacent_find(f.begin(), f.end()) != f.end()) {
      throw DataError("term '" + out[j].name() + "' repeats a factor");
    }
    for (std::size_t k = j + 1; k < out.size(); ++k) {
      if (out[j].same_as(out[k])) {
        throw DataError("duplicate model term '" + out[j].name() + "'");
      }
    }
  }
  return out;
}

CompiledTerms compile_terms(const std::vector<TermSpec>& terms,
                            const std::vector<std::string>& slot_names) {
  CompiledTerms out;
  out.factor_slots.reserve(terms.size());
  for (const auto& term : terms) {
    std::vector<int> slots;
    slots.reserve(term.factors.size());
    for (const auto& f : term.factors) {
      auto it = std::find(slot_names.begin(), slot_names.end(), f);
      if (it == slot_names.end()) {
        throw DataError("unresolvable name '" + f + "' in term '" +
                        term.name() + "'");
      }
      slots.push_back(static_cast<int>(it - slot_names.begin()));
    }
    out.factor_slots.push_back(std::move(slots));
  }
  return out;
}

namespace {

constexpr double kRankTol = 1e-12;   // reciprocal condition threshold
constexpr double kQrFallback = 1e-8;
constexpr int kMaxIrls = 100;
constexpr double kIrlsTol = 1e-10;
constexpr double kSeparation = 30.0;

void check_weights(const Eigen::VectorXd& w) {
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (w[i] < 0.0 || !std::isfinite(w[i])) {
      throw DataError("negative or non-finite weight at row " +
                      std::to_string(i));
    }
  }
}

/// Reciprocal condition number of a symmetric PSD matrix via its spectrum.
/// Eigen's LDLT::rcond is a norm estimate and reports nonsense for singular
/// inputs, so the small k x k eigensolve is done directly.
double sym_rcond(const Eigen::MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A,
                                                    Eigen::EigenvaluesOnly);
  const double lo = std::max(0.0, es.eigenvalues().minCoeff());
  const double hi = es.eigenvalues().maxCoeff();
  return hi > 0.0 ? lo / hi : 0.0;
}

/// Solves (X'WX) b = X'Wz. LDLT first; QR on the scaled system when the
/// normal equations are ill conditioned.
Eigen::VectorXd solve_wls(const Eigen::MatrixXd& X, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& w) {
  const Eigen::MatrixXd Xw = w.array().sqrt().matrix().asDiagonal() * X;
  const Eigen::MatrixXd A = Xw.transpose() * Xw;
  const double rcond = sym_rcond(A);
  if (rcond > kQrFallback) {
    return Eigen::LDLT<Eigen::MatrixXd>(A).solve(X.transpose() *
                                                 (w.asDiagonal() * z));
  }
  if (rcond < kRankTol) {
    throw EstimationError("rank-deficient design (rcond " +
                          std::to_string(rcond) + ")");
  }
  const Eigen::VectorXd zw = w.array().sqrt().matrix().asDiagonal() * z;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
  return qr.solve(zw);
}

}  // namespace

FittedGlm fit_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd* w_in) {
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  if (y.size() != n) throw DataError("response length does not match design");
  if (n < k) throw EstimationError("fewer rows than coefficients");
  Eigen::VectorXd w = w_in ? *w_in : Eigen::VectorXd::Ones(n);
  check_weights(w);

  FittedGlm fit;
  fit.coefficients = solve_wls(X, y, w);
  if (!fit.coefficients.allFinite()) {
    throw EstimationError("least squares produced non-finite coefficients");
  }

  const Eigen::VectorXd resid = y - X * fit.coefficients;
  const double rss = (w.array() * resid.array().square()).sum();
  const Eigen::Index used = (w.array() > 0.0).count();
  const Eigen::Index df = used - k;
  fit.residual_variance = df > 0 ? std::max(0.0, rss / df) : 0.0;
  fit.converged = true;
  fit.iterations = 1;
  return fit;
}

FittedGlm fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd* w_in) {
  const Eigen::Index n_all = X.rows();
  const Eigen::Index k = X.cols();
  if (y.size() != n_all) throw DataError("response length does not match design");
  Eigen::VectorXd w_all = w_in ? *w_in : Eigen::VectorXd::Ones(n_all);
  check_weights(w_all);
  for (Eigen::Index i = 0; i < n_all; ++i) {
    if (w_all[i] > 0.0 && (y[i] < 0.0 || y[i] > 1.0)) {
      throw DataError("logit-link response outside [0,1] at row " +
                      std::to_string(i));
    }
  }

  // Drop zero-weight rows so they cannot contribute 0*inf terms.
  std::vector<Eigen::Index> keep;
  keep.reserve(n_all);
  for (Eigen::Index i = 0; i < n_all; ++i) {
    if (w_all[i] > 0.0) keep.push_back(i);
  }
  const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
  if (n < k) throw EstimationError("fewer weighted rows than coefficients");
  Eigen::MatrixXd Xk(n, k);
  Eigen::VectorXd yk(n), wk(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Xk.row(i) = X.row(keep[i]);
    yk[i] = y[keep[i]];
    wk[i] = w_all[keep[i]];
  }

  auto deviance = [&](const Eigen::VectorXd& eta) {
    double d = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double mu = expit(eta[i]);
      // 0*log(0) handled by clipping; constant terms in y are irrelevant.
      const double lm = std::log(std::max(mu, 1e-300));
      const double lm1 = std::log(std::max(1.0 - mu, 1e-300));
      d -= 2.0 * wk[i] * (yk[i] * lm + (1.0 - yk[i]) * lm1);
    }
    return d;
  };

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  double dev = deviance(eta);
  FittedGlm fit;
  fit.converged = false;

  int it = 0;
  for (; it < kMaxIrls; ++it) {
    Eigen::VectorXd mu(n), ww(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = expit(eta[i]);
      ww[i] = wk[i] * std::max(mu[i] * (1.0 - mu[i]), 1e-12);
    }
    const Eigen::VectorXd score = Xk.transpose() * (wk.array() * (yk - mu).array()).matrix();
    const Eigen::MatrixXd A = Xk.transpose() * (ww.asDiagonal() * Xk);
    if (sym_rcond(A) < kRankTol) {
      if (it == 0) {
        throw EstimationError("rank-deficient design in logistic fit");
      }
      break;  // working weights saturated late in a drifting fit
    }
    const Eigen::VectorXd step = Eigen::LDLT<Eigen::MatrixXd>(A).solve(score);

    // Half-step backtracking keeps the fractional-response fits stable.
    double scale = 1.0;
    Eigen::VectorXd beta_new, eta_new;
    double dev_new = 0.0;
    for (int h = 0; h < 32; ++h) {
      beta_new = beta + scale * step;
      eta_new = Xk * beta_new;
      dev_new = deviance(eta_new);
      if (dev_new <= dev + 1e-12 || !std::isfinite(dev_new)) break;
      scale *= 0.5;
    }
    const double delta = (scale * step).cwiseAbs().maxCoeff();
    beta = beta_new;
    eta = eta_new;
    dev = dev_new;
    if (delta < kIrlsTol) {
      fit.converged = true;
      ++it;
      break;
    }
  }

  if (beta.cwiseAbs().maxCoeff() > kSeparation) {
    if (!fit.converged) throw EstimationError("separation");
    // The step can also vanish because the scores underflow once a binary
    // response is fitted exactly; that is separation too.
    bool perfect = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool binary = yk[i] == 0.0 || yk[i] == 1.0;
      if (!binary || std::abs(yk[i] - expit(eta[i])) > 1e-8) {
        perfect = false;
        break;
      }
    }
    if (perfect) throw EstimationError("separation");
  }
  if (!beta.allFinite()) {
    throw EstimationError("logistic fit produced non-finite coefficients");
  }
  fit.coefficients = beta;
  fit.iterations = it;
  fit.residual_variance = 0.0;
  return fit;
}

double max_score(const FittedGlm& fit, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& y, const Eigen::VectorXd* w_in) {
  Eigen::VectorXd w = w_in ? *w_in : Eigen::VectorXd::Ones(X.rows());
  Eigen::VectorXd mu = X * fit.coefficients;
  if (fit.spec.link == Link::logit) {
    for (Eigen::Index i = 0; i < mu.size(); ++i) mu[i] = expit(mu[i]);
  }
  const Eigen::VectorXd score =
      X.transpose() * (w.array() * (y - mu).array()).matrix();
  return score.cwiseAbs().maxCoeff();
}

}  // namespace imed
