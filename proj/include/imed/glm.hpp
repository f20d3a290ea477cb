#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "imed/error.hpp"
#include "imed/math.hpp"

namespace imed {

enum class Link { identity, logit };

/// One model term: the elementwise product of the named columns. An empty
/// factor list is the intercept.
struct TermSpec {
  std::vector<std::string> factors;

  TermSpec() = default;
  TermSpec(std::initializer_list<std::string> f) : factors(f) {}
  explicit TermSpec(std::vector<std::string> f) : factors(std::move(f)) {}

  static TermSpec intercept() { return TermSpec{}; }
  bool is_intercept() const { return factors.empty(); }

  /// Canonical display name, e.g. "1" or "m1:m2".
  std::string name() const;

  /// Factor-set equality (order insensitive).
  bool same_as(const TermSpec& other) const;
};

struct GlmSpec {
  std::string response;
  Link link = Link::identity;
  std::vector<TermSpec> terms;  // including the intercept, in column order
  std::optional<std::string> weight_column;
};

/// A fitted regression. The score equations X'W(y - mu) = 0 hold at the
/// reported coefficients to 1e-8 in the max norm.
struct FittedGlm {
  GlmSpec spec;
  Eigen::VectorXd coefficients;
  double residual_variance = 0.0;  // identity link only; denominator n - k
  bool converged = true;
  int iterations = 0;
};

/// Prepends an intercept and validates that no term repeats and no term
/// carries a duplicate factor.
std::vector<TermSpec> with_intercept(std::vector<TermSpec> terms);

/// Design matrix builder. The row source must expose
///   Eigen::Index rows() const and const Eigen::VectorXd& column(name) const.
template <class Source>
Eigen::MatrixXd build_design(const Source& source,
                             const std::vector<TermSpec>& terms) {
  const Eigen::Index n = source.rows();
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(terms.size()));
  for (std::size_t j = 0; j < terms.size(); ++j) {
    Eigen::VectorXd col = Eigen::VectorXd::Ones(n);
    for (const auto& f : terms[j].factors) col.array() *= source.column(f).array();
    X.col(j) = col;
  }
  return X;
}

/// Weighted least squares via normal equations (LDLT), falling back to a
/// column-pivoted QR of the sqrt(w)-scaled system when the normal equations
/// are ill conditioned. Throws EstimationError on rank deficiency and
/// DataError on a negative weight.
FittedGlm fit_least_squares(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            const Eigen::VectorXd* w = nullptr);

/// Logistic IRLS solving the quasi-binomial score equations X'W(y - mu) = 0;
/// responses may be fractional in [0,1]. Starts at beta = 0 with half-step
/// backtracking when the deviance increases. Rows with zero weight are
/// excluded from the working set.
FittedGlm fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd* w = nullptr);

enum class PredictScale { link, response };

template <class Source>
Eigen::VectorXd predict(const FittedGlm& fit, const Source& source,
                        PredictScale scale) {
  const Eigen::MatrixXd X = build_design(source, fit.spec.terms);
  Eigen::VectorXd eta = X * fit.coefficients;
  if (scale == PredictScale::response && fit.spec.link == Link::logit) {
    for (Eigen::Index i = 0; i < eta.size(); ++i) eta[i] = expit(eta[i]);
  }
  return eta;
}

/// Fits `spec` against any row source holding the referenced columns.
template <class Source>
FittedGlm fit_glm(const Source& source, const GlmSpec& spec) {
  const Eigen::MatrixXd X = build_design(source, spec.terms);
  const Eigen::VectorXd& y = source.column(spec.response);
  const Eigen::VectorXd* w = nullptr;
  Eigen::VectorXd weights;
  if (spec.weight_column) {
    weights = source.column(*spec.weight_column);
    w = &weights;
  }
  FittedGlm fit = spec.link == Link::identity ? fit_least_squares(X, y, w)
                                              : fit_logistic(X, y, w);
  fit.spec = spec;
  return fit;
}

/// Max absolute component of X'W(y - mu); used by tests to verify fits.
double max_score(const FittedGlm& fit, const Eigen::MatrixXd& X,
                 const Eigen::VectorXd& y, const Eigen::VectorXd* w = nullptr);

// Fast single-row term evaluation against a flat slot array. Compiling a term
// list against a slot layout removes string lookups from the hot loops of the
// Monte Carlo imputation and density evaluation paths.
struct CompiledTerms {
  std::vector<std::vector<int>> factor_slots;

  int size() const { return static_cast<int>(factor_slots.size()); }

  double dot(const double* slots, const Eigen::VectorXd& beta) const {
    double acc = 0.0;
    for (std::size_t j = 0; j < factor_slots.size(); ++j) {
      double term = beta[static_cast<Eigen::Index>(j)];
      for (int s : factor_slots[j]) term *= slots[s];
      acc += term;
    }
    return acc;
  }
};

CompiledTerms compile_terms(const std::vector<TermSpec>& terms,
                            const std::vector<std::string>& slot_names);

}  // namespace imed
