#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>

#include "imed/dataset.hpp"
#include "imed/effects.hpp"
#include "imed/estimators.hpp"

namespace imed {

/// Coefficients of a saturated linear two-mediator data-generating process
/// with one covariate: outcome mean saturated in (a, m1, m2, l), mediator
/// means saturated in (a, l), and a per-exposure conditional covariance
/// between the mediators.
struct LinearDgpCoefficients {
  // E(Y|a,m1,m2,l) terms.
  double b0 = 0, ba = 0, b1 = 0, b2 = 0, bl = 0;
  double ba1 = 0, ba2 = 0, b12 = 0, ba12 = 0;
  double bal = 0, b1l = 0, b2l = 0, b12l = 0, ba1l = 0, ba2l = 0, ba12l = 0;
  // E(M_s|a,l) = alpha[s][0] + alpha[s][1] a + alpha[s][2] l + alpha[s][3] al.
  std::array<std::array<double, 4>, 2> alpha{};
  // Conditional second moments given (A=a, L): constant in l.
  std::array<double, 2> var1{1.0, 1.0};
  std::array<double, 2> var2{1.0, 1.0};
  std::array<double, 2> cov12{0.0, 0.0};  // Sigma_12(a, l)
  double outcome_error_sd = 1.0;

  double mediator_mean(int s, int a, double l) const {
    return alpha[s][0] + alpha[s][1] * a + alpha[s][2] * l + alpha[s][3] * a * l;
  }
  double outcome_mean(int a, double m1, double m2, double l) const;
};

/// Closed-form interventional effects for the linear two-mediator process at
/// covariate value l: IE1, IE2, sumIE, jointIE, mutualIE, DE, TE. The
/// decomposition IE1 + IE2 + mutualIE = jointIE holds by construction.
std::map<std::string, double> closed_form_linear_effects(
    const LinearDgpCoefficients& c, double l);

/// A data-generating process together with its true model functions, enough
/// both to draw observed samples and to evaluate population truth by running
/// the Monte Carlo pipeline with the true models. All mediators are normal
/// given (A, L).
struct TrueDgp {
  VariableSchema schema;
  double outcome_error_sd = 0.0;  // identity-link outcome noise
  std::function<void(rng::Stream&, double*)> draw_covariates;
  std::function<double(const double*)> propensity;  // P(A=1|l)
  /// Joint structural draw of all mediators given (a, l).
  std::function<void(int, const double*, rng::Stream&, double*)> draw_mediators;
  /// True counterfactual marginal law of mediator s given (a, l).
  std::function<double(int, int, const double*)> marginal_mean;
  std::function<double(int, int, const double*)> marginal_var;
  /// True response-scale outcome mean h^a(m, l).
  std::function<double(int, const double*, const double*)> h;
};

/// A linear two-mediator process as a TrueDgp with L ~ N(0,1) and a
/// logistic-in-L exposure.
TrueDgp make_linear_dgp(const LinearDgpCoefficients& c,
                        double propensity_slope = 0.7, bool binary_covariate = false);

/// Draws an observed sample of size n; deterministic in (seed, subject).
ObservedDataset draw_dataset(const TrueDgp& dgp, Eigen::Index n,
                             std::uint64_t seed);

/// Population truth: generates N subjects, builds the Monte Carlo duplicated
/// data with the TRUE marginal laws and the TRUE outcome function, fits the
/// effect model, and returns the derived effects per level. For binary
/// outcomes this applies the link to subgroup means (fractional-response
/// fit), not the mean of link-transformed values.
std::map<std::string, double> population_truth(
    const TrueDgp& dgp, Eigen::Index N, const EffectModelSpec& effect_spec,
    const std::vector<ModeratorLevel>& levels, std::uint64_t seed,
    int draws = 100, int threads = 1);

}  // namespace imed
