#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "imed/dataset.hpp"
#include "imed/glm.hpp"
#include "imed/rng.hpp"

namespace imed {

enum class MediatorModelKind { normal_linear, bernoulli_logistic };

/// One conditional (or marginal) mediator model fit within an exposure group.
/// Terms are compiled against the slot layout [covariates..., mediators...]
/// of the originating schema so densities evaluate without name lookups.
struct ConditionalMediatorModel {
  std::string mediator;
  int mediator_index = 0;  // schema index
  MediatorModelKind kind = MediatorModelKind::normal_linear;
  FittedGlm fit;
  double sigma2 = 0.0;  // normal kind only
  CompiledTerms compiled;

  /// Linear predictor given a slot array.
  double linear_predictor(const double* slots) const {
    return compiled.dot(slots, fit.coefficients);
  }

  /// Conditional density (normal) or mass (Bernoulli) of `value`.
  double density(double value, const double* slots) const;

  /// Random draw given a slot array.
  double sample(const double* slots, rng::Stream& stream) const;
};

/// Exposure-group-specific factorization of the mediators' joint density.
/// `order` is the factorization order only; it does not assert any causal
/// ordering among the mediators.
struct MediatorChain {
  int group = 0;
  VariableSchema schema;
  std::vector<int> order;  // schema mediator indices, factorization order
  std::vector<ConditionalMediatorModel> conditionals;  // follows `order`

  int position_of(int mediator_index) const;
};

/// Directly-fit marginal models, one per mediator, regressors restricted to
/// baseline covariates.
struct MarginalModelSet {
  int group = 0;
  VariableSchema schema;
  std::vector<ConditionalMediatorModel> marginals;  // schema mediator order
};

/// Slot layout shared by all compiled mediator/outcome evaluations:
/// covariates first, then mediators.
std::vector<std::string> slot_names(const VariableSchema& schema);

/// Fits the conditional chain on rows with exposure == group. term_plan[q]
/// are the non-intercept terms of the conditional at position q of `order`
/// and may reference covariates and mediators strictly earlier in `order`.
MediatorChain fit_chain(const ObservedDataset& data, int group,
                        const std::vector<int>& order,
                        const std::vector<std::vector<TermSpec>>& term_plan);

/// Joint density of the mediator vector m (schema order) given covariates l.
double joint_density(const MediatorChain& chain, const Eigen::VectorXd& m,
                     const Eigen::VectorXd& l);

enum class MarginalMethodKind { exact_linear, monte_carlo, automatic };

struct MarginalMethod {
  MarginalMethodKind kind = MarginalMethodKind::automatic;
  int draws = 2000;  // monte_carlo only
};

/// True when every conditional upstream of (and including) mediator s is
/// either normal-linear with at most one mediator factor per term, or a
/// covariate-only Bernoulli root at the head of the chain.
bool exact_marginal_valid(const MediatorChain& chain, int mediator_index);

/// Marginal density of mediator s (schema index) implied by the chain,
/// unconditional on the other mediators. The exact-linear path propagates
/// means and variances through the Gaussian part of the chain, expanding a
/// Bernoulli root into a two-component mixture; the Monte Carlo path averages
/// the conditional density over sampled prefixes.
double implied_marginal_density(const MediatorChain& chain, int mediator_index,
                                double value, const Eigen::VectorXd& l,
                                const MarginalMethod& method,
                                rng::Stream& stream);

/// Fits covariate-only marginal models on rows with exposure == group.
MarginalModelSet fit_marginals(
    const ObservedDataset& data, int group,
    const std::vector<std::vector<TermSpec>>& term_plan);

/// Draws mediator s from its fitted marginal at covariates l.
double sample_marginal(const MarginalModelSet& set, int mediator_index,
                       const Eigen::VectorXd& l, rng::Stream& stream);

}  // namespace imed
