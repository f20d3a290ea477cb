#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "imed/dataset.hpp"
#include "imed/duplication.hpp"
#include "imed/effects.hpp"
#include "imed/glm.hpp"
#include "imed/mediators.hpp"

namespace imed {

enum class Method { iw, mc };

/// Structural recipe for the conditional mediator chain, expanded along the
/// factorization order. Keeping the recipe rather than literal term lists
/// lets the permutation sensitivity rebuild valid chains for any order.
struct ChainStructure {
  std::vector<TermSpec> covariate_terms;  // shared across all conditionals
  bool earlier_mains = true;              // M_k terms for earlier mediators
  bool earlier_pairwise = false;          // M_k*M_l products
  std::vector<std::string> interaction_moderators;  // adds M_k x mod products
};

struct EstimatorConfig {
  Method method = Method::mc;
  EffectModelSpec effect_spec;
  std::vector<ModeratorLevel> report_levels;  // default: all-zero level

  // Inverse weighting.
  std::vector<TermSpec> propensity_terms;  // default: covariate mains
  std::vector<std::string> chain_order;    // mediator names; default schema order
  ChainStructure chain;
  MarginalMethod marginal_method;
  std::optional<double> truncation_percentile;
  bool force_weights = false;

  // Monte Carlo.
  std::map<std::string, std::vector<TermSpec>> marginal_terms;  // default mains
  std::array<std::vector<TermSpec>, 2> outcome_terms;  // per exposure group
  int draws = 100;

  std::uint64_t seed = 0;
  int threads = 1;
};

/// Expands the chain recipe into per-position term lists for the given
/// mediator-name order.
std::vector<std::vector<TermSpec>> expand_chain_plan(
    const ChainStructure& chain, const std::vector<std::string>& order);

/// Inverse-weighting pipeline: propensity fit, exposure-group-specific
/// conditional chains, Table-1 duplication with counterfactual density-ratio
/// weights, and a weighted effect-model fit on the observed outcomes.
EffectEstimates estimate_iw(const ObservedDataset& data,
                            const EstimatorConfig& cfg);

/// Monte Carlo pipeline: exposure-group-specific outcome and marginal
/// mediator fits, Table-2 duplication with K-draw averaged imputed
/// responses, and an effect-model fit (fractional-response IRLS under the
/// logit link, since imputed responses live in (0,1)).
EffectEstimates estimate_mc(const ObservedDataset& data,
                            const EstimatorConfig& cfg);

EffectEstimates estimate(const ObservedDataset& data,
                         const EstimatorConfig& cfg);

/// The duplicated dataset an estimate would fit on; exposed for audit export
/// and weight diagnostics.
DuplicatedDataset build_duplicated(const ObservedDataset& data,
                                   const EstimatorConfig& cfg);

/// Levels reported by default: the all-zero level, then each moderator set
/// to one in turn.
std::vector<ModeratorLevel> default_levels(const EffectModelSpec& spec);

}  // namespace imed
