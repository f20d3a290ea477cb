#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "imed/duplication.hpp"
#include "imed/glm.hpp"

namespace imed {

/// Marginal structural mean model for the potential outcomes indexed by the
/// hypothetical exposure levels and J. Its coefficients are the causal
/// effects: theta_s the indirect effect via mediator s, gamma1 the joint
/// indirect effect, gamma0 the direct effect, with per-moderator interaction
/// coefficients (theta_sc, gamma_0c, gamma_1c) carrying effect modification.
struct EffectModelSpec {
  Link link = Link::identity;
  int t = 1;
  std::vector<std::string> moderators;        // enter a^(s) x L interactions
  std::vector<std::string> confounder_mains;  // covariate main effects
  bool include_j_by_covariate = false;        // J x L columns
  bool alt_decomposition = false;  // adds the gamma01 a0*a1*1[equal]*J term

  /// Moderators must also appear as main effects.
  void validate() const;
};

/// Named effect-model coefficients.
struct EffectParameters {
  std::vector<std::string> names;
  Eigen::VectorXd values;

  double at(const std::string& name) const;
  bool has(const std::string& name) const;
};

/// A moderator-value assignment at which effects are reported. Missing
/// moderators are taken as zero.
using ModeratorLevel = std::map<std::string, double>;

struct DerivedEffects {
  ModeratorLevel level;
  std::string suffix;  // label suffix, "" at the all-zero level
  std::map<std::string, double> effects;  // IE1.., sumIE, jointIE, mutualIE, DE, TE
};

struct EffectEstimates {
  EffectParameters params;
  std::vector<DerivedEffects> derived;
  bool converged = true;

  /// Flat view: parameter names then "<effect><suffix>" labels.
  std::vector<std::pair<std::string, double>> flattened() const;
};

struct EffectDesign {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  Eigen::VectorXd w;
  std::vector<std::string> names;
};

/// Effect-model design over a duplicated dataset. Column order: intercept;
/// per mediator s the a^(s)(1-J) column followed by its moderator
/// interactions; J; a^(0)J and its moderator interactions; the joint-draw
/// column a^(1)1[all levels equal]J and its moderator interactions; the
/// optional gamma01 column; confounder mains; optional J x covariate columns.
EffectDesign build_effect_design(const DuplicatedDataset& dup,
                                 const EffectModelSpec& spec);

/// Canonical label suffix for a moderator level, e.g. "" or "_l2".
std::string level_suffix(const ModeratorLevel& level);

/// Reads the derived effects off the parameters at each requested level:
/// IE_s = theta_s + sum_c theta_sc * l_c, jointIE = gamma1 + ..., DE =
/// gamma0 + ..., sumIE, mutualIE = jointIE - sumIE, TE = DE + jointIE.
std::vector<DerivedEffects> derive_effects(
    const EffectParameters& params, const EffectModelSpec& spec,
    const std::vector<ModeratorLevel>& levels);

// ---------------------------------------------------------------------------
// Permutation sensitivity (implementation lives with the estimators).

struct EstimatorConfig;  // estimators.hpp

struct PermutationRun {
  std::vector<std::string> order;  // mediator names, staircase order
  EffectEstimates estimates;
  std::map<std::string, std::pair<double, double>> ci;  // label -> lo, up
};

struct PermutationRangeRow {
  std::string label;  // mediator name, optionally ":moderator"
  double est_min = 0.0, est_max = 0.0;
  double ci_lower_min = 0.0, ci_lower_max = 0.0;
  double ci_upper_min = 0.0, ci_upper_max = 0.0;
  bool has_ci = false;
};

struct PermutationReport {
  std::vector<PermutationRun> runs;
  std::vector<PermutationRangeRow> table;
};

/// Runs the configured estimator once per permutation of the mediator
/// indices (t! runs, t <= 6) and reports the per-mediator range of indirect
/// effect estimates, with bootstrap CI bounds when B > 0.
PermutationReport permutation_sensitivity(const ObservedDataset& data,
                                          const EstimatorConfig& cfg,
                                          int bootstrap_B = 0,
                                          double level = 0.95);

}  // namespace imed
