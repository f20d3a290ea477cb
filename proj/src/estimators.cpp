#include "imed/estimators.hpp"

#include <algorithm>

namespace imed {

namespace {

std::vector<TermSpec> covariate_mains(const VariableSchema& schema) {
  std::vector<TermSpec> terms;
  for (const auto& name : schema.covariate_names) terms.push_back(TermSpec{name});
  return terms;
}

std::vector<std::string> resolve_chain_order(const ObservedDataset& data,
                                             const EstimatorConfig& cfg) {
  if (cfg.chain_order.empty()) return data.schema().mediator_names;
  if (cfg.chain_order.size() != data.schema().mediator_names.size()) {
    throw DataError("chain order must list every mediator");
  }
  for (const auto& name : cfg.chain_order) {
    const auto& med = data.schema().mediator_names;
    if (std::find(med.begin(), med.end(), name) == med.end()) {
      throw DataError("chain order references unknown mediator '" + name + "'");
    }
  }
  return cfg.chain_order;
}

std::vector<int> order_indices(const VariableSchema& schema,
                               const std::vector<std::string>& order) {
  std::vector<int> idx;
  for (const auto& name : order) {
    const auto& med = schema.mediator_names;
    idx.push_back(static_cast<int>(
        std::find(med.begin(), med.end(), name) - med.begin()));
  }
  return idx;
}

EffectModelSpec resolved_effect_spec(const ObservedDataset& data,
                                     const EstimatorConfig& cfg) {
  EffectModelSpec spec = cfg.effect_spec;
  spec.t = data.schema().t();
  if (spec.confounder_mains.empty()) {
    // By default every baseline covariate enters as a main effect.
    spec.confounder_mains = data.schema().covariate_names;
  }
  spec.validate();
  return spec;
}

EffectEstimates fit_effect_model(const DuplicatedDataset& dup,
                                 const EffectModelSpec& spec,
                                 const std::vector<ModeratorLevel>& levels) {
  const EffectDesign design = build_effect_design(dup, spec);
  FittedGlm fit;
  if (spec.link == Link::identity) {
    fit = fit_least_squares(design.X, design.y, &design.w);
  } else {
    fit = fit_logistic(design.X, design.y, &design.w);
  }
  EffectEstimates out;
  out.params.names = design.names;
  out.params.values = fit.coefficients;
  out.converged = fit.converged;
  out.derived = derive_effects(out.params, spec, levels);
  return out;
}

std::vector<ModeratorLevel> resolve_levels(const EffectModelSpec& spec,
                                           const EstimatorConfig& cfg) {
  if (!cfg.report_levels.empty()) return cfg.report_levels;
  return default_levels(spec);
}

}  // namespace

std::vector<ModeratorLevel> default_levels(const EffectModelSpec& spec) {
  std::vector<ModeratorLevel> levels;
  levels.push_back({});
  for (const auto& mod : spec.moderators) {
    levels.push_back({{mod, 1.0}});
  }
  return levels;
}

std::vector<std::vector<TermSpec>> expand_chain_plan(
    const ChainStructure& chain, const std::vector<std::string>& order) {
  std::vector<std::vector<TermSpec>> plan;
  plan.reserve(order.size());
  for (std::size_t q = 0; q < order.size(); ++q) {
    std::vector<TermSpec> terms = chain.covariate_terms;
    std::vector<TermSpec> mediator_terms;
    if (chain.earlier_mains) {
      for (std::size_t k = 0; k < q; ++k) {
        mediator_terms.push_back(TermSpec{order[k]});
      }
    }
    if (chain.earlier_pairwise) {
      for (std::size_t k = 0; k < q; ++k) {
        for (std::size_t l = k + 1; l < q; ++l) {
          mediator_terms.push_back(TermSpec{order[k], order[l]});
        }
      }
    }
    for (const auto& term : mediator_terms) terms.push_back(term);
    for (const auto& mod : chain.interaction_moderators) {
      for (const auto& term : mediator_terms) {
        TermSpec interacted = term;
        interacted.factors.push_back(mod);
        terms.push_back(std::move(interacted));
      }
    }
    plan.push_back(std::move(terms));
  }
  return plan;
}

namespace {

DuplicatedDataset build_iw_duplicated(const ObservedDataset& data,
                                      const EstimatorConfig& cfg) {
  const VariableSchema& schema = data.schema();
  if (data.group_rows(0).empty() || data.group_rows(1).empty()) {
    throw EstimationError("empty exposure group");
  }

  GlmSpec pspec;
  pspec.response = schema.exposure_name;
  pspec.link = Link::logit;
  pspec.terms = with_intercept(cfg.propensity_terms.empty()
                                   ? covariate_mains(schema)
                                   : cfg.propensity_terms);
  FittedGlm propensity;
  try {
    propensity = fit_glm(data, pspec);
  } catch (const EstimationError& e) {
    throw EstimationError(std::string("propensity model: ") + e.what());
  }

  const auto order_names = resolve_chain_order(data, cfg);
  const auto order = order_indices(schema, order_names);
  ChainStructure chain_cfg = cfg.chain;
  if (chain_cfg.covariate_terms.empty()) {
    chain_cfg.covariate_terms = covariate_mains(schema);
  }
  const auto plan = expand_chain_plan(chain_cfg, order_names);
  std::array<MediatorChain, 2> chains = {fit_chain(data, 0, order, plan),
                                         fit_chain(data, 1, order, plan)};
  return build_iw_rows(data, propensity, chains, cfg.marginal_method,
                       rng::combine(cfg.seed, rng::domain::iw_marginal),
                       cfg.force_weights, cfg.truncation_percentile,
                       cfg.threads);
}

DuplicatedDataset build_mc_duplicated(const ObservedDataset& data,
                                      const EstimatorConfig& cfg) {
  const VariableSchema& schema = data.schema();
  if (data.group_rows(0).empty() || data.group_rows(1).empty()) {
    throw EstimationError("empty exposure group");
  }

  std::array<FittedGlm, 2> outcome_fits;
  for (int a = 0; a < 2; ++a) {
    GlmSpec ospec;
    ospec.response = schema.outcome_name;
    ospec.link = schema.outcome_kind == VariableKind::binary ? Link::logit
                                                             : Link::identity;
    std::vector<TermSpec> terms = cfg.outcome_terms[a];
    if (terms.empty()) {
      for (const auto& m : schema.mediator_names) terms.push_back(TermSpec{m});
      for (const auto& c : schema.covariate_names) terms.push_back(TermSpec{c});
    }
    ospec.terms = with_intercept(std::move(terms));
    const auto rows = data.group_rows(a);
    try {
      outcome_fits[a] = fit_glm(select_rows(data, rows), ospec);
    } catch (const EstimationError& e) {
      throw EstimationError("outcome model (group " + std::to_string(a) +
                            "): " + e.what());
    }
  }

  std::vector<std::vector<TermSpec>> marginal_plan;
  for (const auto& name : schema.mediator_names) {
    const auto it = cfg.marginal_terms.find(name);
    marginal_plan.push_back(it != cfg.marginal_terms.end()
                                ? it->second
                                : covariate_mains(schema));
  }
  std::array<MarginalModelSet, 2> marginals = {
      fit_marginals(data, 0, marginal_plan),
      fit_marginals(data, 1, marginal_plan)};

  return build_mc_rows(data, outcome_fits, marginals, cfg.draws,
                       rng::combine(cfg.seed, rng::domain::mc_draw),
                       cfg.threads);
}

}  // namespace

DuplicatedDataset build_duplicated(const ObservedDataset& data,
                                   const EstimatorConfig& cfg) {
  return cfg.method == Method::iw ? build_iw_duplicated(data, cfg)
                                  : build_mc_duplicated(data, cfg);
}

EffectEstimates estimate_iw(const ObservedDataset& data,
                            const EstimatorConfig& cfg) {
  if (cfg.method != Method::iw) throw DataError("config method is not iw");
  const EffectModelSpec spec = resolved_effect_spec(data, cfg);
  const DuplicatedDataset dup = build_iw_duplicated(data, cfg);
  return fit_effect_model(dup, spec, resolve_levels(spec, cfg));
}

EffectEstimates estimate_mc(const ObservedDataset& data,
                            const EstimatorConfig& cfg) {
  if (cfg.method != Method::mc) throw DataError("config method is not mc");
  const EffectModelSpec spec = resolved_effect_spec(data, cfg);
  const DuplicatedDataset dup = build_mc_duplicated(data, cfg);
  return fit_effect_model(dup, spec, resolve_levels(spec, cfg));
}

EffectEstimates estimate(const ObservedDataset& data,
                         const EstimatorConfig& cfg) {
  switch (cfg.method) {
    case Method::iw:
      return estimate_iw(data, cfg);
    case Method::mc:
      return estimate_mc(data, cfg);
  }
  throw DataError("unknown estimation method");
}

}  // namespace imed
