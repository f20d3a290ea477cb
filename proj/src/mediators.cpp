#include "imed/mediators.hpp"

#include <algorithm>
#include <cmath>

namespace imed {

namespace {

std::vector<TermSpec> validated_terms(
    const std::vector<TermSpec>& plan, const VariableSchema& schema,
    const std::vector<std::string>& allowed_mediators,
    const std::string& target) {
  for (const auto& term : plan) {
    for (const auto& f : term.factors) {
      const bool is_covariate =
          std::find(schema.covariate_names.begin(),
                    schema.covariate_names.end(),
                    f) != schema.covariate_names.end();
      const bool is_allowed_mediator =
          std::find(allowed_mediators.begin(), allowed_mediators.end(), f) !=
          allowed_mediators.end();
      if (!is_covariate && !is_allowed_mediator) {
        throw DataError("mediator model for '" + target +
                        "' references '" + f +
                        "' which is neither a covariate nor an earlier "
                        "mediator");
      }
    }
  }
  return with_intercept(plan);
}

ConditionalMediatorModel fit_conditional(const ObservedDataset& group_data,
                                         const VariableSchema& schema,
                                         int mediator_index,
                                         std::vector<TermSpec> terms) {
  const std::string& name = schema.mediator_names[mediator_index];
  ConditionalMediatorModel model;
  model.mediator = name;
  model.mediator_index = mediator_index;
  model.kind = schema.mediator_kinds[mediator_index] == VariableKind::binary
                   ? MediatorModelKind::bernoulli_logistic
                   : MediatorModelKind::normal_linear;
  GlmSpec spec;
  spec.response = name;
  spec.link = model.kind == MediatorModelKind::bernoulli_logistic
                  ? Link::logit
                  : Link::identity;
  spec.terms = std::move(terms);
  try {
    model.fit = fit_glm(group_data, spec);
  } catch (const EstimationError& e) {
    throw EstimationError("mediator '" + name + "': " + e.what());
  }
  if (model.kind == MediatorModelKind::normal_linear) {
    model.sigma2 = model.fit.residual_variance;
    if (!(model.sigma2 > 0.0)) {
      throw EstimationError("zero variance mediator '" + name + "'");
    }
  }
  model.compiled = compile_terms(model.fit.spec.terms, slot_names(schema));
  return model;
}

}  // namespace

std::vector<std::string> slot_names(const VariableSchema& schema) {
  std::vector<std::string> names = schema.covariate_names;
  names.insert(names.end(), schema.mediator_names.begin(),
               schema.mediator_names.end());
  return names;
}

double ConditionalMediatorModel::density(double value,
                                         const double* slots) const {
  const double lp = linear_predictor(slots);
  if (kind == MediatorModelKind::bernoulli_logistic) {
    const double p = expit(lp);
    return value != 0.0 ? p : 1.0 - p;
  }
  return normal_pdf(value, lp, sigma2);
}

double ConditionalMediatorModel::sample(const double* slots,
                                        rng::Stream& stream) const {
  const double lp = linear_predictor(slots);
  if (kind == MediatorModelKind::bernoulli_logistic) {
    return stream.next_bernoulli(expit(lp)) ? 1.0 : 0.0;
  }
  return lp + std::sqrt(sigma2) * stream.next_normal();
}

int MediatorChain::position_of(int mediator_index) const {
  for (std::size_t q = 0; q < order.size(); ++q) {
    if (order[q] == mediator_index) return static_cast<int>(q);
  }
  throw DataError("mediator index " + std::to_string(mediator_index) +
                  " not in chain order");
}

MediatorChain fit_chain(const ObservedDataset& data, int group,
                        const std::vector<int>& order,
                        const std::vector<std::vector<TermSpec>>& term_plan) {
  const VariableSchema& schema = data.schema();
  const int t = schema.t();
  if (static_cast<int>(order.size()) != t ||
      static_cast<int>(term_plan.size()) != t) {
    throw DataError("chain order and term plan must cover every mediator");
  }
  const auto rows = data.group_rows(group);
  if (rows.empty()) throw EstimationError("empty exposure group");
  const ObservedDataset group_data = select_rows(data, rows);

  MediatorChain chain;
  chain.group = group;
  chain.schema = schema;
  chain.order = order;
  std::vector<std::string> earlier;
  for (int q = 0; q < t; ++q) {
    const int s = order[q];
    if (s < 0 || s >= t) throw DataError("chain order index out of range");
    auto terms = validated_terms(term_plan[q], schema, earlier,
                                 schema.mediator_names[s]);
    chain.conditionals.push_back(
        fit_conditional(group_data, schema, s, std::move(terms)));
    earlier.push_back(schema.mediator_names[s]);
  }
  return chain;
}

namespace {

/// Fills slots as [l..., m...] for the schema layout.
void fill_slots(const VariableSchema& schema, const Eigen::VectorXd& l,
                const Eigen::VectorXd* m, std::vector<double>& slots) {
  const int p = schema.p();
  const int t = schema.t();
  if (l.size() != p) throw DataError("covariate vector has wrong length");
  slots.assign(p + t, 0.0);
  for (int c = 0; c < p; ++c) slots[c] = l[c];
  if (m) {
    if (m->size() != t) throw DataError("mediator vector has wrong length");
    for (int s = 0; s < t; ++s) slots[p + s] = (*m)[s];
  }
}

}  // namespace

double joint_density(const MediatorChain& chain, const Eigen::VectorXd& m,
                     const Eigen::VectorXd& l) {
  std::vector<double> slots;
  fill_slots(chain.schema, l, &m, slots);
  const int p = chain.schema.p();
  double density = 1.0;
  for (const auto& cond : chain.conditionals) {
    density *= cond.density(slots[p + cond.mediator_index], slots.data());
  }
  if (!std::isfinite(density)) {
    throw EstimationError("non-finite joint mediator density");
  }
  return density;
}

bool exact_marginal_valid(const MediatorChain& chain, int mediator_index) {
  const int q = chain.position_of(mediator_index);
  const int p = chain.schema.p();
  for (int j = 0; j <= q; ++j) {
    const auto& cond = chain.conditionals[j];
    const bool bernoulli = cond.kind == MediatorModelKind::bernoulli_logistic;
    if (bernoulli && j > 0) return false;
    for (const auto& slots : cond.compiled.factor_slots) {
      int mediator_factors = 0;
      for (int s : slots) {
        if (s >= p) ++mediator_factors;
      }
      if (bernoulli && mediator_factors > 0) return false;
      if (mediator_factors > 1) return false;  // products among mediators
    }
  }
  return true;
}

namespace {

/// Gaussian propagation along the chain prefix, conditional on an optional
/// Bernoulli root value. Returns mean and variance of the target position.
/// Covariate factors are folded into per-mediator linear coefficients, so a
/// M_k x L term contributes coefficient beta * prod(l) on M_k.
void propagate_linear(const MediatorChain& chain, int target_pos,
                      const std::vector<double>& cov_slots, int first_gaussian,
                      double root_mean, double root_var, double* out_mean,
                      double* out_var) {
  const int p = chain.schema.p();
  const int n = target_pos + 1;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  if (first_gaussian == 1) {
    mean[0] = root_mean;
    cov(0, 0) = root_var;
  }
  for (int j = first_gaussian; j <= target_pos; ++j) {
    const auto& cond = chain.conditionals[j];
    double c0 = 0.0;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    const auto& beta = cond.fit.coefficients;
    for (int termi = 0; termi < cond.compiled.size(); ++termi) {
      double coef = beta[termi];
      int med_pos = -1;
      for (int s : cond.compiled.factor_slots[termi]) {
        if (s < p) {
          coef *= cov_slots[s];
        } else {
          med_pos = chain.position_of(s - p);
        }
      }
      if (med_pos < 0) {
        c0 += coef;
      } else {
        c[med_pos] += coef;
      }
    }
    mean[j] = c0 + c.dot(mean);
    const Eigen::VectorXd cross = cov * c;  // Cov(M_j, M_i) for i < j
    for (int i = 0; i < j; ++i) {
      cov(j, i) = cross[i];
      cov(i, j) = cross[i];
    }
    cov(j, j) = cond.sigma2 + c.dot(cross);
  }
  *out_mean = mean[target_pos];
  *out_var = cov(target_pos, target_pos);
}

double exact_marginal_density(const MediatorChain& chain, int target_pos,
                              double value,
                              const std::vector<double>& cov_slots) {
  const auto& head = chain.conditionals[0];
  if (head.kind == MediatorModelKind::bernoulli_logistic) {
    const double prob = expit(head.linear_predictor(cov_slots.data()));
    if (target_pos == 0) {
      return value != 0.0 ? prob : 1.0 - prob;
    }
    // Two-component mixture over the root value.
    double density = 0.0;
    for (int r = 0; r < 2; ++r) {
      double mean = 0.0, var = 0.0;
      propagate_linear(chain, target_pos, cov_slots, 1,
                       static_cast<double>(r), 0.0, &mean, &var);
      density += (r == 1 ? prob : 1.0 - prob) * normal_pdf(value, mean, var);
    }
    return density;
  }
  double mean = 0.0, var = 0.0;
  propagate_linear(chain, target_pos, cov_slots, 0, 0.0, 0.0, &mean, &var);
  return normal_pdf(value, mean, var);
}

double mc_marginal_density(const MediatorChain& chain, int target_pos,
                           double value, std::vector<double>& slots, int draws,
                           rng::Stream& stream) {
  const int p = chain.schema.p();
  const auto& target = chain.conditionals[target_pos];
  double acc = 0.0;
  for (int k = 0; k < draws; ++k) {
    for (int j = 0; j < target_pos; ++j) {
      const auto& cond = chain.conditionals[j];
      slots[p + cond.mediator_index] = cond.sample(slots.data(), stream);
    }
    acc += target.density(value, slots.data());
  }
  return acc / draws;
}

}  // namespace

double implied_marginal_density(const MediatorChain& chain, int mediator_index,
                                double value, const Eigen::VectorXd& l,
                                const MarginalMethod& method,
                                rng::Stream& stream) {
  std::vector<double> slots;
  fill_slots(chain.schema, l, nullptr, slots);
  const int target_pos = chain.position_of(mediator_index);

  bool exact = false;
  switch (method.kind) {
    case MarginalMethodKind::exact_linear:
      if (!exact_marginal_valid(chain, mediator_index)) {
        throw DataError(
            "exact-linear marginal requested for a chain with unsupported "
            "structure (mediator '" +
            chain.schema.mediator_names[mediator_index] + "')");
      }
      exact = true;
      break;
    case MarginalMethodKind::monte_carlo:
      exact = false;
      break;
    case MarginalMethodKind::automatic:
      exact = exact_marginal_valid(chain, mediator_index);
      break;
  }

  const double density =
      exact ? exact_marginal_density(chain, target_pos, value, slots)
            : mc_marginal_density(chain, target_pos, value, slots,
                                  method.draws, stream);
  if (!std::isfinite(density) || density < 0.0) {
    throw EstimationError("non-finite implied marginal density");
  }
  return density;
}

MarginalModelSet fit_marginals(
    const ObservedDataset& data, int group,
    const std::vector<std::vector<TermSpec>>& term_plan) {
  const VariableSchema& schema = data.schema();
  const int t = schema.t();
  if (static_cast<int>(term_plan.size()) != t) {
    throw DataError("marginal term plan must cover every mediator");
  }
  const auto rows = data.group_rows(group);
  if (rows.empty()) throw EstimationError("empty exposure group");
  const ObservedDataset group_data = select_rows(data, rows);

  MarginalModelSet set;
  set.group = group;
  set.schema = schema;
  for (int s = 0; s < t; ++s) {
    auto terms = validated_terms(term_plan[s], schema, {},
                                 schema.mediator_names[s]);
    set.marginals.push_back(
        fit_conditional(group_data, schema, s, std::move(terms)));
  }
  return set;
}

double sample_marginal(const MarginalModelSet& set, int mediator_index,
                       const Eigen::VectorXd& l, rng::Stream& stream) {
  std::vector<double> slots;
  fill_slots(set.schema, l, nullptr, slots);
  return set.marginals[mediator_index].sample(slots.data(), stream);
}

}  // namespace imed
