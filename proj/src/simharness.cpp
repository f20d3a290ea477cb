#include "imed/simharness.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "imed/inference.hpp"
#include "imed/math.hpp"
#include "imed/parallel.hpp"
#include "imed/stats.hpp"

namespace imed {

std::string to_string(StudyEstimator e) {
  switch (e) {
    case StudyEstimator::iw:
      return "iw";
    case StudyEstimator::mc:
      return "mc";
    case StudyEstimator::mc_misspecified:
      return "mc-misspecified";
  }
  return "?";
}

TrueDgp make_study_dgp(int study, const StudyParams& params) {
  const double b1 = params.b1, e21 = params.e21, a2 = params.a2;
  TrueDgp dgp;
  dgp.schema.exposure_name = "a";
  dgp.schema.outcome_name = "y";
  dgp.schema.mediator_names = {"m1", "m2"};
  dgp.schema.mediator_kinds = {VariableKind::continuous,
                               VariableKind::continuous};

  if (study == 1) {
    dgp.schema.outcome_kind = VariableKind::binary;
    dgp.schema.covariate_names = {"l"};
    dgp.draw_covariates = [](rng::Stream& s, double* l) {
      l[0] = s.next_normal();
    };
    dgp.propensity = [](const double* l) { return expit(0.7 * l[0]); };
    dgp.draw_mediators = [a2, e21](int a, const double* l, rng::Stream& s,
                                   double* m) {
      m[0] = a - 2.0 * l[0] + s.next_normal();
      m[1] = a2 * a + e21 * m[0] + l[0] + s.next_normal();
    };
    dgp.marginal_mean = [a2, e21](int s, int a, const double* l) {
      const double mu1 = a - 2.0 * l[0];
      return s == 0 ? mu1 : a2 * a + e21 * mu1 + l[0];
    };
    dgp.marginal_var = [e21](int s, int, const double*) {
      return s == 0 ? 1.0 : 1.0 + e21 * e21;
    };
    dgp.h = [b1](int, const double* m, const double* l) {
      return expit(b1 * m[0] + m[1] + l[0]);
    };
    return dgp;
  }

  if (study != 2 && study != 3) {
    throw DataError("unknown study " + std::to_string(study));
  }

  dgp.schema.covariate_names = {"l1", "l2"};
  dgp.schema.moderator_names = {"l2"};
  dgp.draw_covariates = [](rng::Stream& s, double* l) {
    l[0] = s.next_normal();
    l[1] = s.next_bernoulli(0.1) ? 1.0 : 0.0;
  };
  dgp.propensity = [](const double* l) { return expit(0.7 * l[1]); };

  if (study == 2) {
    dgp.schema.outcome_kind = VariableKind::continuous;
    dgp.outcome_error_sd = 1.0;
    dgp.draw_mediators = [a2, e21](int a, const double* l, rng::Stream& s,
                                   double* m) {
      m[0] = a * l[1] - l[1] + l[0] + s.next_normal();
      m[1] = a2 * a + e21 * m[0] + l[0] + l[1] + s.next_normal();
    };
    dgp.marginal_mean = [a2, e21](int s, int a, const double* l) {
      const double mu1 = a * l[1] - l[1] + l[0];
      return s == 0 ? mu1 : a2 * a + e21 * mu1 + l[0] + l[1];
    };
    dgp.marginal_var = [e21](int s, int, const double*) {
      return s == 0 ? 1.0 : 1.0 + e21 * e21;
    };
    dgp.h = [b1](int, const double* m, const double* l) {
      return b1 * m[0] + m[1] + l[0] + l[1];
    };
    return dgp;
  }

  // Study 3: exposure-mediator interaction in the M2 model and a
  // mediator-mediator interaction in the outcome.
  dgp.schema.outcome_kind = VariableKind::binary;
  dgp.draw_mediators = [a2, e21](int a, const double* l, rng::Stream& s,
                                 double* m) {
    m[0] = a * l[1] - l[1] + l[0] + s.next_normal();
    m[1] = a2 * a * m[0] + e21 * m[0] + l[0] + l[1] + s.next_normal();
  };
  dgp.marginal_mean = [a2, e21](int s, int a, const double* l) {
    const double mu1 = a * l[1] - l[1] + l[0];
    if (s == 0) return mu1;
    return (a2 * a + e21) * mu1 + l[0] + l[1];
  };
  dgp.marginal_var = [a2, e21](int s, int a, const double*) {
    if (s == 0) return 1.0;
    const double slope = a2 * a + e21;
    return slope * slope + 1.0;
  };
  dgp.h = [b1](int, const double* m, const double* l) {
    return expit(b1 * m[0] + m[1] - 0.4 * m[0] * m[1] + l[0] + l[1]);
  };
  return dgp;
}

ObservedDataset generate_study(int study, Eigen::Index n,
                               const StudyParams& params, std::uint64_t seed) {
  return draw_dataset(make_study_dgp(study, params), n, seed);
}

EstimatorConfig study_estimator_config(int study, StudyEstimator estimator) {
  EstimatorConfig cfg;
  cfg.method = estimator == StudyEstimator::iw ? Method::iw : Method::mc;
  cfg.draws = 100;

  if (study == 1) {
    cfg.effect_spec.link = Link::logit;
    cfg.effect_spec.confounder_mains = {"l"};
    cfg.propensity_terms = {TermSpec{"l"}};
    // The factorization deliberately uses the reversed ordering; the chain
    // does not assert any causal ordering among the mediators.
    cfg.chain_order = {"m2", "m1"};
    cfg.chain.covariate_terms = {TermSpec{"l"}};
    cfg.marginal_terms["m1"] = {TermSpec{"l"}};
    cfg.marginal_terms["m2"] = {TermSpec{"l"}};
    for (int a = 0; a < 2; ++a) {
      cfg.outcome_terms[a] = {TermSpec{"m1"}, TermSpec{"m2"}, TermSpec{"l"}};
    }
    return cfg;
  }
  if (study != 2 && study != 3) {
    throw DataError("unknown study " + std::to_string(study));
  }

  cfg.effect_spec.link = study == 2 ? Link::identity : Link::logit;
  cfg.effect_spec.moderators = {"l2"};
  cfg.effect_spec.confounder_mains = {"l1", "l2"};
  cfg.propensity_terms = {TermSpec{"l1"}, TermSpec{"l2"}};
  cfg.chain_order = {"m1", "m2"};
  cfg.chain.covariate_terms = {TermSpec{"l1"}, TermSpec{"l2"}};
  cfg.chain.interaction_moderators = {"l2"};
  cfg.marginal_terms["m1"] = {TermSpec{"l1"}, TermSpec{"l2"}};
  cfg.marginal_terms["m2"] = {TermSpec{"l1"}, TermSpec{"l2"}};
  for (int a = 0; a < 2; ++a) {
    std::vector<TermSpec> terms = {TermSpec{"m1"}, TermSpec{"m2"},
                                   TermSpec{"m1", "l2"}, TermSpec{"m2", "l2"}};
    if (study == 3 && estimator != StudyEstimator::mc_misspecified) {
      terms.push_back(TermSpec{"m1", "m2"});
      terms.push_back(TermSpec{"m1", "m2", "l2"});
    }
    terms.push_back(TermSpec{"l1"});
    terms.push_back(TermSpec{"l2"});
    cfg.outcome_terms[a] = terms;
  }
  return cfg;
}

StudyResults run_study(const StudyConfig& cfg) {
  if (cfg.replicates < 2) throw DataError("run_study needs replicates >= 2");
  StudyResults results;
  results.config = cfg;

  const TrueDgp dgp = make_study_dgp(cfg.study, cfg.params);
  EffectModelSpec spec = study_estimator_config(cfg.study, StudyEstimator::mc)
                             .effect_spec;
  spec.t = dgp.schema.t();
  const auto levels = default_levels(spec);
  const auto truth = population_truth(
      dgp, cfg.truth_population, spec, levels,
      rng::combine(cfg.seed, rng::domain::truth), cfg.draws, cfg.threads);

  for (const StudyEstimator est : cfg.estimators) {
    EstimatorConfig est_cfg = study_estimator_config(cfg.study, est);
    est_cfg.draws = cfg.draws;
    est_cfg.report_levels = levels;

    struct RepResult {
      bool ok = false;
      std::map<std::string, double> effects;
      std::map<std::string, int> covered;
    };
    std::vector<RepResult> reps(cfg.replicates);

    parallel_for(cfg.replicates, cfg.threads, [&](std::int64_t r) {
      try {
        const std::uint64_t rep_seed =
            rng::combine(rng::combine(cfg.seed, rng::domain::replicate),
                         static_cast<std::uint64_t>(r));
        const ObservedDataset data =
            generate_study(cfg.study, cfg.n, cfg.params, rep_seed);
        EstimatorConfig run_cfg = est_cfg;
        run_cfg.threads = 1;
        run_cfg.seed = rng::combine(rep_seed, rng::hash_name(to_string(est)));
        RepResult& out = reps[r];
        if (cfg.bootstrap_B > 0) {
          const BootstrapReport boot =
              bootstrap(data, run_cfg, cfg.bootstrap_B, cfg.level,
                        rng::combine(run_cfg.seed, rng::domain::bootstrap));
          for (const auto& [label, value] : truth) {
            out.effects[label] = boot.point_of(label);
            const auto [lo, up] = boot.ci_of(label);
            out.covered[label] = (value >= lo && value <= up) ? 1 : 0;
          }
        } else {
          const EffectEstimates fit = estimate(data, run_cfg);
          for (const auto& d : fit.derived) {
            for (const auto& [name, value] : d.effects) {
              out.effects[name + d.suffix] = value;
            }
          }
        }
        out.ok = true;
      } catch (const std::exception&) {
        // counted below
      }
    });

    for (const auto& [label, true_value] : truth) {
      StudyResultRow row;
      row.estimator = to_string(est);
      row.effect = label;
      row.params = cfg.params;
      row.n = cfg.n;
      row.truth = true_value;
      std::vector<double> values;
      int covered = 0, with_ci = 0;
      for (const auto& rep : reps) {
        if (!rep.ok) continue;
        const auto it = rep.effects.find(label);
        if (it == rep.effects.end()) continue;
        values.push_back(it->second);
        const auto cit = rep.covered.find(label);
        if (cit != rep.covered.end()) {
          covered += cit->second;
          ++with_ci;
        }
      }
      row.replicates_used = static_cast<int>(values.size());
      row.failures = cfg.replicates - row.replicates_used;
      row.mean_estimate = mean_of(values);
      row.ese = sd_of(values);
      row.coverage = with_ci > 0 ? static_cast<double>(covered) / with_ci : -1.0;
      results.rows.push_back(std::move(row));
    }
  }
  return results;
}

const StudyResultRow& StudyResults::row(const std::string& estimator,
                                        const std::string& effect) const {
  for (const auto& r : rows) {
    if (r.estimator == estimator && r.effect == effect) return r;
  }
  throw DataError("no study result for " + estimator + "/" + effect);
}

std::string StudyResults::to_csv() const {
  std::ostringstream out;
  out << "estimator,effect,b1,e21,a2,n,true,est,ese,coverage,replicates,failures\n";
  char buf[64];
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.effect << ',';
    std::snprintf(buf, sizeof(buf), "%g,%g,%g,", r.params.b1, r.params.e21,
                  r.params.a2);
    out << buf << r.n << ',';
    std::snprintf(buf, sizeof(buf), "%.6g,%.6g,", r.truth, r.mean_estimate);
    out << buf;
    std::snprintf(buf, sizeof(buf), "%.6g,", r.ese);
    out << buf;
    if (r.coverage >= 0.0) {
      std::snprintf(buf, sizeof(buf), "%.4g", r.coverage);
      out << buf;
    }
    out << ',' << r.replicates_used << ',' << r.failures << "\n";
  }
  return out.str();
}

}  // namespace imed
