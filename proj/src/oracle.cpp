#include "imed/oracle.hpp"

#include <cmath>

#include "imed/duplication.hpp"
#include "imed/math.hpp"
#include "imed/parallel.hpp"

namespace imed {

double LinearDgpCoefficients::outcome_mean(int a, double m1, double m2,
                                           double l) const {
  return b0 + ba * a + b1 * m1 + b2 * m2 + bl * l + ba1 * a * m1 +
         ba2 * a * m2 + b12 * m1 * m2 + ba12 * a * m1 * m2 + bal * a * l +
         b1l * m1 * l + b2l * m2 * l + b12l * m1 * m2 * l + ba1l * a * m1 * l +
         ba2l * a * m2 * l + ba12l * a * m1 * m2 * l;
}

std::map<std::string, double> closed_form_linear_effects(
    const LinearDgpCoefficients& c, double l) {
  const double beta1 = c.b1 + c.b1l * l;
  const double beta2 = c.b2 + c.b2l * l;
  const double beta12 = c.b12 + c.b12l * l;
  const double a1_0 = c.alpha[0][0] + c.alpha[0][2] * l;   // E(M1|A=0,l)
  const double a2_0 = c.alpha[1][0] + c.alpha[1][2] * l;   // E(M2|A=0,l)
  const double a1_a = c.alpha[0][1] + c.alpha[0][3] * l;   // exposure shift, M1
  const double a2_a = c.alpha[1][1] + c.alpha[1][3] * l;   // exposure shift, M2
  const double dS = c.cov12[1] - c.cov12[0];

  const double ie1 = beta1 * a1_a + beta12 * a2_0 * a1_a;
  const double ie2 = beta2 * a2_a + beta12 * (a1_0 + a1_a) * a2_a;
  const double mutual = beta12 * dS;
  const double joint = beta1 * a1_a + beta2 * a2_a +
                       beta12 * (dS + a2_0 * a1_a + a1_0 * a2_a + a1_a * a2_a);

  // Direct effect with the joint mediator distribution held at exposure 1.
  const double m1_1 = a1_0 + a1_a;
  const double m2_1 = a2_0 + a2_a;
  const double cross_1 = c.cov12[1] + m1_1 * m2_1;  // E(M1 M2 | A=1, l)
  const double de = c.ba + c.bal * l + (c.ba1 + c.ba1l * l) * m1_1 +
                    (c.ba2 + c.ba2l * l) * m2_1 +
                    (c.ba12 + c.ba12l * l) * cross_1;

  std::map<std::string, double> out;
  out["IE1"] = ie1;
  out["IE2"] = ie2;
  out["sumIE"] = ie1 + ie2;
  out["jointIE"] = joint;
  out["mutualIE"] = mutual;
  out["DE"] = de;
  out["TE"] = de + joint;
  return out;
}

TrueDgp make_linear_dgp(const LinearDgpCoefficients& c, double propensity_slope,
                        bool binary_covariate) {
  for (int a = 0; a < 2; ++a) {
    if (c.var1[a] <= 0.0 || c.var2[a] <= 0.0 ||
        c.var2[a] - c.cov12[a] * c.cov12[a] / c.var1[a] <= 0.0) {
      throw DataError("linear DGP covariance is not positive definite");
    }
  }
  TrueDgp dgp;
  dgp.schema.outcome_name = "y";
  dgp.schema.outcome_kind = VariableKind::continuous;
  dgp.schema.exposure_name = "a";
  dgp.schema.mediator_names = {"m1", "m2"};
  dgp.schema.mediator_kinds = {VariableKind::continuous,
                               VariableKind::continuous};
  dgp.schema.covariate_names = {"l"};
  dgp.schema.moderator_names = {"l"};
  dgp.outcome_error_sd = c.outcome_error_sd;
  dgp.draw_covariates = [binary_covariate](rng::Stream& stream, double* l) {
    l[0] = binary_covariate ? (stream.next_bernoulli(0.5) ? 1.0 : 0.0)
                            : stream.next_normal();
  };
  dgp.propensity = [propensity_slope](const double* l) {
    return expit(propensity_slope * l[0]);
  };
  dgp.draw_mediators = [c](int a, const double* l, rng::Stream& stream,
                           double* m) {
    const double mu1 = c.mediator_mean(0, a, l[0]);
    const double mu2 = c.mediator_mean(1, a, l[0]);
    const double z1 = stream.next_normal();
    const double z2 = stream.next_normal();
    m[0] = mu1 + std::sqrt(c.var1[a]) * z1;
    const double slope = c.cov12[a] / c.var1[a];
    const double resid_var = c.var2[a] - c.cov12[a] * c.cov12[a] / c.var1[a];
    m[1] = mu2 + slope * (m[0] - mu1) + std::sqrt(resid_var) * z2;
  };
  dgp.marginal_mean = [c](int s, int a, const double* l) {
    return c.mediator_mean(s, a, l[0]);
  };
  dgp.marginal_var = [c](int s, int a, const double*) {
    return s == 0 ? c.var1[a] : c.var2[a];
  };
  dgp.h = [c](int a, const double* m, const double* l) {
    return c.outcome_mean(a, m[0], m[1], l[0]);
  };
  return dgp;
}

ObservedDataset draw_dataset(const TrueDgp& dgp, Eigen::Index n,
                             std::uint64_t seed) {
  const int p = dgp.schema.p();
  const int t = dgp.schema.t();
  const bool binary_outcome = dgp.schema.outcome_kind == VariableKind::binary;

  std::vector<Eigen::VectorXd> columns(2 + t + p, Eigen::VectorXd(n));
  std::vector<double> l(p), m(t);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto stream =
        rng::stream(seed, {rng::domain::dgp, static_cast<std::uint64_t>(i)});
    dgp.draw_covariates(stream, l.data());
    const int a = stream.next_bernoulli(dgp.propensity(l.data())) ? 1 : 0;
    dgp.draw_mediators(a, l.data(), stream, m.data());
    const double mean = dgp.h(a, m.data(), l.data());
    double y;
    if (binary_outcome) {
      y = stream.next_bernoulli(mean) ? 1.0 : 0.0;
    } else {
      y = mean + dgp.outcome_error_sd * stream.next_normal();
    }
    columns[0][i] = y;
    columns[1][i] = a;
    for (int s = 0; s < t; ++s) columns[2 + s][i] = m[s];
    for (int cdx = 0; cdx < p; ++cdx) columns[2 + t + cdx][i] = l[cdx];
  }
  return ObservedDataset(dgp.schema, std::move(columns));
}

std::map<std::string, double> population_truth(
    const TrueDgp& dgp, Eigen::Index N, const EffectModelSpec& effect_spec,
    const std::vector<ModeratorLevel>& levels, std::uint64_t seed, int draws,
    int threads) {
  const int p = dgp.schema.p();
  EffectModelSpec spec = effect_spec;
  spec.t = dgp.schema.t();
  if (spec.confounder_mains.empty()) {
    spec.confounder_mains = dgp.schema.covariate_names;
  }
  spec.validate();

  McModels models;
  models.h = [&dgp, p](int a, const double* slots) {
    return dgp.h(a, slots + p, slots);
  };
  models.draw_marginal = [&dgp](int s, int a, const Eigen::VectorXd& l,
                                rng::Stream& stream) {
    const double mean = dgp.marginal_mean(s, a, l.data());
    const double var = dgp.marginal_var(s, a, l.data());
    return mean + std::sqrt(var) * stream.next_normal();
  };

  const bool logit = spec.link == Link::logit;
  const Eigen::Index block_size = 10000;
  const Eigen::Index blocks = (N + block_size - 1) / block_size;

  std::vector<std::string> names;
  Eigen::MatrixXd normal_eq;
  Eigen::VectorXd rhs;
  Eigen::MatrixXd X_all;
  Eigen::VectorXd y_all;
  Eigen::Index filled = 0;
  if (logit && N > 200000) {
    throw DataError("population truth with a logit link caps N at 200000");
  }

  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index lo = b * block_size;
    const Eigen::Index hi = std::min(N, lo + block_size);
    const std::uint64_t block_seed = rng::combine(
        rng::combine(seed, rng::domain::truth), static_cast<std::uint64_t>(b));
    const ObservedDataset data = draw_dataset(dgp, hi - lo, block_seed);
    const DuplicatedDataset dup = build_mc_rows(
        data, models, draws, rng::combine(block_seed, rng::domain::mc_draw),
        threads);
    const EffectDesign design = build_effect_design(dup, spec);
    if (names.empty()) {
      names = design.names;
      if (logit) {
        X_all.resize(N * dup.rows_per_subject(), design.X.cols());
        y_all.resize(N * dup.rows_per_subject());
      } else {
        normal_eq = Eigen::MatrixXd::Zero(design.X.cols(), design.X.cols());
        rhs = Eigen::VectorXd::Zero(design.X.cols());
      }
    }
    if (logit) {
      X_all.middleRows(filled, design.X.rows()) = design.X;
      y_all.segment(filled, design.y.size()) = design.y;
      filled += design.X.rows();
    } else {
      normal_eq.selfadjointView<Eigen::Lower>().rankUpdate(
          design.X.transpose());
      rhs += design.X.transpose() * design.y;
    }
  }

  EffectParameters params;
  params.names = names;
  if (logit) {
    const FittedGlm fit = fit_logistic(X_all, y_all);
    params.values = fit.coefficients;
  } else {
    normal_eq = normal_eq.selfadjointView<Eigen::Lower>();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(normal_eq);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-12) {
      throw EstimationError("population truth design is rank deficient");
    }
    params.values = ldlt.solve(rhs);
  }

  std::map<std::string, double> out;
  for (const auto& d : derive_effects(params, spec, levels)) {
    for (const auto& [name, value] : d.effects) {
      out[name + d.suffix] = value;
    }
  }
  return out;
}

}  // namespace imed
