#include <algorithm>
#include <numeric>

#include "imed/effects.hpp"
#include "imed/estimators.hpp"
#include "imed/inference.hpp"

namespace imed {

namespace {

/// Dataset with the mediator labels permuted: mediator perm[q] becomes
/// staircase position q+1. Columns are reordered to match the new schema.
ObservedDataset permute_mediators(const ObservedDataset& data,
                                  const std::vector<int>& perm) {
  const VariableSchema& schema = data.schema();
  VariableSchema permuted = schema;
  for (std::size_t q = 0; q < perm.size(); ++q) {
    permuted.mediator_names[q] = schema.mediator_names[perm[q]];
    permuted.mediator_kinds[q] = schema.mediator_kinds[perm[q]];
  }
  std::vector<Eigen::VectorXd> columns;
  for (const auto& name : permuted.all_names()) {
    columns.push_back(data.column(name));
  }
  return ObservedDataset(permuted, std::move(columns));
}

}  // namespace

PermutationReport permutation_sensitivity(const ObservedDataset& data,
                                          const EstimatorConfig& cfg,
                                          int bootstrap_B, double level) {
  const int t = data.schema().t();
  if (t > 6) {
    throw DataError("permutation sensitivity caps t at 6 (t! runs)");
  }

  PermutationReport report;
  std::vector<int> perm(t);
  std::iota(perm.begin(), perm.end(), 0);

  struct Collected {
    std::vector<double> est, lo, up;
    bool has_ci = false;
  };
  std::map<std::string, Collected> by_label;

  do {
    const ObservedDataset permuted = permute_mediators(data, perm);
    PermutationRun run;
    for (int q = 0; q < t; ++q) {
      run.order.push_back(permuted.schema().mediator_names[q]);
    }

    run.estimates = estimate(permuted, cfg);
    if (bootstrap_B > 0) {
      // Resample streams are keyed by (seed, b), so every permutation sees
      // the same bootstrap samples.
      const BootstrapReport boot =
          bootstrap(permuted, cfg, bootstrap_B, level, cfg.seed);
      for (std::size_t i = 0; i < boot.names.size(); ++i) {
        run.ci[boot.names[i]] = {boot.lower[static_cast<Eigen::Index>(i)],
                                 boot.upper[static_cast<Eigen::Index>(i)]};
      }
    }

    // Indirect-effect parameters, reported against mediator identity.
    for (int q = 0; q < t; ++q) {
      const std::string& mediator = run.order[q];
      const std::string theta = "theta" + std::to_string(q + 1);
      for (const auto& name : run.estimates.params.names) {
        std::string label;
        if (name == theta) {
          label = mediator;
        } else if (name == theta + "c") {
          label = mediator + ":" + cfg.effect_spec.moderators.at(0);
        } else if (name.rfind(theta + "c:", 0) == 0) {
          label = mediator + ":" + name.substr(theta.size() + 2);
        } else {
          continue;
        }
        Collected& bucket = by_label[label];
        bucket.est.push_back(run.estimates.params.at(name));
        if (bootstrap_B > 0) {
          const auto [lo, up] = run.ci.at(name);
          bucket.lo.push_back(lo);
          bucket.up.push_back(up);
          bucket.has_ci = true;
        }
      }
    }
    report.runs.push_back(std::move(run));
  } while (std::next_permutation(perm.begin(), perm.end()));

  for (auto& [label, bucket] : by_label) {
    PermutationRangeRow row;
    row.label = label;
    row.est_min = *std::min_element(bucket.est.begin(), bucket.est.end());
    row.est_max = *std::max_element(bucket.est.begin(), bucket.est.end());
    row.has_ci = bucket.has_ci;
    if (bucket.has_ci) {
      row.ci_lower_min = *std::min_element(bucket.lo.begin(), bucket.lo.end());
      row.ci_lower_max = *std::max_element(bucket.lo.begin(), bucket.lo.end());
      row.ci_upper_min = *std::min_element(bucket.up.begin(), bucket.up.end());
      row.ci_upper_max = *std::max_element(bucket.up.begin(), bucket.up.end());
    }
    report.table.push_back(std::move(row));
  }
  return report;
}

}  // namespace imed
