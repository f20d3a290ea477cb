#include "imed/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "imed/parallel.hpp"
#include "imed/stats.hpp"

namespace imed {

double BootstrapReport::point_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return point[static_cast<Eigen::Index>(i)];
  }
  throw DataError("unknown bootstrap quantity '" + name + "'");
}

std::pair<double, double> BootstrapReport::ci_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) {
      const auto j = static_cast<Eigen::Index>(i);
      return {lower[j], upper[j]};
    }
  }
  throw DataError("unknown bootstrap quantity '" + name + "'");
}

BootstrapReport bootstrap(const ObservedDataset& data,
                          const EstimatorConfig& cfg, int B, double level,
                          std::uint64_t seed) {
  if (B < 2) throw DataError("bootstrap needs B >= 2");
  if (!(level > 0.0 && level < 1.0)) {
    throw DataError("bootstrap level must lie in (0,1)");
  }

  const EffectEstimates point = estimate(data, cfg);
  const auto flat = point.flattened();

  BootstrapReport report;
  report.B = B;
  report.level = level;
  report.names.reserve(flat.size());
  report.point.resize(static_cast<Eigen::Index>(flat.size()));
  for (std::size_t i = 0; i < flat.size(); ++i) {
    report.names.push_back(flat[i].first);
    report.point[static_cast<Eigen::Index>(i)] = flat[i].second;
  }

  const Eigen::Index q = report.point.size();
  report.replicates.setConstant(B, q, std::numeric_limits<double>::quiet_NaN());

  // Replicates are embarrassingly parallel; each uses streams keyed by its
  // own index, so serial and parallel runs agree bit for bit.
  parallel_for(B, cfg.threads, [&](std::int64_t b) {
    try {
      auto stream = rng::stream(
          seed, {rng::domain::bootstrap, static_cast<std::uint64_t>(b)});
      const ObservedDataset resampled = resample_with_replacement(data, stream);
      EstimatorConfig cfg_b = cfg;
      cfg_b.threads = 1;  // replicate-level parallelism only
      cfg_b.seed = rng::combine(rng::combine(seed, rng::domain::replicate),
                                static_cast<std::uint64_t>(b));
      const EffectEstimates est = estimate(resampled, cfg_b);
      const auto rep = est.flattened();
      if (rep.size() == static_cast<std::size_t>(q)) {
        for (Eigen::Index i = 0; i < q; ++i) {
          report.replicates(b, i) = rep[static_cast<std::size_t>(i)].second;
        }
      }
    } catch (const std::exception&) {
      // dropped and counted below
    }
  });

  report.lower.resize(q);
  report.upper.resize(q);
  int failures = 0;
  for (Eigen::Index i = 0; i < q; ++i) {
    std::vector<double> values;
    values.reserve(B);
    for (int b = 0; b < B; ++b) {
      const double v = report.replicates(b, i);
      if (std::isfinite(v)) values.push_back(v);
    }
    if (i == 0) failures = B - static_cast<int>(values.size());
    if (values.empty()) {
      throw EstimationError("every bootstrap replicate failed");
    }
    report.lower[i] = quantile_type7(values, (1.0 - level) / 2.0);
    report.upper[i] = quantile_type7(values, 1.0 - (1.0 - level) / 2.0);
  }
  report.failures = failures;
  report.degraded = failures > 0.05 * B;
  return report;
}

std::vector<CoverageRow> coverage_experiment(const TrueDgp& dgp,
                                             Eigen::Index n,
                                             const EstimatorConfig& cfg, int B,
                                             int reps, double level,
                                             std::uint64_t seed) {
  if (reps < 2) throw DataError("coverage experiment needs reps >= 2");

  EffectModelSpec spec = cfg.effect_spec;
  spec.t = dgp.schema.t();
  if (spec.confounder_mains.empty()) {
    spec.confounder_mains = dgp.schema.covariate_names;
  }
  const auto levels =
      cfg.report_levels.empty() ? default_levels(spec) : cfg.report_levels;
  const auto truth = population_truth(
      dgp, 50000, spec, levels, rng::combine(seed, rng::domain::truth),
      cfg.draws, cfg.threads);

  struct Tally {
    int covered = 0;
    int used = 0;
    double sum = 0.0;
  };
  std::vector<std::map<std::string, Tally>> partial(reps);

  parallel_for(reps, cfg.threads, [&](std::int64_t r) {
    try {
      const std::uint64_t rep_seed =
          rng::combine(rng::combine(seed, rng::domain::replicate),
                       static_cast<std::uint64_t>(r));
      const ObservedDataset data = draw_dataset(dgp, n, rep_seed);
      EstimatorConfig cfg_r = cfg;
      cfg_r.threads = 1;
      cfg_r.seed = rep_seed;
      cfg_r.report_levels = levels;
      const BootstrapReport boot =
          bootstrap(data, cfg_r, B, level, rng::combine(rep_seed, 0x1707));
      for (const auto& [label, value] : truth) {
        const auto [lo, up] = boot.ci_of(label);
        Tally& tally = partial[r][label];
        tally.used = 1;
        tally.covered = (value >= lo && value <= up) ? 1 : 0;
        tally.sum = boot.point_of(label);
      }
    } catch (const std::exception&) {
      // replicate skipped
    }
  });

  std::vector<CoverageRow> rows;
  for (const auto& [label, value] : truth) {
    CoverageRow row;
    row.label = label;
    row.truth = value;
    for (int r = 0; r < reps; ++r) {
      const auto it = partial[r].find(label);
      if (it == partial[r].end()) continue;
      row.replicates_used += it->second.used;
      row.coverage += it->second.covered;
      row.mean_estimate += it->second.sum;
    }
    if (row.replicates_used > 0) {
      row.coverage /= row.replicates_used;
      row.mean_estimate /= row.replicates_used;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace imed
