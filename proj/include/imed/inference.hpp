#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "imed/estimators.hpp"
#include "imed/oracle.hpp"

namespace imed {

/// Nonparametric percentile bootstrap around an estimator. Bounds are the
/// empirical (1-level)/2 and 1-(1-level)/2 quantiles with linear
/// interpolation between order statistics.
struct BootstrapReport {
  int B = 0;
  double level = 0.95;
  std::vector<std::string> names;  // parameters then derived-effect labels
  Eigen::VectorXd point;
  Eigen::MatrixXd replicates;  // B x names.size(), NaN rows for failures
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  int failures = 0;
  bool degraded = false;  // failures/B > 5%

  double point_of(const std::string& name) const;
  std::pair<double, double> ci_of(const std::string& name) const;
};

/// Replicate b resamples the observations with stream key (seed, b) and
/// reruns the full pipeline, all model fits included. Mediator draws are
/// re-drawn with replicate-keyed streams. Failed replicates are dropped and
/// counted; more than 5% failures flags the report degraded.
BootstrapReport bootstrap(const ObservedDataset& data,
                          const EstimatorConfig& cfg, int B, double level,
                          std::uint64_t seed);

struct CoverageRow {
  std::string label;
  double truth = 0.0;
  double coverage = 0.0;
  double mean_estimate = 0.0;
  int replicates_used = 0;
};

/// Fraction of outer replicates whose percentile CI contains the population
/// truth, per derived effect.
std::vector<CoverageRow> coverage_experiment(const TrueDgp& dgp,
                                             Eigen::Index n,
                                             const EstimatorConfig& cfg, int B,
                                             int reps, double level,
                                             std::uint64_t seed);

}  // namespace imed
