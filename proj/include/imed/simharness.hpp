#pragma once

#include <set>
#include <string>
#include <vector>

#include "imed/estimators.hpp"
#include "imed/oracle.hpp"

namespace imed {

enum class StudyEstimator { iw, mc, mc_misspecified };

struct StudyParams {
  double b1 = 0.0;
  double e21 = 0.0;
  double a2 = 0.0;
};

struct StudyConfig {
  int study = 1;
  Eigen::Index n = 500;
  StudyParams params;
  int replicates = 200;
  std::uint64_t seed = 0;
  std::vector<StudyEstimator> estimators = {StudyEstimator::iw,
                                            StudyEstimator::mc};
  int bootstrap_B = 0;  // 0 disables coverage
  double level = 0.95;
  int threads = 1;
  int draws = 100;
  Eigen::Index truth_population = 50000;
};

/// The three study data-generating processes, exactly as simulated.
TrueDgp make_study_dgp(int study, const StudyParams& params);

/// The models fitted to study data: propensity and group-specific mediator
/// chain for inverse weighting; marginal mediator and outcome models for
/// Monte Carlo. mc_misspecified drops the mediator-mediator outcome terms
/// (study 3) and is otherwise identical.
EstimatorConfig study_estimator_config(int study, StudyEstimator estimator);

/// Observed sample from the study generator; bit-identical across runs and
/// thread counts for a fixed seed.
ObservedDataset generate_study(int study, Eigen::Index n,
                               const StudyParams& params, std::uint64_t seed);

struct StudyResultRow {
  std::string estimator;
  std::string effect;
  StudyParams params;
  Eigen::Index n = 0;
  double truth = 0.0;
  double mean_estimate = 0.0;
  double ese = 0.0;  // empirical sd across replicates
  double coverage = -1.0;  // -1 when bootstrap disabled
  int replicates_used = 0;
  int failures = 0;
};

struct StudyResults {
  StudyConfig config;
  std::vector<StudyResultRow> rows;

  std::string to_csv() const;
  const StudyResultRow& row(const std::string& estimator,
                            const std::string& effect) const;
};

/// Replicated estimation over fresh draws from the study generator:
/// mean estimate, empirical standard error, oracle truth, and (optionally)
/// bootstrap CI coverage per effect.
StudyResults run_study(const StudyConfig& cfg);

std::string to_string(StudyEstimator e);

}  // namespace imed
