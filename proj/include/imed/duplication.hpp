#pragma once

#include <Eigen/Dense>
#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "imed/dataset.hpp"
#include "imed/glm.hpp"
#include "imed/mediators.hpp"

namespace imed {

/// Per-subject expansion of the observed sample into t+3 rows carrying
/// hypothetical exposure levels a^(0)..a^(t), the joint-draw indicator J,
/// and either regression weights (inverse weighting) or imputed responses
/// (Monte Carlo). Rows are grouped by subject: subject i occupies rows
/// [i*(t+3), (i+1)*(t+3)).
struct DuplicatedDataset {
  VariableSchema schema;
  int t = 0;
  Eigen::Index n_subjects = 0;

  Eigen::VectorXi subject;
  Eigen::MatrixXd a;           // rows x (t+1): a^(0)..a^(t)
  Eigen::VectorXd j;           // joint-draw indicator
  Eigen::VectorXd response;    // observed Y (IW) or imputed mean (MC)
  Eigen::VectorXd weight;      // total weight (IW) or 1 (MC)
  Eigen::VectorXd wa;          // exposure weight component (IW)
  Eigen::VectorXd wm;          // mediator density ratio component (IW)
  Eigen::MatrixXd covariates;  // rows x p, copied from the subject

  int clamped_count = 0;        // density evaluations hitting the floor
  double clamped_fraction = 0.0;

  Eigen::Index rows() const { return subject.size(); }
  int rows_per_subject() const { return t + 3; }

  /// Audit export: subject, a0..at, j, weight, response, covariates.
  void write_csv(const std::string& path) const;
};

/// Row pattern shared by both layouts: staircase rows r = 0..t have a^(0)=0
/// and a^(k) = 1 iff k <= r; rows t+1 and t+2 are the joint-draw rows.
void staircase_levels(int t, int row, std::vector<int>* levels);

/// Builds the inverse-weighting layout. Weights combine the exposure weight
/// 1/P(A=A_i|L_i) with the counterfactual mediator density ratio. Densities
/// are clamped below at 1e-300 before forming ratios; when more than 1% of
/// evaluations clamp, throws EstimationError("unstable weights") unless
/// `force` is set.
DuplicatedDataset build_iw_rows(
    const ObservedDataset& data, const FittedGlm& propensity,
    const std::array<MediatorChain, 2>& chains, const MarginalMethod& method,
    std::uint64_t seed, bool force = false,
    std::optional<double> truncation_percentile = std::nullopt,
    int threads = 1);

/// Model functions driving the Monte Carlo imputation: a response-scale
/// outcome mean over the slot layout [covariates..., mediators...], and a
/// marginal mediator sampler. Either fitted models or the true
/// data-generating functions can stand behind this view.
struct McModels {
  std::function<double(int, const double*)> h;  // (a, slots)
  std::function<double(int, int, const Eigen::VectorXd&, rng::Stream&)>
      draw_marginal;  // (s, a, l, stream)
};

/// Builds the Monte Carlo layout with K-draw averaged imputed responses.
/// Draw streams are keyed by (seed, subject, mediator identity, exposure
/// level) so the same counterfactual draw is reused wherever the same
/// mediator-level pair appears, and results are independent of the thread
/// schedule.
DuplicatedDataset build_mc_rows(const ObservedDataset& data,
                                const McModels& models, int draws,
                                std::uint64_t seed, int threads = 1);

/// Monte Carlo layout backed by fitted outcome and marginal mediator models.
DuplicatedDataset build_mc_rows(const ObservedDataset& data,
                                const std::array<FittedGlm, 2>& outcome_fits,
                                const std::array<MarginalModelSet, 2>& marginals,
                                int draws, std::uint64_t seed, int threads = 1);

struct WeightRowSummary {
  int row = 0;  // 1-based position within the subject block
  Eigen::Index n_nonzero = 0;
  Eigen::Index n_zero = 0;
  double mean = 0.0;
  double sd = 0.0;
  double max = 0.0;
  Eigen::Index n_above_threshold = 0;
};

struct WeightHistogramBin {
  int row = 0;
  double log10_left = 0.0;
  double log10_right = 0.0;
  Eigen::Index count = 0;
};

/// Per-row-position weight summaries over the non-zero weights, plus a
/// base-10 log histogram of the non-zero weights per row position.
struct WeightDiagnostics {
  std::vector<WeightRowSummary> rows;
  std::vector<WeightHistogramBin> histogram;
  int clamped_count = 0;
};

WeightDiagnostics weight_diagnostics(const DuplicatedDataset& dup,
                                     double threshold = 10.0,
                                     double bin_width = 0.5);

}  // namespace imed
