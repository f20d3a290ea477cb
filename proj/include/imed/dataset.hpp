#pragma once

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

#include "imed/error.hpp"
#include "imed/rng.hpp"

namespace imed {

enum class VariableKind { continuous, binary };

/// Declares the roles of the columns in an observed sample: one outcome, one
/// binary exposure, t >= 1 mediators and p >= 0 baseline covariates. Mediator
/// order is a labelling convenience only; no causal ordering is implied.
struct VariableSchema {
  std::string outcome_name;
  VariableKind outcome_kind = VariableKind::continuous;
  std::string exposure_name;
  std::vector<std::string> mediator_names;
  std::vector<VariableKind> mediator_kinds;
  std::vector<std::string> covariate_names;
  std::vector<std::string> moderator_names;  // subset of covariate_names

  int t() const { return static_cast<int>(mediator_names.size()); }
  int p() const { return static_cast<int>(covariate_names.size()); }

  /// All schema names in canonical order: outcome, exposure, mediators,
  /// covariates.
  std::vector<std::string> all_names() const;

  /// Throws DataError on duplicate names, empty mediator list, missing
  /// mediator kinds, or moderators outside the covariate list.
  void validate() const;
};

/// Immutable rectangular sample. Columns are stored in schema order; values
/// are validated on construction (finite, binary columns in {0,1}).
class ObservedDataset {
 public:
  ObservedDataset(VariableSchema schema,
                  std::vector<Eigen::VectorXd> columns_in_schema_order);

  const VariableSchema& schema() const { return schema_; }
  Eigen::Index rows() const { return n_; }

  const Eigen::VectorXd& column(const std::string& name) const;
  bool has_column(const std::string& name) const {
    return index_.count(name) > 0;
  }

  const Eigen::VectorXd& outcome() const { return columns_[0]; }
  const Eigen::VectorXd& exposure() const { return columns_[1]; }
  const Eigen::VectorXd& mediator(int s) const { return columns_[2 + s]; }
  const Eigen::VectorXd& covariate(int c) const {
    return columns_[2 + schema_.t() + c];
  }

  /// Row indices with the given exposure level.
  std::vector<Eigen::Index> group_rows(int level) const;

 private:
  VariableSchema schema_;
  std::vector<Eigen::VectorXd> columns_;
  std::unordered_map<std::string, int> index_;
  Eigen::Index n_ = 0;
};

/// Reads a comma-separated file with one header row. Columns are matched to
/// the schema by name; extra file columns are ignored.
ObservedDataset load_csv(const std::string& path, const VariableSchema& schema);

/// Writes schema columns with 17 significant digits so that a load_csv
/// round-trip is bit exact.
void write_csv(const ObservedDataset& data, const std::string& path);

/// Returns a copy with the named continuous column rescaled to sample mean 0
/// and sample standard deviation 1 (denominator n-1).
ObservedDataset standardize_column(const ObservedDataset& data,
                                   const std::string& name);

/// Uniform resample of n rows with replacement; deterministic given the
/// stream state.
ObservedDataset resample_with_replacement(const ObservedDataset& data,
                                          rng::Stream& stream);

/// Row-gather helper used for exposure-group subsets.
ObservedDataset select_rows(const ObservedDataset& data,
                            const std::vector<Eigen::Index>& rows);

}  // namespace imed
