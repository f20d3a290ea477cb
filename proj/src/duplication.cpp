#include "imed/duplication.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <mutex>

#include "imed/parallel.hpp"
#include "imed/stats.hpp"

namespace imed {

namespace {

constexpr double kDensityFloor = 1e-300;

DuplicatedDataset make_skeleton(const ObservedDataset& data) {
  DuplicatedDataset dup;
  dup.schema = data.schema();
  dup.t = data.schema().t();
  dup.n_subjects = data.rows();
  const Eigen::Index rows = dup.n_subjects * dup.rows_per_subject();
  dup.subject.resize(rows);
  dup.a.resize(rows, dup.t + 1);
  dup.j.resize(rows);
  dup.response.resize(rows);
  dup.weight = Eigen::VectorXd::Ones(rows);
  dup.wa = Eigen::VectorXd::Ones(rows);
  dup.wm = Eigen::VectorXd::Ones(rows);
  dup.covariates.resize(rows, data.schema().p());
  return dup;
}

double clamp_density(double d, std::atomic<int>& clamped) {
  if (d < kDensityFloor) {
    clamped.fetch_add(1, std::memory_order_relaxed);
    return kDensityFloor;
  }
  return d;
}

}  // namespace

void staircase_levels(int t, int row, std::vector<int>* levels) {
  levels->assign(t, 0);
  for (int k = 0; k < t; ++k) {
    (*levels)[k] = (k + 1 <= row) ? 1 : 0;
  }
}

DuplicatedDataset build_iw_rows(const ObservedDataset& data,
                                const FittedGlm& propensity,
                                const std::array<MediatorChain, 2>& chains,
                                const MarginalMethod& method,
                                std::uint64_t seed, bool force,
                                std::optional<double> truncation_percentile,
                                int threads) {
  DuplicatedDataset dup = make_skeleton(data);
  const int t = dup.t;
  const int p = data.schema().p();
  const int R = dup.rows_per_subject();

  const Eigen::VectorXd phat =
      predict(propensity, data, PredictScale::response);
  std::atomic<int> clamped{0};
  std::atomic<long long> evaluations{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  parallel_for(dup.n_subjects, threads, [&](std::int64_t i) {
    if (failed.load(std::memory_order_relaxed)) return;
    try {
      const int A = static_cast<int>(data.exposure()[i]);
      const double y = data.outcome()[i];
      Eigen::VectorXd l(p), m(t);
      for (int c = 0; c < p; ++c) l[c] = data.covariate(c)[i];
      for (int s = 0; s < t; ++s) m[s] = data.mediator(s)[i];

      const double pa = A == 1 ? phat[i] : 1.0 - phat[i];
      const double wa = 1.0 / std::max(pa, 1e-12);

      // Implied marginal density of each mediator at both exposure levels,
      // evaluated at the observed value.
      Eigen::MatrixXd marg(t, 2);
      for (int s = 0; s < t; ++s) {
        for (int a = 0; a < 2; ++a) {
          auto stream = rng::stream(
              seed, {rng::domain::iw_marginal, static_cast<std::uint64_t>(i),
                     rng::hash_name(data.schema().mediator_names[s]),
                     static_cast<std::uint64_t>(a)});
          marg(s, a) = clamp_density(
              implied_marginal_density(chains[a], s, m[s], l, method, stream),
              clamped);
        }
      }
      const double joint_obs =
          clamp_density(joint_density(chains[A], m, l), clamped);
      const double joint_flip =
          clamp_density(joint_density(chains[1 - A], m, l), clamped);
      evaluations.fetch_add(2 * t + 2, std::memory_order_relaxed);

      std::vector<int> levels;
      for (int r = 0; r < R; ++r) {
        const Eigen::Index row = i * R + r;
        dup.subject[row] = static_cast<int>(i);
        dup.response[row] = y;
        for (int c = 0; c < p; ++c) dup.covariates(row, c) = l[c];

        if (r <= t) {
          staircase_levels(t, r, &levels);
          dup.a(row, 0) = 0.0;
          double num = 1.0;
          for (int s = 0; s < t; ++s) {
            dup.a(row, s + 1) = levels[s];
            num *= marg(s, levels[s]);
          }
          dup.j[row] = 0.0;
          dup.wa[row] = wa;
          dup.wm[row] = num / joint_obs;
          dup.weight[row] = (A == 0) ? wa * dup.wm[row] : 0.0;
        } else if (r == t + 1) {
          dup.a(row, 0) = A;
          for (int s = 0; s < t; ++s) dup.a(row, s + 1) = 1 - A;
          dup.j[row] = 1.0;
          dup.wa[row] = wa;
          dup.wm[row] = joint_flip / joint_obs;
          dup.weight[row] = wa * dup.wm[row];
        } else {
          dup.a(row, 0) = A;
          for (int s = 0; s < t; ++s) dup.a(row, s + 1) = A;
          dup.j[row] = 1.0;
          dup.wa[row] = wa;
          dup.wm[row] = 1.0;
          dup.weight[row] = wa;
        }
        if (!std::isfinite(dup.weight[row])) {
          throw EstimationError("non-finite weight for subject " +
                                std::to_string(i));
        }
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      failed.store(true, std::memory_order_relaxed);
      if (failure.empty()) failure = e.what();
    }
  });
  if (failed.load()) throw EstimationError(failure);

  dup.clamped_count = clamped.load();
  dup.clamped_fraction =
      evaluations.load() > 0
          ? static_cast<double>(dup.clamped_count) / evaluations.load()
          : 0.0;
  if (dup.clamped_fraction > 0.01 && !force) {
    throw EstimationError("unstable weights: " +
                          std::to_string(dup.clamped_count) +
                          " clamped density evaluations");
  }

  if (truncation_percentile) {
    std::vector<double> nonzero;
    for (Eigen::Index r = 0; r < dup.rows(); ++r) {
      if (dup.weight[r] > 0.0) nonzero.push_back(dup.weight[r]);
    }
    if (!nonzero.empty()) {
      const double cap = quantile_type7(nonzero, *truncation_percentile);
      for (Eigen::Index r = 0; r < dup.rows(); ++r) {
        if (dup.weight[r] > cap) dup.weight[r] = cap;
      }
    }
  }
  return dup;
}

DuplicatedDataset build_mc_rows(const ObservedDataset& data,
                                const McModels& models, int draws,
                                std::uint64_t seed, int threads) {
  if (draws < 1) throw DataError("draw count must be positive");
  DuplicatedDataset dup = make_skeleton(data);
  const int t = dup.t;
  const int p = data.schema().p();
  const int R = dup.rows_per_subject();

  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mutex;

  parallel_for(dup.n_subjects, threads, [&](std::int64_t i) {
    if (failed.load(std::memory_order_relaxed)) return;
    try {
      const int A = static_cast<int>(data.exposure()[i]);
      Eigen::VectorXd l(p);
      for (int c = 0; c < p; ++c) l[c] = data.covariate(c)[i];

      // Counterfactual draws, keyed by mediator identity and level so that
      // the same draw appears in every row that uses that pair.
      std::vector<std::array<std::vector<double>, 2>> star(t);
      for (int s = 0; s < t; ++s) {
        for (int a = 0; a < 2; ++a) {
          auto stream = rng::stream(
              seed, {rng::domain::mc_draw, static_cast<std::uint64_t>(i),
                     rng::hash_name(data.schema().mediator_names[s]),
                     static_cast<std::uint64_t>(a)});
          star[s][a].resize(draws);
          for (int k = 0; k < draws; ++k) {
            star[s][a][k] = models.draw_marginal(s, a, l, stream);
          }
        }
      }

      std::vector<double> slots(p + t, 0.0);
      for (int c = 0; c < p; ++c) slots[c] = l[c];

      std::vector<int> levels;
      for (int r = 0; r < R; ++r) {
        const Eigen::Index row = i * R + r;
        dup.subject[row] = static_cast<int>(i);
        dup.j[row] = (r <= t) ? 0.0 : 1.0;
        for (int c = 0; c < p; ++c) dup.covariates(row, c) = l[c];

        if (r <= t) {
          staircase_levels(t, r, &levels);
          dup.a(row, 0) = 0.0;
          for (int s = 0; s < t; ++s) dup.a(row, s + 1) = levels[s];
          double acc = 0.0;
          for (int k = 0; k < draws; ++k) {
            for (int s = 0; s < t; ++s) slots[p + s] = star[s][levels[s]][k];
            acc += models.h(0, slots.data());
          }
          dup.response[row] = acc / draws;
        } else {
          for (int s = 0; s < t; ++s) {
            dup.a(row, s + 1) = A;
            slots[p + s] = data.mediator(s)[i];
          }
          if (r == t + 1) {
            dup.a(row, 0) = 1 - A;
            dup.response[row] = models.h(1 - A, slots.data());
          } else {
            dup.a(row, 0) = A;
            dup.response[row] = data.outcome()[i];
          }
        }
        if (!std::isfinite(dup.response[row])) {
          throw EstimationError("non-finite imputed response for subject " +
                                std::to_string(i));
        }
      }
    } catch (const std::exception& e) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      failed.store(true, std::memory_order_relaxed);
      if (failure.empty()) failure = e.what();
    }
  });
  if (failed.load()) throw EstimationError(failure);
  return dup;
}

DuplicatedDataset build_mc_rows(const ObservedDataset& data,
                                const std::array<FittedGlm, 2>& outcome_fits,
                                const std::array<MarginalModelSet, 2>& marginals,
                                int draws, std::uint64_t seed, int threads) {
  const auto slots_layout = slot_names(data.schema());
  auto h = std::make_shared<std::array<CompiledTerms, 2>>();
  for (int a = 0; a < 2; ++a) {
    (*h)[a] = compile_terms(outcome_fits[a].spec.terms, slots_layout);
  }
  const bool logit_outcome = outcome_fits[0].spec.link == Link::logit;
  McModels models;
  models.h = [h, &outcome_fits, logit_outcome](int a, const double* slots) {
    const double eta = (*h)[a].dot(slots, outcome_fits[a].coefficients);
    return logit_outcome ? expit(eta) : eta;
  };
  models.draw_marginal = [&marginals](int s, int a, const Eigen::VectorXd& l,
                                      rng::Stream& stream) {
    return sample_marginal(marginals[a], s, l, stream);
  };
  return build_mc_rows(data, models, draws, seed, threads);
}

WeightDiagnostics weight_diagnostics(const DuplicatedDataset& dup,
                                     double threshold, double bin_width) {
  WeightDiagnostics diag;
  diag.clamped_count = dup.clamped_count;
  const int R = dup.rows_per_subject();
  for (int r = 0; r < R; ++r) {
    std::vector<double> nonzero;
    Eigen::Index zeros = 0, above = 0;
    for (Eigen::Index i = 0; i < dup.n_subjects; ++i) {
      const double w = dup.weight[i * R + r];
      if (w > 0.0) {
        nonzero.push_back(w);
        if (w > threshold) ++above;
      } else {
        ++zeros;
      }
    }
    WeightRowSummary row;
    row.row = r + 1;
    row.n_nonzero = static_cast<Eigen::Index>(nonzero.size());
    row.n_zero = zeros;
    row.n_above_threshold = above;
    if (!nonzero.empty()) {
      row.mean = mean_of(nonzero);
      row.sd = sd_of(nonzero);
      row.max = *std::max_element(nonzero.begin(), nonzero.end());
    }
    diag.rows.push_back(row);

    if (!nonzero.empty()) {
      std::vector<double> logs;
      logs.reserve(nonzero.size());
      for (double w : nonzero) logs.push_back(std::log10(w));
      const double lo =
          std::floor(*std::min_element(logs.begin(), logs.end()) / bin_width) *
          bin_width;
      const double hi = *std::max_element(logs.begin(), logs.end());
      const int bins =
          std::max(1, static_cast<int>(std::ceil((hi - lo) / bin_width + 1e-9)));
      std::vector<Eigen::Index> counts(bins, 0);
      for (double v : logs) {
        int b = static_cast<int>((v - lo) / bin_width);
        b = std::min(std::max(b, 0), bins - 1);
        ++counts[b];
      }
      for (int b = 0; b < bins; ++b) {
        diag.histogram.push_back(
            {r + 1, lo + b * bin_width, lo + (b + 1) * bin_width, counts[b]});
      }
    }
  }
  return diag;
}

void DuplicatedDataset::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file '" + path + "'");
  out << "subject";
  for (int k = 0; k <= t; ++k) out << ",a" << k;
  out << ",j,weight,response";
  for (const auto& c : schema.covariate_names) out << "," << c;
  out << "\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << "," << buf;
  };
  for (Eigen::Index r = 0; r < rows(); ++r) {
    out << subject[r];
    for (int k = 0; k <= t; ++k) put(a(r, k));
    put(j[r]);
    put(weight[r]);
    put(response[r]);
    for (int c = 0; c < schema.p(); ++c) put(covariates(r, c));
    out << "\n";
  }
}

}  // namespace imed
