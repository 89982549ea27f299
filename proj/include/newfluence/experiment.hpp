#pragma once

#include "newfluence/influence.hpp"
#include "newfluence/kendall.hpp"
#include "newfluence/parallel.hpp"
#include "newfluence/rng.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

namespace newfluence {

// Which influence measures a run reports. The exact leave-one-out refits are
// the only expensive member; the three closed-form measures are always cheap
// enough to emit. Rank-correlation summaries need `with_true` as the baseline.
struct EstimatorSet {
  bool with_true = true;
  bool with_if = true;
  bool with_corrected = true;
  bool with_new = true;
};

struct ExperimentConfig {
  Index n = 250;
  Index p = 500;
  double lambda = 0.01;
  Index num_tests = 100;  // m
  std::uint64_t seed = 1;
  LossKind loss = LossKind::logistic;
  EstimatorSet estimators{};
  RidgeConvention ridge_convention = RidgeConvention::half_sq_norm;
  int replicates = 1;
  int threads = 0;  // <= 0 uses all cores
  SolverConfig solver{};

  void validate() const {
    require(n >= 1 && p >= 1 && num_tests >= 1, "n, p and the test count must be at least 1");
    require(std::isfinite(lambda) && lambda > 0.0, "lambda must be positive");
    require(replicates >= 1, "replicates must be at least 1");
    solver.validate();
  }
};

struct SyntheticInstance {
  Dataset train;
  Dataset test;
  Vector beta_star;
};

namespace detail {

inline Matrix random_features(std::uint64_t seed, std::string_view label, Index rows, Index cols,
                              double scale) {
  SubstreamRng rng(seed, label);
  Matrix features(rows, cols);
  for (Index r = 0; r < rows; ++r)  // row-major fill: sample by sample
    for (Index c = 0; c < cols; ++c) features(r, c) = scale * rng.standard_normal();
  return features;
}

inline Vector bernoulli_responses(std::uint64_t seed, std::string_view label, const Matrix& features,
                                  const Vector& beta_star) {
  SubstreamRng rng(seed, label);
  const Vector signal = features * beta_star;
  Vector responses(features.rows());
  for (Index r = 0; r < features.rows(); ++r)
    responses[r] = (rng.uniform01() < sigmoid(signal[r])) ? 1.0 : 0.0;
  return responses;
}

}  // namespace detail

// Ground-truth coefficients are standard normal; features are i.i.d. normal
// with variance 1/n so the signal x' beta_star stays O(1) as n and p grow
// together; responses are Bernoulli draws from the logistic model (also when
// the fitted loss is squared, which then acts as a linear probability model).
// Each quantity draws from its own named substream, so the generated data is
// a pure function of (seed, shapes) no matter which estimators run later.
inline SyntheticInstance generate_synthetic(const ExperimentConfig& config) {
  config.validate();
  SubstreamRng beta_rng(config.seed, "beta_star");
  Vector beta_star(config.p);
  for (Index k = 0; k < config.p; ++k) beta_star[k] = beta_rng.standard_normal();

  const double scale = 1.0 / std::sqrt(static_cast<double>(config.n));
  Matrix train_x = detail::random_features(config.seed, "train_x", config.n, config.p, scale);
  Matrix test_x = detail::random_features(config.seed, "test_x", config.num_tests, config.p, scale);
  Vector train_y = detail::bernoulli_responses(config.seed, "train_y", train_x, beta_star);
  Vector test_y = detail::bernoulli_responses(config.seed, "test_y", test_x, beta_star);

  return {Dataset(std::move(train_x), std::move(train_y)),
          Dataset(std::move(test_x), std::move(test_y)), std::move(beta_star)};
}

struct TableRow {
  Index n = 0;
  Index p = 0;
  double lambda = 0.0;
  double df_ratio = std::numeric_limits<double>::quiet_NaN();
  double tau_new_mean = std::numeric_limits<double>::quiet_NaN();
  double tau_new_std = std::numeric_limits<double>::quiet_NaN();
  double tau_if_mean = std::numeric_limits<double>::quiet_NaN();
  double tau_if_std = std::numeric_limits<double>::quiet_NaN();
  double tau_corrected_mean = std::numeric_limits<double>::quiet_NaN();
  double tau_corrected_std = std::numeric_limits<double>::quiet_NaN();
};

struct EffectiveDf {
  double df;
  double df_ratio;
};

inline EffectiveDf effective_df(const HatDiagnostics& diag, Index p) {
  require(p >= 1, "p must be at least 1");
  return {diag.df, diag.df / static_cast<double>(p)};
}

namespace detail {

struct InstanceOutput {
  FitResult fit;
  HatDiagnostics hat;
  std::vector<InfluenceRecord> records;  // train-major, then test
  // Per-test-point rank correlations against the exact influence.
  std::vector<double> tau_new, tau_if, tau_corrected;
};

// Runs one synthetic instance end to end. All per-pair quantities come from
// one factorization: M(j, i) = x0_j' G^{-1} x_i drives the closed-form
// estimators, and the exact column needs one warm-started refit per i.
inline InstanceOutput run_instance(const ExperimentConfig& config, std::uint64_t seed,
                                   bool want_tau) {
  ExperimentConfig local = config;
  local.seed = seed;
  SyntheticInstance instance = generate_synthetic(local);
  Dataset test = std::move(instance.test);

  const ObjectiveSpec spec(std::move(instance.train), LossModel{config.loss},
                           RegularizerModel::ridge(config.ridge_convention), config.lambda);
  const Index n = spec.n();
  const Index m = test.n();

  InstanceOutput out;
  out.fit = newton_fit(spec, config.solver);
  if (!out.fit.converged) throw std::runtime_error("full-data fit did not converge");
  const FittedModel model(spec, out.fit);
  out.hat = hat_diagonal(model);

  // Test-point state at the full-data fit.
  const Vector u0 = test.features * out.fit.beta;
  Vector base_value(m), d0(m);
  for (Index j = 0; j < m; ++j) {
    const LossEval e = spec.loss.eval(test.responses[j], u0[j]);
    base_value[j] = e.value;
    d0[j] = e.d1;
  }

  const Matrix cross = test.features * model.g_inv_features_t();  // m x n
  const Vector correction = (1.0 - out.hat.h.array()).inverse().matrix();

  Matrix val_if(m, n), val_corrected(m, n), val_new(m, n);
  for (Index i = 0; i < n; ++i) {
    const double d1 = model.loss_d1()[i];
    const double step = d1 * correction[i];
    for (Index j = 0; j < m; ++j) {
      const double base_if = d0[j] * cross(j, i) * d1;
      val_if(j, i) = base_if;
      val_corrected(j, i) = base_if * correction[i];
      val_new(j, i) = spec.loss.eval(test.responses[j], u0[j] + cross(j, i) * step).value -
                      base_value[j];
    }
  }

  Matrix val_true;
  if (config.estimators.with_true) {
    val_true.resize(m, n);
    parallel_for(n, config.threads, [&](Index i) {
      const FitResult refit = loo_refit(spec, i, out.fit.beta, config.solver);
      if (!refit.converged)
        throw std::runtime_error("leave-one-out refit did not converge; loosen tol or raise max_iter");
      const Vector u = test.features * refit.beta;
      for (Index j = 0; j < m; ++j)
        val_true(j, i) = spec.loss.eval(test.responses[j], u[j]).value - base_value[j];
    });
  }

  out.records.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(m));
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) {
      InfluenceRecord record;
      record.train_index = i;
      record.test_index = j;
      record.h_ii = out.hat.h[i];
      if (config.estimators.with_true) record.i_true = val_true(j, i);
      record.i_if = val_if(j, i);
      record.i_if_corrected = val_corrected(j, i);
      record.i_new = val_new(j, i);
      out.records.push_back(record);
    }
  }

  if (want_tau && config.estimators.with_true) {
    for (Index j = 0; j < m; ++j) {
      const Vector row_true = val_true.row(j).transpose();
      if (config.estimators.with_new)
        out.tau_new.push_back(kendall_tau(Vector(val_new.row(j).transpose()), row_true));
      if (config.estimators.with_if)
        out.tau_if.push_back(kendall_tau(Vector(val_if.row(j).transpose()), row_true));
      if (config.estimators.with_corrected)
        out.tau_corrected.push_back(
            kendall_tau(Vector(val_corrected.row(j).transpose()), row_true));
    }
  }
  return out;
}

inline std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty())
    return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

}  // namespace detail

struct ExperimentResult {
  std::vector<TableRow> rows;             // one summary row per configuration
  std::vector<InfluenceRecord> records;   // raw pairs from the first replicate
};

// Fits the model, computes every requested estimator over all n x m pairs,
// and summarizes per-test-point Kendall tau (mean and population std over
// the m test points, pooled across replicates). Replicate r redraws data
// with seed + r. Raw records are kept from the first replicate.
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  require(config.estimators.with_true,
          "kendall tau summaries require the exact estimator; add 'true' to the estimator set");

  std::vector<double> tau_new, tau_if, tau_corrected;
  double df_ratio_sum = 0.0;
  ExperimentResult result;
  for (int rep = 0; rep < config.replicates; ++rep) {
    detail::InstanceOutput out =
        detail::run_instance(config, config.seed + static_cast<std::uint64_t>(rep), true);
    df_ratio_sum += out.hat.df_ratio;
    tau_new.insert(tau_new.end(), out.tau_new.begin(), out.tau_new.end());
    tau_if.insert(tau_if.end(), out.tau_if.begin(), out.tau_if.end());
    tau_corrected.insert(tau_corrected.end(), out.tau_corrected.begin(), out.tau_corrected.end());
    if (rep == 0) result.records = std::move(out.records);
  }

  TableRow row;
  row.n = config.n;
  row.p = config.p;
  row.lambda = config.lambda;
  row.df_ratio = df_ratio_sum / config.replicates;
  std::tie(row.tau_new_mean, row.tau_new_std) = detail::mean_std(tau_new);
  std::tie(row.tau_if_mean, row.tau_if_std) = detail::mean_std(tau_if);
  std::tie(row.tau_corrected_mean, row.tau_corrected_std) = detail::mean_std(tau_corrected);
  result.rows.push_back(row);
  return result;
}

struct RecordRun {
  std::vector<InfluenceRecord> records;
  double df = 0.0;
  double df_ratio = 0.0;
};

// Record-only entry point (no rank-correlation summaries), so the exact
// estimator is optional here.
inline RecordRun influence_records(const ExperimentConfig& config) {
  config.validate();
  detail::InstanceOutput out = detail::run_instance(config, config.seed, false);
  return {std::move(out.records), out.hat.df, out.hat.df_ratio};
}

}  // namespace newfluence
