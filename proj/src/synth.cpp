// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace causalrep::synth {

scm::BinaryScm gen_binary_poc(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("p must lie in [0, 1]");
  std::vector<scm::Variable> vars;
  vars.push_back({"Z1", {}, scm::Expr::kConst0, {}, 0.4});
  vars.push_back({"Z2", {0}, scm::Expr::kIdentity, {}, p});
  vars.push_back({"Z1andZ2", {0, 1}, scm::Expr::kAnd, {}, 0.0});
  vars.push_back({"Y1", {0}, scm::Expr::kIdentity, {}, 0.2});
  vars.push_back({"Y2", {2}, scm::Expr::kIdentity, {}, 0.2});
  return scm::BinaryScm::from_variables(std::move(vars));
}

namespace {

// Latent draw with covariance shared_var * J + unique_var * I via a single
// common factor.
Eigen::MatrixXd one_factor_gaussian(int n, int m, double shared_var,
                                    double unique_var, Rng& rng) {
  Eigen::MatrixXd out(n, m);
  const double shared_sd = std::sqrt(shared_var);
  const double unique_sd = std::sqrt(unique_var);
  for (int i = 0; i < n; ++i) {
    const double g = rng.normal();
    for (int j = 0; j < m; ++j) {
      out(i, j) = shared_sd * g + unique_sd * rng.normal();
    }
  }
  return out;
}

LabeledDataset toy_linear_split(int n, double shared_var,
                                const Eigen::Vector2d& beta, Rng& rng,
                                Eigen::MatrixXd* latent_out) {
  constexpr int kCols = 5;
  Eigen::MatrixXd latent = one_factor_gaussian(n, kCols, shared_var, 0.05, rng);
  Eigen::MatrixXd x(n, kCols);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < kCols; ++j) {
      const double noise_sd = j < 2 ? 0.4 : 0.3;
      x(i, j) = latent(i, j) + noise_sd * rng.normal();
    }
  }
  LabeledDataset data;
  data.y.resize(n);
  for (int i = 0; i < n; ++i) {
    data.y(i) = beta(0) * x(i, 0) + beta(1) * x(i, 1) + rng.normal();
  }
  data.x = DataMatrix(std::move(x));
  *latent_out = std::move(latent);
  return data;
}

}  // namespace

ToyLinearData gen_toy_linear(std::uint64_t seed, int n_train, int n_test) {
  if (n_train < 8 || n_test < 8) throw InputError("sample sizes too small");
  ToyLinearData out;
  Rng beta_rng(split_seed(seed, 0));
  out.beta << beta_rng.uniform(0.0, 10.0), beta_rng.uniform(0.0, 10.0);
  out.causal_columns = {0, 1};
  Rng train_rng(split_seed(seed, 1));
  out.train =
      toy_linear_split(n_train, 0.95, out.beta, train_rng, &out.train_latent);
  Rng test_rng(split_seed(seed, 2));
  out.test =
      toy_linear_split(n_test, 0.05, out.beta, test_rng, &out.test_latent);
  return out;
}

PixelLinearData gen_pixel_linear(std::uint64_t seed) {
  constexpr int kRows = 1000;
  constexpr int kCols = 5;
  // One-factor covariance loading * loading^T + psi * I. With unit loading
  // magnitudes and psi = 0.03 every pairwise correlation is 1/1.03 ~ 0.97
  // in magnitude, and the factor posterior is sharp enough to pinpoint.
  const double kPsi = 0.03;
  const double loading_sign[kCols] = {1.0, 1.0, -1.0, 1.0, -1.0};
  const double kNoiseSd = 0.25;

  Rng rng(seed);
  Eigen::MatrixXd x(kRows, kCols);
  for (int i = 0; i < kRows; ++i) {
    const double factor = rng.normal();
    for (int j = 0; j < kCols; ++j) {
      x(i, j) = loading_sign[j] * factor + std::sqrt(kPsi) * rng.normal();
    }
  }
  PixelLinearData out;
  out.beta << 0.5, 1.0;
  out.causal_columns = {0, 1};
  out.data.y.resize(kRows);
  for (int i = 0; i < kRows; ++i) {
    out.data.y(i) = 0.5 * x(i, 0) + 1.0 * x(i, 1) + kNoiseSd * rng.normal();
  }
  out.data.x = DataMatrix(std::move(x));
  return out;
}

namespace {

Eigen::VectorXd average_ranks(const Eigen::VectorXd& v) {
  const Eigen::Index n = v.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && v(order[static_cast<std::size_t>(j + 1)]) ==
                            v(order[static_cast<std::size_t>(i)])) {
      ++j;
    }
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) {
      ranks(order[static_cast<std::size_t>(k)]) = avg;
    }
    i = j + 1;
  }
  return ranks;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean();
  const double mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma;
  const Eigen::ArrayXd db = b.array() - mb;
  const double denom = std::sqrt(da.square().sum() * db.square().sum());
  if (denom <= 0) return 0.0;
  return (da * db).sum() / denom;
}

}  // namespace

double mean_pairwise_spearman(const Eigen::MatrixXd& values) {
  const Eigen::Index d = values.cols();
  if (d < 2) throw InputError("need at least two columns");
  std::vector<Eigen::VectorXd> ranks;
  ranks.reserve(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    ranks.push_back(average_ranks(values.col(j)));
  }
  double acc = 0;
  int pairs = 0;
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = a + 1; b < d; ++b) {
      acc += pearson(ranks[static_cast<std::size_t>(a)],
                     ranks[static_cast<std::size_t>(b)]);
      ++pairs;
    }
  }
  return acc / pairs;
}

namespace {

struct FactorPlan {
  int d = 0;
  int levels = 0;
  std::vector<std::vector<int>> sorted_tuples;  // sum-descending grid order
};

FactorPlan make_plan(int d, int levels) {
  FactorPlan plan;
  plan.d = d;
  plan.levels = levels;
  std::vector<int> tuple(static_cast<std::size_t>(d), 0);
  while (true) {
    plan.sorted_tuples.push_back(tuple);
    int j = 0;
    for (; j < d; ++j) {
      if (++tuple[static_cast<std::size_t>(j)] < levels) break;
      tuple[static_cast<std::size_t>(j)] = 0;
    }
    if (j == d) break;
  }
  std::sort(plan.sorted_tuples.begin(), plan.sorted_tuples.end(),
            [](const std::vector<int>& a, const std::vector<int>& b) {
              const int sa = std::accumulate(a.begin(), a.end(), 0);
              const int sb = std::accumulate(b.begin(), b.end(), 0);
              if (sa != sb) return sa > sb;
              return a > b;  // lex descending tie break
            });
  return plan;
}

Eigen::MatrixXd realize_sample(const FactorPlan& plan, int n, int n_top,
                               std::uint64_t seed) {
  const int g = static_cast<int>(plan.sorted_tuples.size());
  const int replication = (n + g - 1) / g;
  Eigen::MatrixXd values(n, plan.d);
  int row = 0;
  // Coverage: one copy of every grid tuple keeps the product support
  // intact.
  for (int t = 0; t < g; ++t) {
    for (int j = 0; j < plan.d; ++j) {
      values(row, j) = plan.sorted_tuples[static_cast<std::size_t>(t)]
                                         [static_cast<std::size_t>(j)];
    }
    ++row;
  }
  // Top block of the sum-sorted, replicated grid.
  for (int b = 0; b < n_top; ++b) {
    const int t = std::min(b / replication, g - 1);
    for (int j = 0; j < plan.d; ++j) {
      values(row, j) = plan.sorted_tuples[static_cast<std::size_t>(t)]
                                         [static_cast<std::size_t>(j)];
    }
    ++row;
  }
  // Random remainder, uniform over the grid.
  Rng rng(seed);
  while (row < n) {
    const int t = static_cast<int>(rng.uniform_index(
        static_cast<std::uint64_t>(g)));
    for (int j = 0; j < plan.d; ++j) {
      values(row, j) = plan.sorted_tuples[static_cast<std::size_t>(t)]
                                         [static_cast<std::size_t>(j)];
    }
    ++row;
  }
  return values;
}

}  // namespace

ioss::FactorSample gen_correlated_factors(int d, int levels,
                                          double target_corr, int n,
                                          std::uint64_t seed) {
  if (d < 2) throw InputError("need at least 2 factors");
  if (levels < 2) throw InputError("need at least 2 levels per factor");
  double grid_size = 1;
  for (int j = 0; j < d; ++j) grid_size *= levels;
  if (grid_size > 1e6) throw InputError("factor grid is too large");
  const int g = static_cast<int>(grid_size);
  if (n < 2 * g) {
    throw InputError("sample size must be at least twice the grid size so "
                     "the correlation remains tunable");
  }

  const FactorPlan plan = make_plan(d, levels);
  const int max_top = n - g;

  // Scan block sizes and keep the sample whose mean pairwise Spearman
  // correlation lands closest to the target.
  constexpr int kCandidates = 33;
  double best_gap = std::numeric_limits<double>::infinity();
  int best_candidate = -1;
  int best_top = 0;
  double best_corr = 0;
  for (int c = 0; c < kCandidates; ++c) {
    const int n_top = static_cast<int>(
        std::llround(static_cast<double>(max_top) * c / (kCandidates - 1)));
    const Eigen::MatrixXd values =
        realize_sample(plan, n, n_top, split_seed(seed, 7, c));
    const double corr = mean_pairwise_spearman(values);
    const double gap = std::abs(corr - target_corr);
    if (gap < best_gap) {
      best_gap = gap;
      best_candidate = c;
      best_top = n_top;
      best_corr = corr;
    }
  }
  if (best_gap > 0.05) {
    throw InputError("target correlation " + format_double(target_corr) +
                     " is not achievable with this grid (closest: " +
                     format_double(best_corr) + ")");
  }
  Eigen::MatrixXd values =
      realize_sample(plan, n, best_top, split_seed(seed, 7, best_candidate));
  return ioss::FactorSample::from_matrix(
      std::move(values), std::vector<bool>(static_cast<std::size_t>(d), true));
}

}  // namespace causalrep::synth
