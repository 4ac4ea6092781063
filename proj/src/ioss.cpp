// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/ioss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace causalrep::ioss {

namespace {

constexpr long kDrawChunk = 4096;

void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha < 50.0)) {
    throw InputError("alpha_quantile must lie in [0, 50)");
  }
}

// Percentile with linear interpolation between closest ranks; `sorted`
// ascending.
double percentile_sorted(const std::vector<double>& sorted, double q) {
  const std::size_t m = sorted.size();
  if (m == 1) return sorted[0];
  const double pos = q / 100.0 * static_cast<double>(m - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= m) return sorted.back();
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

double percentile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  return percentile_sorted(values, q);
}

}  // namespace

FactorSample FactorSample::from_matrix(Eigen::MatrixXd values,
                                       std::vector<bool> discrete) {
  FactorSample z;
  if (values.rows() < 2 || values.cols() < 1) {
    throw InputError("factor sample needs at least 2 rows and 1 column");
  }
  if (!values.allFinite()) throw InputError("factor values must be finite");
  if (discrete.empty()) {
    discrete.assign(static_cast<std::size_t>(values.cols()), false);
  }
  if (static_cast<Eigen::Index>(discrete.size()) != values.cols()) {
    throw InputError("discreteness flags must match the column count");
  }
  z.col_min = values.colwise().minCoeff();
  z.col_max = values.colwise().maxCoeff();
  z.values = std::move(values);
  z.discrete = std::move(discrete);
  return z;
}

bool FactorSample::all_discrete() const {
  for (bool f : discrete) {
    if (!f) return false;
  }
  return !discrete.empty();
}

FactorSample standardize(const FactorSample& z) {
  FactorSample out = z;
  for (Eigen::Index j = 0; j < z.dims(); ++j) {
    const double range = z.col_max(j) - z.col_min(j);
    if (!(range > 0)) {
      throw DegenerateDataError("column " + std::to_string(j + 1) +
                                " is constant; its support has zero width");
    }
    out.values.col(j) = (z.values.col(j).array() - z.col_min(j)) / range;
    out.col_min(j) = 0.0;
    out.col_max(j) = 1.0;
  }
  return out;
}

long default_k_draws(int d, int n) {
  double k = n * std::pow(10.0, d);
  if (k > static_cast<double>(kMaxDraws)) return kMaxDraws;
  return static_cast<long>(k);
}

IossEstimate sample_ioss(const FactorSample& z, long k_draws,
                         double alpha_quantile, std::uint64_t seed) {
  if (k_draws < 1) throw InputError("k_draws must be at least 1");
  check_alpha(alpha_quantile);
  const FactorSample zs = standardize(z);
  const int n = static_cast<int>(zs.rows());
  const int d = static_cast<int>(zs.dims());

  // Row-major copy for cache-friendly inner scans.
  std::vector<double> pts(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      pts[static_cast<std::size_t>(i) * d + j] = zs.values(i, j);
    }
  }

  const long chunks = (k_draws + kDrawChunk - 1) / kDrawChunk;
  std::vector<double> inner(static_cast<std::size_t>(k_draws));

  // Each chunk owns a seeded stream keyed by its index, so the estimate is
  // identical no matter how the chunks are scheduled.
  parallel_for(static_cast<int>(chunks), [&](int c) {
    Rng rng(split_seed(seed, static_cast<std::uint64_t>(c)));
    const long begin = static_cast<long>(c) * kDrawChunk;
    const long end = std::min(begin + kDrawChunk, k_draws);
    std::vector<double> u(static_cast<std::size_t>(d));
    std::vector<double> dist;
    for (long k = begin; k < end; ++k) {
      for (int j = 0; j < d; ++j) u[static_cast<std::size_t>(j)] = rng.uniform01();
      if (alpha_quantile == 0.0) {
        double best = std::numeric_limits<double>::infinity();
        const double* p = pts.data();
        for (int i = 0; i < n; ++i, p += d) {
          double acc = 0;
          for (int j = 0; j < d; ++j) {
            const double diff = u[static_cast<std::size_t>(j)] - p[j];
            acc += diff * diff;
          }
          if (acc < best) best = acc;
        }
        inner[static_cast<std::size_t>(k)] = best;
      } else {
        dist.resize(static_cast<std::size_t>(n));
        const double* p = pts.data();
        for (int i = 0; i < n; ++i, p += d) {
          double acc = 0;
          for (int j = 0; j < d; ++j) {
            const double diff = u[static_cast<std::size_t>(j)] - p[j];
            acc += diff * diff;
          }
          dist[static_cast<std::size_t>(i)] = acc;
        }
        std::sort(dist.begin(), dist.end());
        inner[static_cast<std::size_t>(k)] =
            percentile_sorted(dist, alpha_quantile);
      }
    }
  });

  IossEstimate est;
  est.n = n;
  est.d = d;
  est.k_draws = k_draws;
  est.alpha_quantile = alpha_quantile;
  est.seed = seed;
  if (alpha_quantile == 0.0) {
    est.value = *std::max_element(inner.begin(), inner.end());
  } else {
    est.value = percentile(std::move(inner), 100.0 - alpha_quantile);
  }
  return est;
}

double discrete_ioss(const FactorSample& z) {
  if (!z.all_discrete()) {
    throw InputError("discrete_ioss needs all-discrete columns");
  }
  const int d = static_cast<int>(z.dims());
  const int n = static_cast<int>(z.rows());

  // Per-column grids of observed values, standardized to [0, 1].
  std::vector<std::vector<double>> grid(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    std::vector<double> vals(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) vals[static_cast<std::size_t>(i)] = z.values(i, j);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    if (vals.size() < 2) {
      throw DegenerateDataError("column " + std::to_string(j + 1) +
                                " is constant; its support has zero width");
    }
    const double lo = vals.front(), hi = vals.back();
    for (double& v : vals) v = (v - lo) / (hi - lo);
    grid[static_cast<std::size_t>(j)] = std::move(vals);
  }

  double product_size = 1;
  std::vector<std::uint64_t> radix(static_cast<std::size_t>(d));
  std::uint64_t stride = 1;
  for (int j = 0; j < d; ++j) {
    radix[static_cast<std::size_t>(j)] = stride;
    stride *= grid[static_cast<std::size_t>(j)].size();
    product_size *= static_cast<double>(grid[static_cast<std::size_t>(j)].size());
  }
  if (product_size > 1e7) {
    throw CapacityError("marginal-support product is too large to enumerate");
  }

  // Observed joint support as level-index tuples.
  std::unordered_set<std::uint64_t> joint_keys;
  std::vector<double> joint_pts;
  for (int i = 0; i < n; ++i) {
    std::uint64_t key = 0;
    std::vector<double> coords(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) {
      const auto& g = grid[static_cast<std::size_t>(j)];
      const double lo = z.col_min(j), hi = z.col_max(j);
      const double v = (z.values(i, j) - lo) / (hi - lo);
      const auto it = std::lower_bound(g.begin(), g.end(), v - 1e-12);
      const std::size_t idx = static_cast<std::size_t>(it - g.begin());
      key += radix[static_cast<std::size_t>(j)] * idx;
      coords[static_cast<std::size_t>(j)] = g[idx];
    }
    if (joint_keys.insert(key).second) {
      joint_pts.insert(joint_pts.end(), coords.begin(), coords.end());
    }
  }
  const std::size_t joint_count = joint_keys.size();

  // Directed squared Hausdorff distance from the product set to the joint
  // support; the other direction is zero because joint points lie in the
  // product.
  double worst = 0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  std::vector<double> coords(static_cast<std::size_t>(d));
  while (true) {
    std::uint64_t key = 0;
    for (int j = 0; j < d; ++j) {
      key += radix[static_cast<std::size_t>(j)] * idx[static_cast<std::size_t>(j)];
      coords[static_cast<std::size_t>(j)] =
          grid[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
    }
    if (!joint_keys.count(key)) {
      double best = std::numeric_limits<double>::infinity();
      const double* p = joint_pts.data();
      for (std::size_t t = 0; t < joint_count; ++t, p += d) {
        double acc = 0;
        for (int j = 0; j < d; ++j) {
          const double diff = coords[static_cast<std::size_t>(j)] - p[j];
          acc += diff * diff;
        }
        if (acc < best) best = acc;
      }
      worst = std::max(worst, best);
    }
    int j = 0;
    for (; j < d; ++j) {
      auto& i_j = idx[static_cast<std::size_t>(j)];
      if (++i_j < grid[static_cast<std::size_t>(j)].size()) break;
      i_j = 0;
    }
    if (j == d) break;
  }
  return worst;
}

namespace {

FactorSample entangle_with(const FactorSample& z,
                           const std::vector<double>& coef,  // [out][in][p]
                           const std::vector<bool>& normalize,
                           bool add_identity, double noise_scale, Rng& rng) {
  const int d = static_cast<int>(z.dims());
  const int n = static_cast<int>(z.rows());
  if (d < 2) throw InputError("entangling needs at least 2 factors");

  Eigen::VectorXd scale(d);
  for (int j = 0; j < d; ++j) {
    if (normalize[static_cast<std::size_t>(j)]) {
      const double mean = z.values.col(j).mean();
      const double var =
          (z.values.col(j).array() - mean).square().sum() / (n - 1);
      if (!(var > 0)) {
        throw DegenerateDataError("column " + std::to_string(j + 1) +
                                  " is constant; cannot normalize");
      }
      scale(j) = std::sqrt(var);
    } else {
      scale(j) = 1.0;
    }
  }

  Eigen::MatrixXd out(n, d);
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < d; ++o) {
      double v = add_identity ? z.values(i, o) : 0.0;
      for (int in = 0; in < d; ++in) {
        const double base = z.values(i, in) / scale(in);
        double power = 1.0;
        for (int p = 0; p < 3; ++p) {
          power *= base;
          v += coef[(static_cast<std::size_t>(o) * d + in) * 3 + p] * power;
        }
      }
      out(i, o) = v;
    }
  }
  if (noise_scale != 0.0) {
    for (int i = 0; i < n; ++i) {
      for (int o = 0; o < d; ++o) out(i, o) += noise_scale * rng.normal();
    }
  }
  return FactorSample::from_matrix(std::move(out));
}

}  // namespace

FactorSample entangle_factors(const FactorSample& z, std::uint64_t seed) {
  const int d = static_cast<int>(z.dims());
  Rng rng(seed);
  std::vector<double> coef(static_cast<std::size_t>(d) * d * 3);
  for (double& c : coef) c = rng.uniform(-2.5, 2.5);
  const std::vector<bool> normalize(static_cast<std::size_t>(d), true);
  return entangle_with(z, coef, normalize, /*add_identity=*/true,
                       /*noise_scale=*/0.0, rng);
}

FactorSample entangle_factors_preset(const FactorSample& z,
                                     std::uint64_t seed, double noise_scale) {
  if (z.dims() != 3) {
    throw InputError("the preset entangler is defined for exactly 3 factors");
  }
  std::vector<double> coef(27, 0.0);
  auto set = [&](int out, int in, int power, double value) {
    coef[(static_cast<std::size_t>(out) * 3 + in) * 3 + (power - 1)] = value;
  };
  set(0, 0, 1, 6.0);
  set(0, 1, 3, 8.0);
  set(0, 2, 3, 1.0);
  set(1, 0, 2, 12.0);
  set(1, 1, 2, 1.0);
  set(1, 2, 1, 8.0);
  set(2, 0, 3, 0.0);
  set(2, 1, 1, 4.0);
  set(2, 2, 2, 4.0);
  Rng rng(seed);
  return entangle_with(z, coef, {false, true, true}, /*add_identity=*/false,
                       noise_scale, rng);
}

FactorSample entangle_factors_custom(const FactorSample& z,
                                     const std::vector<double>& coefficients,
                                     const std::vector<bool>& normalize,
                                     bool add_identity, double noise_scale,
                                     std::uint64_t seed) {
  const std::size_t d = static_cast<std::size_t>(z.dims());
  if (coefficients.size() != d * d * 3 || normalize.size() != d) {
    throw InputError("entangler coefficient shape mismatch");
  }
  Rng rng(seed);
  return entangle_with(z, coefficients, normalize, add_identity, noise_scale,
                       rng);
}

DistinguishResult distinguish_experiment(
    const std::function<FactorSample(std::uint64_t seed)>& factor_gen,
    int trials, long k_draws, std::uint64_t seed,
    const Entangler& entangler) {
  if (trials < 1) throw InputError("trials must be at least 1");
  const Entangler entangle =
      entangler ? entangler : [](const FactorSample& z, std::uint64_t s) {
        return entangle_factors(z, s);
      };
  std::vector<int> correct(static_cast<std::size_t>(trials), 0);
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = split_seed(seed, static_cast<std::uint64_t>(t));
    const FactorSample original = factor_gen(split_seed(trial_seed, 0));
    const FactorSample entangled =
        entangle(original, split_seed(trial_seed, 1));
    const IossEstimate a =
        sample_ioss(original, k_draws, 0.0, split_seed(trial_seed, 2));
    const IossEstimate b =
        sample_ioss(entangled, k_draws, 0.0, split_seed(trial_seed, 3));
    correct[static_cast<std::size_t>(t)] = a.value < b.value ? 1 : 0;
  }
  DistinguishResult result;
  result.trials = trials;
  int sum = 0;
  for (int c : correct) sum += c;
  result.proportion_correct = static_cast<double>(sum) / trials;
  return result;
}

double surrogate_ioss(const Eigen::MatrixXd& code,
                      const Eigen::MatrixXd& draws, double temperature,
                      double alpha_quantile, Eigen::MatrixXd* grad) {
  check_alpha(alpha_quantile);
  const int n = static_cast<int>(code.rows());
  const int d = static_cast<int>(code.cols());
  const long k = static_cast<long>(draws.rows());
  if (draws.cols() != d) throw InputError("draw dimension mismatch");
  const double t = temperature;

  // Standardize with stop-gradient extremes; collapsed columns fall back to
  // unit range so the loss stays finite.
  Eigen::VectorXd lo(d), inv_range(d);
  for (int j = 0; j < d; ++j) {
    lo(j) = code.col(j).minCoeff();
    const double range = code.col(j).maxCoeff() - lo(j);
    inv_range(j) = range > 1e-12 ? 1.0 / range : 1.0;
  }
  Eigen::MatrixXd zbar(n, d);
  for (int j = 0; j < d; ++j) {
    zbar.col(j) = (code.col(j).array() - lo(j)) * inv_range(j);
  }

  // Softmin over samples per draw.
  std::vector<double> sm(static_cast<std::size_t>(k));
  Eigen::MatrixXd weights(n, k);  // softmin weights per draw
  for (long kk = 0; kk < k; ++kk) {
    double dmin = std::numeric_limits<double>::infinity();
    Eigen::VectorXd dist(n);
    for (int i = 0; i < n; ++i) {
      double acc = 0;
      for (int j = 0; j < d; ++j) {
        const double diff = zbar(i, j) - draws(kk, j);
        acc += diff * diff;
      }
      dist(i) = acc;
      dmin = std::min(dmin, acc);
    }
    double denom = 0;
    for (int i = 0; i < n; ++i) {
      weights(i, kk) = std::exp(-(dist(i) - dmin) / t);
      denom += weights(i, kk);
    }
    weights.col(kk) /= denom;
    sm[static_cast<std::size_t>(kk)] = dmin - t * std::log(denom / n);
  }

  // Trim the top alpha% of draw values (hard selection), then aggregate the
  // rest with a softmax-weighted average, a smooth stand-in for max.
  std::vector<long> order(static_cast<std::size_t>(k));
  for (long kk = 0; kk < k; ++kk) order[static_cast<std::size_t>(kk)] = kk;
  std::sort(order.begin(), order.end(),
            [&](long a, long b) { return sm[static_cast<std::size_t>(a)] < sm[static_cast<std::size_t>(b)]; });
  const long trimmed =
      std::min<long>(k - 1, static_cast<long>(std::ceil(alpha_quantile / 100.0 * k)));
  const long kept = k - trimmed;

  double top = -std::numeric_limits<double>::infinity();
  for (long r = 0; r < kept; ++r) {
    top = std::max(top, sm[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])]);
  }
  double denom = 0, value = 0;
  std::vector<double> p(static_cast<std::size_t>(k), 0.0);
  for (long r = 0; r < kept; ++r) {
    const long kk = order[static_cast<std::size_t>(r)];
    const double e = std::exp((sm[static_cast<std::size_t>(kk)] - top) / t);
    p[static_cast<std::size_t>(kk)] = e;
    denom += e;
  }
  for (long kk = 0; kk < k; ++kk) {
    p[static_cast<std::size_t>(kk)] /= denom;
    value += p[static_cast<std::size_t>(kk)] * sm[static_cast<std::size_t>(kk)];
  }

  if (grad) {
    grad->setZero(n, d);
    for (long kk = 0; kk < k; ++kk) {
      if (p[static_cast<std::size_t>(kk)] == 0.0) continue;
      const double dagg_dsm =
          p[static_cast<std::size_t>(kk)] *
          (1.0 + (sm[static_cast<std::size_t>(kk)] - value) / t);
      for (int i = 0; i < n; ++i) {
        const double w = weights(i, kk);
        if (w == 0.0) continue;
        for (int j = 0; j < d; ++j) {
          (*grad)(i, j) += dagg_dsm * w * 2.0 *
                           (zbar(i, j) - draws(kk, j)) * inv_range(j);
        }
      }
    }
  }
  return value;
}

IossTrainResult ioss_train(const DataMatrix& x, const IossTrainConfig& cfg) {
  if (cfg.dim < 1 || cfg.dim > x.cols()) {
    throw InputError("code dimension must lie in [1, m]");
  }
  if (cfg.lambda < 0) throw InputError("lambda must be nonnegative");
  const int n = static_cast<int>(x.rows());
  const int m = static_cast<int>(x.cols());
  const int d = cfg.dim;

  const Eigen::VectorXd mean = x.column_means().transpose();
  const Eigen::MatrixXd xc = x.values.rowwise() - mean.transpose();

  Rng init_rng(split_seed(cfg.seed, 0));
  Eigen::MatrixXd enc(m, d), dec(d, m);
  const double init_scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < d; ++j) enc(i, j) = init_scale * init_rng.normal();
  }
  for (int j = 0; j < d; ++j) {
    for (int i = 0; i < m; ++i) dec(j, i) = init_scale * init_rng.normal();
  }

  // One fixed draw set per run keeps the objective deterministic, which
  // makes the backtracking acceptance test meaningful.
  Rng draw_rng(split_seed(cfg.seed, 1));
  Eigen::MatrixXd draws(cfg.surrogate_draws, d);
  for (long kk = 0; kk < cfg.surrogate_draws; ++kk) {
    for (int j = 0; j < d; ++j) draws(kk, j) = draw_rng.uniform01();
  }

  const double rec_norm = 1.0 / (static_cast<double>(n) * m);
  double surrogate_value = 0;
  auto total_loss = [&](const Eigen::MatrixXd& e, const Eigen::MatrixXd& dd,
                        double* rec_out, double* sur_out) {
    const Eigen::MatrixXd z = xc * e;
    const Eigen::MatrixXd resid = z * dd - xc;
    const double rec = resid.squaredNorm() * rec_norm;
    double sur = 0;
    if (cfg.lambda > 0) {
      sur = surrogate_ioss(z, draws, cfg.softmin_temperature,
                           cfg.alpha_quantile, nullptr);
    }
    if (rec_out) *rec_out = rec;
    if (sur_out) *sur_out = sur;
    return rec + cfg.lambda * sur;
  };

  IossTrainResult result;
  double rec = 0;
  double loss = total_loss(enc, dec, &rec, &surrogate_value);
  if (!std::isfinite(loss)) throw NumericalError("initial loss is not finite");
  result.trace.push_back(loss);

  double rate = cfg.learning_rate;
  for (int it = 0; it < cfg.iterations; ++it) {
    const Eigen::MatrixXd z = xc * enc;
    const Eigen::MatrixXd resid = z * dec - xc;  // n x m
    Eigen::MatrixXd grad_enc =
        2.0 * rec_norm * (xc.transpose() * (resid * dec.transpose()));
    Eigen::MatrixXd grad_dec = 2.0 * rec_norm * (z.transpose() * resid);
    if (cfg.lambda > 0) {
      Eigen::MatrixXd grad_z;
      surrogate_ioss(z, draws, cfg.softmin_temperature, cfg.alpha_quantile,
                     &grad_z);
      grad_enc += cfg.lambda * (xc.transpose() * grad_z);
    }
    if (!grad_enc.allFinite() || !grad_dec.allFinite()) {
      throw NumericalError("gradient is not finite");
    }

    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      const Eigen::MatrixXd enc_new = enc - rate * grad_enc;
      const Eigen::MatrixXd dec_new = dec - rate * grad_dec;
      double rec_new = 0, sur_new = 0;
      const double loss_new = total_loss(enc_new, dec_new, &rec_new, &sur_new);
      if (std::isfinite(loss_new) && loss_new < loss) {
        enc = enc_new;
        dec = dec_new;
        loss = loss_new;
        rec = rec_new;
        surrogate_value = sur_new;
        rate = std::min(rate * 1.2, 1e3);
        accepted = true;
        break;
      }
      rate *= 0.5;
    }
    if (!accepted) break;
    result.trace.push_back(loss);
  }

  result.encoder = enc;
  result.decoder = dec;
  result.data_mean = mean;
  result.reconstruction_loss = rec;
  result.surrogate_value = surrogate_value;

  const Eigen::MatrixXd z_final = xc * enc;
  const long report = cfg.report_draws > 0 ? cfg.report_draws
                                           : default_k_draws(d, n);
  result.exact_ioss = sample_ioss(FactorSample::from_matrix(z_final), report,
                                  0.0, split_seed(cfg.seed, 2));
  return result;
}

Json IossEstimate::to_json() const {
  return Json{{"value", value},       {"n", n},
              {"d", d},               {"k_draws", k_draws},
              {"alpha_quantile", alpha_quantile}, {"seed", seed}};
}

Json DistinguishResult::to_json() const {
  return Json{{"proportion_correct", proportion_correct}, {"trials", trials}};
}

}  // namespace causalrep::ioss
