// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

// Scalar-templated evaluation of the representation-learning objective.
// Instantiated with double for values and with a forward-mode dual number
// for gradients, so both routes share one implementation of the math.

#ifndef CAUSALREP_SRC_CAUSAL_REP_EVAL_HPP_
#define CAUSALREP_SRC_CAUSAL_REP_EVAL_HPP_

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "causalrep/common.hpp"
#include "causalrep/pnsbound.hpp"

namespace causalrep::rep::detail {

// Value plus one directional derivative.
struct Dual {
  double v = 0;
  double d = 0;

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by design
  Dual(double value, double deriv) : v(value), d(deriv) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator-(Dual a) { return {-a.v, -a.d}; }
inline Dual operator*(Dual a, Dual b) {
  return {a.v * b.v, a.d * b.v + a.v * b.d};
}
inline Dual operator/(Dual a, Dual b) {
  const double inv = 1.0 / b.v;
  return {a.v * inv, (a.d - a.v * inv * b.d) * inv};
}
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }
inline Dual& operator-=(Dual& a, Dual b) { return a = a - b; }
inline Dual& operator*=(Dual& a, Dual b) { return a = a * b; }
inline bool operator<(Dual a, Dual b) { return a.v < b.v; }
inline bool operator>(Dual a, Dual b) { return a.v > b.v; }
inline Dual exp(Dual a) {
  const double e = std::exp(a.v);
  return {e, e * a.d};
}
inline Dual log(Dual a) { return {std::log(a.v), a.d / a.v}; }
inline Dual sqrt(Dual a) {
  const double s = std::sqrt(a.v);
  return {s, 0.5 * a.d / s};
}

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }

// Cholesky solve for the small SPD systems of the inner regressions.
template <typename T>
std::vector<T> cholesky_solve(std::vector<T> a, std::vector<T> b, int q) {
  for (int j = 0; j < q; ++j) {
    for (int k = 0; k < j; ++k) {
      a[j * q + j] -= a[j * q + k] * a[j * q + k];
    }
    if (!(value_of(a[j * q + j]) > 0)) {
      throw NumericalError("inner regression system is not positive definite");
    }
    a[j * q + j] = sqrt(a[j * q + j]);
    for (int i = j + 1; i < q; ++i) {
      for (int k = 0; k < j; ++k) {
        a[i * q + j] -= a[i * q + k] * a[j * q + k];
      }
      a[i * q + j] = a[i * q + j] / a[j * q + j];
    }
  }
  for (int i = 0; i < q; ++i) {  // forward
    for (int k = 0; k < i; ++k) b[i] -= a[i * q + k] * b[k];
    b[i] = b[i] / a[i * q + i];
  }
  for (int i = q - 1; i >= 0; --i) {  // backward
    for (int k = i + 1; k < q; ++k) b[i] -= a[k * q + i] * b[k];
    b[i] = b[i] / a[i * q + i];
  }
  return b;
}

template <typename T>
using Vec = std::vector<T>;

// Objective of the simplex-reparameterized representation: the sum over
// outcomes and dimensions of the conditional lower-bound terms, plus the
// positivity and weight-norm penalties. `logits` is column-major m x d.
template <typename T>
T evaluate_objective(const Eigen::MatrixXd& x, const Eigen::MatrixXd& outcomes,
                     const Eigen::MatrixXd& c_hats, const Vec<T>& logits,
                     int d, double temperature, double lambda, double alpha) {
  const int n = static_cast<int>(x.rows());
  const int m = static_cast<int>(x.cols());
  const int k = static_cast<int>(c_hats.cols());
  const int s_count = static_cast<int>(outcomes.cols());
  const int q = 1 + d + k;

  // Simplex weights: per-column softmax of logits / temperature.
  Vec<T> w(static_cast<std::size_t>(m) * d);
  for (int j = 0; j < d; ++j) {
    double top = value_of(logits[j * m]);
    for (int l = 1; l < m; ++l) {
      top = std::max(top, value_of(logits[j * m + l]));
    }
    T denom = 0.0;
    for (int l = 0; l < m; ++l) {
      const T e = exp((logits[j * m + l] - top) / T(temperature));
      w[j * m + l] = e;
      denom += e;
    }
    for (int l = 0; l < m; ++l) w[j * m + l] = w[j * m + l] / denom;
  }

  // f(X) = X W.
  Vec<T> f(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      T acc = 0.0;
      for (int l = 0; l < m; ++l) acc += T(x(i, l)) * w[j * m + l];
      f[static_cast<std::size_t>(j) * n + i] = acc;
    }
  }

  Vec<T> f_mean(d);
  for (int j = 0; j < d; ++j) {
    T s = 0.0;
    for (int i = 0; i < n; ++i) s += f[static_cast<std::size_t>(j) * n + i];
    f_mean[j] = s / T(static_cast<double>(n));
  }
  Eigen::RowVectorXd c_mean = Eigen::RowVectorXd::Zero(k);
  for (int kk = 0; kk < k; ++kk) {
    double s = 0;
    for (int i = 0; i < n; ++i) s += c_hats(i, kk);
    c_mean(kk) = s / static_cast<double>(n);
  }

  // Gram of the design [1, f(X), C], jittered like the production fit.
  Vec<T> gram(static_cast<std::size_t>(q) * q, T(0.0));
  auto at = [&](int r, int c) -> T& { return gram[r * q + c]; };
  at(0, 0) = static_cast<double>(n);
  for (int j = 0; j < d; ++j) {
    at(0, 1 + j) = f_mean[j] * T(static_cast<double>(n));
    at(1 + j, 0) = at(0, 1 + j);
  }
  for (int kk = 0; kk < k; ++kk) {
    at(0, 1 + d + kk) = c_mean(kk) * static_cast<double>(n);
    at(1 + d + kk, 0) = at(0, 1 + d + kk);
  }
  for (int j1 = 0; j1 < d; ++j1) {
    for (int j2 = j1; j2 < d; ++j2) {
      T acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += f[static_cast<std::size_t>(j1) * n + i] *
               f[static_cast<std::size_t>(j2) * n + i];
      }
      at(1 + j1, 1 + j2) = acc;
      at(1 + j2, 1 + j1) = acc;
    }
    for (int kk = 0; kk < k; ++kk) {
      T acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += f[static_cast<std::size_t>(j1) * n + i] * T(c_hats(i, kk));
      }
      at(1 + j1, 1 + d + kk) = acc;
      at(1 + d + kk, 1 + j1) = acc;
    }
  }
  for (int k1 = 0; k1 < k; ++k1) {
    for (int k2 = k1; k2 < k; ++k2) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += c_hats(i, k1) * c_hats(i, k2);
      at(1 + d + k1, 1 + d + k2) = acc;
      at(1 + d + k2, 1 + d + k1) = acc;
    }
  }
  for (int r = 0; r < q; ++r) at(r, r) += pns::kGramJitter;

  T pns_total = 0.0;
  for (int s = 0; s < s_count; ++s) {
    Vec<T> rhs(q, T(0.0));
    double ysum = 0;
    for (int i = 0; i < n; ++i) ysum += outcomes(i, s);
    rhs[0] = ysum;
    for (int j = 0; j < d; ++j) {
      T acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += f[static_cast<std::size_t>(j) * n + i] * T(outcomes(i, s));
      }
      rhs[1 + j] = acc;
    }
    for (int kk = 0; kk < k; ++kk) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += c_hats(i, kk) * outcomes(i, s);
      rhs[1 + d + kk] = acc;
    }
    const Vec<T> theta = cholesky_solve(gram, rhs, q);

    T ssr = 0.0;
    for (int i = 0; i < n; ++i) {
      T fitted = theta[0];
      for (int j = 0; j < d; ++j) {
        fitted += theta[1 + j] * f[static_cast<std::size_t>(j) * n + i];
      }
      for (int kk = 0; kk < k; ++kk) {
        fitted += theta[1 + d + kk] * T(c_hats(i, kk));
      }
      const T r = T(outcomes(i, s)) - fitted;
      ssr += r * r;
    }
    const T sigma2 = ssr / T(static_cast<double>(n));
    if (!(value_of(sigma2) > 0)) {
      throw NumericalError("inner outcome model has zero residual variance");
    }

    for (int j = 0; j < d; ++j) {
      T quad = 0.0, cross = 0.0;
      for (int i = 0; i < n; ++i) {
        const T a = theta[1 + j] *
                    (f[static_cast<std::size_t>(j) * n + i] - f_mean[j]);
        T g = 0.0;
        for (int kk = 0; kk < k; ++kk) {
          g += theta[1 + d + kk] * T(c_hats(i, kk) - c_mean(kk));
        }
        quad += a * a;
        cross += a * g;
      }
      pns_total += (quad + T(2.0) * cross) / (T(2.0) * sigma2);
    }
  }

  // Positivity penalty: mean of log(1 - Rsq(f_j ; C)), clamped away from
  // the singularity.
  Vec<double> gram_c(static_cast<std::size_t>(1 + k) * (1 + k), 0.0);
  gram_c[0] = static_cast<double>(n) + pns::kGramJitter;
  for (int kk = 0; kk < k; ++kk) {
    gram_c[(1 + kk)] = c_mean(kk) * static_cast<double>(n);
    gram_c[(1 + kk) * (1 + k)] = gram_c[1 + kk];
    for (int k2 = kk; k2 < k; ++k2) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += c_hats(i, kk) * c_hats(i, k2);
      gram_c[(1 + kk) * (1 + k) + 1 + k2] = acc;
      gram_c[(1 + k2) * (1 + k) + 1 + kk] = acc;
    }
  }
  for (int kk = 0; kk < k; ++kk) {
    gram_c[(1 + kk) * (1 + k) + 1 + kk] += pns::kGramJitter;
  }

  T penalty = 0.0;
  for (int j = 0; j < d; ++j) {
    T sst = 0.0;
    for (int i = 0; i < n; ++i) {
      const T dev = f[static_cast<std::size_t>(j) * n + i] - f_mean[j];
      sst += dev * dev;
    }
    T rsq;
    if (!(value_of(sst) > 1e-300)) {
      rsq = 1.0 - 1e-6;  // constant dimension: treat as fully explained
    } else {
      Vec<T> gc(gram_c.size());
      for (std::size_t ii = 0; ii < gram_c.size(); ++ii) gc[ii] = gram_c[ii];
      Vec<T> rhs_c(1 + k, T(0.0));
      rhs_c[0] = f_mean[j] * T(static_cast<double>(n));
      for (int kk = 0; kk < k; ++kk) {
        T acc = 0.0;
        for (int i = 0; i < n; ++i) {
          acc += T(c_hats(i, kk)) * f[static_cast<std::size_t>(j) * n + i];
        }
        rhs_c[1 + kk] = acc;
      }
      const Vec<T> theta_c = cholesky_solve(gc, rhs_c, 1 + k);
      T ssr = 0.0;
      for (int i = 0; i < n; ++i) {
        T fitted = theta_c[0];
        for (int kk = 0; kk < k; ++kk) {
          fitted += theta_c[1 + kk] * T(c_hats(i, kk));
        }
        const T r = f[static_cast<std::size_t>(j) * n + i] - fitted;
        ssr += r * r;
      }
      rsq = T(1.0) - ssr / sst;
      if (value_of(rsq) < 0.0) rsq = 0.0;
      if (value_of(rsq) > 1.0 - 1e-6) rsq = 1.0 - 1e-6;
    }
    penalty += log(T(1.0) - rsq);
  }
  penalty = penalty / T(static_cast<double>(d));

  T wnorm = 0.0;
  for (const T& wi : w) wnorm += wi * wi;

  return pns_total + T(lambda) * (penalty - T(alpha) * wnorm);
}

}  // namespace causalrep::rep::detail

#endif  // CAUSALREP_SRC_CAUSAL_REP_EVAL_HPP_
