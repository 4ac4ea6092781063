// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#ifndef CAUSALREP_COMMON_HPP_
#define CAUSALREP_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace causalrep {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto exit codes (input 2, numerical 3).
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments, malformed files, out-of-range parameters.
class InputError : public Error {
 public:
  using Error::Error;
};

// Exact enumeration asked for more state than the engine supports.
class CapacityError : public InputError {
 public:
  using InputError::InputError;
};

// A conditioning or mixture event has zero probability.
class DegenerateEventError : public Error {
 public:
  using Error::Error;
};

// Data does not support the requested fit (rank-deficient spectrum, ...).
class DegenerateDataError : public Error {
 public:
  using Error::Error;
};

// Numerical failure: non-finite values, degenerate models.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class CollinearityError : public NumericalError {
 public:
  CollinearityError(const std::string& what, double condition_number)
      : NumericalError(what), condition_number_(condition_number) {}
  double condition_number() const { return condition_number_; }

 private:
  double condition_number_ = 0;
};

// The pinpointability gate failed where an algorithm requires it to pass.
class PinpointabilityError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Deterministic random numbers. std::mt19937_64 has a standardized output
// sequence, but the standard distributions do not, so the transforms here
// are spelled out to make every stream bitwise reproducible across
// platforms and toolchains.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent child seed from a root seed and a path of indices.
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t a) {
  return splitmix64(seed ^ splitmix64(a + 0x632be59bd9b4e019ULL));
}
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t a,
                                std::uint64_t b) {
  return split_seed(split_seed(seed, a), b);
}
inline std::uint64_t split_seed(std::uint64_t seed, std::uint64_t a,
                                std::uint64_t b, std::uint64_t c) {
  return split_seed(split_seed(seed, a, b), c);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 significant bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Box-Muller; two uniforms per draw, no cached state.
  double normal() {
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw InputError("uniform_index: n must be positive");
    return engine_() % n;
  }

  int bernoulli(double p) { return uniform01() < p ? 1 : 0; }

 private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Bounded parallel map. Results must not depend on the worker count; callers
// achieve that by deriving any randomness from the item index, never from
// the execution order. CAUSALREP_THREADS caps the pool.
// ---------------------------------------------------------------------------

int thread_budget();
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace causalrep

#endif  // CAUSALREP_COMMON_HPP_
