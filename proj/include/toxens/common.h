/*
 * Copyright 2026 The toxens Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TOXENS_COMMON_H_
#define TOXENS_COMMON_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace toxens {

// Categories of failure. The CLI maps the first group to exit code 1 and the
// second to exit code 2.
enum class ErrorKind {
  kIngestion,
  kArgument,
  kConfiguration,
  kParse,
  kValidation,
  kUndefinedMetric,
  kReport,
  kTraining,
  kInternal,
  kIo,
};

const char* ErrorKindName(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  // True for errors caused by bad user input (config, data, arguments).
  bool is_validation() const {
    return kind_ != ErrorKind::kTraining && kind_ != ErrorKind::kInternal &&
           kind_ != ErrorKind::kIo;
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] void Fail(ErrorKind kind, const std::string& message);

// 64-bit FNV-1a.
uint64_t Fnv1a64(std::string_view data, uint64_t basis = 14695981039346656037ULL);
// 32-bit FNV-1a, used for subword bucket hashing.
uint32_t Fnv1a32(std::string_view data);

std::string HexDigest(uint64_t value);

// Counter-based generator: the i-th draw of stream s under seed k is a pure
// function of (k, s, i). Streams let independent consumers (folds, threads,
// layers) draw without sharing state.
class CounterRng {
 public:
  explicit CounterRng(uint64_t seed, uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  uint64_t NextU64();
  // Uniform in [0, 1) with 53 bits of resolution.
  double NextDouble();
  // Uniform integer in [0, bound). bound must be positive.
  uint64_t NextBelow(uint64_t bound);
  // Uniform in [lo, hi).
  double Uniform(double lo, double hi) { return lo + (hi - lo) * NextDouble(); }
  bool Bernoulli(double p) { return NextDouble() < p; }

  // A fresh, statistically independent generator.
  CounterRng Fork(uint64_t stream) const;

  uint64_t seed() const { return seed_; }
  uint64_t stream() const { return stream_; }
  uint64_t counter() const { return counter_; }

 private:
  uint64_t seed_;
  uint64_t stream_;
  uint64_t counter_ = 0;
};

// Fisher-Yates shuffle driven by CounterRng.
template <typename Container>
void Shuffle(Container& items, CounterRng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.NextBelow(i));
    std::swap(items[i - 1], items[j]);
  }
}

template <typename T>
T Sigmoid(T z) {
  if (z >= 0) {
    const T e = std::exp(-z);
    return T(1) / (T(1) + e);
  }
  const T e = std::exp(z);
  return e / (T(1) + e);
}

// log(1 + exp(z)) without overflow.
template <typename T>
T Softplus(T z) {
  if (z > 0) return z + std::log1p(std::exp(-z));
  return std::log1p(std::exp(z));
}

// Runs fn(i) for i in [0, n) on up to `threads` workers with a static
// interleaved schedule. The first exception (by worker) is rethrown.
template <typename Fn>
void ParallelFor(size_t n, int threads, Fn fn) {
  const size_t t = std::min<size_t>(static_cast<size_t>(std::max(threads, 1)), n);
  if (t <= 1) {
    for (size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(t);
  for (size_t w = 0; w < t; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (size_t i = w; i < n; i += t) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace toxens

#endif  // TOXENS_COMMON_H_
