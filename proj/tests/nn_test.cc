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

#include <cmath>

#include "doctest.h"
#include "oracles.h"
#include "toxens/nn.h"

namespace toxens::nn {
namespace {

constexpr int kInstances = 100;
constexpr double kTol = 1e-12;

std::vector<double> RandomVec(CounterRng& rng, size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.Uniform(-scale, scale);
  return v;
}

double MaxDiff(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

TEST_CASE("lstm cell matches the scalar oracle") {
  double worst = 0;
  for (int seed = 0; seed < kInstances; ++seed) {
    CounterRng rng(static_cast<uint64_t>(seed), 11);
    const size_t D = 2 + rng.NextBelow(4), H = 3;
    auto w = RandomVec(rng, 4 * H * D), u = RandomVec(rng, 4 * H * H), b = RandomVec(rng, 4 * H);
    auto x = RandomVec(rng, D, 2.0), h = RandomVec(rng, H), c = RandomVec(rng, H, 2.0);
    CellParams<double> p{D, H, w.data(), u.data(), b.data()};
    auto [h1, c1] = LstmCell<double>(x, h, c, p);
    auto [h2, c2] = oracle::Lstm(x, h, c, w, u, b);
    worst = std::max({worst, MaxDiff(h1, h2), MaxDiff(c1, c2)});
  }
  CHECK(worst < kTol);
}

TEST_CASE("lstm cell zero and saturation cases") {
  const size_t D = 2, H = 3;
  std::vector<double> w(4 * H * D, 0.0), u(4 * H * H, 0.0), b(4 * H, 0.0);
  std::vector<double> x(D, 0.0), h(H, 0.0), c(H, 0.0);
  CellParams<double> p{D, H, w.data(), u.data(), b.data()};
  auto [h0, c0] = LstmCell<double>(x, h, c, p);
  for (size_t k = 0; k < H; ++k) {
    CHECK(h0[k] == 0.0);
    CHECK(c0[k] == 0.0);
  }
  for (size_t k = 0; k < H; ++k) b[H + k] = 20.0;
  const std::vector<double> v{0.7, -1.3, 2.5};
  auto [h1, c1] = LstmCell<double>(x, h, v, p);
  for (size_t k = 0; k < H; ++k) CHECK(std::abs(c1[k] - v[k]) < 1e-8);
}

TEST_CASE("gru cell matches the scalar oracle") {
  double worst = 0;
  for (int seed = 0; seed < kInstances; ++seed) {
    CounterRng rng(static_cast<uint64_t>(seed), 12);
    const size_t D = 2 + rng.NextBelow(4), H = 3;
    auto w = RandomVec(rng, 3 * H * D), u = RandomVec(rng, 3 * H * H), b = RandomVec(rng, 3 * H);
    auto x = RandomVec(rng, D, 2.0), h = RandomVec(rng, H);
    CellParams<double> p{D, H, w.data(), u.data(), b.data()};
    worst = std::max(worst, MaxDiff(GruCell<double>(x, h, p), oracle::Gru(x, h, w, u, b)));
  }
  CHECK(worst < kTol);
}

TEST_CASE("gru cell zero and carry cases") {
  const size_t D = 2, H = 3;
  std::vector<double> w(3 * H * D, 0.0), u(3 * H * H, 0.0), b(3 * H, 0.0);
  std::vector<double> x(D, 0.0), h(H, 0.0);
  CellParams<double> p{D, H, w.data(), u.data(), b.data()};
  for (double v : GruCell<double>(x, h, p)) CHECK(v == 0.0);
  CounterRng rng(5);
  w = RandomVec(rng, 3 * H * D);
  u = RandomVec(rng, 3 * H * H);
  for (size_t k = 0; k < H; ++k) b[k] = 20.0;
  p = {D, H, w.data(), u.data(), b.data()};
  const std::vector<double> prev{0.4, -0.9, 0.1};
  const auto out = GruCell<double>(RandomVec(rng, D), prev, p);
  for (size_t k = 0; k < H; ++k) CHECK(std::abs(out[k] - prev[k]) < 1e-8);
}

TEST_CASE("bidirectional combine") {
  using Seq = std::vector<std::vector<double>>;
  const Seq a{{1, 2}, {3, 4}, {5, 6}};
  // Backward in processing order is the time-reversed sequence.
  const Seq a_rev{{5, 6}, {3, 4}, {1, 2}};
  CHECK(BidirectionalCombine(a, a_rev) == a);
  Seq neg_rev = a_rev;
  for (auto& v : neg_rev)
    for (auto& x : v) x = -x;
  for (const auto& v : BidirectionalCombine(a, neg_rev))
    for (double x : v) CHECK(x == 0.0);
  const Seq f{{1, 3}}, b{{3, 5}};
  CHECK(BidirectionalCombine(f, b) == Seq{{2, 4}});
  CHECK_THROWS_AS(BidirectionalCombine(a, f), Error);
}

TEST_CASE("attention pool matches the scalar oracle") {
  double worst = 0;
  for (int seed = 0; seed < kInstances; ++seed) {
    CounterRng rng(static_cast<uint64_t>(seed), 13);
    const size_t T = 1 + rng.NextBelow(6), D = 2 + rng.NextBelow(3), A = 1 + rng.NextBelow(4);
    std::vector<std::vector<double>> h(T);
    for (auto& v : h) v = RandomVec(rng, D, 2.0);
    auto w = RandomVec(rng, A * D), b = RandomVec(rng, A), ctx = RandomVec(rng, A, 2.0);
    AttentionParams<double> p{D, A, w.data(), b.data(), ctx.data()};
    const auto got = AttentionPool(h, p);
    const auto want = oracle::AttentionPool(h, w, b, ctx);
    worst = std::max({worst, MaxDiff(got.pooled, want.pooled), MaxDiff(got.weights, want.weights)});
  }
  CHECK(worst < kTol);
}

TEST_CASE("attention pool small cases") {
  std::vector<double> w{0.5, -0.25, 1.0, 0.75}, b{0.1, -0.2}, ctx{1.5, -0.5};
  AttentionParams<double> p{2, 2, w.data(), b.data(), ctx.data()};
  SUBCASE("length one") {
    const auto r = AttentionPool<double>({{0.3, -0.7}}, p);
    CHECK(r.weights[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.pooled == std::vector<double>{0.3, -0.7});
  }
  SUBCASE("identical positions give uniform weights") {
    const auto r = AttentionPool<double>({{0.3, -0.7}, {0.3, -0.7}, {0.3, -0.7}, {0.3, -0.7}}, p);
    for (double a : r.weights) CHECK(std::abs(a - 0.25) < 1e-15);
  }
  SUBCASE("hand computed T=2 d=2") {
    // u_1 = tanh(W h_1 + b), s_1 = u_1 . ctx; likewise for h_2.
    const double h1[2] = {1.0, 0.0}, h2[2] = {0.0, 1.0};
    const double s1 = 1.5 * std::tanh(0.5 * h1[0] - 0.25 * h1[1] + 0.1) -
                      0.5 * std::tanh(1.0 * h1[0] + 0.75 * h1[1] - 0.2);
    const double s2 = 1.5 * std::tanh(0.5 * h2[0] - 0.25 * h2[1] + 0.1) -
                      0.5 * std::tanh(1.0 * h2[0] + 0.75 * h2[1] - 0.2);
    const double a1 = 1.0 / (1.0 + std::exp(s2 - s1));
    const auto r = AttentionPool<double>({{1.0, 0.0}, {0.0, 1.0}}, p);
    CHECK(std::abs(r.weights[0] - a1) < kTol);
    CHECK(std::abs(r.weights[1] - (1 - a1)) < kTol);
    CHECK(std::abs(r.pooled[0] - a1) < kTol);
    CHECK(std::abs(r.pooled[1] - (1 - a1)) < kTol);
  }
  SUBCASE("masked positions get no weight") {
    const std::vector<bool> mask{true, false, true};
    const auto r = AttentionPool<double>({{1, 0}, {5, 5}, {0, 1}}, p, &mask);
    CHECK(r.weights[1] == 0.0);
    CHECK(std::abs(r.weights[0] + r.weights[2] - 1.0) < 1e-15);
    const std::vector<bool> none{false, false, false};
    CHECK_THROWS_AS(AttentionPool<double>({{1, 0}, {5, 5}, {0, 1}}, p, &none), Error);
  }
}

TEST_CASE("conv max pool matches the scalar oracle") {
  double worst = 0;
  for (int seed = 0; seed < kInstances; ++seed) {
    CounterRng rng(static_cast<uint64_t>(seed), 14);
    const size_t E = 1 + rng.NextBelow(4), L = 3 + rng.NextBelow(6);
    std::vector<double> x = RandomVec(rng, L * E, 2.0);
    std::vector<std::vector<double>> rows(L);
    for (size_t t = 0; t < L; ++t) rows[t].assign(x.begin() + static_cast<long>(t * E), x.begin() + static_cast<long>((t + 1) * E));
    std::vector<std::vector<double>> weights, biases;
    std::vector<ConvBank<double>> banks;
    std::vector<oracle::Filter> filters;
    for (size_t width : {size_t{2}, size_t{3}}) {
      const size_t maps = 1 + rng.NextBelow(3);
      weights.push_back(RandomVec(rng, maps * width * E));
      biases.push_back(RandomVec(rng, maps, 0.5));
      for (size_t f = 0; f < maps; ++f) {
        oracle::Filter of;
        of.width = static_cast<int>(width);
        of.w.assign(weights.back().begin() + static_cast<long>(f * width * E),
                    weights.back().begin() + static_cast<long>((f + 1) * width * E));
        of.b = biases.back()[f];
        filters.push_back(of);
      }
    }
    for (size_t i = 0; i < weights.size(); ++i) {
      banks.push_back({i + 2, biases[i].size(), weights[i].data(), biases[i].data()});
    }
    const auto got = ConvMaxPool<double>(x, L, E, banks);
    worst = std::max(worst, MaxDiff(got.features, oracle::ConvMaxPool(rows, filters)));
  }
  CHECK(worst < kTol);
}

TEST_CASE("conv max pool small cases") {
  const size_t E = 2, L = 5;
  std::vector<double> w{1, 0, 0, 1, 1, 0}, b{0.0};  // one width-3 filter
  std::vector<ConvBank<double>> banks{{3, 1, w.data(), b.data()}};
  SUBCASE("zero embeddings give zero features") {
    std::vector<double> x(L * E, 0.0);
    CHECK(ConvMaxPool<double>(x, L, E, banks).features == std::vector<double>{0.0});
  }
  SUBCASE("one-hot pattern at position 2") {
    std::vector<double> x(L * E, 0.0);
    // Window starting at 2 covers rows 2, 3, 4: pattern (1,0) (0,1) (1,0).
    x[2 * E + 0] = 1;
    x[3 * E + 1] = 1;
    x[4 * E + 0] = 1;
    const auto r = ConvMaxPool<double>(x, L, E, banks);
    CHECK(r.features[0] == 3.0);
    CHECK(r.argmax[0] == 2);
  }
  SUBCASE("output width is independent of length") {
    std::vector<double> w2(2 * 2 * E, 0.1), b2(2, 0.0);
    std::vector<ConvBank<double>> two{{3, 1, w.data(), b.data()}, {2, 2, w2.data(), b2.data()}};
    for (size_t len : {3, 4, 9}) {
      std::vector<double> x(len * E, 0.5);
      CHECK(ConvMaxPool<double>(x, len, E, two).features.size() == 3);
    }
  }
}

TEST_CASE("spatial word dropout") {
  std::vector<int32_t> ids(100000);
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = 2 + static_cast<int32_t>(i % 50);
  CounterRng rng(21);
  CHECK(SpatialWordDropout(ids, 0.0, rng, true) == ids);
  CHECK(SpatialWordDropout(ids, 0.5, rng, false) == ids);
  const auto out = SpatialWordDropout(ids, 0.1, rng, true);
  size_t masked = 0;
  for (size_t i = 0; i < out.size(); ++i) {
    if (out[i] != ids[i]) {
      CHECK(out[i] == 1);
      ++masked;
    }
  }
  const double frac = static_cast<double>(masked) / static_cast<double>(ids.size());
  CHECK(std::abs(frac - 0.1) <= 0.005);
  const std::vector<int32_t> padded{5, 6, 0, 0};
  CounterRng heavy(3);
  for (int rep = 0; rep < 50; ++rep) {
    const auto d = SpatialWordDropout(padded, 0.9, heavy, true);
    CHECK(d[2] == 0);
    CHECK(d[3] == 0);
  }
  CHECK_THROWS_AS(SpatialWordDropout(ids, 1.0, rng, true), Error);
}

}  // namespace
}  // namespace toxens::nn
