// Copyright 2026 The calret authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <stdexcept>

#include "calret/core.hpp"
#include "calret/rng.hpp"
#include "doctest.h"

using namespace calret;

TEST_SUITE_BEGIN("core");

TEST_CASE("normalize scales to unit length") {
  const auto v = normalize(std::vector<float>{3.0f, 4.0f});
  CHECK(v.values[0] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(v.values[1] == doctest::Approx(0.8).epsilon(1e-7));

  const auto unit = normalize(std::vector<float>{1.0f, 0.0f, 0.0f});
  CHECK(unit.values[0] == 1.0f);
  CHECK(unit.values[1] == 0.0f);
  CHECK(unit.values[2] == 0.0f);
}

TEST_CASE("normalize rejects zero input") {
  CHECK_THROWS_WITH_AS(normalize(std::vector<float>{0.0f, 0.0f}),
                       doctest::Contains("zero norm"), std::invalid_argument);
  CHECK_THROWS_AS(normalize(std::vector<float>{}), std::invalid_argument);
}

TEST_CASE("normalize is idempotent") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> raw(17);
    for (auto& x : raw) x = static_cast<float>(rng.uniform(-5.0, 5.0));
    const auto once = normalize(raw);
    const auto twice = normalize(once.values);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      CHECK(std::abs(once.values[i] - twice.values[i]) < 1e-7);
    }
  }
}

TEST_CASE("cosine basics") {
  const auto ex = normalize(std::vector<float>{1.0f, 0.0f});
  const auto ey = normalize(std::vector<float>{0.0f, 1.0f});
  const auto mex = normalize(std::vector<float>{-1.0f, 0.0f});
  CHECK(cosine(ex, ex) == 1.0);
  CHECK(cosine(ex, ey) == 0.0);
  CHECK(cosine(ex, mex) == -1.0);

  const auto odd = normalize(std::vector<float>{1.0f, 1.0f, 1.0f});
  CHECK_THROWS_AS(cosine(ex, odd), std::invalid_argument);
}

TEST_CASE("cosine is symmetric and clamped") {
  Rng rng(29);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> a(24), b(24);
    for (auto& x : a) x = static_cast<float>(rng.normal());
    for (auto& x : b) x = static_cast<float>(rng.normal());
    const auto u = normalize(a);
    const auto v = normalize(b);
    const double uv = cosine(u, v);
    CHECK(uv == cosine(v, u));  // same accumulation order both ways
    CHECK(uv <= 1.0);
    CHECK(uv >= -1.0);
  }
  // Rounding on a self-pair must not escape the interval.
  std::vector<float> raw(64, 0.123f);
  const auto u = normalize(raw);
  CHECK(cosine(u, u) == 1.0);
}

TEST_CASE("sigmoid values and saturation") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-12));
  const double hot = sigmoid(500.0);
  CHECK(hot > 1.0 - 1e-12);
  CHECK(hot <= 1.0);
  CHECK(std::isfinite(sigmoid(700.0)));
  CHECK(std::isfinite(sigmoid(-700.0)));
  CHECK(sigmoid(-500.0) < 1e-12);
}

TEST_CASE("sigmoid symmetry and monotonicity") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = rng.uniform(-40.0, 40.0);
    CHECK(std::abs(sigmoid(-x) - (1.0 - sigmoid(x))) < 1e-12);
  }
  double prev = sigmoid(-50.0);
  for (int i = 1; i <= 10000; ++i) {
    const double x = -50.0 + 100.0 * i / 10000.0;
    const double cur = sigmoid(x);
    CHECK(cur >= prev);
    prev = cur;
  }
}

TEST_CASE("grades are validated") {
  CHECK(make_grade(1.0).positive());
  CHECK_FALSE(make_grade(0.5).positive());
  CHECK_FALSE(make_grade(0.0).positive());
  CHECK_THROWS_AS(make_grade(0.75), std::invalid_argument);
}

TEST_SUITE_END();
