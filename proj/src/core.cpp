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

#include "calret/core.hpp"

#include <cmath>
#include <stdexcept>

namespace calret {

RelevanceGrade make_grade(double value) {
  if (value != 0.0 && value != 0.5 && value != 1.0) {
    throw std::invalid_argument("grade must be one of {0, 0.5, 1}, got " +
                                std::to_string(value));
  }
  return RelevanceGrade{value};
}

EmbeddingVector normalize(std::span<const float> v) {
  if (v.empty()) {
    throw std::invalid_argument("zero norm: cannot normalize empty vector");
  }
  double sq = 0.0;
  for (float x : v) sq += static_cast<double>(x) * static_cast<double>(x);
  if (sq == 0.0) {
    throw std::invalid_argument("zero norm: cannot normalize zero vector");
  }
  const double inv = 1.0 / std::sqrt(sq);
  EmbeddingVector out;
  out.values.reserve(v.size());
  for (float x : v) out.values.push_back(static_cast<float>(x * inv));
  return out;
}

EmbeddingVector normalize(const std::vector<float>& v) {
  return normalize(std::span<const float>(v));
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dim() != v.dim()) {
    throw std::invalid_argument("cosine: dimension mismatch (" +
                                std::to_string(u.dim()) + " vs " +
                                std::to_string(v.dim()) + ")");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    dot += static_cast<double>(u.values[i]) * static_cast<double>(v.values[i]);
  }
  if (dot > 1.0) dot = 1.0;
  if (dot < -1.0) dot = -1.0;
  return dot;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace calret
