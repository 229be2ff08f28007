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

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace calret {

/// Unit-normalized embedding. Components are stored as 32-bit floats
/// (matching common embedding dumps); all score/loss accumulation done
/// on top of them is 64-bit.
struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
};

/// Graded relevance judgment: 1.0 exact, 0.5 substitute, 0.0 irrelevant.
struct RelevanceGrade {
  double value = 0.0;

  /// Binary view: only exact matches count as positive.
  bool positive() const { return value == 1.0; }
};

/// Validates that `value` is one of the three admissible grades.
RelevanceGrade make_grade(double value);

struct JudgedPair {
  std::string query_id;
  std::string candidate_id;
  RelevanceGrade grade;
};

/// One retrieved candidate. `logit`/`probability` are empty until the
/// calibration step fills them.
struct ScoredCandidate {
  std::string id;
  double cosine = 0.0;
  std::optional<double> logit;
  std::optional<double> probability;
};

/// Scales `v` to unit L2 norm (norm computed in double). Throws
/// std::invalid_argument("zero norm ...") on zero-length input.
EmbeddingVector normalize(std::span<const float> v);
EmbeddingVector normalize(const std::vector<float>& v);

/// Dot product of two unit vectors, accumulated in double and clamped to
/// [-1, 1]; downstream sgn/|x|^k math relies on the clamp. Throws on
/// dimension mismatch.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Numerically stable logistic function; no overflow for |x| up to ~700.
double sigmoid(double x);

}  // namespace calret
