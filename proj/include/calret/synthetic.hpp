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

#include <cstdint>
#include <vector>

#include "calret/core.hpp"
#include "calret/data_io.hpp"

namespace calret {

/// Parameters of the synthetic retrieval world.
///
/// Every query i draws a hidden difficulty shift mu_i uniform from
/// [shift_lo, shift_hi] and stores it spread across a leading coordinate
/// block (each coordinate mu/sqrt(block size)), so a network reading the
/// query embedding can recover it linearly. The query's
/// own candidates score cosine = mu_i + class_separation + noise when
/// relevant and mu_i - class_separation + noise when irrelevant
/// (noise ~ N(0, noise_sigma), result clamped to [-1, 1]).
///
/// Geometry: query content directions are distinct signed rows of a
/// Hadamard matrix (exactly orthonormal), and candidate off-query
/// components live in a subspace orthogonal to every query. Cosines
/// between a query and a foreign candidate therefore reduce to
/// target * mu_i * mu_j exactly, which keeps each query's own candidates
/// on top of its ranking while raw scores stay incomparable across
/// queries. This requires dim >= (Hadamard size >= num_queries) + 2.
struct SyntheticSpec {
  std::size_t num_queries = 1000;
  std::size_t corpus_size = 20000;
  std::uint32_t dim = 1088;
  std::size_t relevant_per_query = 5;
  double shift_lo = 0.35;
  double shift_hi = 0.8;
  double class_separation = 0.05;
  double noise_sigma = 0.03;
  std::uint64_t seed = 42;
};

struct SyntheticData {
  std::vector<EmbeddingRecord> queries;
  std::vector<EmbeddingRecord> corpus;
  std::vector<JudgedPair> qrels;
  // Parallel sparse-feature view for the toy encoder pipeline.
  std::vector<FeatureRecord> query_features;
  std::vector<FeatureRecord> corpus_features;
  std::uint32_t vocab_size = 0;
  std::vector<double> query_shifts;  // mu per query, in query order
  std::size_t mu_block_dims = 0;     // leading coordinates carrying mu
};

/// Deterministic given spec.seed. Throws on infeasible geometry
/// (|shift| + separation leaving [-1, 1], or dim too small for the
/// query count).
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace calret
