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
#include <span>
#include <string>
#include <vector>

#include "calret/core.hpp"
#include "calret/data_io.hpp"

namespace calret {

/// Flat exact-search index over unit-normalized candidate embeddings.
/// Exactness keeps every downstream result deterministic; an approximate
/// backend can be swapped in behind the same search signature.
class VectorIndex {
 public:
  VectorIndex() = default;

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }

  static VectorIndex build(const std::vector<EmbeddingRecord>& records);

  void save(const std::string& path) const;
  static VectorIndex load(const std::string& path);

 private:
  std::uint32_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;  // row-major, ids_.size() x dim_
};

struct SearchResult {
  std::string query_id;
  std::vector<ScoredCandidate> hits;  // cosine descending, ties by id ascending
};

/// Exact top-K retrieval. Returns min(K, index size) hits; an empty index
/// yields an empty result. Ties are broken by candidate id ascending so
/// results are reproducible.
SearchResult search(const VectorIndex& index, const EmbeddingVector& query,
                    std::size_t k, const std::string& query_id = "");

inline constexpr std::uint32_t kIndexFileVersion = 1;

}  // namespace calret
