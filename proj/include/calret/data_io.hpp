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
#include <functional>
#include <string>
#include <vector>

#include "calret/core.hpp"

namespace calret {

struct SparseFeatures {
  std::vector<std::uint32_t> indices;  // strictly increasing
  std::vector<float> weights;          // positive, one per index
};

struct EmbeddingRecord {
  std::string id;
  std::vector<float> values;
};

// Embedding exchange file, all little-endian:
//   magic "CREM", version u32, dim u32, count u64,
//   then per record: null-terminated UTF-8 id + dim 32-bit floats.
// Writing then reading reproduces the bytes exactly.
inline constexpr std::uint32_t kEmbeddingFileVersion = 1;

void write_embeddings(const std::string& path, std::uint32_t dim,
                      const std::vector<EmbeddingRecord>& records);

/// Streams records one at a time into `sink`. Malformed input throws
/// std::runtime_error naming the byte offset.
std::uint32_t read_embeddings(
    const std::string& path,
    const std::function<void(EmbeddingRecord&&)>& sink);

struct EmbeddingSet {
  std::uint32_t dim = 0;
  std::vector<EmbeddingRecord> records;
};

EmbeddingSet read_embeddings(const std::string& path);

// Qrels text file: "qid 0 docid grade" with grade in {0, 1, 2} mapped to
// {0.0, 0.5, 1.0}. Malformed lines throw with the line number.
std::vector<JudgedPair> read_qrels(const std::string& path);
void write_qrels(const std::string& path, const std::vector<JudgedPair>& pairs);

struct RunEntry {
  std::string query_id;
  std::string candidate_id;
  std::uint32_t rank = 0;
  double score = 0.0;
};

// Run file, TREC format: "qid Q0 docid rank score tag".
void write_run(const std::string& path, const std::vector<RunEntry>& entries,
               const std::string& tag);
std::vector<RunEntry> read_run(const std::string& path);

// Sparse feature text file: "id index:weight index:weight ..." per line,
// indices strictly increasing, weights positive.
struct FeatureRecord {
  std::string id;
  SparseFeatures features;
};

std::vector<FeatureRecord> read_features(const std::string& path);
void write_features(const std::string& path,
                    const std::vector<FeatureRecord>& records);

}  // namespace calret
