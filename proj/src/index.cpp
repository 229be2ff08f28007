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

#include "calret/index.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include "calret/binary_io.hpp"

namespace calret {

VectorIndex VectorIndex::build(const std::vector<EmbeddingRecord>& records) {
  if (records.empty()) {
    throw std::invalid_argument("cannot build an index from zero records");
  }
  VectorIndex index;
  index.dim_ = static_cast<std::uint32_t>(records.front().values.size());
  if (index.dim_ == 0) {
    throw std::invalid_argument("cannot build an index with dimension 0");
  }
  index.ids_.reserve(records.size());
  index.data_.reserve(records.size() * index.dim_);
  std::unordered_set<std::string> seen;
  seen.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.values.size() != index.dim_) {
      throw std::invalid_argument(
          "dimension mismatch for id " + rec.id + ": got " +
          std::to_string(rec.values.size()) + ", expected " +
          std::to_string(index.dim_));
    }
    if (!seen.insert(rec.id).second) {
      throw std::invalid_argument("duplicate id " + rec.id);
    }
    EmbeddingVector unit;
    try {
      unit = normalize(rec.values);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(e.what()) + " (id " + rec.id + ")");
    }
    index.ids_.push_back(rec.id);
    index.data_.insert(index.data_.end(), unit.values.begin(), unit.values.end());
  }
  return index;
}

SearchResult search(const VectorIndex& index, const EmbeddingVector& query,
                    std::size_t k, const std::string& query_id) {
  SearchResult result;
  result.query_id = query_id;
  if (index.size() == 0) return result;
  if (k == 0) {
    throw std::invalid_argument("search requires K >= 1");
  }
  if (query.dim() != index.dim()) {
    throw std::invalid_argument("query dimension " + std::to_string(query.dim()) +
                                " does not match index dimension " +
                                std::to_string(index.dim()));
  }

  std::vector<double> scores(index.size());
  const std::size_t dim = index.dim();
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto row = index.row(i);
    double dot = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      dot += static_cast<double>(query.values[c]) * static_cast<double>(row[c]);
    }
    scores[i] = std::clamp(dot, -1.0, 1.0);
  }

  std::vector<std::size_t> order(index.size());
  std::iota(order.begin(), order.end(), 0);
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return index.ids()[a] < index.ids()[b];
  };
  const std::size_t take = std::min(k, index.size());
  std::partial_sort(order.begin(), order.begin() + take, order.end(), better);

  result.hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    ScoredCandidate hit;
    hit.id = index.ids()[order[i]];
    hit.cosine = scores[order[i]];
    result.hits.push_back(std::move(hit));
  }
  return result;
}

void VectorIndex::save(const std::string& path) const {
  BinaryWriter w(path);
  w.write_magic("CRIX");
  w.write_u32(kIndexFileVersion);
  w.write_u32(dim_);
  w.write_u64(ids_.size());
  for (const auto& id : ids_) w.write_cstring(id);
  w.write_f32_array(data_);
}

VectorIndex VectorIndex::load(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic("CRIX");
  const std::uint32_t version = r.read_u32();
  if (version != kIndexFileVersion) {
    throw std::runtime_error(path + ": unsupported CRIX version " +
                             std::to_string(version) + " at byte offset 4");
  }
  VectorIndex index;
  index.dim_ = r.read_u32();
  const std::uint64_t count = r.read_u64();
  index.ids_.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) index.ids_.push_back(r.read_cstring());
  index.data_ = r.read_f32_array(count * index.dim_);
  r.expect_eof();
  return index;
}

}  // namespace calret
