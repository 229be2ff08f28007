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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "calret/adapter.hpp"
#include "calret/core.hpp"
#include "calret/encoder.hpp"
#include "calret/index.hpp"

namespace calret {

/// One scored judged pair, the unit of threshold calibration.
struct CalibrationRecord {
  std::string query_id;
  double logit = 0.0;
  RelevanceGrade grade;
};

/// Recall aggregation for threshold tuning. Micro pools pairs across
/// queries; macro averages per-query recall.
enum class RecallAveraging { kMicro, kMacro };

struct ThresholdCalibration {
  double target_recall = 0.0;
  double threshold = 0.0;  // logit-space cutoff
  double achieved_recall = 0.0;
  std::size_t calibration_set_size = 0;  // scored pairs seen
  std::size_t positives = 0;
  RecallAveraging averaging = RecallAveraging::kMicro;
};

/// Finds the largest threshold t such that recall of positives at
/// "logit >= t" still meets `target_recall`. Micro mode sorts positive
/// logits descending and indexes at ceil(target * P) - 1. Queries with no
/// positives contribute nothing to recall. Throws when there are no
/// positives at all.
ThresholdCalibration calibrate_threshold(
    std::span<const CalibrationRecord> scored, double target_recall,
    RecallAveraging averaging = RecallAveraging::kMicro);

struct FilterReportEntry {
  std::string query_id;
  std::size_t input_count = 0;
  std::size_t retained_count = 0;
};

struct FilterReport {
  std::vector<FilterReportEntry> entries;
};

/// Keeps exactly the hits with logit >= threshold, order unchanged, and
/// appends one entry to `report` if given. An empty retained set is a
/// valid outcome (a null query). Throws if any hit lacks a logit.
SearchResult apply_filter(const SearchResult& hits, double threshold,
                          FilterReport* report = nullptr);

// Threshold calibration exchange file (text; consumed by the evaluate and
// search commands).
void write_threshold(const std::string& path, const ThresholdCalibration& cal);
ThresholdCalibration read_threshold(const std::string& path);

struct PipelineConfig {
  TransformKind kind = TransformKind::kRaw;
  std::size_t k = 10;
  std::optional<double> threshold;  // filter applied only when set
};

struct PipelineTimings {
  double encode_seconds = 0.0;
  double search_seconds = 0.0;
  double calibrate_seconds = 0.0;
  double filter_seconds = 0.0;
};

struct PipelineResult {
  SearchResult calibrated;  // all retrieved hits with logits filled
  SearchResult retained;    // after the threshold (== calibrated without one)
  FilterReportEntry report;
  PipelineTimings timings;
};

/// Full per-query workflow: encode -> search(K) -> calibrate_candidates ->
/// apply_filter. `adapter` may be null only for the raw kind, in which
/// case the logit is the cosine itself. Component errors are rethrown
/// with the failing stage named.
PipelineResult run_pipeline(const std::string& query_id,
                            const EmbeddingVector& query,
                            const VectorIndex& index,
                            const AdapterNetwork* adapter,
                            const PipelineConfig& config);

/// Same, starting from sparse features through a query encoder.
PipelineResult run_pipeline(const std::string& query_id,
                            const SparseFeatures& features,
                            const LinearEncoder& query_encoder,
                            const VectorIndex& index,
                            const AdapterNetwork* adapter,
                            const PipelineConfig& config);

}  // namespace calret
