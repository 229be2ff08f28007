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

#include "calret/core.hpp"
#include "calret/filter.hpp"
#include "calret/index.hpp"

namespace calret {

struct PRPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
};

/// Precision/recall at every distinct score threshold over pooled pairs,
/// stored with thresholds strictly increasing (so recall is
/// non-increasing along the curve). Membership rule is "score >= t".
struct PRCurve {
  std::vector<PRPoint> points;
  std::size_t positives = 0;
  std::size_t total = 0;
};

struct BinaryScore {
  double score = 0.0;
  bool positive = false;
};

/// Throws unless the input has at least one positive and one negative.
PRCurve pr_curve(std::span<const BinaryScore> scored);

/// Trapezoidal area of precision over recall, traversed from the highest
/// threshold downwards, plus the anchor rectangle [0, r_min] at the
/// highest-threshold precision (so perfect separation scores exactly 1).
double pr_auc(const PRCurve& curve);

/// Pooled-pairs PR AUC of scored judged records (binary view of grades).
double pr_auc_pooled(std::span<const CalibrationRecord> scored);

/// Mean per-query PR AUC over queries holding both classes.
double pr_auc_macro(std::span<const CalibrationRecord> scored);

struct PrecisionAtRecall {
  double precision = 0.0;
  double recall = 0.0;  // realized recall at the chosen threshold
  double threshold = 0.0;
};

/// Precision at the calibrated target-recall threshold, pooled over pairs.
PrecisionAtRecall p_at_r(std::span<const CalibrationRecord> scored,
                         double target_recall = 0.95,
                         RecallAveraging averaging = RecallAveraging::kMicro);

/// (filter %, null %) over a report: percentage of pairs removed and
/// percentage of queries left empty.
std::pair<double, double> filter_and_null_pct(const FilterReport& report);

struct RankedList {
  std::string query_id;
  std::vector<std::string> candidate_ids;  // best first, already filtered
};

/// Mean reciprocal rank of the first relevant candidate within the top K.
/// Queries with no relevant id in the qrels are excluded from the mean; a
/// query whose relevant items were all filtered out contributes 0.
double mrr_at_k(std::span<const RankedList> runs,
                const std::vector<JudgedPair>& qrels, std::size_t k = 10);

struct Histogram {
  std::vector<double> edges;        // ascending bucket lower bounds
  std::vector<std::size_t> counts;  // bucket i covers [edges[i], edges[i+1})
};

/// Distribution of per-query retained counts. The final bucket is
/// unbounded above; values below edges[0] throw.
Histogram retained_histogram(const FilterReport& report,
                             std::span<const double> edges);

struct MaxNormResult {
  SearchResult hits;
  bool flagged = false;  // max cosine <= 0: logits passed through unchanged
};

/// Per-query max-normalization baseline: logit = cosine / max(cosine).
MaxNormResult max_norm_baseline(const SearchResult& hits);

// ---- Run-level evaluation (the Table-1-style comparison) ----

struct ScoredHit {
  std::string candidate_id;
  double score = 0.0;  // ranking score: logit (adapter kinds) or cosine
};

struct ScoredRun {
  std::string query_id;
  std::vector<ScoredHit> hits;  // score descending
};

struct MethodMetrics {
  std::string method;
  double pr_auc = 0.0;
  PrecisionAtRecall precision_at_recall;
  double filter_pct = 0.0;
  double null_pct = 0.0;
  double mrr = 0.0;
  ThresholdCalibration calibration;
  FilterReport filter_report;
};

/// Scores one method's run end-to-end: pooled PR AUC on the unfiltered
/// scores, threshold calibrated on this run at `target_recall`, then
/// precision / Filter% / Null% / MRR@k on the filtered lists. Pairs absent
/// from the qrels count as irrelevant. A `fixed_threshold` (e.g. read
/// from a calibration file produced on another split) bypasses the
/// self-calibration; the realized recall is reported either way.
MethodMetrics evaluate_run(const std::string& method,
                           const std::vector<ScoredRun>& runs,
                           const std::vector<JudgedPair>& qrels,
                           double target_recall, std::size_t mrr_k,
                           RecallAveraging averaging = RecallAveraging::kMicro,
                           std::optional<double> fixed_threshold = std::nullopt);

/// Groups run-file entries into per-query descending score lists.
std::vector<ScoredRun> group_run_entries(const std::vector<RunEntry>& entries);

/// Applies max-normalization per query to cosine-scored runs.
std::vector<ScoredRun> max_norm_runs(const std::vector<ScoredRun>& runs);

}  // namespace calret
