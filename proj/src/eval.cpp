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

#include "calret/eval.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace calret {

PRCurve pr_curve(std::span<const BinaryScore> scored) {
  std::size_t positives = 0;
  for (const auto& s : scored) positives += s.positive ? 1 : 0;
  if (positives == 0 || positives == scored.size()) {
    throw std::invalid_argument(
        "pr_curve requires at least one positive and one negative pair");
  }

  std::vector<BinaryScore> sorted(scored.begin(), scored.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const BinaryScore& a, const BinaryScore& b) {
              return a.score > b.score;
            });

  PRCurve curve;
  curve.positives = positives;
  curve.total = scored.size();
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i].positive) {
      ++tp;
    } else {
      ++fp;
    }
    const bool last_of_tie =
        i + 1 == sorted.size() || sorted[i + 1].score != sorted[i].score;
    if (!last_of_tie) continue;
    PRPoint point;
    point.threshold = sorted[i].score;
    point.tp = tp;
    point.fp = fp;
    point.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    point.recall = static_cast<double>(tp) / static_cast<double>(positives);
    curve.points.push_back(point);
  }
  // Generated threshold-descending; store threshold-ascending.
  std::reverse(curve.points.begin(), curve.points.end());
  return curve;
}

double pr_auc(const PRCurve& curve) {
  if (curve.points.empty()) return 0.0;
  // Walk from the highest threshold (lowest recall) downwards. The region
  // left of the first observed recall is anchored at that point's
  // precision, so perfectly separated scores integrate to exactly 1.
  double auc = 0.0;
  double prev_recall = 0.0;
  double prev_precision = curve.points.back().precision;
  for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
    if (it == curve.points.rbegin()) {
      auc += it->recall * it->precision;
    } else {
      auc += (it->recall - prev_recall) * (it->precision + prev_precision) / 2.0;
    }
    prev_recall = it->recall;
    prev_precision = it->precision;
  }
  return auc;
}

namespace {

std::vector<BinaryScore> to_binary(std::span<const CalibrationRecord> scored) {
  std::vector<BinaryScore> binary;
  binary.reserve(scored.size());
  for (const auto& rec : scored) {
    binary.push_back({rec.logit, rec.grade.positive()});
  }
  return binary;
}

}  // namespace

double pr_auc_pooled(std::span<const CalibrationRecord> scored) {
  const auto binary = to_binary(scored);
  return pr_auc(pr_curve(binary));
}

double pr_auc_macro(std::span<const CalibrationRecord> scored) {
  std::map<std::string, std::vector<BinaryScore>> per_query;
  for (const auto& rec : scored) {
    per_query[rec.query_id].push_back({rec.logit, rec.grade.positive()});
  }
  double sum = 0.0;
  std::size_t used = 0;
  for (const auto& [qid, binary] : per_query) {
    std::size_t pos = 0;
    for (const auto& b : binary) pos += b.positive ? 1 : 0;
    if (pos == 0 || pos == binary.size()) continue;  // degenerate query
    sum += pr_auc(pr_curve(binary));
    ++used;
  }
  if (used == 0) {
    throw std::invalid_argument(
        "macro PR AUC requires a query with both classes");
  }
  return sum / static_cast<double>(used);
}

PrecisionAtRecall p_at_r(std::span<const CalibrationRecord> scored,
                         double target_recall, RecallAveraging averaging) {
  const ThresholdCalibration cal =
      calibrate_threshold(scored, target_recall, averaging);
  std::size_t tp = 0, fp = 0, positives = 0;
  for (const auto& rec : scored) {
    const bool positive = rec.grade.positive();
    positives += positive ? 1 : 0;
    if (rec.logit >= cal.threshold) {
      if (positive) {
        ++tp;
      } else {
        ++fp;
      }
    }
  }
  PrecisionAtRecall out;
  out.threshold = cal.threshold;
  out.precision = tp + fp == 0
                      ? 0.0
                      : static_cast<double>(tp) / static_cast<double>(tp + fp);
  out.recall = static_cast<double>(tp) / static_cast<double>(positives);
  return out;
}

std::pair<double, double> filter_and_null_pct(const FilterReport& report) {
  if (report.entries.empty()) {
    throw std::invalid_argument("filter report holds no queries");
  }
  std::size_t input = 0, retained = 0, null_queries = 0;
  for (const auto& entry : report.entries) {
    input += entry.input_count;
    retained += entry.retained_count;
    null_queries += entry.retained_count == 0 ? 1 : 0;
  }
  const double filter_pct =
      input == 0 ? 0.0
                 : 100.0 * static_cast<double>(input - retained) /
                       static_cast<double>(input);
  const double null_pct = 100.0 * static_cast<double>(null_queries) /
                          static_cast<double>(report.entries.size());
  return {filter_pct, null_pct};
}

double mrr_at_k(std::span<const RankedList> runs,
                const std::vector<JudgedPair>& qrels, std::size_t k) {
  std::unordered_map<std::string, std::unordered_set<std::string>> relevant;
  for (const auto& pair : qrels) {
    if (pair.grade.positive()) relevant[pair.query_id].insert(pair.candidate_id);
  }
  if (relevant.empty()) return 0.0;

  std::unordered_map<std::string, const RankedList*> by_query;
  for (const auto& run : runs) by_query[run.query_id] = &run;

  double sum = 0.0;
  for (const auto& [qid, rel_ids] : relevant) {
    const auto it = by_query.find(qid);
    if (it == by_query.end()) continue;  // query absent from the run: 0
    const auto& ids = it->second->candidate_ids;
    const std::size_t depth = std::min(k, ids.size());
    for (std::size_t rank = 0; rank < depth; ++rank) {
      if (rel_ids.count(ids[rank]) > 0) {
        sum += 1.0 / static_cast<double>(rank + 1);
        break;
      }
    }
  }
  return sum / static_cast<double>(relevant.size());
}

Histogram retained_histogram(const FilterReport& report,
                             std::span<const double> edges) {
  if (edges.empty()) throw std::invalid_argument("histogram needs bucket edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (edges[i] <= edges[i - 1]) {
      throw std::invalid_argument("histogram edges must be strictly increasing");
    }
  }
  Histogram hist;
  hist.edges.assign(edges.begin(), edges.end());
  hist.counts.assign(edges.size(), 0);
  for (const auto& entry : report.entries) {
    const double v = static_cast<double>(entry.retained_count);
    if (v < edges[0]) {
      throw std::invalid_argument("retained count " + std::to_string(entry.retained_count) +
                                  " below the first bucket edge");
    }
    std::size_t bucket = edges.size() - 1;
    for (std::size_t i = 1; i < edges.size(); ++i) {
      if (v < edges[i]) {
        bucket = i - 1;
        break;
      }
    }
    ++hist.counts[bucket];
  }
  return hist;
}

MaxNormResult max_norm_baseline(const SearchResult& hits) {
  MaxNormResult out;
  out.hits = hits;
  if (hits.hits.empty()) {
    throw std::invalid_argument("max-norm baseline requires at least one hit");
  }
  double max_cos = hits.hits.front().cosine;
  for (const auto& hit : hits.hits) max_cos = std::max(max_cos, hit.cosine);
  if (max_cos <= 0.0) {
    out.flagged = true;
    for (auto& hit : out.hits.hits) {
      hit.logit = hit.cosine;
      hit.probability = sigmoid(hit.cosine);
    }
    return out;
  }
  for (auto& hit : out.hits.hits) {
    const double logit = hit.cosine / max_cos;
    hit.logit = logit;
    hit.probability = sigmoid(logit);
  }
  return out;
}

std::vector<ScoredRun> group_run_entries(const std::vector<RunEntry>& entries) {
  std::vector<RunEntry> sorted = entries;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const RunEntry& a, const RunEntry& b) {
                     if (a.query_id != b.query_id) return a.query_id < b.query_id;
                     return a.rank < b.rank;
                   });
  std::vector<ScoredRun> runs;
  for (const auto& entry : sorted) {
    if (runs.empty() || runs.back().query_id != entry.query_id) {
      runs.push_back({entry.query_id, {}});
    }
    runs.back().hits.push_back({entry.candidate_id, entry.score});
  }
  return runs;
}

std::vector<ScoredRun> max_norm_runs(const std::vector<ScoredRun>& runs) {
  std::vector<ScoredRun> out = runs;
  for (auto& run : out) {
    if (run.hits.empty()) continue;
    double max_score = run.hits.front().score;
    for (const auto& hit : run.hits) max_score = std::max(max_score, hit.score);
    if (max_score <= 0.0) continue;  // flagged passthrough
    for (auto& hit : run.hits) hit.score /= max_score;
  }
  return out;
}

MethodMetrics evaluate_run(const std::string& method,
                           const std::vector<ScoredRun>& runs,
                           const std::vector<JudgedPair>& qrels,
                           double target_recall, std::size_t mrr_k,
                           RecallAveraging averaging,
                           std::optional<double> fixed_threshold) {
  std::unordered_map<std::string, std::unordered_map<std::string, double>> grades;
  for (const auto& pair : qrels) {
    grades[pair.query_id][pair.candidate_id] = pair.grade.value;
  }
  const auto grade_of = [&grades](const std::string& qid,
                                  const std::string& docid) {
    const auto qit = grades.find(qid);
    if (qit == grades.end()) return 0.0;
    const auto dit = qit->second.find(docid);
    return dit == qit->second.end() ? 0.0 : dit->second;
  };

  std::vector<CalibrationRecord> scored;
  for (const auto& run : runs) {
    for (const auto& hit : run.hits) {
      scored.push_back({run.query_id, hit.score,
                        RelevanceGrade{grade_of(run.query_id, hit.candidate_id)}});
    }
  }

  MethodMetrics metrics;
  metrics.method = method;
  metrics.pr_auc = pr_auc_pooled(scored);
  if (fixed_threshold.has_value()) {
    // Externally calibrated cutoff: report its realized operating point.
    metrics.calibration.target_recall = target_recall;
    metrics.calibration.threshold = *fixed_threshold;
    metrics.calibration.calibration_set_size = scored.size();
    metrics.calibration.averaging = averaging;
    std::size_t tp = 0, fp = 0, positives = 0;
    for (const auto& rec : scored) {
      const bool positive = rec.grade.positive();
      positives += positive ? 1 : 0;
      metrics.calibration.positives += positive ? 1 : 0;
      if (rec.logit >= *fixed_threshold) {
        if (positive) {
          ++tp;
        } else {
          ++fp;
        }
      }
    }
    metrics.calibration.achieved_recall =
        static_cast<double>(tp) / static_cast<double>(positives);
    metrics.precision_at_recall.threshold = *fixed_threshold;
    metrics.precision_at_recall.recall = metrics.calibration.achieved_recall;
    metrics.precision_at_recall.precision =
        tp + fp == 0 ? 0.0
                     : static_cast<double>(tp) / static_cast<double>(tp + fp);
  } else {
    metrics.calibration = calibrate_threshold(scored, target_recall, averaging);
    metrics.precision_at_recall = p_at_r(scored, target_recall, averaging);
  }

  std::vector<RankedList> filtered;
  filtered.reserve(runs.size());
  for (const auto& run : runs) {
    RankedList list;
    list.query_id = run.query_id;
    std::size_t retained = 0;
    for (const auto& hit : run.hits) {
      if (hit.score >= metrics.calibration.threshold) {
        list.candidate_ids.push_back(hit.candidate_id);
        ++retained;
      }
    }
    metrics.filter_report.entries.push_back(
        {run.query_id, run.hits.size(), retained});
    filtered.push_back(std::move(list));
  }
  const auto [filter_pct, null_pct] = filter_and_null_pct(metrics.filter_report);
  metrics.filter_pct = filter_pct;
  metrics.null_pct = null_pct;
  metrics.mrr = mrr_at_k(filtered, qrels, mrr_k);
  return metrics;
}

}  // namespace calret
