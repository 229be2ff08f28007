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

#include "calret/filter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace calret {

namespace {

ThresholdCalibration calibrate_micro(std::span<const CalibrationRecord> scored,
                                     double target_recall) {
  std::vector<double> positives;
  for (const auto& rec : scored) {
    if (rec.grade.positive()) positives.push_back(rec.logit);
  }
  if (positives.empty()) {
    throw std::invalid_argument("threshold calibration requires at least one "
                                "positive pair");
  }
  std::sort(positives.begin(), positives.end(), std::greater<double>());
  const double p = static_cast<double>(positives.size());
  // Smallest k with k/P >= target; the epsilon guards the ceil against
  // representation slop in target * P, and any positive target keeps at
  // least one positive.
  const auto keep = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::ceil(target_recall * p - 1e-9)));
  const double threshold = positives[keep - 1];
  std::size_t at_or_above = 0;
  for (double logit : positives) {
    if (logit >= threshold) ++at_or_above;
  }
  ThresholdCalibration cal;
  cal.target_recall = target_recall;
  cal.threshold = threshold;
  cal.achieved_recall = static_cast<double>(at_or_above) / p;
  cal.calibration_set_size = scored.size();
  cal.positives = positives.size();
  cal.averaging = RecallAveraging::kMicro;
  return cal;
}

ThresholdCalibration calibrate_macro(std::span<const CalibrationRecord> scored,
                                     double target_recall) {
  // Positive logits per query; queries without positives are excluded.
  std::map<std::string, std::vector<double>> per_query;
  for (const auto& rec : scored) {
    if (rec.grade.positive()) per_query[rec.query_id].push_back(rec.logit);
  }
  if (per_query.empty()) {
    throw std::invalid_argument("threshold calibration requires at least one "
                                "positive pair");
  }
  struct Tagged {
    double logit;
    double recall_increment;
  };
  std::vector<Tagged> tagged;
  std::size_t n_positives = 0;
  for (const auto& [qid, logits] : per_query) {
    n_positives += logits.size();
    const double inc = 1.0 / static_cast<double>(logits.size());
    for (double logit : logits) tagged.push_back({logit, inc});
  }
  std::sort(tagged.begin(), tagged.end(),
            [](const Tagged& a, const Tagged& b) { return a.logit > b.logit; });
  const double n_queries = static_cast<double>(per_query.size());
  double recall_sum = 0.0;
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    recall_sum += tagged[i].recall_increment;
    const bool last_of_tie =
        i + 1 == tagged.size() || tagged[i + 1].logit != tagged[i].logit;
    if (!last_of_tie) continue;
    const double macro = recall_sum / n_queries;
    if (macro + 1e-12 >= target_recall) {
      ThresholdCalibration cal;
      cal.target_recall = target_recall;
      cal.threshold = tagged[i].logit;
      cal.achieved_recall = macro;
      cal.calibration_set_size = scored.size();
      cal.positives = n_positives;
      cal.averaging = RecallAveraging::kMacro;
      return cal;
    }
  }
  throw std::logic_error("macro recall never reached target");  // unreachable
}

}  // namespace

ThresholdCalibration calibrate_threshold(
    std::span<const CalibrationRecord> scored, double target_recall,
    RecallAveraging averaging) {
  if (!(target_recall > 0.0 && target_recall <= 1.0)) {
    throw std::invalid_argument("target recall must lie in (0, 1], got " +
                                std::to_string(target_recall));
  }
  return averaging == RecallAveraging::kMicro
             ? calibrate_micro(scored, target_recall)
             : calibrate_macro(scored, target_recall);
}

SearchResult apply_filter(const SearchResult& hits, double threshold,
                          FilterReport* report) {
  SearchResult retained;
  retained.query_id = hits.query_id;
  for (const auto& hit : hits.hits) {
    if (!hit.logit.has_value()) {
      throw std::invalid_argument("apply_filter: hit " + hit.id +
                                  " has no calibrated logit");
    }
    if (*hit.logit >= threshold) retained.hits.push_back(hit);
  }
  if (report != nullptr) {
    report->entries.push_back(
        {hits.query_id, hits.hits.size(), retained.hits.size()});
  }
  return retained;
}

void write_threshold(const std::string& path, const ThresholdCalibration& cal) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "target_recall = %.17g\n"
                "threshold = %.17g\n"
                "threshold_probability = %.17g\n"
                "achieved_recall = %.17g\n"
                "calibration_set_size = %zu\n"
                "positives = %zu\n"
                "averaging = %s\n",
                cal.target_recall, cal.threshold, sigmoid(cal.threshold),
                cal.achieved_recall, cal.calibration_set_size, cal.positives,
                cal.averaging == RecallAveraging::kMicro ? "micro" : "macro");
  out << buf;
  if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

ThresholdCalibration read_threshold(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open threshold file " + path);
  ThresholdCalibration cal;
  std::string line;
  std::size_t line_no = 0;
  bool saw_threshold = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected \"key = value\"");
    }
    auto trim = [](std::string s) {
      const auto from = s.find_first_not_of(" \t");
      const auto to = s.find_last_not_of(" \t");
      return from == std::string::npos ? std::string() : s.substr(from, to - from + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "target_recall") {
        cal.target_recall = std::stod(value);
      } else if (key == "threshold") {
        cal.threshold = std::stod(value);
        saw_threshold = true;
      } else if (key == "threshold_probability") {
        // derived, ignored on read
      } else if (key == "achieved_recall") {
        cal.achieved_recall = std::stod(value);
      } else if (key == "calibration_set_size") {
        cal.calibration_set_size = std::stoul(value);
      } else if (key == "positives") {
        cal.positives = std::stoul(value);
      } else if (key == "averaging") {
        if (value == "micro") {
          cal.averaging = RecallAveraging::kMicro;
        } else if (value == "macro") {
          cal.averaging = RecallAveraging::kMacro;
        } else {
          throw std::runtime_error("unknown averaging \"" + value + "\"");
        }
      } else {
        throw std::runtime_error("unknown key \"" + key + "\"");
      }
    } catch (const std::runtime_error&) {
      throw;
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  if (!saw_threshold) {
    throw std::runtime_error(path + ": missing \"threshold\" entry");
  }
  return cal;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
auto run_stage(const char* stage, double* elapsed, Fn&& fn) {
  const auto start = Clock::now();
  try {
    auto value = fn();
    *elapsed = seconds_since(start);
    return value;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string(stage) + " stage: " + e.what());
  }
}

PipelineResult pipeline_from_embedding(const std::string& query_id,
                                       const EmbeddingVector& query,
                                       const VectorIndex& index,
                                       const AdapterNetwork* adapter,
                                       const PipelineConfig& config,
                                       PipelineTimings timings) {
  if (config.kind != TransformKind::kRaw && adapter == nullptr) {
    throw std::invalid_argument("transform kind " +
                                transform_kind_name(config.kind) +
                                " requires an adapter network");
  }
  PipelineResult result;
  result.timings = timings;

  SearchResult hits =
      run_stage("search", &result.timings.search_seconds,
                [&] { return search(index, query, config.k, query_id); });

  result.calibrated =
      run_stage("calibrate", &result.timings.calibrate_seconds, [&] {
        if (adapter != nullptr) {
          return calibrate_candidates(*adapter, config.kind, query,
                                      std::move(hits));
        }
        // Raw scores: the identity transform, probability via sigmoid.
        for (auto& hit : hits.hits) {
          hit.logit = hit.cosine;
          hit.probability = sigmoid(hit.cosine);
        }
        return std::move(hits);
      });

  result.retained = run_stage("filter", &result.timings.filter_seconds, [&] {
    if (!config.threshold.has_value()) return result.calibrated;
    return apply_filter(result.calibrated, *config.threshold);
  });
  result.report = {query_id, result.calibrated.hits.size(),
                   result.retained.hits.size()};
  return result;
}

}  // namespace

PipelineResult run_pipeline(const std::string& query_id,
                            const EmbeddingVector& query,
                            const VectorIndex& index,
                            const AdapterNetwork* adapter,
                            const PipelineConfig& config) {
  return pipeline_from_embedding(query_id, query, index, adapter, config, {});
}

PipelineResult run_pipeline(const std::string& query_id,
                            const SparseFeatures& features,
                            const LinearEncoder& query_encoder,
                            const VectorIndex& index,
                            const AdapterNetwork* adapter,
                            const PipelineConfig& config) {
  PipelineTimings timings;
  const EmbeddingVector query =
      run_stage("encode", &timings.encode_seconds,
                [&] { return query_encoder.encode(features); });
  return pipeline_from_embedding(query_id, query, index, adapter, config,
                                 timings);
}

}  // namespace calret
