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

// calret command line: one subcommand per stage of the retrieval +
// relevance-filtering workflow. Options may come from an INI-style config
// file (one section per subcommand); explicit flags win.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "calret/adapter.hpp"
#include "calret/data_io.hpp"
#include "calret/encoder.hpp"
#include "calret/eval.hpp"
#include "calret/filter.hpp"
#include "calret/index.hpp"
#include "calret/synthetic.hpp"

namespace {

using namespace calret;

void require_input(const std::string& path, const std::string& what) {
  if (path.empty()) {
    throw std::runtime_error("missing required path for " + what);
  }
  if (!std::filesystem::exists(path)) {
    throw std::runtime_error(what + " file not found: " + path);
  }
}

void ensure_parent_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

std::unordered_map<std::string, EmbeddingVector> load_embedding_map(
    const std::string& path) {
  std::unordered_map<std::string, EmbeddingVector> map;
  read_embeddings(path, [&map](EmbeddingRecord&& rec) {
    map.emplace(rec.id, EmbeddingVector{std::move(rec.values)});
  });
  return map;
}

// ---- subcommand state -------------------------------------------------

struct GenSynthArgs {
  std::string out;
  SyntheticSpec spec;
};

struct TrainEncoderArgs {
  std::string query_features, corpus_features, qrels;
  std::string query_encoder_out, candidate_encoder_out;
  std::string objective = "contrastive";
  EncoderTrainConfig config;
};

struct EmbedArgs {
  std::string encoder, features, out;
};

struct BuildIndexArgs {
  std::string embeddings, out;
};

struct TrainAdapterArgs {
  std::string queries, corpus, qrels, out;
  std::string kind = "power";
  AdapterTrainConfig config;
};

struct CalibrateArgs {
  std::string run, qrels, out;
  double target_recall = 0.95;
  std::string averaging = "micro";
};

struct SearchArgs {
  std::string index, queries, features, encoder, adapter, kind = "raw";
  std::string run_out, report_out, tag = "calret";
  std::size_t k = 50;
  std::string threshold_file;
  std::optional<double> threshold;
};

struct EvaluateArgs {
  std::string qrels, out_dir;
  std::string run_raw, run_linear, run_sqrt, run_quadratic, run_power;
  // Optional calibration files (from the calibrate subcommand); a method
  // with one skips self-calibration and reports the realized recall.
  std::string threshold_raw, threshold_max_norm, threshold_linear,
      threshold_sqrt, threshold_quadratic, threshold_power;
  double target_recall = 0.95;
  std::size_t mrr_k = 10;
  std::string averaging = "micro";
};

RecallAveraging parse_averaging(const std::string& name) {
  if (name == "micro") return RecallAveraging::kMicro;
  if (name == "macro") return RecallAveraging::kMacro;
  throw std::runtime_error("averaging must be micro or macro, got \"" + name +
                           "\"");
}

// ---- commands ----------------------------------------------------------

int cmd_gen_synth(const GenSynthArgs& args) {
  if (args.out.empty()) throw std::runtime_error("gen-synth requires --out");
  std::filesystem::create_directories(args.out);
  const auto data = generate_synthetic(args.spec);
  const auto dir = std::filesystem::path(args.out);

  write_embeddings((dir / "queries.crem").string(), args.spec.dim, data.queries);
  write_embeddings((dir / "corpus.crem").string(), args.spec.dim, data.corpus);
  write_qrels((dir / "qrels.txt").string(), data.qrels);
  write_features((dir / "queries.feats").string(), data.query_features);
  write_features((dir / "corpus.feats").string(), data.corpus_features);

  std::printf("gen-synth: %zu queries, %zu candidates, dim %u -> %s\n",
              data.queries.size(), data.corpus.size(), args.spec.dim,
              args.out.c_str());
  std::printf("  shift range [%g, %g], separation %g, noise %g, seed %llu\n",
              args.spec.shift_lo, args.spec.shift_hi,
              args.spec.class_separation, args.spec.noise_sigma,
              static_cast<unsigned long long>(args.spec.seed));
  std::printf("  feature vocab %u, mu block %zu dims\n", data.vocab_size,
              data.mu_block_dims);
  return 0;
}

int cmd_train_encoder(const TrainEncoderArgs& args) {
  require_input(args.query_features, "query features");
  require_input(args.corpus_features, "corpus features");
  require_input(args.qrels, "qrels");
  if (args.query_encoder_out.empty() || args.candidate_encoder_out.empty()) {
    throw std::runtime_error(
        "train-encoder requires --query-encoder-out and "
        "--candidate-encoder-out");
  }

  EncoderTrainingData data;
  data.pairs = read_qrels(args.qrels);
  for (auto& rec : read_features(args.query_features)) {
    data.query_features[rec.id] = std::move(rec.features);
  }
  for (auto& rec : read_features(args.corpus_features)) {
    data.candidate_features[rec.id] = std::move(rec.features);
  }

  EncoderTrainConfig config = args.config;
  config.objective = args.objective == "listwise" ? EncoderObjective::kListwise
                                                  : EncoderObjective::kContrastive;
  if (args.objective != "listwise" && args.objective != "contrastive") {
    throw std::runtime_error("objective must be contrastive or listwise");
  }
  if (config.vocab_size == 0) {
    std::uint32_t max_token = 0;
    for (const auto& [id, f] : data.query_features) {
      for (auto t : f.indices) max_token = std::max(max_token, t);
    }
    for (const auto& [id, f] : data.candidate_features) {
      for (auto t : f.indices) max_token = std::max(max_token, t);
    }
    config.vocab_size = max_token + 1;
  }

  const auto result = train_encoders(config, data);
  ensure_parent_dir(args.query_encoder_out);
  ensure_parent_dir(args.candidate_encoder_out);
  result.query_encoder.save(args.query_encoder_out);
  result.candidate_encoder.save(args.candidate_encoder_out);

  std::printf("train-encoder: %s objective, vocab %u, dim %u, %zu epochs\n",
              args.objective.c_str(), config.vocab_size, config.dim,
              config.epochs);
  if (!result.epoch_mean_loss.empty()) {
    std::printf("  mean loss %.6f -> %.6f\n", result.epoch_mean_loss.front(),
                result.epoch_mean_loss.back());
  }
  std::printf("  wrote %s and %s\n", args.query_encoder_out.c_str(),
              args.candidate_encoder_out.c_str());
  return 0;
}

int cmd_embed(const EmbedArgs& args) {
  require_input(args.encoder, "encoder checkpoint");
  require_input(args.features, "features");
  if (args.out.empty()) throw std::runtime_error("embed requires --out");

  const auto encoder = LinearEncoder::load(args.encoder);
  const auto records = read_features(args.features);
  std::vector<EmbeddingRecord> embedded;
  embedded.reserve(records.size());
  for (const auto& rec : records) {
    embedded.push_back({rec.id, encoder.encode(rec.features).values});
  }
  ensure_parent_dir(args.out);
  write_embeddings(args.out, encoder.dim(), embedded);
  std::printf("embed: %zu records at dim %u -> %s\n", embedded.size(),
              encoder.dim(), args.out.c_str());
  return 0;
}

int cmd_build_index(const BuildIndexArgs& args) {
  require_input(args.embeddings, "embeddings");
  if (args.out.empty()) throw std::runtime_error("build-index requires --out");
  const auto set = read_embeddings(args.embeddings);
  const auto index = VectorIndex::build(set.records);
  ensure_parent_dir(args.out);
  index.save(args.out);
  std::printf("build-index: %zu vectors, dim %u -> %s\n", index.size(),
              index.dim(), args.out.c_str());
  return 0;
}

int cmd_train_adapter(const TrainAdapterArgs& args) {
  require_input(args.queries, "query embeddings");
  require_input(args.corpus, "candidate embeddings");
  require_input(args.qrels, "qrels");
  if (args.out.empty()) throw std::runtime_error("train-adapter requires --out");

  AdapterTrainConfig config = args.config;
  config.kind = transform_kind_from_name(args.kind);
  const auto pairs = read_qrels(args.qrels);
  const auto query_embeddings = load_embedding_map(args.queries);
  const auto candidate_embeddings = load_embedding_map(args.corpus);

  const auto result =
      train_adapter(config, pairs, query_embeddings, candidate_embeddings);
  ensure_parent_dir(args.out);
  result.network.save(args.out);

  std::printf("train-adapter: kind %s, %zu epochs, batch %zu, lr %g\n",
              args.kind.c_str(), config.epochs, config.batch_size,
              config.learning_rate);
  if (!result.epoch_mean_loss.empty()) {
    std::printf("  mean loss %.6f -> %.6f\n", result.epoch_mean_loss.front(),
                result.epoch_mean_loss.back());
  }
  std::printf("  wrote %s\n", args.out.c_str());
  return 0;
}

std::vector<CalibrationRecord> scored_records_from_run(
    const std::vector<RunEntry>& entries, const std::vector<JudgedPair>& qrels) {
  std::unordered_map<std::string, std::unordered_map<std::string, double>> grades;
  for (const auto& pair : qrels) {
    grades[pair.query_id][pair.candidate_id] = pair.grade.value;
  }
  std::vector<CalibrationRecord> records;
  records.reserve(entries.size());
  for (const auto& entry : entries) {
    double grade = 0.0;
    const auto qit = grades.find(entry.query_id);
    if (qit != grades.end()) {
      const auto dit = qit->second.find(entry.candidate_id);
      if (dit != qit->second.end()) grade = dit->second;
    }
    records.push_back({entry.query_id, entry.score, RelevanceGrade{grade}});
  }
  return records;
}

int cmd_calibrate(const CalibrateArgs& args) {
  require_input(args.run, "scored run");
  require_input(args.qrels, "qrels");
  if (args.out.empty()) throw std::runtime_error("calibrate requires --out");

  const auto entries = read_run(args.run);
  const auto qrels = read_qrels(args.qrels);
  const auto records = scored_records_from_run(entries, qrels);
  const auto cal = calibrate_threshold(records, args.target_recall,
                                       parse_averaging(args.averaging));
  ensure_parent_dir(args.out);
  write_threshold(args.out, cal);

  std::printf("calibrate: target recall %.4f (%s) over %zu pairs (%zu positive)\n",
              cal.target_recall,
              cal.averaging == RecallAveraging::kMicro ? "micro" : "macro",
              cal.calibration_set_size, cal.positives);
  std::printf("  threshold %.9g (probability %.6f), achieved recall %.6f\n",
              cal.threshold, sigmoid(cal.threshold), cal.achieved_recall);
  std::printf("  wrote %s\n", args.out.c_str());
  return 0;
}

int cmd_search(const SearchArgs& args) {
  require_input(args.index, "index");
  const bool from_embeddings = !args.queries.empty();
  const bool from_features = !args.features.empty();
  if (from_embeddings == from_features) {
    throw std::runtime_error(
        "search requires exactly one of --queries (embeddings) or "
        "--features with --encoder");
  }
  if (from_features) require_input(args.encoder, "query encoder");
  if (args.run_out.empty()) throw std::runtime_error("search requires --run-out");

  PipelineConfig config;
  config.kind = transform_kind_from_name(args.kind);
  config.k = args.k;
  if (!args.threshold_file.empty() && args.threshold.has_value()) {
    throw std::runtime_error("give either --threshold or --threshold-file");
  }
  if (args.threshold.has_value()) config.threshold = *args.threshold;
  if (!args.threshold_file.empty()) {
    require_input(args.threshold_file, "threshold");
    config.threshold = read_threshold(args.threshold_file).threshold;
  }

  std::optional<AdapterNetwork> adapter;
  if (config.kind != TransformKind::kRaw) {
    require_input(args.adapter, "adapter checkpoint");
    adapter = AdapterNetwork::load(args.adapter);
  }

  const auto index = VectorIndex::load(args.index);
  std::optional<LinearEncoder> encoder;
  if (from_features) encoder = LinearEncoder::load(args.encoder);

  std::vector<RunEntry> run_entries;
  FilterReport report;
  PipelineTimings totals;
  std::size_t n_queries = 0;

  const auto process = [&](const std::string& qid, const PipelineResult& result) {
    std::uint32_t rank = 1;
    for (const auto& hit : result.retained.hits) {
      run_entries.push_back({qid, hit.id, rank++, hit.logit.value_or(hit.cosine)});
    }
    report.entries.push_back(result.report);
    totals.encode_seconds += result.timings.encode_seconds;
    totals.search_seconds += result.timings.search_seconds;
    totals.calibrate_seconds += result.timings.calibrate_seconds;
    totals.filter_seconds += result.timings.filter_seconds;
    ++n_queries;
  };

  if (from_embeddings) {
    require_input(args.queries, "query embeddings");
    read_embeddings(args.queries, [&](EmbeddingRecord&& rec) {
      const EmbeddingVector query{std::move(rec.values)};
      process(rec.id, run_pipeline(rec.id, query, index,
                                   adapter ? &*adapter : nullptr, config));
    });
  } else {
    for (const auto& rec : read_features(args.features)) {
      process(rec.id,
              run_pipeline(rec.id, rec.features, *encoder, index,
                           adapter ? &*adapter : nullptr, config));
    }
  }

  ensure_parent_dir(args.run_out);
  write_run(args.run_out, run_entries, args.tag);
  if (!args.report_out.empty()) {
    ensure_parent_dir(args.report_out);
    std::ofstream out(args.report_out);
    if (!out) throw std::runtime_error("cannot open " + args.report_out);
    out << "# query_id\tinput\tretained\n";
    for (const auto& entry : report.entries) {
      out << entry.query_id << "\t" << entry.input_count << "\t"
          << entry.retained_count << "\n";
    }
  }

  std::printf("search: %zu queries, K=%zu, kind %s%s\n", n_queries, args.k,
              args.kind.c_str(),
              config.threshold ? ", threshold applied" : ", no filter");
  std::printf("  stage seconds: encode %.3f, search %.3f, calibrate %.3f, "
              "filter %.3f\n",
              totals.encode_seconds, totals.search_seconds,
              totals.calibrate_seconds, totals.filter_seconds);
  if (config.threshold) {
    const auto [filter_pct, null_pct] = filter_and_null_pct(report);
    std::printf("  filtered %.2f%% of pairs, %.2f%% null queries\n", filter_pct,
                null_pct);
  }
  std::printf("  wrote %s\n", args.run_out.c_str());
  return 0;
}

int cmd_evaluate(const EvaluateArgs& args) {
  require_input(args.qrels, "qrels");
  if (args.out_dir.empty()) throw std::runtime_error("evaluate requires --out");
  struct MethodInput {
    std::string name;
    std::string run_path;
    std::string threshold_path;
  };
  const std::vector<MethodInput> inputs = {
      {"raw", args.run_raw, args.threshold_raw},
      {"max-norm", args.run_raw, args.threshold_max_norm},
      {"linear", args.run_linear, args.threshold_linear},
      {"sqrt", args.run_sqrt, args.threshold_sqrt},
      {"quadratic", args.run_quadratic, args.threshold_quadratic},
      {"power", args.run_power, args.threshold_power},
  };
  for (const auto& input : inputs) {
    require_input(input.run_path, input.name + " run");
    if (!input.threshold_path.empty()) {
      require_input(input.threshold_path, input.name + " threshold");
    }
  }
  std::filesystem::create_directories(args.out_dir);

  const auto qrels = read_qrels(args.qrels);
  const auto averaging = parse_averaging(args.averaging);

  std::vector<MethodMetrics> rows;
  std::size_t max_k = 0;
  for (const auto& input : inputs) {
    auto runs = group_run_entries(read_run(input.run_path));
    if (input.name == "max-norm") runs = max_norm_runs(runs);
    for (const auto& run : runs) max_k = std::max(max_k, run.hits.size());
    std::optional<double> fixed_threshold;
    if (!input.threshold_path.empty()) {
      fixed_threshold = read_threshold(input.threshold_path).threshold;
    }
    rows.push_back(evaluate_run(input.name, runs, qrels, args.target_recall,
                                args.mrr_k, averaging, fixed_threshold));
  }

  // Table shaped like a method-comparison summary: one row per method.
  std::ostringstream table;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %8s %8s %8s %8s %8s %10s\n", "method",
                "PR-AUC", "P@R", "R", "Filter%", "Null%",
                ("MRR@" + std::to_string(args.mrr_k)).c_str());
  table << line;
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line),
                  "%-10s %8.4f %8.4f %8.4f %8.2f %8.2f %10.4f\n",
                  row.method.c_str(), row.pr_auc,
                  row.precision_at_recall.precision,
                  row.precision_at_recall.recall, row.filter_pct, row.null_pct,
                  row.mrr);
    table << line;
  }

  // Coarse retained-count distribution, printable alongside the table.
  std::ostringstream retained_table;
  {
    std::vector<double> coarse = {0.0, 1.0};
    for (double q : {0.25, 0.5, 0.75, 1.0}) {
      const double edge = std::max(2.0, std::floor(q * static_cast<double>(max_k)));
      if (edge > coarse.back()) coarse.push_back(edge);
    }
    coarse.push_back(static_cast<double>(max_k) + 1.0);
    std::snprintf(line, sizeof(line), "%-10s", "retained");
    retained_table << line;
    for (std::size_t i = 0; i + 1 < coarse.size(); ++i) {
      std::string label;
      if (coarse[i + 1] - coarse[i] <= 1.0) {
        label = std::to_string(static_cast<std::size_t>(coarse[i]));
      } else {
        label = std::to_string(static_cast<std::size_t>(coarse[i])) + "-" +
                std::to_string(static_cast<std::size_t>(coarse[i + 1]) - 1);
      }
      std::snprintf(line, sizeof(line), " %9s", label.c_str());
      retained_table << line;
    }
    retained_table << "\n";
    for (const auto& row : rows) {
      const auto hist = retained_histogram(row.filter_report, coarse);
      std::snprintf(line, sizeof(line), "%-10s", row.method.c_str());
      retained_table << line;
      for (std::size_t i = 0; i + 1 < hist.edges.size(); ++i) {
        std::snprintf(line, sizeof(line), " %9zu", hist.counts[i]);
        retained_table << line;
      }
      retained_table << "\n";
    }
  }

  const auto dir = std::filesystem::path(args.out_dir);
  {
    std::ofstream out(dir / "report.txt");
    out << "target_recall " << args.target_recall << ", averaging "
        << args.averaging << "\n\n"
        << table.str() << "\nqueries per retained-count bucket\n"
        << retained_table.str();
  }
  {
    std::ofstream out(dir / "metrics.kv");
    char kv[256];
    for (const auto& row : rows) {
      std::snprintf(kv, sizeof(kv),
                    "%s.pr_auc = %.17g\n%s.p_at_r = %.17g\n%s.recall = %.17g\n"
                    "%s.threshold = %.17g\n%s.filter_pct = %.17g\n"
                    "%s.null_pct = %.17g\n%s.mrr = %.17g\n",
                    row.method.c_str(), row.pr_auc, row.method.c_str(),
                    row.precision_at_recall.precision, row.method.c_str(),
                    row.precision_at_recall.recall, row.method.c_str(),
                    row.precision_at_recall.threshold, row.method.c_str(),
                    row.filter_pct, row.method.c_str(), row.null_pct,
                    row.method.c_str(), row.mrr);
      out << kv;
    }
  }
  // Retained-count distribution per method (one line per count bucket).
  std::vector<double> edges;
  for (std::size_t e = 0; e <= max_k + 1; ++e) {
    edges.push_back(static_cast<double>(e));
  }
  for (const auto& row : rows) {
    const auto hist = retained_histogram(row.filter_report, edges);
    std::ofstream out(dir / ("hist_" + row.method + ".tsv"));
    out << "# retained_count\tqueries\n";
    for (std::size_t i = 0; i + 1 < hist.edges.size(); ++i) {
      out << static_cast<std::size_t>(hist.edges[i]) << "\t" << hist.counts[i]
          << "\n";
    }
  }

  std::cout << table.str() << "\nqueries per retained-count bucket\n"
            << retained_table.str();
  std::printf("evaluate: wrote report.txt, metrics.kv and hist_*.tsv under %s\n",
              args.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"calret: embedding retrieval with calibrated relevance filtering"};
  app.set_version_flag("--version", "calret 0.1.0");
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI config file, one [section] per subcommand; explicit "
                 "flags override config values");
  app.allow_config_extras(CLI::config_extras_mode::error);

  GenSynthArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "Generate a synthetic retrieval world");
  gen_cmd->add_option("--out", gen.out, "Output directory");
  gen_cmd->add_option("--num-queries", gen.spec.num_queries);
  gen_cmd->add_option("--corpus-size", gen.spec.corpus_size);
  gen_cmd->add_option("--dim", gen.spec.dim);
  gen_cmd->add_option("--relevant-per-query", gen.spec.relevant_per_query);
  gen_cmd->add_option("--shift-lo", gen.spec.shift_lo);
  gen_cmd->add_option("--shift-hi", gen.spec.shift_hi);
  gen_cmd->add_option("--class-separation", gen.spec.class_separation);
  gen_cmd->add_option("--noise-sigma", gen.spec.noise_sigma);
  gen_cmd->add_option("--seed", gen.spec.seed);

  TrainEncoderArgs te;
  auto* te_cmd = app.add_subcommand("train-encoder", "Train the dual linear encoder");
  te_cmd->add_option("--query-features", te.query_features);
  te_cmd->add_option("--corpus-features", te.corpus_features);
  te_cmd->add_option("--qrels", te.qrels);
  te_cmd->add_option("--query-encoder-out", te.query_encoder_out);
  te_cmd->add_option("--candidate-encoder-out", te.candidate_encoder_out);
  te_cmd->add_option("--objective", te.objective, "contrastive|listwise");
  te_cmd->add_option("--dim", te.config.dim);
  te_cmd->add_option("--vocab-size", te.config.vocab_size, "0 = infer");
  te_cmd->add_option("--tau", te.config.tau);
  te_cmd->add_option("--batch-size", te.config.batch_size);
  te_cmd->add_option("--epochs", te.config.epochs);
  te_cmd->add_option("--learning-rate", te.config.learning_rate);
  te_cmd->add_option("--seed", te.config.seed);

  EmbedArgs embed;
  auto* embed_cmd = app.add_subcommand("embed", "Encode sparse features to embeddings");
  embed_cmd->add_option("--encoder", embed.encoder);
  embed_cmd->add_option("--features", embed.features);
  embed_cmd->add_option("--out", embed.out);

  BuildIndexArgs bi;
  auto* bi_cmd = app.add_subcommand("build-index", "Build the exact-search index");
  bi_cmd->add_option("--embeddings", bi.embeddings);
  bi_cmd->add_option("--out", bi.out);

  TrainAdapterArgs ta;
  auto* ta_cmd = app.add_subcommand("train-adapter", "Train the cosine adapter");
  ta_cmd->add_option("--queries", ta.queries);
  ta_cmd->add_option("--corpus", ta.corpus);
  ta_cmd->add_option("--qrels", ta.qrels);
  ta_cmd->add_option("--out", ta.out);
  ta_cmd->add_option("--kind", ta.kind, "linear|sqrt|quadratic|power");
  ta_cmd->add_option("--learning-rate", ta.config.learning_rate);
  ta_cmd->add_option("--batch-size", ta.config.batch_size);
  ta_cmd->add_option("--epochs", ta.config.epochs);
  ta_cmd->add_option("--seed", ta.config.seed);
  ta_cmd->add_option("--negative-ratio", ta.config.negative_ratio);

  CalibrateArgs cal;
  auto* cal_cmd = app.add_subcommand("calibrate", "Tune the global threshold to a recall target");
  cal_cmd->add_option("--run", cal.run, "Scored, unfiltered run file");
  cal_cmd->add_option("--qrels", cal.qrels);
  cal_cmd->add_option("--out", cal.out);
  cal_cmd->add_option("--target-recall", cal.target_recall);
  cal_cmd->add_option("--averaging", cal.averaging, "micro|macro");

  SearchArgs search_args;
  auto* search_cmd = app.add_subcommand("search", "Retrieve, calibrate and optionally filter");
  search_cmd->add_option("--index", search_args.index);
  search_cmd->add_option("--queries", search_args.queries, "Query embeddings (CREM)");
  search_cmd->add_option("--features", search_args.features, "Query features (with --encoder)");
  search_cmd->add_option("--encoder", search_args.encoder);
  search_cmd->add_option("--adapter", search_args.adapter);
  search_cmd->add_option("--kind", search_args.kind, "raw|linear|sqrt|quadratic|power");
  search_cmd->add_option("--k", search_args.k);
  search_cmd->add_option("--threshold", search_args.threshold);
  search_cmd->add_option("--threshold-file", search_args.threshold_file);
  search_cmd->add_option("--run-out", search_args.run_out);
  search_cmd->add_option("--report-out", search_args.report_out);
  search_cmd->add_option("--tag", search_args.tag);

  EvaluateArgs ev;
  auto* ev_cmd = app.add_subcommand("evaluate", "Compare filtering methods on scored runs");
  ev_cmd->add_option("--qrels", ev.qrels);
  ev_cmd->add_option("--out", ev.out_dir);
  ev_cmd->add_option("--run-raw", ev.run_raw);
  ev_cmd->add_option("--run-linear", ev.run_linear);
  ev_cmd->add_option("--run-sqrt", ev.run_sqrt);
  ev_cmd->add_option("--run-quadratic", ev.run_quadratic);
  ev_cmd->add_option("--run-power", ev.run_power);
  ev_cmd->add_option("--target-recall", ev.target_recall);
  ev_cmd->add_option("--mrr-k", ev.mrr_k);
  ev_cmd->add_option("--averaging", ev.averaging, "micro|macro");
  ev_cmd->add_option("--threshold-raw", ev.threshold_raw,
                     "Calibration file overriding self-calibration");
  ev_cmd->add_option("--threshold-max-norm", ev.threshold_max_norm);
  ev_cmd->add_option("--threshold-linear", ev.threshold_linear);
  ev_cmd->add_option("--threshold-sqrt", ev.threshold_sqrt);
  ev_cmd->add_option("--threshold-quadratic", ev.threshold_quadratic);
  ev_cmd->add_option("--threshold-power", ev.threshold_power);

  for (auto* sub : app.get_subcommands({})) {
    sub->configurable();
    // Lets "calret <subcommand> --config file" reach the app-level flag.
    sub->fallthrough();
  }

  CLI11_PARSE(app, argc, argv);

  // A config file section marks its subcommand as parsed too; dispatch on
  // the subcommand actually named on the command line.
  std::string invoked;
  for (int i = 1; i < argc && invoked.empty(); ++i) {
    if (app.get_subcommand_no_throw(argv[i]) != nullptr) invoked = argv[i];
  }

  try {
    if (invoked == "gen-synth") return cmd_gen_synth(gen);
    if (invoked == "train-encoder") return cmd_train_encoder(te);
    if (invoked == "embed") return cmd_embed(embed);
    if (invoked == "build-index") return cmd_build_index(bi);
    if (invoked == "train-adapter") return cmd_train_adapter(ta);
    if (invoked == "calibrate") return cmd_calibrate(cal);
    if (invoked == "search") return cmd_search(search_args);
    if (invoked == "evaluate") return cmd_evaluate(ev);
  } catch (const std::exception& e) {
    std::cerr << (invoked.empty() ? "calret" : invoked) << ": error: "
              << e.what() << "\n";
    return 1;
  }
  return 0;
}
