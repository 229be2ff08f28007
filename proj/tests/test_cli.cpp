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

// End-to-end tests driving the installed binary the way a user would.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "calret/filter.hpp"
#include "doctest.h"

namespace {

namespace fs = std::filesystem;

struct Invocation {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

Invocation run_cli(const std::string& args, const fs::path& workdir) {
  const fs::path log = workdir / "last_output.log";
  const std::string command = "cd '" + workdir.string() + "' && '" +
                              CALRET_CLI_PATH + "' " + args + " > '" +
                              log.string() + "' 2>&1";
  Invocation result;
  const int status = std::system(command.c_str());
  result.exit_code = status == -1 ? -1 : WEXITSTATUS(status);
  std::ifstream in(log);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  return result;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// One small world end to end: every stage must succeed and produce its
// artifact.
void drive_pipeline(const fs::path& dir) {
  auto cli = [&](const std::string& args) {
    const auto result = run_cli(args, dir);
    REQUIRE_MESSAGE(result.exit_code == 0, args << "\n" << result.output);
    return result;
  };

  cli("gen-synth --out world --num-queries 24 --corpus-size 240 --dim 40 "
      "--relevant-per-query 3 --shift-lo 0.35 --shift-hi 0.8 "
      "--class-separation 0.06 --noise-sigma 0.02 --seed 5");
  cli("build-index --embeddings world/corpus.crem --out index.crix");
  cli("train-adapter --queries world/queries.crem --corpus world/corpus.crem "
      "--qrels world/qrels.txt --kind power --epochs 6 --learning-rate 0.02 "
      "--batch-size 8 --seed 3 --out adapter.crad");
  cli("search --index index.crix --queries world/queries.crem --kind power "
      "--adapter adapter.crad --k 10 --run-out run_power.trec");
  cli("calibrate --run run_power.trec --qrels world/qrels.txt "
      "--target-recall 0.95 --out threshold.txt");
  cli("search --index index.crix --queries world/queries.crem --kind power "
      "--adapter adapter.crad --k 10 --threshold-file threshold.txt "
      "--run-out run_filtered.trec --report-out report.tsv");
  cli("search --index index.crix --queries world/queries.crem --kind raw "
      "--k 10 --run-out run_raw.trec");
  for (const char* kind : {"linear", "sqrt", "quadratic"}) {
    cli(std::string("train-adapter --queries world/queries.crem --corpus "
                    "world/corpus.crem --qrels world/qrels.txt --kind ") +
        kind + " --epochs 6 --learning-rate 0.02 --batch-size 8 --seed 3 "
               "--out adapter_" + kind + ".crad");
    cli(std::string("search --index index.crix --queries world/queries.crem "
                    "--kind ") + kind + " --adapter adapter_" + kind +
        ".crad --k 10 --run-out run_" + kind + ".trec");
  }
  cli("evaluate --qrels world/qrels.txt --run-raw run_raw.trec "
      "--run-linear run_linear.trec --run-sqrt run_sqrt.trec "
      "--run-quadratic run_quadratic.trec --run-power run_power.trec "
      "--target-recall 0.95 --mrr-k 10 --out eval");
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("the full workflow runs end to end") {
  const auto dir = fresh_dir("calret_cli_e2e");
  const auto cli = [&](const std::string& args) {
    const auto result = run_cli(args, dir);
    REQUIRE_MESSAGE(result.exit_code == 0, result.output);
  };
  cli("gen-synth --out world --num-queries 24 --corpus-size 240 --dim 40 "
      "--relevant-per-query 3 --shift-lo 0.35 --shift-hi 0.8 "
      "--class-separation 0.06 --noise-sigma 0.02 --seed 5");
  const std::string queries_before = slurp(dir / "world" / "queries.crem");
  const std::string qrels_before = slurp(dir / "world" / "qrels.txt");

  drive_pipeline(dir);

  // No downstream stage may touch its inputs.
  CHECK(slurp(dir / "world" / "queries.crem") == queries_before);
  CHECK(slurp(dir / "world" / "qrels.txt") == qrels_before);

  for (const char* artifact :
       {"world/queries.crem", "world/corpus.crem", "world/qrels.txt",
        "world/queries.feats", "world/corpus.feats", "index.crix",
        "adapter.crad", "run_power.trec", "threshold.txt", "run_filtered.trec",
        "report.tsv", "eval/report.txt", "eval/metrics.kv",
        "eval/hist_raw.tsv", "eval/hist_power.tsv"}) {
    CAPTURE(artifact);
    CHECK(fs::exists(dir / artifact));
  }

  const std::string report = slurp(dir / "eval" / "report.txt");
  for (const char* method :
       {"raw", "max-norm", "linear", "sqrt", "quadratic", "power"}) {
    CHECK(report.find(method) != std::string::npos);
  }

  // Calibration postcondition, read back from the artifact.
  const auto cal = calret::read_threshold((dir / "threshold.txt").string());
  CHECK(cal.achieved_recall >= 0.95);
  fs::remove_all(dir);
}

TEST_CASE("fixed seeds reproduce every artifact byte for byte") {
  const auto dir1 = fresh_dir("calret_cli_det1");
  const auto dir2 = fresh_dir("calret_cli_det2");
  drive_pipeline(dir1);
  drive_pipeline(dir2);
  for (const char* artifact :
       {"world/queries.crem", "world/corpus.crem", "world/qrels.txt",
        "index.crix", "adapter.crad", "run_power.trec", "run_filtered.trec",
        "threshold.txt", "eval/report.txt", "eval/metrics.kv",
        "eval/hist_power.tsv"}) {
    CAPTURE(artifact);
    CHECK(slurp(dir1 / artifact) == slurp(dir2 / artifact));
  }
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("a 99% recall target is honored") {
  const auto dir = fresh_dir("calret_cli_cal99");
  auto cli = [&](const std::string& args) {
    const auto result = run_cli(args, dir);
    REQUIRE_MESSAGE(result.exit_code == 0, result.output);
  };
  cli("gen-synth --out world --num-queries 16 --corpus-size 160 --dim 40 "
      "--relevant-per-query 3 --seed 8");
  cli("build-index --embeddings world/corpus.crem --out index.crix");
  cli("search --index index.crix --queries world/queries.crem --kind raw "
      "--k 10 --run-out run.trec");
  cli("calibrate --run run.trec --qrels world/qrels.txt --target-recall 0.99 "
      "--out threshold.txt");
  const auto cal = calret::read_threshold((dir / "threshold.txt").string());
  CHECK(cal.target_recall == 0.99);
  CHECK(cal.achieved_recall >= 0.99);
  fs::remove_all(dir);
}

TEST_CASE("evaluate applies a calibration file produced elsewhere") {
  const auto dir = fresh_dir("calret_cli_thrfile");
  auto cli = [&](const std::string& args) {
    const auto result = run_cli(args, dir);
    REQUIRE_MESSAGE(result.exit_code == 0, result.output);
    return result;
  };
  cli("gen-synth --out world --num-queries 16 --corpus-size 160 --dim 40 "
      "--relevant-per-query 3 --seed 8");
  cli("build-index --embeddings world/corpus.crem --out index.crix");
  cli("search --index index.crix --queries world/queries.crem --kind raw "
      "--k 10 --run-out run.trec");
  cli("calibrate --run run.trec --qrels world/qrels.txt --target-recall 0.9 "
      "--out threshold.txt");
  const auto fixed =
      cli("evaluate --qrels world/qrels.txt --run-raw run.trec "
          "--run-linear run.trec --run-sqrt run.trec --run-quadratic run.trec "
          "--run-power run.trec --target-recall 0.5 "
          "--threshold-raw threshold.txt --out eval");
  // The raw row reports the file's operating point (recall ~0.9), not the
  // 0.5 self-calibrated one.
  const std::string kv = slurp(dir / "eval" / "metrics.kv");
  const auto pos = kv.find("raw.recall = ");
  REQUIRE(pos != std::string::npos);
  const double recall = std::stod(kv.substr(pos + 13));
  CHECK(recall >= 0.9);
  fs::remove_all(dir);
}

TEST_CASE("config sections drive subcommands and flags override") {
  const auto dir = fresh_dir("calret_cli_config");
  {
    std::ofstream ini(dir / "pipeline.ini");
    ini << "[gen-synth]\n"
           "out = world\n"
           "num-queries = 16\n"
           "corpus-size = 128\n"
           "dim = 40\n"
           "relevant-per-query = 2\n"
           "seed = 12\n"
           "[build-index]\n"
           "embeddings = world/corpus.crem\n"
           "out = index.crix\n";
  }
  auto r = run_cli("gen-synth --config pipeline.ini", dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  CHECK(r.output.find("16 queries") != std::string::npos);
  r = run_cli("build-index --config pipeline.ini", dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);

  // Flag overrides the config value.
  r = run_cli("gen-synth --config pipeline.ini --out world2 --seed 13", dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.output);
  CHECK(fs::exists(dir / "world2" / "queries.crem"));
  CHECK(slurp(dir / "world" / "queries.crem") !=
        slurp(dir / "world2" / "queries.crem"));
  fs::remove_all(dir);
}

TEST_CASE("unknown config keys are rejected") {
  const auto dir = fresh_dir("calret_cli_badcfg");
  {
    std::ofstream ini(dir / "bad.ini");
    ini << "[gen-synth]\nout = world\nnum-queries = 8\nbogus-knob = 1\n";
  }
  const auto r = run_cli("gen-synth --config bad.ini", dir);
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("bogus-knob") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("missing inputs fail before any work with a stage label") {
  const auto dir = fresh_dir("calret_cli_missing");
  auto r = run_cli("build-index --embeddings nope.crem --out x.crix", dir);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("build-index: error:") != std::string::npos);
  CHECK(r.output.find("nope.crem") != std::string::npos);
  CHECK_FALSE(fs::exists(dir / "x.crix"));

  r = run_cli("search --index missing.crix --queries q.crem --kind raw "
              "--run-out run.trec", dir);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("search: error:") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("the encoder path feeds search through features") {
  const auto dir = fresh_dir("calret_cli_encoder");
  auto cli = [&](const std::string& args) {
    const auto result = run_cli(args, dir);
    REQUIRE_MESSAGE(result.exit_code == 0, result.output);
    return result;
  };
  cli("gen-synth --out world --num-queries 16 --corpus-size 128 --dim 40 "
      "--relevant-per-query 2 --seed 21");
  cli("train-encoder --query-features world/queries.feats "
      "--corpus-features world/corpus.feats --qrels world/qrels.txt "
      "--objective listwise --dim 12 --epochs 3 --batch-size 4 "
      "--learning-rate 0.05 --tau 0.1 --seed 2 "
      "--query-encoder-out qenc.cren --candidate-encoder-out cenc.cren");
  cli("embed --encoder cenc.cren --features world/corpus.feats "
      "--out corpus_enc.crem");
  cli("build-index --embeddings corpus_enc.crem --out enc.crix");
  const auto r =
      cli("search --index enc.crix --features world/queries.feats "
          "--encoder qenc.cren --kind raw --k 5 --run-out run.trec");
  CHECK(r.output.find("16 queries") != std::string::npos);
  CHECK(fs::exists(dir / "run.trec"));
  fs::remove_all(dir);
}

TEST_SUITE_END();
