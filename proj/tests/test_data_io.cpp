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

#include <filesystem>
#include <fstream>

#include "calret/data_io.hpp"
#include "calret/rng.hpp"
#include "doctest.h"

using namespace calret;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

}  // namespace

TEST_SUITE_BEGIN("data_io");

TEST_CASE("CREM files round-trip bytes and values") {
  Rng rng(7);
  std::vector<EmbeddingRecord> records;
  for (int i = 0; i < 100; ++i) {
    std::vector<float> values(24);
    for (auto& v : values) v = static_cast<float>(rng.normal());
    records.push_back({"rec" + std::to_string(i), std::move(values)});
  }
  const std::string p1 = temp_path("calret_test1.crem");
  const std::string p2 = temp_path("calret_test2.crem");
  write_embeddings(p1, 24, records);
  const auto loaded = read_embeddings(p1);
  CHECK(loaded.dim == 24);
  REQUIRE(loaded.records.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded.records[i].id == records[i].id);
    CHECK(loaded.records[i].values == records[i].values);
  }
  write_embeddings(p2, 24, loaded.records);
  CHECK(slurp(p1) == slurp(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("CREM streaming read visits records in order") {
  const std::string path = temp_path("calret_stream.crem");
  write_embeddings(path, 2, {{"a", {1.0f, 2.0f}}, {"b", {3.0f, 4.0f}}});
  std::vector<std::string> seen;
  const std::uint32_t dim =
      read_embeddings(path, [&](EmbeddingRecord&& rec) { seen.push_back(rec.id); });
  CHECK(dim == 2);
  CHECK(seen == std::vector<std::string>{"a", "b"});
  std::filesystem::remove(path);
}

TEST_CASE("CREM read errors carry byte offsets") {
  const std::string path = temp_path("calret_bad.crem");

  spit(path, "");
  CHECK_THROWS_WITH_AS(read_embeddings(path), doctest::Contains("bad magic"),
                       std::runtime_error);

  spit(path, "JUNKxxxx");
  CHECK_THROWS_WITH_AS(read_embeddings(path), doctest::Contains("bad magic"),
                       std::runtime_error);

  write_embeddings(path, 3, {{"a", {1.0f, 2.0f, 3.0f}}});
  const std::string full = slurp(path);
  spit(path, full.substr(0, full.size() - 4));
  CHECK_THROWS_WITH_AS(read_embeddings(path), doctest::Contains("byte offset"),
                       std::runtime_error);

  spit(path, full.substr(0, 6));
  CHECK_THROWS_WITH_AS(read_embeddings(path),
                       doctest::Contains("byte offset 4"), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("qrels lines map grades 2/1/0 to 1.0/0.5/0.0") {
  const std::string path = temp_path("calret_test.qrels");
  spit(path, "q1 0 d1 2\nq1 0 d2 1\nq2 0 d3 0\n");
  const auto pairs = read_qrels(path);
  REQUIRE(pairs.size() == 3);
  CHECK(pairs[0].query_id == "q1");
  CHECK(pairs[0].candidate_id == "d1");
  CHECK(pairs[0].grade.value == 1.0);
  CHECK(pairs[1].grade.value == 0.5);
  CHECK(pairs[2].grade.value == 0.0);
  std::filesystem::remove(path);
}

TEST_CASE("malformed qrels name the line") {
  const std::string path = temp_path("calret_bad.qrels");
  spit(path, "q1 0 d1 2\nq1 0 d2\n");
  CHECK_THROWS_WITH_AS(read_qrels(path), doctest::Contains(":2:"),
                       std::runtime_error);
  spit(path, "q1 0 d1 7\n");
  CHECK_THROWS_WITH_AS(read_qrels(path), doctest::Contains("grade"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("qrels round-trip through write_qrels") {
  const std::string path = temp_path("calret_roundtrip.qrels");
  const std::vector<JudgedPair> pairs = {{"q1", "d1", RelevanceGrade{1.0}},
                                         {"q1", "d2", RelevanceGrade{0.5}},
                                         {"q2", "d3", RelevanceGrade{0.0}}};
  write_qrels(path, pairs);
  const auto loaded = read_qrels(path);
  REQUIRE(loaded.size() == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    CHECK(loaded[i].query_id == pairs[i].query_id);
    CHECK(loaded[i].candidate_id == pairs[i].candidate_id);
    CHECK(loaded[i].grade.value == pairs[i].grade.value);
  }
  std::filesystem::remove(path);
}

TEST_CASE("run files round-trip") {
  const std::string path = temp_path("calret_test.run");
  const std::vector<RunEntry> entries = {{"q1", "d9", 1, 0.75},
                                         {"q1", "d4", 2, -0.25},
                                         {"q2", "d1", 1, 1.0}};
  write_run(path, entries, "testtag");
  const auto loaded = read_run(path);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[0].query_id == "q1");
  CHECK(loaded[0].candidate_id == "d9");
  CHECK(loaded[0].rank == 1);
  CHECK(loaded[0].score == 0.75);
  CHECK(loaded[1].score == -0.25);

  spit(path, "q1 Q0 d1 1\n");
  CHECK_THROWS_WITH_AS(read_run(path), doctest::Contains(":1:"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("feature files validate their invariants") {
  const std::string path = temp_path("calret_test.feats");
  const std::vector<FeatureRecord> records = {
      {"q1", {{0, 5, 9}, {1.0f, 0.5f, 2.0f}}},
      {"q2", {{3}, {0.25f}}},
  };
  write_features(path, records);
  const auto loaded = read_features(path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].features.indices == std::vector<std::uint32_t>{0, 5, 9});
  CHECK(loaded[1].features.weights[0] == 0.25f);

  spit(path, "q1 5:1.0 3:1.0\n");
  CHECK_THROWS_WITH_AS(read_features(path),
                       doctest::Contains("strictly increasing"),
                       std::runtime_error);
  spit(path, "q1 5:0\n");
  CHECK_THROWS_WITH_AS(read_features(path), doctest::Contains("positive"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_SUITE_END();
