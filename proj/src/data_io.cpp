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

#include "calret/data_io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "calret/binary_io.hpp"

namespace calret {

void write_embeddings(const std::string& path, std::uint32_t dim,
                      const std::vector<EmbeddingRecord>& records) {
  BinaryWriter w(path);
  w.write_magic("CREM");
  w.write_u32(kEmbeddingFileVersion);
  w.write_u32(dim);
  w.write_u64(records.size());
  for (const auto& rec : records) {
    if (rec.values.size() != dim) {
      throw std::invalid_argument("embedding record " + rec.id +
                                  " has dimension " +
                                  std::to_string(rec.values.size()) +
                                  ", expected " + std::to_string(dim));
    }
    w.write_cstring(rec.id);
    w.write_f32_array(rec.values);
  }
}

std::uint32_t read_embeddings(
    const std::string& path,
    const std::function<void(EmbeddingRecord&&)>& sink) {
  BinaryReader r(path);
  r.expect_magic("CREM");
  const std::uint32_t version = r.read_u32();
  if (version != kEmbeddingFileVersion) {
    throw std::runtime_error(path + ": unsupported CREM version " +
                             std::to_string(version) + " at byte offset 4");
  }
  const std::uint32_t dim = r.read_u32();
  const std::uint64_t count = r.read_u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    EmbeddingRecord rec;
    rec.id = r.read_cstring();
    rec.values = r.read_f32_array(dim);
    sink(std::move(rec));
  }
  return dim;
}

EmbeddingSet read_embeddings(const std::string& path) {
  EmbeddingSet set;
  set.dim = read_embeddings(
      path, [&set](EmbeddingRecord&& rec) { set.records.push_back(std::move(rec)); });
  return set;
}

namespace {

[[noreturn]] void line_error(const std::string& path, std::size_t line_no,
                             const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

}  // namespace

std::vector<JudgedPair> read_qrels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open qrels file " + path);
  std::vector<JudgedPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string qid, iter, docid, grade_tok, extra;
    if (!(ss >> qid >> iter >> docid >> grade_tok)) {
      line_error(path, line_no, "expected 4 fields \"qid 0 docid grade\"");
    }
    if (ss >> extra) {
      line_error(path, line_no, "expected 4 fields, found trailing \"" + extra + "\"");
    }
    double grade;
    if (grade_tok == "0") {
      grade = 0.0;
    } else if (grade_tok == "1") {
      grade = 0.5;
    } else if (grade_tok == "2") {
      grade = 1.0;
    } else {
      line_error(path, line_no, "grade must be 0, 1 or 2, got \"" + grade_tok + "\"");
    }
    pairs.push_back(JudgedPair{qid, docid, RelevanceGrade{grade}});
  }
  return pairs;
}

void write_qrels(const std::string& path, const std::vector<JudgedPair>& pairs) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& p : pairs) {
    int g;
    if (p.grade.value == 1.0) {
      g = 2;
    } else if (p.grade.value == 0.5) {
      g = 1;
    } else if (p.grade.value == 0.0) {
      g = 0;
    } else {
      throw std::invalid_argument("unrepresentable grade " +
                                  std::to_string(p.grade.value));
    }
    out << p.query_id << " 0 " << p.candidate_id << " " << g << "\n";
  }
  if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

namespace {

std::string format_score(double score) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", score);
  return buf;
}

}  // namespace

void write_run(const std::string& path, const std::vector<RunEntry>& entries,
               const std::string& tag) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& e : entries) {
    out << e.query_id << " Q0 " << e.candidate_id << " " << e.rank << " "
        << format_score(e.score) << " " << tag << "\n";
  }
  if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

std::vector<RunEntry> read_run(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open run file " + path);
  std::vector<RunEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    RunEntry e;
    std::string q0, tag;
    if (!(ss >> e.query_id >> q0 >> e.candidate_id >> e.rank >> e.score >> tag)) {
      line_error(path, line_no, "expected \"qid Q0 docid rank score tag\"");
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

std::vector<FeatureRecord> read_features(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open features file " + path);
  std::vector<FeatureRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    FeatureRecord rec;
    if (!(ss >> rec.id)) line_error(path, line_no, "missing id");
    std::string tok;
    long long prev = -1;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos) {
        line_error(path, line_no, "feature token \"" + tok + "\" lacks ':'");
      }
      std::uint32_t index;
      float weight;
      try {
        index = static_cast<std::uint32_t>(std::stoul(tok.substr(0, colon)));
        weight = std::stof(tok.substr(colon + 1));
      } catch (const std::exception&) {
        line_error(path, line_no, "cannot parse feature token \"" + tok + "\"");
      }
      if (static_cast<long long>(index) <= prev) {
        line_error(path, line_no, "feature indices must be strictly increasing");
      }
      if (!(weight > 0.0f)) {
        line_error(path, line_no, "feature weights must be positive");
      }
      prev = index;
      rec.features.indices.push_back(index);
      rec.features.weights.push_back(weight);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_features(const std::string& path,
                    const std::vector<FeatureRecord>& records) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& rec : records) {
    out << rec.id;
    for (std::size_t i = 0; i < rec.features.indices.size(); ++i) {
      out << " " << rec.features.indices[i] << ":"
          << format_score(rec.features.weights[i]);
    }
    out << "\n";
  }
  if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

}  // namespace calret
