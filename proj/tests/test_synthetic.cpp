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

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "calret/synthetic.hpp"
#include "doctest.h"

using namespace calret;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec spec;
  spec.num_queries = 20;
  spec.corpus_size = 160;
  spec.dim = 40;  // hadamard 32 + shift + noise
  spec.relevant_per_query = 3;
  spec.shift_lo = 0.3;
  spec.shift_hi = 0.8;
  spec.class_separation = 0.06;
  spec.noise_sigma = 0.01;
  spec.seed = 99;
  return spec;
}

double vec_cosine(const std::vector<float>& a, const std::vector<float>& b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return dot;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size(); ++i) r[order[i]] = i;
    return r;
  };
  const auto ra = ranks(a);
  const auto rb = ranks(b);
  const double n = static_cast<double>(a.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  }
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

}  // namespace

TEST_SUITE_BEGIN("synthetic");

TEST_CASE("generation is deterministic given the seed") {
  const auto a = generate_synthetic(small_spec());
  const auto b = generate_synthetic(small_spec());
  REQUIRE(a.queries.size() == b.queries.size());
  for (std::size_t i = 0; i < a.queries.size(); ++i) {
    CHECK(a.queries[i].id == b.queries[i].id);
    CHECK(a.queries[i].values == b.queries[i].values);
  }
  for (std::size_t i = 0; i < a.corpus.size(); ++i) {
    CHECK(a.corpus[i].values == b.corpus[i].values);
  }
  auto spec_c = small_spec();
  spec_c.seed = 100;
  const auto c = generate_synthetic(spec_c);
  CHECK(a.queries[0].values != c.queries[0].values);
}

TEST_CASE("embeddings are unit length and encode the shift recoverably") {
  const auto data = generate_synthetic(small_spec());
  REQUIRE(data.mu_block_dims >= 1);
  for (std::size_t i = 0; i < data.queries.size(); ++i) {
    const auto& q = data.queries[i].values;
    CHECK(std::abs(std::sqrt(vec_cosine(q, q)) - 1.0) < 1e-5);
    double block_sum = 0.0;
    for (std::size_t c = 0; c < data.mu_block_dims; ++c) block_sum += q[c];
    const double recovered =
        block_sum / std::sqrt(static_cast<double>(data.mu_block_dims));
    CHECK(recovered == doctest::Approx(data.query_shifts[i]).epsilon(1e-5));
  }
  for (std::size_t i = 0; i < data.corpus.size(); i += 13) {
    const auto& c = data.corpus[i].values;
    CHECK(std::abs(std::sqrt(vec_cosine(c, c)) - 1.0) < 1e-5);
  }
}

TEST_CASE("zero noise separates the classes per query by construction") {
  auto spec = small_spec();
  spec.noise_sigma = 0.0;
  const auto data = generate_synthetic(spec);

  std::map<std::string, const std::vector<float>*> queries;
  for (const auto& q : data.queries) queries[q.id] = &q.values;
  std::map<std::string, const std::vector<float>*> corpus;
  for (const auto& c : data.corpus) corpus[c.id] = &c.values;

  std::map<std::string, std::pair<double, double>> min_rel_max_irr;
  for (auto& [qid, v] : queries) min_rel_max_irr[qid] = {2.0, -2.0};
  for (const auto& pair : data.qrels) {
    const double cos =
        vec_cosine(*queries[pair.query_id], *corpus[pair.candidate_id]);
    auto& [min_rel, max_irr] = min_rel_max_irr[pair.query_id];
    if (pair.grade.positive()) {
      min_rel = std::min(min_rel, cos);
    } else {
      max_irr = std::max(max_irr, cos);
    }
  }
  for (const auto& [qid, bounds] : min_rel_max_irr) {
    CHECK(bounds.first > bounds.second);
  }
}

TEST_CASE("foreign cosines factor through the shift product") {
  const auto data = generate_synthetic(small_spec());
  // cos(q_j, cand of q_i) == cos(q_i, cand) * mu_i * mu_j for i != j.
  const auto& q0 = data.queries[0].values;
  const auto& q7 = data.queries[7].values;
  const double mu0 = data.query_shifts[0];
  const double mu7 = data.query_shifts[7];
  for (std::size_t c = 0; c < 8; ++c) {
    // First block of candidates belongs to query 0.
    const auto& cand = data.corpus[c].values;
    const double own = vec_cosine(q0, cand);
    const double foreign = vec_cosine(q7, cand);
    CHECK(foreign == doctest::Approx(own * mu0 * mu7).epsilon(1e-4));
  }
}

TEST_CASE("degenerate shift range with vanishing noise is globally separable") {
  auto spec = small_spec();
  spec.shift_lo = spec.shift_hi = 0.4;
  spec.noise_sigma = 0.0;
  const auto data = generate_synthetic(spec);
  std::map<std::string, const std::vector<float>*> queries;
  for (const auto& q : data.queries) queries[q.id] = &q.values;
  std::map<std::string, const std::vector<float>*> corpus;
  for (const auto& c : data.corpus) corpus[c.id] = &c.values;
  // One global raw threshold separates all judged pairs perfectly.
  const double t = 0.4;
  for (const auto& pair : data.qrels) {
    const double cos =
        vec_cosine(*queries[pair.query_id], *corpus[pair.candidate_id]);
    if (pair.grade.positive()) {
      CHECK(cos >= t);
    } else {
      CHECK(cos < t);
    }
  }
}

TEST_CASE("infeasible geometry and undersized dimensions are rejected") {
  auto spec = small_spec();
  spec.shift_hi = 0.98;
  spec.class_separation = 0.05;
  CHECK_THROWS_WITH_AS(generate_synthetic(spec),
                       doctest::Contains("infeasible"), std::invalid_argument);

  spec = small_spec();
  spec.dim = 20;  // hadamard(20 queries) = 32 demands >= 34
  CHECK_THROWS_WITH_AS(generate_synthetic(spec), doctest::Contains("dim"),
                       std::invalid_argument);

  spec = small_spec();
  spec.relevant_per_query = 9;  // block is 160/20 = 8
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);

  spec = small_spec();
  spec.corpus_size = 10;
  CHECK_THROWS_AS(generate_synthetic(spec), std::invalid_argument);
}

TEST_CASE("query block sizes absorb the corpus remainder") {
  auto spec = small_spec();
  spec.corpus_size = 165;  // 20 blocks of 8, first five get one extra
  const auto data = generate_synthetic(spec);
  CHECK(data.corpus.size() == 165);
  std::map<std::string, std::size_t> per_query;
  for (const auto& pair : data.qrels) ++per_query[pair.query_id];
  std::size_t with_extra = 0;
  for (const auto& [qid, n] : per_query) {
    CHECK(n >= 8);
    with_extra += n == 9 ? 1 : 0;
  }
  CHECK(with_extra == 5);
}

TEST_CASE("default-scale world: per-query optimal thresholds track the shift") {
  // The structural fact the adapter exploits, established by brute force:
  // the best per-query raw cutoff varies across queries far more than the
  // class gap, and follows mu almost monotonically.
  SyntheticSpec spec;  // default: 1000 queries, 20k corpus, dim 1088
  const auto data = generate_synthetic(spec);

  std::map<std::string, std::size_t> query_index;
  for (std::size_t i = 0; i < data.queries.size(); ++i) {
    query_index[data.queries[i].id] = i;
  }
  std::map<std::string, const std::vector<float>*> corpus;
  for (const auto& c : data.corpus) corpus[c.id] = &c.values;

  struct PairSet {
    std::vector<double> rel, irr;
  };
  std::vector<PairSet> pairs(data.queries.size());
  for (const auto& pair : data.qrels) {
    const std::size_t qi = query_index[pair.query_id];
    const double cos = vec_cosine(data.queries[qi].values,
                                  *corpus[pair.candidate_id]);
    if (pair.grade.positive()) {
      pairs[qi].rel.push_back(cos);
    } else {
      pairs[qi].irr.push_back(cos);
    }
  }

  // Brute-force per-query optimal threshold: sweep every judged cosine,
  // maximize accuracy, take the largest maximizer.
  std::vector<double> best_threshold(pairs.size());
  for (std::size_t qi = 0; qi < pairs.size(); ++qi) {
    std::vector<double> candidates = pairs[qi].rel;
    candidates.insert(candidates.end(), pairs[qi].irr.begin(),
                      pairs[qi].irr.end());
    double best_acc = -1.0, best_t = 0.0;
    for (double t : candidates) {
      std::size_t correct = 0;
      for (double r : pairs[qi].rel) correct += r >= t ? 1 : 0;
      for (double x : pairs[qi].irr) correct += x < t ? 1 : 0;
      const double acc = static_cast<double>(correct) /
                         static_cast<double>(candidates.size());
      if (acc > best_acc || (acc == best_acc && t > best_t)) {
        best_acc = acc;
        best_t = t;
      }
    }
    best_threshold[qi] = best_t;
  }

  const auto [lo, hi] =
      std::minmax_element(best_threshold.begin(), best_threshold.end());
  CHECK(*hi - *lo > 2.0 * spec.class_separation);
  CHECK(spearman(best_threshold, data.query_shifts) > 0.9);
}

TEST_SUITE_END();
