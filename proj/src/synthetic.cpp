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

#include "calret/synthetic.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "calret/rng.hpp"

namespace calret {

namespace {

std::size_t hadamard_size(std::size_t n) {
  std::size_t h = 1;
  while (h < n) h <<= 1;
  return h;
}

std::string padded_id(const char* prefix, std::size_t value, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, width, value);
  return buf;
}

void validate(const SyntheticSpec& spec, std::size_t hsize) {
  if (spec.num_queries == 0) throw std::invalid_argument("num_queries must be >= 1");
  if (spec.corpus_size < spec.num_queries) {
    throw std::invalid_argument("corpus_size must be >= num_queries");
  }
  if (spec.relevant_per_query == 0) {
    throw std::invalid_argument("relevant_per_query must be >= 1");
  }
  if (spec.relevant_per_query > spec.corpus_size / spec.num_queries) {
    throw std::invalid_argument(
        "relevant_per_query exceeds the per-query candidate block (" +
        std::to_string(spec.corpus_size / spec.num_queries) + ")");
  }
  if (spec.shift_lo > spec.shift_hi) {
    throw std::invalid_argument("shift range must satisfy lo <= hi");
  }
  if (!(spec.class_separation > 0.0)) {
    throw std::invalid_argument("class_separation must be positive");
  }
  if (spec.noise_sigma < 0.0) {
    throw std::invalid_argument("noise_sigma must be non-negative");
  }
  if (spec.shift_lo <= -1.0 || spec.shift_hi >= 1.0) {
    throw std::invalid_argument(
        "per-query shifts must lie strictly inside (-1, 1) to be encodable");
  }
  if (spec.shift_hi + spec.class_separation > 1.0 ||
      spec.shift_lo - spec.class_separation < -1.0) {
    throw std::invalid_argument(
        "infeasible geometry: |shift| + separation pushes cosine outside "
        "[-1, 1]");
  }
  if (spec.dim < hsize + 2) {
    throw std::invalid_argument(
        "dim must be >= " + std::to_string(hsize + 2) + " for " +
        std::to_string(spec.num_queries) +
        " queries (orthogonal content plus a noise coordinate)");
  }
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  const std::size_t hsize = hadamard_size(spec.num_queries);
  validate(spec, hsize);

  const std::size_t dim = spec.dim;
  // The shift is spread over a leading coordinate block (each coordinate
  // mu/sqrt(block)); whatever room remains after the content block feeds
  // the candidate noise subspace, with at least one noise coordinate.
  const std::size_t spare = dim - hsize - 1;
  const std::size_t mu_block = std::min<std::size_t>(32, spare);
  const std::size_t noise_dims = dim - mu_block - hsize;
  const std::size_t base_block = spec.corpus_size / spec.num_queries;
  const std::size_t remainder = spec.corpus_size % spec.num_queries;
  const int qwidth = static_cast<int>(std::to_string(spec.num_queries).size());
  const int dwidth = static_cast<int>(std::to_string(spec.corpus_size).size());

  Rng rng(spec.seed);

  // Distinct Hadamard rows with per-column sign flips: exactly
  // orthonormal content directions after the 1/sqrt(hsize) scale.
  std::vector<std::size_t> row_of(spec.num_queries);
  {
    std::vector<std::size_t> perm(hsize);
    for (std::size_t i = 0; i < hsize; ++i) perm[i] = i;
    rng.shuffle(perm);
    for (std::size_t i = 0; i < spec.num_queries; ++i) row_of[i] = perm[i];
  }
  std::vector<double> column_sign(hsize);
  for (double& s : column_sign) s = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double content_scale = 1.0 / std::sqrt(static_cast<double>(hsize));

  SyntheticData data;
  data.queries.reserve(spec.num_queries);
  data.corpus.reserve(spec.corpus_size);
  data.query_shifts.reserve(spec.num_queries);
  data.mu_block_dims = mu_block;

  // Feature vocabulary: shared topic tokens (so held-out queries of a
  // seen topic stay encodable) plus a pool of noise tokens.
  const std::size_t n_topics = std::max<std::size_t>(2, spec.num_queries / 4);
  const std::size_t noise_vocab =
      std::max<std::size_t>(16, spec.num_queries / 4);
  data.vocab_size = static_cast<std::uint32_t>(n_topics + noise_vocab);

  std::vector<float> qvec(dim);
  std::vector<float> cvec(dim);
  std::vector<double> noise_part(noise_dims);
  std::size_t doc_counter = 0;

  for (std::size_t qi = 0; qi < spec.num_queries; ++qi) {
    const std::string qid = padded_id("q", qi + 1, qwidth);
    const double mu = rng.uniform(spec.shift_lo, spec.shift_hi);
    data.query_shifts.push_back(mu);

    // Query: the leading block carries mu (recoverable as
    // sum(block) / sqrt(block size)); the content block carries the
    // orthonormal direction scaled to restore unit norm.
    std::fill(qvec.begin(), qvec.end(), 0.0f);
    const double mu_coord = mu / std::sqrt(static_cast<double>(mu_block));
    for (std::size_t c = 0; c < mu_block; ++c) {
      qvec[c] = static_cast<float>(mu_coord);
    }
    const double content_coeff = std::sqrt(1.0 - mu * mu) * content_scale;
    const std::size_t row = row_of[qi];
    for (std::size_t c = 0; c < hsize; ++c) {
      const double sign =
          (std::popcount(row & c) & 1U) != 0 ? -1.0 : 1.0;
      qvec[mu_block + c] = static_cast<float>(sign * column_sign[c] * content_coeff);
    }
    data.queries.push_back({qid, qvec});
    const auto topic = static_cast<std::uint32_t>(qi % n_topics);
    const auto query_noise =
        static_cast<std::uint32_t>(n_topics + rng.below(noise_vocab));
    data.query_features.push_back(
        {qid, SparseFeatures{{topic, query_noise}, {1.0f, 0.3f}}});

    const std::size_t block = base_block + (qi < remainder ? 1 : 0);
    for (std::size_t bi = 0; bi < block; ++bi) {
      const bool relevant = bi < spec.relevant_per_query;
      const std::string did = padded_id("d", ++doc_counter, dwidth);
      double target = mu +
                      (relevant ? spec.class_separation : -spec.class_separation) +
                      rng.normal(0.0, spec.noise_sigma);
      target = std::clamp(target, -1.0, 1.0);

      // Candidate = target * query + sqrt(1 - target^2) * w with w a unit
      // vector in the noise subspace, which is orthogonal to every query.
      double wsq = 0.0;
      for (std::size_t c = 0; c < noise_dims; ++c) {
        noise_part[c] = rng.normal();
        wsq += noise_part[c] * noise_part[c];
      }
      if (wsq == 0.0) {
        noise_part[0] = 1.0;
        wsq = 1.0;
      }
      const double wscale = std::sqrt(std::max(0.0, 1.0 - target * target) / wsq);
      for (std::size_t c = 0; c < dim; ++c) {
        cvec[c] = static_cast<float>(target * static_cast<double>(qvec[c]));
      }
      for (std::size_t c = 0; c < noise_dims; ++c) {
        cvec[mu_block + hsize + c] += static_cast<float>(noise_part[c] * wscale);
      }
      data.corpus.push_back({did, cvec});
      data.qrels.push_back(
          {qid, did, RelevanceGrade{relevant ? 1.0 : 0.0}});

      // Feature view: relevant candidates share the query's topic token,
      // irrelevant ones carry only noise tokens.
      SparseFeatures feats;
      if (relevant) {
        const auto noise_tok =
            static_cast<std::uint32_t>(n_topics + rng.below(noise_vocab));
        feats.indices = {topic, noise_tok};
        feats.weights = {1.0f, 0.5f};
      } else {
        auto t1 = static_cast<std::uint32_t>(n_topics + rng.below(noise_vocab));
        auto t2 = static_cast<std::uint32_t>(n_topics + rng.below(noise_vocab));
        while (t2 == t1) {
          t2 = static_cast<std::uint32_t>(n_topics + rng.below(noise_vocab));
        }
        if (t1 > t2) std::swap(t1, t2);
        feats.indices = {t1, t2};
        feats.weights = {1.0f, 0.7f};
      }
      data.corpus_features.push_back({did, std::move(feats)});
    }
  }
  return data;
}

}  // namespace calret
