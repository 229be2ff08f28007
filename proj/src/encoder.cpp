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

#include "calret/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "calret/binary_io.hpp"
#include "calret/optim.hpp"
#include "calret/rng.hpp"

namespace calret {

namespace {

double log_sum_exp(std::span<const double> logits) {
  double top = logits[0];
  for (double l : logits) top = std::max(top, l);
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - top);
  return top + std::log(sum);
}

// Normalized double-precision embedding of sparse features under double
// weights. Keeps the pre-normalization norm for the backward pass.
struct DenseEmbedding {
  std::vector<double> unit;
  double norm = 0.0;
};

DenseEmbedding encode_dense(std::span<const double> weight, std::size_t vocab,
                            std::size_t dim, const SparseFeatures& features) {
  DenseEmbedding out;
  out.unit.assign(dim, 0.0);
  for (std::size_t i = 0; i < features.indices.size(); ++i) {
    const std::uint32_t token = features.indices[i];
    if (token >= vocab) {
      throw std::invalid_argument("token id " + std::to_string(token) +
                                  " out of range for vocab size " +
                                  std::to_string(vocab));
    }
    const double w = features.weights[i];
    const double* row = weight.data() + static_cast<std::size_t>(token) * dim;
    for (std::size_t c = 0; c < dim; ++c) out.unit[c] += w * row[c];
  }
  double sq = 0.0;
  for (double v : out.unit) sq += v * v;
  if (sq == 0.0) {
    throw std::invalid_argument("zero norm: encoder output has no magnitude");
  }
  out.norm = std::sqrt(sq);
  for (double& v : out.unit) v /= out.norm;
  return out;
}

// d(loss)/d(unit embedding) -> d(loss)/d(weight rows touched by features).
void scatter_embedding_grad(const DenseEmbedding& emb,
                            const SparseFeatures& features, std::size_t dim,
                            std::span<const double> unit_grad,
                            std::span<double> weight_grad) {
  // Through u/||u||: (g - (g.e)e)/||u||.
  double ge = 0.0;
  for (std::size_t c = 0; c < dim; ++c) ge += unit_grad[c] * emb.unit[c];
  std::vector<double> du(dim);
  for (std::size_t c = 0; c < dim; ++c) {
    du[c] = (unit_grad[c] - ge * emb.unit[c]) / emb.norm;
  }
  for (std::size_t i = 0; i < features.indices.size(); ++i) {
    const double w = features.weights[i];
    double* row =
        weight_grad.data() + static_cast<std::size_t>(features.indices[i]) * dim;
    for (std::size_t c = 0; c < dim; ++c) row[c] += w * du[c];
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

EmbeddingVector LinearEncoder::encode(const SparseFeatures& features) const {
  std::vector<double> acc(dim_, 0.0);
  for (std::size_t i = 0; i < features.indices.size(); ++i) {
    const std::uint32_t token = features.indices[i];
    if (token >= vocab_size_) {
      throw std::invalid_argument("token id " + std::to_string(token) +
                                  " out of range for vocab size " +
                                  std::to_string(vocab_size_));
    }
    const double w = features.weights[i];
    const float* row = weight_.data() + static_cast<std::size_t>(token) * dim_;
    for (std::uint32_t c = 0; c < dim_; ++c) acc[c] += w * row[c];
  }
  double sq = 0.0;
  for (double v : acc) sq += v * v;
  if (sq == 0.0) {
    throw std::invalid_argument("zero norm: encoder output has no magnitude");
  }
  const double inv = 1.0 / std::sqrt(sq);
  EmbeddingVector out;
  out.values.reserve(dim_);
  for (double v : acc) out.values.push_back(static_cast<float>(v * inv));
  return out;
}

double contrastive_loss(const EmbeddingVector& query,
                        const EmbeddingVector& positive,
                        std::span<const EmbeddingVector> negatives, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("tau must be positive");
  std::vector<double> logits;
  logits.reserve(negatives.size() + 1);
  logits.push_back(cosine(query, positive) / tau);
  for (const auto& neg : negatives) logits.push_back(cosine(query, neg) / tau);
  return log_sum_exp(logits) - logits[0];
}

double listwise_loss(const EmbeddingVector& query,
                     std::span<const EmbeddingVector> candidates,
                     std::span<const double> labels, double tau) {
  if (tau <= 0.0) throw std::invalid_argument("tau must be positive");
  if (candidates.empty()) {
    throw std::invalid_argument("listwise loss requires at least one candidate");
  }
  if (candidates.size() != labels.size()) {
    throw std::invalid_argument("candidate/label count mismatch");
  }
  std::vector<double> logits;
  logits.reserve(candidates.size());
  for (const auto& cand : candidates) logits.push_back(cosine(query, cand) / tau);
  const double lse = log_sum_exp(logits);
  double loss = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    loss += labels[j] * (lse - logits[j]);
  }
  return loss;
}

namespace {

struct BatchEmbeddings {
  std::vector<DenseEmbedding> queries;
  std::vector<DenseEmbedding> positives;
};

BatchEmbeddings embed_contrastive_batch(const DualEncoderWeights& w,
                                        std::span<const ContrastivePair> batch) {
  BatchEmbeddings out;
  out.queries.reserve(batch.size());
  out.positives.reserve(batch.size());
  for (const auto& pair : batch) {
    out.queries.push_back(
        encode_dense(w.query_weight, w.vocab_size, w.dim, *pair.query));
    out.positives.push_back(
        encode_dense(w.candidate_weight, w.vocab_size, w.dim, *pair.positive));
  }
  return out;
}

}  // namespace

double contrastive_batch_loss(const DualEncoderWeights& weights,
                              std::span<const ContrastivePair> batch,
                              double tau) {
  const BatchEmbeddings emb = embed_contrastive_batch(weights, batch);
  const std::size_t n = batch.size();
  double total = 0.0;
  std::vector<double> logits(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = dot(emb.queries[i].unit, emb.positives[j].unit) / tau;
    }
    total += log_sum_exp(logits) - logits[i];
  }
  return total / static_cast<double>(n);
}

double contrastive_batch_loss_and_grad(const DualEncoderWeights& weights,
                                       std::span<const ContrastivePair> batch,
                                       double tau,
                                       std::span<double> query_grad,
                                       std::span<double> candidate_grad) {
  const BatchEmbeddings emb = embed_contrastive_batch(weights, batch);
  const std::size_t n = batch.size();
  const std::size_t dim = weights.dim;
  const double inv_n = 1.0 / static_cast<double>(n);

  double total = 0.0;
  std::vector<std::vector<double>> unit_grad_q(n, std::vector<double>(dim, 0.0));
  std::vector<std::vector<double>> unit_grad_p(n, std::vector<double>(dim, 0.0));
  std::vector<double> logits(n), probs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      logits[j] = dot(emb.queries[i].unit, emb.positives[j].unit) / tau;
    }
    const double lse = log_sum_exp(logits);
    total += lse - logits[i];
    for (std::size_t j = 0; j < n; ++j) probs[j] = std::exp(logits[j] - lse);
    for (std::size_t j = 0; j < n; ++j) {
      // d(loss_i)/d(cos_ij), averaged over the batch.
      const double coeff =
          (probs[j] - (i == j ? 1.0 : 0.0)) / tau * inv_n;
      if (coeff == 0.0) continue;
      for (std::size_t c = 0; c < dim; ++c) {
        unit_grad_q[i][c] += coeff * emb.positives[j].unit[c];
        unit_grad_p[j][c] += coeff * emb.queries[i].unit[c];
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    scatter_embedding_grad(emb.queries[i], *batch[i].query, dim, unit_grad_q[i],
                           query_grad);
    scatter_embedding_grad(emb.positives[i], *batch[i].positive, dim,
                           unit_grad_p[i], candidate_grad);
  }
  return total * inv_n;
}

double listwise_batch_loss(const DualEncoderWeights& weights,
                           std::span<const ListwiseGroup> batch, double tau) {
  double total = 0.0;
  for (const auto& group : batch) {
    const DenseEmbedding q =
        encode_dense(weights.query_weight, weights.vocab_size, weights.dim,
                     *group.query);
    std::vector<double> logits(group.candidates.size());
    for (std::size_t j = 0; j < group.candidates.size(); ++j) {
      const DenseEmbedding c =
          encode_dense(weights.candidate_weight, weights.vocab_size, weights.dim,
                       *group.candidates[j]);
      logits[j] = dot(q.unit, c.unit) / tau;
    }
    const double lse = log_sum_exp(logits);
    for (std::size_t j = 0; j < logits.size(); ++j) {
      total += group.labels[j] * (lse - logits[j]);
    }
  }
  return total / static_cast<double>(batch.size());
}

double listwise_batch_loss_and_grad(const DualEncoderWeights& weights,
                                    std::span<const ListwiseGroup> batch,
                                    double tau, std::span<double> query_grad,
                                    std::span<double> candidate_grad) {
  const std::size_t dim = weights.dim;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const auto& group : batch) {
    const DenseEmbedding q =
        encode_dense(weights.query_weight, weights.vocab_size, weights.dim,
                     *group.query);
    const std::size_t m = group.candidates.size();
    std::vector<DenseEmbedding> cands;
    cands.reserve(m);
    std::vector<double> logits(m);
    for (std::size_t j = 0; j < m; ++j) {
      cands.push_back(encode_dense(weights.candidate_weight, weights.vocab_size,
                                   weights.dim, *group.candidates[j]));
      logits[j] = dot(q.unit, cands[j].unit) / tau;
    }
    const double lse = log_sum_exp(logits);
    double label_sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      total += group.labels[j] * (lse - logits[j]);
      label_sum += group.labels[j];
    }
    std::vector<double> unit_grad_q(dim, 0.0);
    std::vector<double> unit_grad_c(dim, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const double prob = std::exp(logits[j] - lse);
      const double coeff = (label_sum * prob - group.labels[j]) / tau * inv_n;
      if (coeff == 0.0) continue;
      for (std::size_t c = 0; c < dim; ++c) {
        unit_grad_q[c] += coeff * cands[j].unit[c];
        unit_grad_c[c] = coeff * q.unit[c];
      }
      scatter_embedding_grad(cands[j], *group.candidates[j], dim, unit_grad_c,
                             candidate_grad);
      std::fill(unit_grad_c.begin(), unit_grad_c.end(), 0.0);
    }
    scatter_embedding_grad(q, *group.query, dim, unit_grad_q, query_grad);
  }
  return total * inv_n;
}

EncoderTrainResult train_encoders(const EncoderTrainConfig& config,
                                  const EncoderTrainingData& data) {
  if (config.tau <= 0.0) throw std::invalid_argument("tau must be positive");
  if (config.learning_rate <= 0.0) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (config.vocab_size == 0 || config.dim == 0) {
    throw std::invalid_argument("vocab_size and dim must be positive");
  }
  if (config.objective == EncoderObjective::kContrastive &&
      config.batch_size < 2) {
    throw std::invalid_argument(
        "contrastive training requires batch_size >= 2 for in-batch negatives");
  }
  if (config.batch_size == 0) {
    throw std::invalid_argument("batch size must be >= 1");
  }

  const auto feature_of = [](const std::unordered_map<std::string, SparseFeatures>&
                                 table,
                             const std::string& id, const char* side) {
    const auto it = table.find(id);
    if (it == table.end()) {
      throw std::invalid_argument(std::string("missing ") + side +
                                  " features for id " + id);
    }
    return &it->second;
  };

  // Materialize the training set up front so every precondition fails
  // before the first step.
  std::vector<ContrastivePair> contrastive_pairs;
  std::vector<ListwiseGroup> listwise_groups;
  if (config.objective == EncoderObjective::kContrastive) {
    for (const auto& pair : data.pairs) {
      if (pair.grade.value != 1.0) continue;
      contrastive_pairs.push_back(
          {feature_of(data.query_features, pair.query_id, "query"),
           feature_of(data.candidate_features, pair.candidate_id, "candidate")});
    }
    if (contrastive_pairs.size() < 2) {
      throw std::invalid_argument(
          "contrastive training requires at least two positive pairs");
    }
  } else {
    std::map<std::string, ListwiseGroup> grouped;
    for (const auto& pair : data.pairs) {
      ListwiseGroup& group = grouped[pair.query_id];
      group.query = feature_of(data.query_features, pair.query_id, "query");
      group.candidates.push_back(
          feature_of(data.candidate_features, pair.candidate_id, "candidate"));
      group.labels.push_back(pair.grade.value);
    }
    for (auto& [qid, group] : grouped) {
      double label_sum = 0.0;
      for (double y : group.labels) label_sum += y;
      if (label_sum <= 0.0) {
        throw std::invalid_argument("query " + qid +
                                    " has no positive candidate for listwise "
                                    "training");
      }
      listwise_groups.push_back(std::move(group));
    }
    if (listwise_groups.empty()) {
      throw std::invalid_argument("listwise training requires at least one query");
    }
  }

  Rng rng(config.seed);
  DualEncoderWeights weights;
  weights.vocab_size = config.vocab_size;
  weights.dim = config.dim;
  const std::size_t n_weights =
      static_cast<std::size_t>(config.vocab_size) * config.dim;
  weights.query_weight.resize(n_weights);
  weights.candidate_weight.resize(n_weights);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.dim));
  for (double& w : weights.query_weight) w = rng.uniform(-bound, bound);
  for (double& w : weights.candidate_weight) w = rng.uniform(-bound, bound);

  EncoderTrainResult result;
  AdamOptimizer adam(2 * n_weights, config.learning_rate);
  std::vector<double> params(2 * n_weights);
  std::vector<double> grad(2 * n_weights, 0.0);
  std::copy(weights.query_weight.begin(), weights.query_weight.end(),
            params.begin());
  std::copy(weights.candidate_weight.begin(), weights.candidate_weight.end(),
            params.begin() + n_weights);

  const std::size_t n_items = config.objective == EncoderObjective::kContrastive
                                  ? contrastive_pairs.size()
                                  : listwise_groups.size();
  std::vector<std::size_t> order(n_items);
  for (std::size_t i = 0; i < n_items; ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < n_items; start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, n_items);
      // Contrastive in-batch negatives need at least one other pair.
      if (config.objective == EncoderObjective::kContrastive &&
          end - start < 2) {
        continue;
      }
      std::copy(params.begin(), params.begin() + n_weights,
                weights.query_weight.begin());
      std::copy(params.begin() + n_weights, params.end(),
                weights.candidate_weight.begin());
      std::fill(grad.begin(), grad.end(), 0.0);
      std::span<double> gq(grad.data(), n_weights);
      std::span<double> gp(grad.data() + n_weights, n_weights);
      double batch_loss = 0.0;
      if (config.objective == EncoderObjective::kContrastive) {
        std::vector<ContrastivePair> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
          batch.push_back(contrastive_pairs[order[i]]);
        }
        batch_loss = contrastive_batch_loss_and_grad(weights, batch, config.tau,
                                                     gq, gp);
      } else {
        std::vector<ListwiseGroup> batch;
        batch.reserve(end - start);
        for (std::size_t i = start; i < end; ++i) {
          batch.push_back(listwise_groups[order[i]]);
        }
        batch_loss =
            listwise_batch_loss_and_grad(weights, batch, config.tau, gq, gp);
      }
      adam.step(params, grad);
      epoch_loss += batch_loss;
      ++n_batches;
    }
    result.epoch_mean_loss.push_back(epoch_loss /
                                     static_cast<double>(n_batches));
  }

  LinearEncoder query_encoder(config.vocab_size, config.dim);
  LinearEncoder candidate_encoder(config.vocab_size, config.dim);
  for (std::size_t i = 0; i < n_weights; ++i) {
    query_encoder.weight()[i] = static_cast<float>(params[i]);
    candidate_encoder.weight()[i] = static_cast<float>(params[n_weights + i]);
  }
  result.query_encoder = std::move(query_encoder);
  result.candidate_encoder = std::move(candidate_encoder);
  return result;
}

void LinearEncoder::save(const std::string& path) const {
  BinaryWriter w(path);
  w.write_magic("CREN");
  w.write_u32(kEncoderFileVersion);
  w.write_u32(vocab_size_);
  w.write_u32(dim_);
  w.write_f32_array(weight_);
}

LinearEncoder LinearEncoder::load(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic("CREN");
  const std::uint32_t version = r.read_u32();
  if (version != kEncoderFileVersion) {
    throw std::runtime_error(path + ": unsupported CREN version " +
                             std::to_string(version) + " at byte offset 4");
  }
  const std::uint32_t vocab = r.read_u32();
  const std::uint32_t dim = r.read_u32();
  LinearEncoder enc(vocab, dim);
  enc.weight_ = r.read_f32_array(static_cast<std::size_t>(vocab) * dim);
  r.expect_eof();
  return enc;
}

}  // namespace calret
