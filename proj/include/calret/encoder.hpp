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

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "calret/core.hpp"
#include "calret/data_io.hpp"

namespace calret {

/// Toy dual-encoder half: a single linear map over sparse token features,
/// L2-normalized. Weight storage is 32-bit; gradients and score math run
/// in 64-bit.
class LinearEncoder {
 public:
  LinearEncoder() = default;
  LinearEncoder(std::uint32_t vocab_size, std::uint32_t dim)
      : vocab_size_(vocab_size), dim_(dim),
        weight_(static_cast<std::size_t>(vocab_size) * dim, 0.0f) {}

  std::uint32_t vocab_size() const { return vocab_size_; }
  std::uint32_t dim() const { return dim_; }
  std::vector<float>& weight() { return weight_; }
  const std::vector<float>& weight() const { return weight_; }

  /// normalize(W^T f). Throws on an out-of-range token id or when the
  /// pre-normalization norm is zero (e.g. empty features).
  EmbeddingVector encode(const SparseFeatures& features) const;

  void save(const std::string& path) const;
  static LinearEncoder load(const std::string& path);

 private:
  std::uint32_t vocab_size_ = 0;
  std::uint32_t dim_ = 0;
  std::vector<float> weight_;  // vocab_size x dim, row-major
};

/// -log softmax of the positive among {positive} + negatives, logits
/// cos/tau, evaluated with log-sum-exp stabilization. Zero when there are
/// no negatives.
double contrastive_loss(const EmbeddingVector& query,
                        const EmbeddingVector& positive,
                        std::span<const EmbeddingVector> negatives, double tau);

/// -sum_j y_j log softmax_j(cos/tau) over a query's candidate list.
/// Labels are used as given, not renormalized. Throws on an empty list or
/// a size mismatch.
double listwise_loss(const EmbeddingVector& query,
                     std::span<const EmbeddingVector> candidates,
                     std::span<const double> labels, double tau);

enum class EncoderObjective { kContrastive, kListwise };

struct EncoderTrainConfig {
  EncoderObjective objective = EncoderObjective::kContrastive;
  double tau = 0.05;
  std::size_t batch_size = 32;  // pairs (contrastive) or queries (listwise)
  std::size_t epochs = 5;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  std::uint32_t vocab_size = 0;
  std::uint32_t dim = 0;
};

struct EncoderTrainingData {
  std::vector<JudgedPair> pairs;
  std::unordered_map<std::string, SparseFeatures> query_features;
  std::unordered_map<std::string, SparseFeatures> candidate_features;
};

struct EncoderTrainResult {
  LinearEncoder query_encoder;
  LinearEncoder candidate_encoder;
  std::vector<double> epoch_mean_loss;
};

/// Trains the dual encoder. Contrastive mode consumes grade-1 pairs and
/// uses the other in-batch positives as negatives; listwise mode groups
/// all judged candidates per query with their grades as labels.
/// Preconditions (batch_size >= 2 for contrastive, one positive per query
/// for listwise, features present for every id) are checked before any
/// training step runs. Deterministic given the seed.
EncoderTrainResult train_encoders(const EncoderTrainConfig& config,
                                  const EncoderTrainingData& data);

// Double-precision training engine, exposed for the finite-difference
// gradient tests. Weights are flat row-major vocab x dim.
struct DualEncoderWeights {
  std::size_t vocab_size = 0;
  std::size_t dim = 0;
  std::vector<double> query_weight;
  std::vector<double> candidate_weight;
};

struct ContrastivePair {
  const SparseFeatures* query = nullptr;
  const SparseFeatures* positive = nullptr;
};

struct ListwiseGroup {
  const SparseFeatures* query = nullptr;
  std::vector<const SparseFeatures*> candidates;
  std::vector<double> labels;
};

/// Mean in-batch-negative contrastive loss over the batch.
double contrastive_batch_loss(const DualEncoderWeights& weights,
                              std::span<const ContrastivePair> batch, double tau);

/// Same, accumulating d(mean loss)/d(weights) into the two gradient
/// buffers (sized like the weight vectors).
double contrastive_batch_loss_and_grad(const DualEncoderWeights& weights,
                                       std::span<const ContrastivePair> batch,
                                       double tau,
                                       std::span<double> query_grad,
                                       std::span<double> candidate_grad);

double listwise_batch_loss(const DualEncoderWeights& weights,
                           std::span<const ListwiseGroup> batch, double tau);

double listwise_batch_loss_and_grad(const DualEncoderWeights& weights,
                                    std::span<const ListwiseGroup> batch,
                                    double tau, std::span<double> query_grad,
                                    std::span<double> candidate_grad);

inline constexpr std::uint32_t kEncoderFileVersion = 1;

}  // namespace calret
