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
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "calret/core.hpp"
#include "calret/index.hpp"
#include "calret/rng.hpp"

namespace calret {

/// Family of monotone maps from cosine similarity to a relevance logit.
enum class TransformKind : std::uint8_t {
  kRaw = 0,        // F(x) = x
  kLinear = 1,     // F(x) = a*x + b
  kSqrt = 2,       // F(x) = sgn(x)*a*sqrt(|x|) + b
  kQuadratic = 3,  // F(x) = sgn(x)*a*x^2 + b
  kPower = 4,      // F(x) = sgn(x)*a*|x|^k + b, k in (0, 2)
};

std::size_t transform_param_count(TransformKind kind);  // 0, 2, 2, 2, 3
std::string transform_kind_name(TransformKind kind);
TransformKind transform_kind_from_name(const std::string& name);

/// Per-query transform parameters. `a >= 0` keeps every family member
/// non-decreasing; `k` is present exactly for the power transform.
struct AdapterParams {
  double a = 0.0;
  double b = 0.0;
  std::optional<double> k;
};

/// Applies the transform at cosine `x`. Throws if `theta` does not match
/// `kind` (missing/extra k, a < 0, k outside (0, 2)).
double transform(TransformKind kind, const AdapterParams& theta, double x);

/// Binary cross-entropy against a logit, evaluated in the stable
/// max(z,0) - z*y + log1p(exp(-|z|)) form. Supports fractional labels.
double bce_loss(double logit, double y);

/// Feedforward network mapping a query embedding to AdapterParams:
/// two ReLU layers (d -> d -> d/2) and a linear head sized for the kind.
/// Constraints are structural: a = softplus(alpha), k = 2*sigmoid(kappa),
/// so any weight setting yields a monotone transform.
///
/// Weights are kept in double for training; checkpoints store 32-bit
/// floats (magic "CRAD").
class AdapterNetwork {
 public:
  AdapterNetwork() = default;

  /// All-zero weights: forward yields a = softplus(0) = ln 2, b = 0, k = 1.
  static AdapterNetwork zeros(TransformKind kind, std::size_t dim);

  /// Fan-in scaled uniform init in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static AdapterNetwork random_init(TransformKind kind, std::size_t dim,
                                    Rng& rng);

  TransformKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  std::size_t hidden1() const { return h1_; }
  std::size_t hidden2() const { return h2_; }
  std::size_t head_outputs() const { return out_; }

  /// Emits the constrained parameter set for one query. Pure function of
  /// (weights, q); throws on dimension mismatch.
  AdapterParams forward(const EmbeddingVector& q) const;

  /// Number of forward() invocations. Instrumentation for the one-pass-
  /// per-query contract; not synchronized across threads.
  std::uint64_t forward_calls() const { return forward_calls_; }
  void reset_forward_calls() const { forward_calls_ = 0; }

  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Maps raw head outputs (alpha, b[, kappa]) to constrained parameters.
  static AdapterParams constrain(TransformKind kind,
                                 std::span<const double> head);

  void save(const std::string& path) const;
  static AdapterNetwork load(const std::string& path);

 private:
  friend double adapter_query_loss_and_grad(
      const AdapterNetwork&, const EmbeddingVector&,
      std::span<const std::pair<double, double>>, std::span<double>);

  AdapterNetwork(TransformKind kind, std::size_t dim);

  // Flat layout: W1[h1*d], b1[h1], W2[h2*h1], b2[h2], W3[out*h2], b3[out].
  std::size_t w1_off() const { return 0; }
  std::size_t b1_off() const { return h1_ * dim_; }
  std::size_t w2_off() const { return b1_off() + h1_; }
  std::size_t b2_off() const { return w2_off() + h2_ * h1_; }
  std::size_t w3_off() const { return b2_off() + h2_; }
  std::size_t b3_off() const { return w3_off() + out_ * h2_; }
  std::size_t weight_count() const { return b3_off() + out_; }

  void forward_raw(const EmbeddingVector& q, std::vector<double>& hidden1,
                   std::vector<double>& hidden2, std::vector<double>& head) const;

  TransformKind kind_ = TransformKind::kRaw;
  std::size_t dim_ = 0;
  std::size_t h1_ = 0;
  std::size_t h2_ = 0;
  std::size_t out_ = 0;
  std::vector<double> weights_;
  mutable std::uint64_t forward_calls_ = 0;
};

/// Summed BCE loss of one query over (cosine, label) pairs.
double adapter_query_loss(const AdapterNetwork& net, const EmbeddingVector& q,
                          std::span<const std::pair<double, double>> pairs);

/// Same, accumulating d(loss)/d(weights) into `grad` (flat, same layout as
/// AdapterNetwork::weights()). This is the training gradient path; the
/// power-k and power-a partials clamp |x| to >= 1e-6 so the log term stays
/// bounded near x = 0 (the forward value is unaffected).
double adapter_query_loss_and_grad(
    const AdapterNetwork& net, const EmbeddingVector& q,
    std::span<const std::pair<double, double>> pairs, std::span<double> grad);

struct AdapterTrainConfig {
  TransformKind kind = TransformKind::kPower;
  double learning_rate = 5e-3;
  std::size_t batch_size = 32;  // queries per optimizer step
  std::size_t epochs = 15;
  std::uint64_t seed = 0;
  std::size_t negative_ratio = 31;  // sampled negatives per kept positive
};

struct AdapterTrainResult {
  AdapterNetwork network;
  std::vector<double> epoch_mean_loss;
};

/// Trains the adapter on judged pairs over frozen, precomputed embeddings.
/// Per query all graded-positive pairs are kept and negatives are sampled
/// to the configured ratio; queries without a positive pair are skipped.
/// Deterministic given the seed. Throws if a referenced id has no
/// embedding, naming the id.
AdapterTrainResult train_adapter(
    const AdapterTrainConfig& config, const std::vector<JudgedPair>& pairs,
    const std::unordered_map<std::string, EmbeddingVector>& query_embeddings,
    const std::unordered_map<std::string, EmbeddingVector>& candidate_embeddings);

/// Fills logit/probability on every hit: one adapter forward for the
/// query, then one O(1) transform per candidate. Order is unchanged.
SearchResult calibrate_candidates(const AdapterNetwork& net, TransformKind kind,
                                  const EmbeddingVector& q, SearchResult hits);

inline constexpr std::uint32_t kAdapterFileVersion = 1;

}  // namespace calret
