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

#include "calret/adapter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "calret/binary_io.hpp"
#include "calret/optim.hpp"

namespace calret {

namespace {

double softplus(double x) {
  // log(1 + e^x) without overflow on either side.
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

constexpr double kPowerGradEps = 1e-6;
constexpr double kPi = 3.14159265358979323846;

void check_theta(TransformKind kind, const AdapterParams& theta) {
  if (theta.a < 0.0) {
    throw std::invalid_argument("transform parameter a must be >= 0, got " +
                                std::to_string(theta.a));
  }
  const bool needs_k = kind == TransformKind::kPower;
  if (needs_k != theta.k.has_value()) {
    throw std::invalid_argument(
        "parameter set does not match transform kind " +
        transform_kind_name(kind) + (needs_k ? ": missing k" : ": unexpected k"));
  }
  if (needs_k && !(*theta.k > 0.0 && *theta.k < 2.0)) {
    throw std::invalid_argument("power exponent k must lie in (0, 2), got " +
                                std::to_string(*theta.k));
  }
}

}  // namespace

std::size_t transform_param_count(TransformKind kind) {
  switch (kind) {
    case TransformKind::kRaw:
      return 0;
    case TransformKind::kLinear:
    case TransformKind::kSqrt:
    case TransformKind::kQuadratic:
      return 2;
    case TransformKind::kPower:
      return 3;
  }
  throw std::invalid_argument("unknown transform kind");
}

std::string transform_kind_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::kRaw:
      return "raw";
    case TransformKind::kLinear:
      return "linear";
    case TransformKind::kSqrt:
      return "sqrt";
    case TransformKind::kQuadratic:
      return "quadratic";
    case TransformKind::kPower:
      return "power";
  }
  throw std::invalid_argument("unknown transform kind");
}

TransformKind transform_kind_from_name(const std::string& name) {
  if (name == "raw") return TransformKind::kRaw;
  if (name == "linear") return TransformKind::kLinear;
  if (name == "sqrt") return TransformKind::kSqrt;
  if (name == "quadratic") return TransformKind::kQuadratic;
  if (name == "power") return TransformKind::kPower;
  throw std::invalid_argument("unknown transform kind \"" + name + "\"");
}

double transform(TransformKind kind, const AdapterParams& theta, double x) {
  check_theta(kind, theta);
  switch (kind) {
    case TransformKind::kRaw:
      return x;
    case TransformKind::kLinear:
      return theta.a * x + theta.b;
    case TransformKind::kSqrt:
      return sgn(x) * theta.a * std::sqrt(std::abs(x)) + theta.b;
    case TransformKind::kQuadratic:
      return sgn(x) * theta.a * x * x + theta.b;
    case TransformKind::kPower:
      if (x == 0.0) return theta.b;
      return sgn(x) * theta.a * std::pow(std::abs(x), *theta.k) + theta.b;
  }
  throw std::invalid_argument("unknown transform kind");
}

double bce_loss(double logit, double y) {
  return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
}

AdapterNetwork::AdapterNetwork(TransformKind kind, std::size_t dim)
    : kind_(kind), dim_(dim) {
  if (dim < 2) {
    throw std::invalid_argument("adapter requires embedding dimension >= 2");
  }
  h1_ = dim;
  h2_ = dim / 2;
  out_ = transform_param_count(kind);
  weights_.assign(weight_count(), 0.0);
}

AdapterNetwork AdapterNetwork::zeros(TransformKind kind, std::size_t dim) {
  return AdapterNetwork(kind, dim);
}

AdapterNetwork AdapterNetwork::random_init(TransformKind kind, std::size_t dim,
                                           Rng& rng) {
  AdapterNetwork net(kind, dim);
  auto fill = [&](std::size_t off, std::size_t rows, std::size_t cols,
                  double gain) {
    const double bound = gain / std::sqrt(static_cast<double>(cols));
    for (std::size_t i = 0; i < rows * cols; ++i) {
      net.weights_[off + i] = rng.uniform(-bound, bound);
    }
  };
  // ReLU-calibrated (Kaiming-uniform) hidden layers keep the input-to-
  // feature transfer at O(1); the head weights start small. The slope
  // bias starts at 3 (a ~ 3.05): a slope starting near softplus's flat
  // region can be driven to zero by the early offset transient and then
  // pinned there by stale Adam second moments. Other biases start at
  // zero (k ~ 1).
  const double relu_gain = std::sqrt(6.0);
  fill(net.w1_off(), net.h1_, net.dim_, relu_gain);
  fill(net.w2_off(), net.h2_, net.h1_, relu_gain);
  fill(net.w3_off(), net.out_, net.h2_, 1.0);
  if (net.out_ > 0) net.weights_[net.b3_off()] = 3.0;
  return net;
}

void AdapterNetwork::forward_raw(const EmbeddingVector& q,
                                 std::vector<double>& hidden1,
                                 std::vector<double>& hidden2,
                                 std::vector<double>& head) const {
  if (q.dim() != dim_) {
    throw std::invalid_argument("adapter input dimension " +
                                std::to_string(q.dim()) + " does not match " +
                                std::to_string(dim_));
  }
  hidden1.assign(h1_, 0.0);
  hidden2.assign(h2_, 0.0);
  head.assign(out_, 0.0);
  const double* w1 = weights_.data() + w1_off();
  const double* b1 = weights_.data() + b1_off();
  for (std::size_t r = 0; r < h1_; ++r) {
    double acc = b1[r];
    const double* row = w1 + r * dim_;
    for (std::size_t c = 0; c < dim_; ++c) {
      acc += row[c] * static_cast<double>(q.values[c]);
    }
    hidden1[r] = acc > 0.0 ? acc : 0.0;
  }
  const double* w2 = weights_.data() + w2_off();
  const double* b2 = weights_.data() + b2_off();
  for (std::size_t r = 0; r < h2_; ++r) {
    double acc = b2[r];
    const double* row = w2 + r * h1_;
    for (std::size_t c = 0; c < h1_; ++c) acc += row[c] * hidden1[c];
    hidden2[r] = acc > 0.0 ? acc : 0.0;
  }
  const double* w3 = weights_.data() + w3_off();
  const double* b3 = weights_.data() + b3_off();
  for (std::size_t r = 0; r < out_; ++r) {
    double acc = b3[r];
    const double* row = w3 + r * h2_;
    for (std::size_t c = 0; c < h2_; ++c) acc += row[c] * hidden2[c];
    head[r] = acc;
  }
}

AdapterParams AdapterNetwork::constrain(TransformKind kind,
                                        std::span<const double> head) {
  AdapterParams theta;
  if (kind == TransformKind::kRaw) return theta;
  theta.a = softplus(head[0]);
  theta.b = head[1];
  if (kind == TransformKind::kPower) {
    // 2*sigmoid saturates to exactly 2.0 (or 0.0) in floating point for
    // |kappa| beyond ~37; keep k inside the open interval.
    theta.k = std::clamp(2.0 * sigmoid(head[2]), 1e-12, 2.0 - 1e-12);
  }
  return theta;
}

AdapterParams AdapterNetwork::forward(const EmbeddingVector& q) const {
  ++forward_calls_;
  std::vector<double> hidden1, hidden2, head;
  forward_raw(q, hidden1, hidden2, head);
  return constrain(kind_, head);
}

double adapter_query_loss(const AdapterNetwork& net, const EmbeddingVector& q,
                          std::span<const std::pair<double, double>> pairs) {
  const AdapterParams theta = net.forward(q);
  double loss = 0.0;
  for (const auto& [x, y] : pairs) {
    loss += bce_loss(transform(net.kind(), theta, x), y);
  }
  return loss;
}

double adapter_query_loss_and_grad(
    const AdapterNetwork& net, const EmbeddingVector& q,
    std::span<const std::pair<double, double>> pairs, std::span<double> grad) {
  if (grad.size() != net.weights().size()) {
    throw std::invalid_argument("gradient buffer size mismatch");
  }
  std::vector<double> hidden1, hidden2, head;
  net.forward_raw(q, hidden1, hidden2, head);
  const TransformKind kind = net.kind();
  const AdapterParams theta = AdapterNetwork::constrain(kind, head);

  double loss = 0.0;
  // d(loss)/d(a, b, k) accumulated over the query's pairs.
  double da = 0.0, db = 0.0, dk = 0.0;
  for (const auto& [x, y] : pairs) {
    const double logit = transform(kind, theta, x);
    loss += bce_loss(logit, y);
    const double dlogit = sigmoid(logit) - y;
    const double s = sgn(x);
    const double ax = std::max(std::abs(x), kPowerGradEps);
    switch (kind) {
      case TransformKind::kRaw:
        break;
      case TransformKind::kLinear:
        da += dlogit * x;
        db += dlogit;
        break;
      case TransformKind::kSqrt:
        da += dlogit * s * std::sqrt(std::abs(x));
        db += dlogit;
        break;
      case TransformKind::kQuadratic:
        da += dlogit * s * x * x;
        db += dlogit;
        break;
      case TransformKind::kPower: {
        const double p = std::pow(ax, *theta.k);
        da += dlogit * s * p;
        db += dlogit;
        dk += dlogit * s * theta.a * p * std::log(ax);
        break;
      }
    }
  }
  if (kind == TransformKind::kRaw) return loss;

  // Through the range constraints: a = softplus(alpha), k = 2*sigmoid(kappa).
  std::vector<double> dhead(net.head_outputs(), 0.0);
  dhead[0] = da * sigmoid(head[0]);
  dhead[1] = db;
  if (kind == TransformKind::kPower) {
    const double sk = sigmoid(head[2]);
    dhead[2] = dk * 2.0 * sk * (1.0 - sk);
  }

  const std::size_t d = net.dim(), h1 = net.hidden1(), h2 = net.hidden2(),
                    out = net.head_outputs();
  const double* w = net.weights().data();
  double* g = grad.data();

  std::vector<double> dh2(h2, 0.0);
  for (std::size_t r = 0; r < out; ++r) {
    const double gr = dhead[r];
    g[net.b3_off() + r] += gr;
    const double* row = w + net.w3_off() + r * h2;
    double* grow = g + net.w3_off() + r * h2;
    for (std::size_t c = 0; c < h2; ++c) {
      grow[c] += gr * hidden2[c];
      dh2[c] += gr * row[c];
    }
  }
  std::vector<double> dh1(h1, 0.0);
  for (std::size_t r = 0; r < h2; ++r) {
    if (hidden2[r] <= 0.0) continue;  // ReLU gate
    const double gr = dh2[r];
    g[net.b2_off() + r] += gr;
    const double* row = w + net.w2_off() + r * h1;
    double* grow = g + net.w2_off() + r * h1;
    for (std::size_t c = 0; c < h1; ++c) {
      grow[c] += gr * hidden1[c];
      dh1[c] += gr * row[c];
    }
  }
  for (std::size_t r = 0; r < h1; ++r) {
    if (hidden1[r] <= 0.0) continue;
    const double gr = dh1[r];
    g[net.b1_off() + r] += gr;
    double* grow = g + net.w1_off() + r * d;
    for (std::size_t c = 0; c < d; ++c) {
      grow[c] += gr * static_cast<double>(q.values[c]);
    }
  }
  return loss;
}

AdapterTrainResult train_adapter(
    const AdapterTrainConfig& config, const std::vector<JudgedPair>& pairs,
    const std::unordered_map<std::string, EmbeddingVector>& query_embeddings,
    const std::unordered_map<std::string, EmbeddingVector>& candidate_embeddings) {
  if (config.learning_rate <= 0.0) {
    throw std::invalid_argument("learning rate must be positive");
  }
  if (config.batch_size == 0) {
    throw std::invalid_argument("batch size must be >= 1");
  }
  if (query_embeddings.empty()) {
    throw std::invalid_argument("no query embeddings supplied");
  }

  const std::size_t dim = query_embeddings.begin()->second.dim();
  Rng rng(config.seed);
  AdapterNetwork net = AdapterNetwork::random_init(config.kind, dim, rng);

  // Group judged pairs per query, in sorted-id order for reproducibility.
  struct Group {
    const EmbeddingVector* query = nullptr;
    std::vector<std::pair<double, double>> pos;  // (cosine, label > 0)
    std::vector<std::pair<double, double>> neg;
  };
  std::map<std::string, Group> grouped;
  for (const auto& pair : pairs) {
    const auto qit = query_embeddings.find(pair.query_id);
    if (qit == query_embeddings.end()) {
      throw std::invalid_argument("missing query embedding for id " +
                                  pair.query_id);
    }
    const auto cit = candidate_embeddings.find(pair.candidate_id);
    if (cit == candidate_embeddings.end()) {
      throw std::invalid_argument("missing candidate embedding for id " +
                                  pair.candidate_id);
    }
    Group& group = grouped[pair.query_id];
    group.query = &qit->second;
    const double x = cosine(qit->second, cit->second);
    if (pair.grade.value > 0.0) {
      group.pos.emplace_back(x, pair.grade.value);
    } else {
      group.neg.emplace_back(x, 0.0);
    }
  }

  struct TrainGroup {
    const EmbeddingVector* query;
    std::vector<std::pair<double, double>> samples;
  };
  std::vector<TrainGroup> groups;
  for (auto& [qid, group] : grouped) {
    if (group.pos.empty()) continue;  // no signal to fit for this query
    TrainGroup tg;
    tg.query = group.query;
    tg.samples = group.pos;
    const std::size_t want = config.negative_ratio * group.pos.size();
    if (group.neg.size() > want) {
      rng.shuffle(group.neg);
      group.neg.resize(want);
    }
    tg.samples.insert(tg.samples.end(), group.neg.begin(), group.neg.end());
    groups.push_back(std::move(tg));
  }
  if (groups.empty()) {
    throw std::invalid_argument("adapter training requires at least one query "
                                "with a positive pair");
  }

  // Start the head at the best query-independent configuration: with the
  // initial slope a0, set the offset bias so the mean predicted
  // probability equals the label prior. Killing the initial bias
  // transient keeps the slope away from softplus's dead zone for every
  // transform kind.
  if (config.kind != TransformKind::kRaw && config.epochs > 0) {
    double y_sum = 0.0, g_sum = 0.0;
    std::size_t n_samples = 0;
    std::vector<double> probe_head(net.head_outputs(), 0.0);
    probe_head[0] = net.weights()[net.weights().size() - net.head_outputs()];
    const AdapterParams theta0 =
        AdapterNetwork::constrain(config.kind, probe_head);
    for (const auto& group : groups) {
      for (const auto& [x, y] : group.samples) {
        y_sum += y;
        g_sum += transform(config.kind, theta0, x) - theta0.b;
        ++n_samples;
      }
    }
    const double prior =
        std::clamp(y_sum / static_cast<double>(n_samples), 1e-3, 1.0 - 1e-3);
    net.weights()[net.weights().size() - net.head_outputs() + 1] =
        std::log(prior / (1.0 - prior)) -
        g_sum / static_cast<double>(n_samples);
  }

  AdapterTrainResult result;
  AdamOptimizer adam(net.weights().size(), config.learning_rate);
  std::vector<double> grad(net.weights().size(), 0.0);
  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t steps_per_epoch =
      (groups.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t warmup_steps = std::clamp<std::size_t>(
      config.epochs * steps_per_epoch / 10, 1, 30);
  std::size_t step_count = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    // Cosine decay to 5% of the base rate across epochs.
    const double progress =
        config.epochs <= 1
            ? 0.0
            : static_cast<double>(epoch) / static_cast<double>(config.epochs - 1);
    const double epoch_lr =
        config.learning_rate *
        (0.05 + 0.95 * 0.5 * (1.0 + std::cos(progress * kPi)));
    double epoch_loss = 0.0;
    std::size_t epoch_pairs = 0;
    for (std::size_t start = 0; start < order.size();
         start += config.batch_size) {
      const std::size_t end = std::min(start + config.batch_size, order.size());
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      std::size_t batch_pairs = 0;
      for (std::size_t i = start; i < end; ++i) {
        const TrainGroup& tg = groups[order[i]];
        batch_loss += adapter_query_loss_and_grad(net, *tg.query, tg.samples, grad);
        batch_pairs += tg.samples.size();
      }
      const double inv = 1.0 / static_cast<double>(batch_pairs);
      for (double& gi : grad) gi *= inv;
      ++step_count;
      const double warmup =
          std::min(1.0, static_cast<double>(step_count) /
                            static_cast<double>(warmup_steps));
      adam.set_learning_rate(epoch_lr * warmup);
      adam.step(net.weights(), grad);
      epoch_loss += batch_loss;
      epoch_pairs += batch_pairs;
    }
    result.epoch_mean_loss.push_back(epoch_loss /
                                     static_cast<double>(epoch_pairs));
  }
  result.network = std::move(net);
  return result;
}

SearchResult calibrate_candidates(const AdapterNetwork& net, TransformKind kind,
                                  const EmbeddingVector& q, SearchResult hits) {
  if (kind != net.kind()) {
    throw std::invalid_argument("requested kind " + transform_kind_name(kind) +
                                " does not match network kind " +
                                transform_kind_name(net.kind()));
  }
  const AdapterParams theta = net.forward(q);
  for (auto& hit : hits.hits) {
    const double logit = transform(kind, theta, hit.cosine);
    hit.logit = logit;
    hit.probability = sigmoid(logit);
  }
  return hits;
}

void AdapterNetwork::save(const std::string& path) const {
  BinaryWriter w(path);
  w.write_magic("CRAD");
  w.write_u32(kAdapterFileVersion);
  w.write_u8(static_cast<std::uint8_t>(kind_));
  w.write_u32(static_cast<std::uint32_t>(dim_));
  w.write_u32(static_cast<std::uint32_t>(h1_));
  w.write_u32(static_cast<std::uint32_t>(h2_));
  w.write_u32(static_cast<std::uint32_t>(out_));
  std::vector<float> quantized(weights_.size());
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    quantized[i] = static_cast<float>(weights_[i]);
  }
  w.write_f32_array(quantized);
}

AdapterNetwork AdapterNetwork::load(const std::string& path) {
  BinaryReader r(path);
  r.expect_magic("CRAD");
  const std::uint32_t version = r.read_u32();
  if (version != kAdapterFileVersion) {
    throw std::runtime_error(path + ": unsupported CRAD version " +
                             std::to_string(version) + " at byte offset 4");
  }
  const std::uint8_t kind_tag = r.read_u8();
  if (kind_tag > static_cast<std::uint8_t>(TransformKind::kPower)) {
    throw std::runtime_error(path + ": unknown transform kind tag " +
                             std::to_string(kind_tag) + " at byte offset 8");
  }
  const auto kind = static_cast<TransformKind>(kind_tag);
  const std::uint32_t dim = r.read_u32();
  const std::uint32_t h1 = r.read_u32();
  const std::uint32_t h2 = r.read_u32();
  const std::uint32_t out = r.read_u32();
  AdapterNetwork net(kind, dim);
  if (h1 != net.h1_ || h2 != net.h2_ || out != net.out_) {
    throw std::runtime_error(path + ": layer shapes (" + std::to_string(h1) +
                             ", " + std::to_string(h2) + ", " +
                             std::to_string(out) +
                             ") do not match the architecture for dim " +
                             std::to_string(dim));
  }
  const std::vector<float> quantized = r.read_f32_array(net.weight_count());
  r.expect_eof();
  for (std::size_t i = 0; i < quantized.size(); ++i) {
    net.weights_[i] = static_cast<double>(quantized[i]);
  }
  return net;
}

}  // namespace calret
