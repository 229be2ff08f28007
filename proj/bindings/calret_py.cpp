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

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "calret/adapter.hpp"
#include "calret/data_io.hpp"
#include "calret/encoder.hpp"
#include "calret/eval.hpp"
#include "calret/filter.hpp"
#include "calret/index.hpp"
#include "calret/synthetic.hpp"

namespace py = pybind11;
using namespace calret;

namespace {

EmbeddingVector to_embedding(const std::vector<float>& values) {
  return EmbeddingVector{values};
}

std::vector<CalibrationRecord> to_records(
    const std::vector<std::tuple<std::string, double, double>>& scored) {
  std::vector<CalibrationRecord> records;
  records.reserve(scored.size());
  for (const auto& [qid, logit, grade] : scored) {
    records.push_back({qid, logit, make_grade(grade)});
  }
  return records;
}

}  // namespace

PYBIND11_MODULE(_calret, m) {
  m.doc() = "Embedding retrieval with calibrated relevance filtering";

  // ---- core ----
  m.def(
      "normalize",
      [](const std::vector<float>& v) { return normalize(v).values; },
      py::arg("values"), "Scale a vector to unit L2 norm.");
  m.def(
      "cosine",
      [](const std::vector<float>& u, const std::vector<float>& v) {
        return cosine(EmbeddingVector{u}, EmbeddingVector{v});
      },
      py::arg("u"), py::arg("v"),
      "Dot product of two unit vectors, clamped to [-1, 1].");
  m.def("sigmoid", &sigmoid, py::arg("x"));
  m.def("bce_loss", &bce_loss, py::arg("logit"), py::arg("label"));

  // ---- transforms / adapter ----
  py::enum_<TransformKind>(m, "TransformKind")
      .value("RAW", TransformKind::kRaw)
      .value("LINEAR", TransformKind::kLinear)
      .value("SQRT", TransformKind::kSqrt)
      .value("QUADRATIC", TransformKind::kQuadratic)
      .value("POWER", TransformKind::kPower);
  m.def("transform_kind_from_name", &transform_kind_from_name, py::arg("name"));

  py::class_<AdapterParams>(m, "AdapterParams")
      .def(py::init([](double a, double b, std::optional<double> k) {
             return AdapterParams{a, b, k};
           }),
           py::arg("a"), py::arg("b"), py::arg("k") = std::nullopt)
      .def_readonly("a", &AdapterParams::a)
      .def_readonly("b", &AdapterParams::b)
      .def_readonly("k", &AdapterParams::k);

  m.def("transform", &transform, py::arg("kind"), py::arg("theta"),
        py::arg("x"), "Monotone cosine-to-logit map.");

  py::class_<AdapterNetwork>(m, "AdapterNetwork")
      .def_static("zeros", &AdapterNetwork::zeros, py::arg("kind"),
                  py::arg("dim"))
      .def_static("load", &AdapterNetwork::load, py::arg("path"))
      .def("save", &AdapterNetwork::save, py::arg("path"))
      .def_property_readonly("kind", &AdapterNetwork::kind)
      .def_property_readonly("dim", &AdapterNetwork::dim)
      .def(
          "forward",
          [](const AdapterNetwork& net, const std::vector<float>& q) {
            return net.forward(to_embedding(q));
          },
          py::arg("query"))
      .def(
          "calibrate",
          [](const AdapterNetwork& net, const std::vector<float>& q,
             const std::vector<double>& cosines) {
            const AdapterParams theta = net.forward(to_embedding(q));
            std::vector<double> logits;
            logits.reserve(cosines.size());
            for (double x : cosines) {
              logits.push_back(transform(net.kind(), theta, x));
            }
            return logits;
          },
          py::arg("query"), py::arg("cosines"),
          "One adapter pass for the query, then O(1) per cosine.");

  m.def(
      "train_adapter",
      [](const std::string& kind, const std::vector<std::tuple<std::string, std::string, double>>& pairs,
         const std::map<std::string, std::vector<float>>& query_embeddings,
         const std::map<std::string, std::vector<float>>& candidate_embeddings,
         double learning_rate, std::size_t batch_size, std::size_t epochs,
         std::uint64_t seed, std::size_t negative_ratio) {
        AdapterTrainConfig config;
        config.kind = transform_kind_from_name(kind);
        config.learning_rate = learning_rate;
        config.batch_size = batch_size;
        config.epochs = epochs;
        config.seed = seed;
        config.negative_ratio = negative_ratio;
        std::vector<JudgedPair> judged;
        judged.reserve(pairs.size());
        for (const auto& [qid, did, grade] : pairs) {
          judged.push_back({qid, did, make_grade(grade)});
        }
        std::unordered_map<std::string, EmbeddingVector> qe, ce;
        for (const auto& [id, values] : query_embeddings) {
          qe.emplace(id, EmbeddingVector{values});
        }
        for (const auto& [id, values] : candidate_embeddings) {
          ce.emplace(id, EmbeddingVector{values});
        }
        auto result = train_adapter(config, judged, qe, ce);
        return py::make_tuple(std::move(result.network),
                              result.epoch_mean_loss);
      },
      py::arg("kind"), py::arg("pairs"), py::arg("query_embeddings"),
      py::arg("candidate_embeddings"), py::arg("learning_rate") = 5e-3,
      py::arg("batch_size") = 32, py::arg("epochs") = 15, py::arg("seed") = 0,
      py::arg("negative_ratio") = 31,
      "Train the cosine adapter on judged pairs over frozen embeddings.");

  // ---- index ----
  py::class_<VectorIndex>(m, "VectorIndex")
      .def_static(
          "build",
          [](const std::vector<std::pair<std::string, std::vector<float>>>&
                 records) {
            std::vector<EmbeddingRecord> recs;
            recs.reserve(records.size());
            for (const auto& [id, values] : records) recs.push_back({id, values});
            return VectorIndex::build(recs);
          },
          py::arg("records"))
      .def_static("load", &VectorIndex::load, py::arg("path"))
      .def("save", &VectorIndex::save, py::arg("path"))
      .def_property_readonly("dim", &VectorIndex::dim)
      .def("__len__", &VectorIndex::size)
      .def(
          "search",
          [](const VectorIndex& index, const std::vector<float>& query,
             std::size_t k) {
            const auto result = search(index, to_embedding(query), k);
            std::vector<std::pair<std::string, double>> hits;
            hits.reserve(result.hits.size());
            for (const auto& hit : result.hits) {
              hits.emplace_back(hit.id, hit.cosine);
            }
            return hits;
          },
          py::arg("query"), py::arg("k"),
          "Exact top-k (id, cosine) pairs, ties broken by id.");

  // ---- filter ----
  py::class_<ThresholdCalibration>(m, "ThresholdCalibration")
      .def_readonly("target_recall", &ThresholdCalibration::target_recall)
      .def_readonly("threshold", &ThresholdCalibration::threshold)
      .def_readonly("achieved_recall", &ThresholdCalibration::achieved_recall)
      .def_readonly("calibration_set_size",
                    &ThresholdCalibration::calibration_set_size)
      .def_readonly("positives", &ThresholdCalibration::positives);

  m.def(
      "calibrate_threshold",
      [](const std::vector<std::tuple<std::string, double, double>>& scored,
         double target_recall, const std::string& averaging) {
        return calibrate_threshold(to_records(scored), target_recall,
                                   averaging == "macro"
                                       ? RecallAveraging::kMacro
                                       : RecallAveraging::kMicro);
      },
      py::arg("scored"), py::arg("target_recall") = 0.95,
      py::arg("averaging") = "micro",
      "Largest threshold whose recall still meets the target. `scored` is "
      "a list of (query_id, logit, grade) tuples.");

  // ---- eval ----
  m.def(
      "pr_auc",
      [](const std::vector<std::pair<double, bool>>& scored) {
        std::vector<BinaryScore> binary;
        binary.reserve(scored.size());
        for (const auto& [score, positive] : scored) {
          binary.push_back({score, positive});
        }
        return pr_auc(pr_curve(binary));
      },
      py::arg("scored"),
      "Area under the pooled precision-recall curve of (score, relevant) "
      "pairs.");
  m.def(
      "mrr_at_k",
      [](const std::map<std::string, std::vector<std::string>>& runs,
         const std::vector<std::tuple<std::string, std::string, double>>& qrels,
         std::size_t k) {
        std::vector<RankedList> lists;
        for (const auto& [qid, ids] : runs) lists.push_back({qid, ids});
        std::vector<JudgedPair> judged;
        for (const auto& [qid, did, grade] : qrels) {
          judged.push_back({qid, did, make_grade(grade)});
        }
        return mrr_at_k(lists, judged, k);
      },
      py::arg("runs"), py::arg("qrels"), py::arg("k") = 10);

  // ---- synthetic + files ----
  m.def(
      "generate_synthetic",
      [](std::size_t num_queries, std::size_t corpus_size, std::uint32_t dim,
         std::size_t relevant_per_query, double shift_lo, double shift_hi,
         double class_separation, double noise_sigma, std::uint64_t seed) {
        SyntheticSpec spec{num_queries, corpus_size,     dim,
                           relevant_per_query, shift_lo, shift_hi,
                           class_separation,   noise_sigma, seed};
        const auto data = generate_synthetic(spec);
        py::dict out;
        std::vector<std::pair<std::string, std::vector<float>>> queries, corpus;
        for (const auto& r : data.queries) queries.emplace_back(r.id, r.values);
        for (const auto& r : data.corpus) corpus.emplace_back(r.id, r.values);
        std::vector<std::tuple<std::string, std::string, double>> qrels;
        for (const auto& p : data.qrels) {
          qrels.emplace_back(p.query_id, p.candidate_id, p.grade.value);
        }
        out["queries"] = queries;
        out["corpus"] = corpus;
        out["qrels"] = qrels;
        out["query_shifts"] = data.query_shifts;
        out["mu_block_dims"] = data.mu_block_dims;
        return out;
      },
      py::arg("num_queries") = 1000, py::arg("corpus_size") = 20000,
      py::arg("dim") = 1088, py::arg("relevant_per_query") = 5,
      py::arg("shift_lo") = 0.35, py::arg("shift_hi") = 0.8,
      py::arg("class_separation") = 0.05, py::arg("noise_sigma") = 0.03,
      py::arg("seed") = 42,
      "Deterministic synthetic retrieval world with per-query score shifts.");

  m.def(
      "write_embeddings",
      [](const std::string& path, std::uint32_t dim,
         const std::vector<std::pair<std::string, std::vector<float>>>& records) {
        std::vector<EmbeddingRecord> recs;
        recs.reserve(records.size());
        for (const auto& [id, values] : records) recs.push_back({id, values});
        write_embeddings(path, dim, recs);
      },
      py::arg("path"), py::arg("dim"), py::arg("records"));
  m.def(
      "read_embeddings",
      [](const std::string& path) {
        const auto set = read_embeddings(path);
        std::vector<std::pair<std::string, std::vector<float>>> records;
        records.reserve(set.records.size());
        for (const auto& rec : set.records) {
          records.emplace_back(rec.id, rec.values);
        }
        return py::make_tuple(set.dim, records);
      },
      py::arg("path"));
}
