// Copyright 2026 The rqsid Authors.
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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "rqsid/core.hpp"
#include "rqsid/random.hpp"

namespace rqsid {

struct KMeansResult {
  std::vector<double> centroids;  // num_centroids x dim, row-major
  std::vector<std::uint32_t> assignments;
  double sse = 0.0;
  std::uint32_t iterations = 0;
  // Centroids that had to duplicate an existing point because the input has
  // fewer distinct points than num_centroids.
  std::uint32_t duplicated_centroids = 0;
};

// Lloyd's algorithm from k-means++ seeding.
//
// points is row-major with `dim` columns. Stops after max_iters update steps,
// when no assignment changes, or when the relative SSE improvement of a step
// falls below tol. The returned centroids are the means of the last Lloyd
// partition and the assignments are nearest-centroid (lowest index on ties),
// so sse is the sum of minimum squared distances. Empty clusters are re-seeded
// to the point farthest from its centroid.
//
// Assignment runs over fixed blocks of points, so the result does not depend
// on `threads`.
KMeansResult kmeans(std::span<const double> points, std::size_t dim, std::uint32_t num_centroids,
                    std::uint32_t max_iters, double tol, RandomSource& rng, unsigned threads = 1);

// Exact argmin of ||residual - codeword||^2 over one codebook layer; ties go
// to the lowest index.
Token nearest_codeword(std::span<const double> residual, std::span<const float> layer_weights,
                       std::uint32_t codebook_size);

struct ResidualTrace {
  // residuals[0] is the input; residuals[l] = residuals[l-1] - C_l[chosen[l-1]].
  std::vector<std::vector<double>> residuals;
  std::vector<Token> chosen;
};

struct Encoding {
  SemanticId sid;
  ResidualTrace trace;
};

// Greedy per-layer nearest-codeword quantization. Throws DataError on a
// dimension mismatch or non-finite input.
Encoding encode(std::span<const double> x, const Codebook& codebook);

std::vector<SemanticId> encode_all(const EmbeddingCollection& data, const Codebook& codebook,
                                   unsigned threads = 1);

// Sum of the selected codewords.
std::vector<double> decode(const SemanticId& sid, const Codebook& codebook);

struct LayerTrainingStats {
  std::uint32_t iterations = 0;
  double kmeans_sse = 0.0;
  // Sum of ||r_{l+1}||^2 after exact encoding with the stored (float) layer.
  double residual_sse = 0.0;
  std::uint32_t duplicated_centroids = 0;
};

struct TrainingReport {
  std::vector<LayerTrainingStats> layers;
};

// Sequential residual k-means: layer 1 on the raw vectors, layer l on the
// residuals left by the frozen layers 1..l-1. Layer l draws from
// rng.split(l).
Codebook train_rq(const EmbeddingCollection& data, const QuantizerConfig& config,
                  const RandomSource& rng, unsigned threads = 1,
                  TrainingReport* report = nullptr);

// Entry l-1 is the mean over items of ||x - sum_{j<=l} C_j[c_j]||^2.
std::vector<double> reconstruction_report(const EmbeddingCollection& data,
                                          const Codebook& codebook, unsigned threads = 1);

}  // namespace rqsid
