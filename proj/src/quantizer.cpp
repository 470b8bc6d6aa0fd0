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

#include "rqsid/quantizer.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "rqsid/error.hpp"
#include "rqsid/parallel.hpp"

namespace rqsid {

namespace {

constexpr std::size_t kEncodeBlock = 512;

void check_vector(std::span<const double> x, std::size_t dim) {
  if (x.size() != dim) {
    std::ostringstream msg;
    msg << "vector has dimension " << x.size() << ", codebook expects " << dim;
    throw DataError(msg.str());
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw DataError("vector contains a non-finite value");
  }
}

void check_collection(const EmbeddingCollection& data, const Codebook& codebook) {
  if (!data.empty() && data.dim() != codebook.dim()) {
    std::ostringstream msg;
    msg << "embeddings have dimension " << data.dim() << ", codebook expects " << codebook.dim();
    throw DataError(msg.str());
  }
}

// Quantizes residual in place against one layer and returns the chosen token.
Token quantize_step(std::span<double> residual, std::span<const float> layer_weights,
                    std::uint32_t codebook_size) {
  const Token t = nearest_codeword(residual, layer_weights, codebook_size);
  const std::size_t dim = residual.size();
  const float* c = layer_weights.data() + std::size_t{t} * dim;
  for (std::size_t j = 0; j < dim; ++j) residual[j] -= static_cast<double>(c[j]);
  return t;
}

}  // namespace

Token nearest_codeword(std::span<const double> residual, std::span<const float> layer_weights,
                       std::uint32_t codebook_size) {
  const std::size_t dim = residual.size();
  Token best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::uint32_t m = 0; m < codebook_size; ++m) {
    const float* c = layer_weights.data() + std::size_t{m} * dim;
    double dist = 0.0;
    std::size_t j = 0;
    // Partial sums only grow, so a candidate can be dropped once it is
    // strictly worse; ties are always evaluated in full.
    for (; j < dim; ++j) {
      const double d = residual[j] - static_cast<double>(c[j]);
      dist += d * d;
      if (dist > best_dist) break;
    }
    if (j == dim && dist < best_dist) {
      best_dist = dist;
      best = m;
    }
  }
  return best;
}

Encoding encode(std::span<const double> x, const Codebook& codebook) {
  check_vector(x, codebook.dim());
  const std::uint32_t num_layers = codebook.num_layers();
  Encoding out;
  out.trace.residuals.reserve(num_layers + 1);
  out.trace.residuals.emplace_back(x.begin(), x.end());
  std::vector<double> r(x.begin(), x.end());
  for (std::uint32_t l = 1; l <= num_layers; ++l) {
    const Token t = quantize_step(r, codebook.layer(l), codebook.codebook_size());
    out.trace.chosen.push_back(t);
    out.trace.residuals.push_back(r);
  }
  out.sid.tokens = out.trace.chosen;
  return out;
}

std::vector<SemanticId> encode_all(const EmbeddingCollection& data, const Codebook& codebook,
                                   unsigned threads) {
  check_collection(data, codebook);
  std::vector<SemanticId> out(data.size());
  parallel_for_blocks(data.size(), kEncodeBlock, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> r(codebook.dim());
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = data.vector(i);
      std::copy(x.begin(), x.end(), r.begin());
      out[i].tokens.resize(codebook.num_layers());
      for (std::uint32_t l = 1; l <= codebook.num_layers(); ++l)
        out[i].tokens[l - 1] = quantize_step(r, codebook.layer(l), codebook.codebook_size());
    }
  });
  return out;
}

std::vector<double> decode(const SemanticId& sid, const Codebook& codebook) {
  validate(sid, codebook.config());
  std::vector<double> out(codebook.dim(), 0.0);
  for (std::uint32_t l = 1; l <= codebook.num_layers(); ++l) {
    const auto c = codebook.codeword(l, sid.tokens[l - 1]);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += static_cast<double>(c[j]);
  }
  return out;
}

Codebook train_rq(const EmbeddingCollection& data, const QuantizerConfig& config,
                  const RandomSource& rng, unsigned threads, TrainingReport* report) {
  config.validate();
  if (data.empty()) throw DataError("cannot train a codebook on an empty collection");
  if (data.dim() != config.dim) {
    std::ostringstream msg;
    msg << "embeddings have dimension " << data.dim() << ", config expects " << config.dim;
    throw DataError(msg.str());
  }
  const std::size_t n = data.size();
  const std::size_t dim = config.dim;
  const std::uint32_t m = config.codebook_size;

  std::vector<double> residuals(data.values().begin(), data.values().end());
  std::vector<float> weights;
  weights.reserve(std::size_t{config.num_layers} * m * dim);
  std::vector<double> sse_per_layer;
  if (report) report->layers.clear();

  for (std::uint32_t l = 1; l <= config.num_layers; ++l) {
    RandomSource layer_rng = rng.split(l);
    const KMeansResult km = kmeans(residuals, dim, m, config.kmeans_iters,
                                   config.convergence_tol, layer_rng, threads);
    const std::size_t offset = weights.size();
    for (double v : km.centroids) weights.push_back(static_cast<float>(v));
    const std::span<const float> layer(weights.data() + offset, std::size_t{m} * dim);

    std::vector<double> block_sse((n + kEncodeBlock - 1) / kEncodeBlock, 0.0);
    parallel_for_blocks(n, kEncodeBlock, threads, [&](std::size_t begin, std::size_t end) {
      double sse = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        std::span<double> r(residuals.data() + i * dim, dim);
        quantize_step(r, layer, m);
        sse += std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
      }
      block_sse[begin / kEncodeBlock] = sse;
    });
    const double sse = std::accumulate(block_sse.begin(), block_sse.end(), 0.0);
    sse_per_layer.push_back(sse);
    if (report) {
      report->layers.push_back({km.iterations, km.sse, sse, km.duplicated_centroids});
    }
  }
  return Codebook(config, std::move(weights), std::move(sse_per_layer));
}

std::vector<double> reconstruction_report(const EmbeddingCollection& data,
                                          const Codebook& codebook, unsigned threads) {
  check_collection(data, codebook);
  const std::uint32_t num_layers = codebook.num_layers();
  const std::size_t dim = codebook.dim();
  const std::size_t n = data.size();
  if (n == 0) throw DataError("reconstruction report needs at least one item");
  const std::size_t num_blocks = (n + kEncodeBlock - 1) / kEncodeBlock;
  std::vector<double> block_sums(num_blocks * num_layers, 0.0);
  parallel_for_blocks(n, kEncodeBlock, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> r(dim);
    double* sums = block_sums.data() + (begin / kEncodeBlock) * num_layers;
    for (std::size_t i = begin; i < end; ++i) {
      const auto x = data.vector(i);
      std::copy(x.begin(), x.end(), r.begin());
      for (std::uint32_t l = 1; l <= num_layers; ++l) {
        quantize_step(r, codebook.layer(l), codebook.codebook_size());
        sums[l - 1] += std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
      }
    }
  });
  std::vector<double> out(num_layers, 0.0);
  for (std::size_t b = 0; b < num_blocks; ++b) {
    for (std::uint32_t l = 0; l < num_layers; ++l) out[l] += block_sums[b * num_layers + l];
  }
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

}  // namespace rqsid
