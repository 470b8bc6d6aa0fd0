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

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace rqsid {

// Per-layer codeword index, 0-based, in [0, M).
using Token = std::uint32_t;
// Token in the layer-disjoint flat vocabulary: (layer - 1) * M + token.
using FlatToken = std::uint32_t;

struct QuantizerConfig {
  std::uint32_t num_layers = 3;      // L
  std::uint32_t codebook_size = 256;  // M
  std::uint32_t dim = 32;             // D
  std::uint32_t kmeans_iters = 25;
  std::uint64_t seed = 0;
  // Lloyd iterations stop once the relative SSE improvement drops below this.
  double convergence_tol = 1e-4;

  // Throws ConfigError when an invariant is violated.
  void validate() const;
  // Size of the flat vocabulary, L * M.
  std::uint32_t vocab_size() const { return num_layers * codebook_size; }

  friend bool operator==(const QuantizerConfig&, const QuantizerConfig&) = default;
};

// N item vectors of a common dimension, stored row-major.
class EmbeddingCollection {
 public:
  EmbeddingCollection() = default;
  explicit EmbeddingCollection(std::size_t dim);

  // Throws DataError on a duplicate id, a dimension mismatch or a non-finite
  // component.
  void add(std::string item_id, std::span<const double> vector);
  void reserve(std::size_t n);

  std::size_t size() const { return ids_.size(); }
  bool empty() const { return ids_.empty(); }
  std::size_t dim() const { return dim_; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  const std::vector<std::string>& ids() const { return ids_; }
  std::span<const double> vector(std::size_t i) const {
    return {values_.data() + i * dim_, dim_};
  }
  std::span<const double> values() const { return values_; }
  std::optional<std::size_t> find(const std::string& item_id) const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::unordered_map<std::string, std::size_t> index_;
};

// L layers of M codewords of width D. Codewords are single precision so the
// persisted binary form is exact.
class Codebook {
 public:
  Codebook(QuantizerConfig config, std::vector<float> weights,
           std::vector<double> training_sse_per_layer,
           std::optional<std::vector<Token>> head_set = std::nullopt);

  const QuantizerConfig& config() const { return config_; }
  std::uint32_t num_layers() const { return config_.num_layers; }
  std::uint32_t codebook_size() const { return config_.codebook_size; }
  std::uint32_t dim() const { return config_.dim; }

  // layer is 1-based.
  std::span<const float> layer(std::uint32_t layer) const;
  std::span<const float> codeword(std::uint32_t layer, Token token) const;
  std::span<const float> weights() const { return weights_; }
  const std::vector<double>& training_sse_per_layer() const { return training_sse_; }

  // Frozen set of elided layer-2 tokens, if a variable-length mitigation was
  // applied to this codebook's catalog.
  const std::optional<std::vector<Token>>& head_set() const { return head_set_; }
  Codebook with_head_set(std::optional<std::vector<Token>> head_set) const;

 private:
  QuantizerConfig config_;
  std::vector<float> weights_;
  std::vector<double> training_sse_;
  std::optional<std::vector<Token>> head_set_;
};

struct SemanticId {
  std::vector<Token> tokens;

  friend auto operator<=>(const SemanticId&, const SemanticId&) = default;
};

struct LayerToken {
  std::uint32_t layer;  // 1-based
  Token token;

  friend auto operator<=>(const LayerToken&, const LayerToken&) = default;
};

// A semantic ID with at most one interior layer elided. Layers are strictly
// increasing, start at 1 and end at L.
struct VarLenSemanticId {
  std::vector<LayerToken> entries;

  friend auto operator<=>(const VarLenSemanticId&, const VarLenSemanticId&) = default;
};

void validate(const SemanticId& sid, const QuantizerConfig& config);
void validate(const VarLenSemanticId& sid, const QuantizerConfig& config);

VarLenSemanticId to_varlen(const SemanticId& sid);
// Full-length SIDs only; nullopt if a layer is elided.
std::optional<SemanticId> to_fixed(const VarLenSemanticId& sid, const QuantizerConfig& config);

std::vector<FlatToken> sid_to_flat_tokens(const SemanticId& sid, const QuantizerConfig& config);
std::vector<FlatToken> sid_to_flat_tokens(const VarLenSemanticId& sid,
                                          const QuantizerConfig& config);

// Infers the layer of each flat id. Checks the range and strictly increasing
// layers only; use validate() for the full variable-length invariants.
VarLenSemanticId parse_flat_tokens(std::span<const FlatToken> tokens,
                                   const QuantizerConfig& config);

// 1-based layer of a flat token. Throws RangeError when out of the vocabulary.
std::uint32_t flat_token_layer(FlatToken flat, const QuantizerConfig& config);
inline bool is_last_layer_token(FlatToken flat, const QuantizerConfig& config) {
  return flat / config.codebook_size == config.num_layers - 1;
}

std::string to_string(const SemanticId& sid);
std::string to_string(const VarLenSemanticId& sid);

}  // namespace rqsid
