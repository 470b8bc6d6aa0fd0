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

#include "rqsid/core.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "rqsid/error.hpp"

namespace rqsid {

void QuantizerConfig::validate() const {
  if (num_layers < 1) throw ConfigError("num_layers must be >= 1");
  if (codebook_size < 1) throw ConfigError("codebook_size must be >= 1");
  if (dim < 1) throw ConfigError("dim must be >= 1");
  if (kmeans_iters < 1) throw ConfigError("kmeans_iters must be >= 1");
  if (!(convergence_tol >= 0.0)) throw ConfigError("convergence_tol must be >= 0");
  if (static_cast<std::uint64_t>(num_layers) * codebook_size > UINT32_MAX)
    throw ConfigError("L * M exceeds the flat vocabulary range");
}

EmbeddingCollection::EmbeddingCollection(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw ConfigError("embedding dimension must be >= 1");
}

void EmbeddingCollection::reserve(std::size_t n) {
  ids_.reserve(n);
  values_.reserve(n * dim_);
  index_.reserve(n);
}

void EmbeddingCollection::add(std::string item_id, std::span<const double> vector) {
  if (dim_ == 0) {
    if (vector.empty()) throw DataError("empty embedding vector");
    dim_ = vector.size();
  }
  if (vector.size() != dim_) {
    std::ostringstream msg;
    msg << "item '" << item_id << "' has dimension " << vector.size() << ", expected " << dim_;
    throw DataError(msg.str());
  }
  for (double v : vector) {
    if (!std::isfinite(v)) throw DataError("item '" + item_id + "' has a non-finite component");
  }
  auto [it, inserted] = index_.emplace(item_id, ids_.size());
  if (!inserted) throw DataError("duplicate item id '" + item_id + "'");
  ids_.push_back(std::move(item_id));
  values_.insert(values_.end(), vector.begin(), vector.end());
}

std::optional<std::size_t> EmbeddingCollection::find(const std::string& item_id) const {
  auto it = index_.find(item_id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Codebook::Codebook(QuantizerConfig config, std::vector<float> weights,
                   std::vector<double> training_sse_per_layer,
                   std::optional<std::vector<Token>> head_set)
    : config_(config),
      weights_(std::move(weights)),
      training_sse_(std::move(training_sse_per_layer)),
      head_set_(std::move(head_set)) {
  config_.validate();
  const std::size_t expected =
      std::size_t{config_.num_layers} * config_.codebook_size * config_.dim;
  if (weights_.size() != expected) {
    std::ostringstream msg;
    msg << "codebook has " << weights_.size() << " weights, expected " << expected;
    throw DataError(msg.str());
  }
  for (float w : weights_) {
    if (!std::isfinite(w)) throw DataError("codebook contains a non-finite weight");
  }
  if (training_sse_.size() != config_.num_layers)
    throw DataError("training_sse_per_layer must have one entry per layer");
  for (double s : training_sse_) {
    if (!(s >= 0.0)) throw DataError("training_sse_per_layer entries must be non-negative");
  }
  if (head_set_) {
    for (Token t : *head_set_) {
      if (t >= config_.codebook_size) throw RangeError("head_set token out of range");
    }
  }
}

std::span<const float> Codebook::layer(std::uint32_t layer) const {
  if (layer < 1 || layer > config_.num_layers) throw RangeError("layer out of range");
  const std::size_t stride = std::size_t{config_.codebook_size} * config_.dim;
  return {weights_.data() + (layer - 1) * stride, stride};
}

std::span<const float> Codebook::codeword(std::uint32_t layer, Token token) const {
  if (token >= config_.codebook_size) throw RangeError("token out of range");
  return this->layer(layer).subspan(std::size_t{token} * config_.dim, config_.dim);
}

Codebook Codebook::with_head_set(std::optional<std::vector<Token>> head_set) const {
  return Codebook(config_, weights_, training_sse_, std::move(head_set));
}

void validate(const SemanticId& sid, const QuantizerConfig& config) {
  if (sid.tokens.size() != config.num_layers) {
    std::ostringstream msg;
    msg << "SID has " << sid.tokens.size() << " tokens, expected " << config.num_layers;
    throw RangeError(msg.str());
  }
  for (Token t : sid.tokens) {
    if (t >= config.codebook_size) throw RangeError("SID token out of range");
  }
}

void validate(const VarLenSemanticId& sid, const QuantizerConfig& config) {
  const auto& e = sid.entries;
  if (e.empty()) throw MalformedSequenceError("empty variable-length SID");
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i].layer < 1 || e[i].layer > config.num_layers) throw RangeError("layer out of range");
    if (e[i].token >= config.codebook_size) throw RangeError("SID token out of range");
    if (i > 0 && e[i].layer <= e[i - 1].layer)
      throw MalformedSequenceError("layers must be strictly increasing");
  }
  if (e.front().layer != 1) throw MalformedSequenceError("first entry must be layer 1");
  if (e.back().layer != config.num_layers)
    throw MalformedSequenceError("last entry must be the final layer");
  if (e.size() + 1 < config.num_layers)
    throw MalformedSequenceError("at most one layer may be elided");
}

VarLenSemanticId to_varlen(const SemanticId& sid) {
  VarLenSemanticId out;
  out.entries.reserve(sid.tokens.size());
  for (std::size_t l = 0; l < sid.tokens.size(); ++l) {
    out.entries.push_back({static_cast<std::uint32_t>(l + 1), sid.tokens[l]});
  }
  return out;
}

std::optional<SemanticId> to_fixed(const VarLenSemanticId& sid, const QuantizerConfig& config) {
  if (sid.entries.size() != config.num_layers) return std::nullopt;
  SemanticId out;
  out.tokens.reserve(sid.entries.size());
  for (const auto& e : sid.entries) out.tokens.push_back(e.token);
  return out;
}

std::vector<FlatToken> sid_to_flat_tokens(const SemanticId& sid, const QuantizerConfig& config) {
  validate(sid, config);
  std::vector<FlatToken> out(sid.tokens.size());
  for (std::size_t l = 0; l < sid.tokens.size(); ++l) {
    out[l] = static_cast<FlatToken>(l) * config.codebook_size + sid.tokens[l];
  }
  return out;
}

std::vector<FlatToken> sid_to_flat_tokens(const VarLenSemanticId& sid,
                                          const QuantizerConfig& config) {
  validate(sid, config);
  std::vector<FlatToken> out;
  out.reserve(sid.entries.size());
  for (const auto& e : sid.entries) out.push_back((e.layer - 1) * config.codebook_size + e.token);
  return out;
}

std::uint32_t flat_token_layer(FlatToken flat, const QuantizerConfig& config) {
  if (flat >= config.vocab_size()) throw RangeError("flat token out of range");
  return flat / config.codebook_size + 1;
}

VarLenSemanticId parse_flat_tokens(std::span<const FlatToken> tokens,
                                   const QuantizerConfig& config) {
  if (tokens.empty()) throw MalformedSequenceError("empty token sequence");
  VarLenSemanticId out;
  out.entries.reserve(tokens.size());
  for (FlatToken flat : tokens) {
    const std::uint32_t layer = flat_token_layer(flat, config);
    if (!out.entries.empty() && layer <= out.entries.back().layer) {
      std::ostringstream msg;
      msg << "layer " << layer << " follows layer " << out.entries.back().layer;
      throw MalformedSequenceError(msg.str());
    }
    out.entries.push_back({layer, flat % config.codebook_size});
  }
  return out;
}

std::string to_string(const SemanticId& sid) {
  std::string out = "(";
  for (std::size_t i = 0; i < sid.tokens.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(sid.tokens[i]);
  }
  return out + ')';
}

std::string to_string(const VarLenSemanticId& sid) {
  std::string out = "[";
  for (std::size_t i = 0; i < sid.entries.size(); ++i) {
    if (i) out += ',';
    out += '(' + std::to_string(sid.entries[i].layer) + ',' +
           std::to_string(sid.entries[i].token) + ')';
  }
  return out + ']';
}

}  // namespace rqsid
