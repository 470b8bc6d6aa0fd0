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
#include <variant>
#include <vector>

#include "rqsid/core.hpp"

namespace rqsid {

struct LayerHistogram {
  std::uint32_t layer = 0;  // 1-based
  std::vector<std::uint64_t> counts;

  std::uint64_t total() const;
};

struct LayerStats {
  double entropy_bits = 0.0;
  double gini = 0.0;
  double stddev = 0.0;
  std::uint32_t distinct_tokens = 0;
  double utilization = 0.0;
};

// Head/tail selectors. TopK takes the K most frequent tokens; Mass takes the
// shortest frequency-ordered prefix holding at least a share p of the items.
struct TopK {
  std::uint32_t k = 0;
};
struct Mass {
  double p = 0.5;
};
using HeadSelector = std::variant<TopK, Mass>;

struct HeadTailSplit {
  std::vector<Token> head;  // in selection order (count desc, index asc)
  std::vector<Token> tail;  // ascending token index
};

struct TokenDegree {
  std::uint32_t fan_in = 0;
  std::uint32_t fan_out = 0;
};

struct HourglassReport {
  std::vector<LayerHistogram> histograms;
  std::vector<LayerStats> per_layer;
  std::uint64_t num_items = 0;
  std::uint64_t distinct_sids = 0;
  double path_sparsity = 0.0;
  std::vector<double> edge_density;  // L - 1 entries
  bool hourglass_flag = false;
  // Interior layer with the lowest entropy; 0 when L < 3.
  std::uint32_t pinch_layer = 0;
  // Head tokens of layer 2 (layer 1 when L = 1) under the report's selector.
  std::vector<Token> head_set;
};

LayerHistogram token_histogram(std::span<const SemanticId> sids, std::uint32_t layer,
                               std::uint32_t codebook_size);

// Shannon entropy in bits. Throws UndefinedStatError on an empty histogram.
double entropy_bits(const LayerHistogram& h);
// Gini coefficient over all M slots, zero counts included:
// sum_i sum_j |c_i - c_j| / (2 M sum c).
double gini(const LayerHistogram& h);
// Population standard deviation of the M counts.
double stddev(const LayerHistogram& h);
LayerStats layer_stats(const LayerHistogram& h);

// |distinct SIDs| / M^L, with an exact big-integer denominator.
double path_sparsity(std::span<const SemanticId> sids, const QuantizerConfig& config);
std::uint64_t distinct_count(std::span<const SemanticId> sids);

// One entry per token of `layer`.
std::vector<TokenDegree> degree_profile(std::span<const SemanticId> sids, std::uint32_t layer,
                                        const QuantizerConfig& config);
// Distinct (layer, layer + 1) token pairs.
std::uint64_t edge_count(std::span<const SemanticId> sids, std::uint32_t layer);
// edge_count / M^2 for every adjacent layer pair.
std::vector<double> edge_density(std::span<const SemanticId> sids, const QuantizerConfig& config);

HeadTailSplit head_tail_split(const LayerHistogram& h, const HeadSelector& selector);

// Some interior layer has strictly the lowest entropy and strictly the highest
// gini of all layers.
bool is_hourglass(std::span<const LayerStats> per_layer, std::uint32_t* pinch_layer = nullptr);

HourglassReport hourglass_report(std::span<const SemanticId> sids, const QuantizerConfig& config,
                                 const HeadSelector& head_selector = Mass{0.5});

}  // namespace rqsid
