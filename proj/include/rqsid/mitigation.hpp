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

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rqsid/core.hpp"
#include "rqsid/diagnostics.hpp"

namespace rqsid {

using BigInt = boost::multiprecision::cpp_int;

struct MitigationOutcome {
  std::vector<std::string> item_ids;
  std::vector<VarLenSemanticId> transformed_sids;
  // Layer whose tokens are elided (2 unless remove_layer was asked otherwise).
  std::uint32_t elided_layer = 2;
  // Elided tokens of that layer, ascending. remove_layer elides all of them.
  std::vector<Token> head_set;
  // Closed-form capacity of the scheme and the number of distinct
  // transformed SIDs actually produced.
  BigInt capacity_formula;
  BigInt capacity_empirical_distinct;
  // Transformed SIDs shared by two or more items.
  std::map<VarLenSemanticId, std::vector<std::string>> collisions;
};

// Swaps positions a and b (1-based) of every SID.
std::vector<SemanticId> exchange_layers(std::span<const SemanticId> sids, std::uint32_t a,
                                        std::uint32_t b, const QuantizerConfig& config);

// M^(L-1).
BigInt remove_layer_capacity(std::uint32_t codebook_size, std::uint32_t num_layers);
// M^L + K (M^(L-2) - M^(L-1)), the closed-form capacity of the variable-length
// scheme. May disagree with the distinct-representation count.
BigInt varlen_capacity_formula(std::uint32_t codebook_size, std::uint32_t num_layers,
                               std::uint32_t k);

// Drops an interior layer from every SID. Throws ConfigError when L = 1 or
// the layer is not interior.
MitigationOutcome remove_layer(std::span<const std::string> item_ids,
                               std::span<const SemanticId> sids, const QuantizerConfig& config,
                               std::uint32_t layer = 2);

// Elides the layer-2 token of every SID whose token is in the head set chosen
// from `layer2_hist`. The histogram must have been computed from `sids`.
MitigationOutcome varlen_topk(std::span<const std::string> item_ids,
                              std::span<const SemanticId> sids, const LayerHistogram& layer2_hist,
                              const HeadSelector& selector, const QuantizerConfig& config);

// Elides layer 2 when its token is in the (frozen) head set. Used for items
// encoded after the head set was chosen.
VarLenSemanticId apply_head_set(const SemanticId& sid, std::span<const Token> head_set,
                                const QuantizerConfig& config);

struct PostMitigationReport {
  std::uint64_t total_items = 0;
  std::uint64_t elided_items = 0;
  double elision_rate = 0.0;
  // Full report over the SIDs that kept every layer; empty when all were
  // elided (statistics undefined).
  std::optional<HourglassReport> remaining;
  // Elided-layer histogram restricted to the tail tokens (M - K slots), the
  // tokens that can still occur at that position.
  std::optional<LayerHistogram> tail_histogram;
  std::optional<LayerStats> tail_stats;
  // Distinct full-length SIDs over the full-length path space left after
  // elision, M^(L-1) (M - K).
  double full_length_path_utilization = 0.0;
};

PostMitigationReport post_mitigation_report(const MitigationOutcome& outcome,
                                            const QuantizerConfig& config,
                                            const HeadSelector& head_selector = Mass{0.5});

}  // namespace rqsid
