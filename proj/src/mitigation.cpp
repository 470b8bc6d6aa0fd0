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

#include "rqsid/mitigation.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <utility>

#include "rqsid/error.hpp"

namespace rqsid {

namespace {

BigInt power(std::uint32_t base, std::uint32_t exp) {
  return boost::multiprecision::pow(BigInt(base), exp);
}

void check_ids(std::span<const std::string> item_ids, std::span<const SemanticId> sids) {
  if (item_ids.size() != sids.size())
    throw ConsistencyError("item id list and SID list differ in length");
}

// Elides `layer` from sid when its token is flagged in `elide`.
VarLenSemanticId elide(const SemanticId& sid, std::uint32_t layer,
                       const std::vector<bool>& elide_token) {
  VarLenSemanticId out;
  out.entries.reserve(sid.tokens.size());
  for (std::uint32_t l = 1; l <= sid.tokens.size(); ++l) {
    const Token t = sid.tokens[l - 1];
    if (l == layer && elide_token[t]) continue;
    out.entries.push_back({l, t});
  }
  return out;
}

void finish(MitigationOutcome& out) {
  std::map<VarLenSemanticId, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < out.transformed_sids.size(); ++i)
    groups[out.transformed_sids[i]].push_back(out.item_ids[i]);
  out.capacity_empirical_distinct = BigInt(groups.size());
  for (auto& [sid, ids] : groups) {
    if (ids.size() >= 2) out.collisions.emplace(sid, std::move(ids));
  }
}

MitigationOutcome elide_layer(std::span<const std::string> item_ids,
                              std::span<const SemanticId> sids, const QuantizerConfig& config,
                              std::uint32_t layer, std::vector<Token> head) {
  MitigationOutcome out;
  out.item_ids.assign(item_ids.begin(), item_ids.end());
  out.elided_layer = layer;
  std::sort(head.begin(), head.end());
  std::vector<bool> flag(config.codebook_size, false);
  for (Token t : head) flag[t] = true;
  out.head_set = std::move(head);
  out.transformed_sids.reserve(sids.size());
  for (const auto& sid : sids) {
    validate(sid, config);
    out.transformed_sids.push_back(elide(sid, layer, flag));
  }
  finish(out);
  return out;
}

}  // namespace

std::vector<SemanticId> exchange_layers(std::span<const SemanticId> sids, std::uint32_t a,
                                        std::uint32_t b, const QuantizerConfig& config) {
  if (a < 1 || a > config.num_layers || b < 1 || b > config.num_layers)
    throw RangeError("exchange layer out of range");
  std::vector<SemanticId> out(sids.begin(), sids.end());
  for (auto& sid : out) {
    validate(sid, config);
    std::swap(sid.tokens[a - 1], sid.tokens[b - 1]);
  }
  return out;
}

BigInt remove_layer_capacity(std::uint32_t codebook_size, std::uint32_t num_layers) {
  if (num_layers < 1) throw ConfigError("num_layers must be >= 1");
  return power(codebook_size, num_layers - 1);
}

BigInt varlen_capacity_formula(std::uint32_t codebook_size, std::uint32_t num_layers,
                               std::uint32_t k) {
  if (num_layers < 2) throw ConfigError("the variable-length capacity needs L >= 2");
  return power(codebook_size, num_layers) +
         BigInt(k) * (power(codebook_size, num_layers - 2) - power(codebook_size, num_layers - 1));
}

MitigationOutcome remove_layer(std::span<const std::string> item_ids,
                               std::span<const SemanticId> sids, const QuantizerConfig& config,
                               std::uint32_t layer) {
  if (config.num_layers < 2) throw ConfigError("remove_layer needs L >= 2");
  if (layer < 2 || layer >= config.num_layers) {
    std::ostringstream msg;
    msg << "remove_layer needs an interior layer (1 < layer < " << config.num_layers << "), got "
        << layer;
    throw ConfigError(msg.str());
  }
  check_ids(item_ids, sids);
  std::vector<Token> all(config.codebook_size);
  for (Token t = 0; t < config.codebook_size; ++t) all[t] = t;
  MitigationOutcome out = elide_layer(item_ids, sids, config, layer, std::move(all));
  out.capacity_formula = remove_layer_capacity(config.codebook_size, config.num_layers);
  return out;
}

MitigationOutcome varlen_topk(std::span<const std::string> item_ids,
                              std::span<const SemanticId> sids, const LayerHistogram& layer2_hist,
                              const HeadSelector& selector, const QuantizerConfig& config) {
  if (config.num_layers < 3) throw ConfigError("variable-length SIDs need L >= 3");
  check_ids(item_ids, sids);
  if (layer2_hist.layer != 2) throw ConsistencyError("histogram is not for layer 2");
  const LayerHistogram recomputed = token_histogram(sids, 2, config.codebook_size);
  if (recomputed.counts != layer2_hist.counts)
    throw ConsistencyError("layer-2 histogram does not match the SID list");
  std::vector<Token> head = head_tail_split(layer2_hist, selector).head;
  const auto k = static_cast<std::uint32_t>(head.size());
  MitigationOutcome out = elide_layer(item_ids, sids, config, 2, std::move(head));
  out.capacity_formula = varlen_capacity_formula(config.codebook_size, config.num_layers, k);
  return out;
}

VarLenSemanticId apply_head_set(const SemanticId& sid, std::span<const Token> head_set,
                                const QuantizerConfig& config) {
  validate(sid, config);
  if (head_set.empty()) return to_varlen(sid);
  if (config.num_layers < 3) throw ConfigError("variable-length SIDs need L >= 3");
  std::vector<bool> flag(config.codebook_size, false);
  for (Token t : head_set) {
    if (t >= config.codebook_size) throw RangeError("head set token out of range");
    flag[t] = true;
  }
  return elide(sid, 2, flag);
}

PostMitigationReport post_mitigation_report(const MitigationOutcome& outcome,
                                            const QuantizerConfig& config,
                                            const HeadSelector& head_selector) {
  PostMitigationReport r;
  r.total_items = outcome.transformed_sids.size();
  std::vector<SemanticId> full;
  for (const auto& sid : outcome.transformed_sids) {
    if (auto fixed = to_fixed(sid, config)) {
      full.push_back(std::move(*fixed));
    } else {
      ++r.elided_items;
    }
  }
  r.elision_rate = r.total_items == 0
                       ? 0.0
                       : static_cast<double>(r.elided_items) / static_cast<double>(r.total_items);
  const std::size_t k = outcome.head_set.size();
  if (full.empty() || k >= config.codebook_size) return r;

  r.remaining = hourglass_report(full, config, head_selector);
  const LayerHistogram& layer_hist = r.remaining->histograms[outcome.elided_layer - 1];
  std::vector<bool> head(config.codebook_size, false);
  for (Token t : outcome.head_set) head[t] = true;
  LayerHistogram tail{outcome.elided_layer, {}};
  for (Token t = 0; t < config.codebook_size; ++t) {
    if (!head[t]) tail.counts.push_back(layer_hist.counts[t]);
  }
  r.tail_stats = layer_stats(tail);
  r.tail_histogram = std::move(tail);

  double space = static_cast<double>(config.codebook_size - k);
  for (std::uint32_t l = 1; l < config.num_layers; ++l) space *= config.codebook_size;
  r.full_length_path_utilization = static_cast<double>(r.remaining->distinct_sids) / space;
  return r;
}

}  // namespace rqsid
