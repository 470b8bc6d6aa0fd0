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

#include <sstream>
#include <utility>

#include "rqsid/error.hpp"
#include "rqsid/grsim.hpp"
#include "rqsid/mitigation.hpp"

namespace rqsid {

GrCatalog::GrCatalog(QuantizerConfig config, std::vector<std::string> item_ids,
                     std::vector<VarLenSemanticId> sids, std::vector<Token> layer2_tokens)
    : config_(config), item_ids_(std::move(item_ids)), layer2_tokens_(std::move(layer2_tokens)) {
  config_.validate();
  if (item_ids_.empty()) throw DataError("catalog is empty");
  if (sids.size() != item_ids_.size() || layer2_tokens_.size() != item_ids_.size())
    throw ConsistencyError("catalog columns differ in length");
  tokens_.reserve(sids.size());
  for (std::size_t i = 0; i < sids.size(); ++i) {
    tokens_.push_back(sid_to_flat_tokens(sids[i], config_));
    if (layer2_tokens_[i] >= config_.codebook_size) throw RangeError("layer-2 token out of range");
    if (!index_.emplace(item_ids_[i], i).second)
      throw DataError("duplicate catalog item '" + item_ids_[i] + "'");
  }
}

GrCatalog GrCatalog::from_sids(const QuantizerConfig& config, std::span<const std::string> item_ids,
                               std::span<const SemanticId> sids, std::span<const Token> head_set) {
  if (item_ids.size() != sids.size()) throw ConsistencyError("catalog columns differ in length");
  std::vector<VarLenSemanticId> reps;
  std::vector<Token> layer2;
  reps.reserve(sids.size());
  layer2.reserve(sids.size());
  for (const auto& sid : sids) {
    reps.push_back(apply_head_set(sid, head_set, config));
    layer2.push_back(config.num_layers >= 2 ? sid.tokens[1] : sid.tokens[0]);
  }
  return GrCatalog(config, {item_ids.begin(), item_ids.end()}, std::move(reps), std::move(layer2));
}

std::size_t GrCatalog::index(const std::string& item_id) const {
  auto it = index_.find(item_id);
  if (it == index_.end()) throw DataError("unknown catalog item '" + item_id + "'");
  return it->second;
}

CatalogTrie::CatalogTrie(std::span<const Entry> entries, const QuantizerConfig& config) {
  if (entries.empty()) throw DataError("cannot build a trie from an empty catalog");
  nodes_.emplace_back();
  for (const auto& entry : entries) {
    validate(parse_flat_tokens(entry.tokens, config), config);
    std::uint32_t node = 0;
    for (FlatToken t : entry.tokens) {
      auto it = nodes_[node].children.find(t);
      if (it == nodes_[node].children.end()) {
        const auto child = static_cast<std::uint32_t>(nodes_.size());
        nodes_[node].children.emplace(t, child);
        nodes_.emplace_back();
        node = child;
      } else {
        node = it->second;
      }
    }
    if (nodes_[node].items.empty()) ++num_sequences_;
    nodes_[node].items.push_back(entry.item_id);
  }
}

const CatalogTrie::Node* CatalogTrie::find(std::span<const FlatToken> prefix) const {
  std::uint32_t node = 0;
  for (FlatToken t : prefix) {
    auto it = nodes_[node].children.find(t);
    if (it == nodes_[node].children.end()) return nullptr;
    node = it->second;
  }
  return &nodes_[node];
}

bool CatalogTrie::contains(std::span<const FlatToken> sequence) const {
  const Node* n = find(sequence);
  return n != nullptr && !n->items.empty();
}

std::optional<std::vector<FlatToken>> CatalogTrie::valid_next_tokens(
    std::span<const FlatToken> prefix) const {
  const Node* n = find(prefix);
  if (n == nullptr) return std::nullopt;
  std::vector<FlatToken> out;
  out.reserve(n->children.size());
  for (const auto& [token, child] : n->children) out.push_back(token);
  return out;
}

const std::vector<std::string>* CatalogTrie::items(std::span<const FlatToken> sequence) const {
  const Node* n = find(sequence);
  if (n == nullptr || n->items.empty()) return nullptr;
  return &n->items;
}

CatalogTrie build_trie(const GrCatalog& catalog) {
  std::vector<CatalogTrie::Entry> entries;
  entries.reserve(catalog.size());
  for (std::size_t i = 0; i < catalog.size(); ++i)
    entries.push_back({catalog.item_id(i), catalog.tokens(i)});
  return CatalogTrie(entries, catalog.config());
}

CatalogTrie build_trie(std::span<const std::string> item_ids, std::span<const SemanticId> sids,
                       const QuantizerConfig& config) {
  if (item_ids.size() != sids.size()) throw ConsistencyError("catalog columns differ in length");
  std::vector<CatalogTrie::Entry> entries;
  entries.reserve(sids.size());
  for (std::size_t i = 0; i < sids.size(); ++i)
    entries.push_back({item_ids[i], sid_to_flat_tokens(sids[i], config)});
  return CatalogTrie(entries, config);
}

CatalogTrie build_trie(std::span<const std::string> item_ids,
                       std::span<const VarLenSemanticId> sids, const QuantizerConfig& config) {
  if (item_ids.size() != sids.size()) throw ConsistencyError("catalog columns differ in length");
  std::vector<CatalogTrie::Entry> entries;
  entries.reserve(sids.size());
  for (std::size_t i = 0; i < sids.size(); ++i)
    entries.push_back({item_ids[i], sid_to_flat_tokens(sids[i], config)});
  return CatalogTrie(entries, config);
}

}  // namespace rqsid
