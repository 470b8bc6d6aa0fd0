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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "rqsid/core.hpp"
#include "rqsid/random.hpp"

namespace rqsid {

// ---------------------------------------------------------------------------
// Catalog

// Item representations used for generation. `tokens` is the flat form of the
// (possibly variable-length) SID; `layer2_token` is the item's original
// layer-2 token and drives head/tail partitions.
class GrCatalog {
 public:
  GrCatalog(QuantizerConfig config, std::vector<std::string> item_ids,
            std::vector<VarLenSemanticId> sids, std::vector<Token> layer2_tokens);
  // Full-length SIDs; layer 2 is elided for tokens in head_set (empty = none).
  static GrCatalog from_sids(const QuantizerConfig& config, std::span<const std::string> item_ids,
                             std::span<const SemanticId> sids,
                             std::span<const Token> head_set = {});

  const QuantizerConfig& config() const { return config_; }
  std::size_t size() const { return item_ids_.size(); }
  const std::string& item_id(std::size_t i) const { return item_ids_[i]; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  const std::vector<FlatToken>& tokens(std::size_t i) const { return tokens_[i]; }
  Token layer2_token(std::size_t i) const { return layer2_tokens_[i]; }
  // Throws DataError for unknown ids.
  std::size_t index(const std::string& item_id) const;
  bool contains_item(const std::string& item_id) const { return index_.count(item_id) != 0; }

 private:
  QuantizerConfig config_;
  std::vector<std::string> item_ids_;
  std::vector<std::vector<FlatToken>> tokens_;
  std::vector<Token> layer2_tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Prefix tree over flat-token SIDs. Terminal nodes hold the ids of every item
// sharing that SID.
class CatalogTrie {
 public:
  struct Entry {
    std::string item_id;
    std::vector<FlatToken> tokens;
  };

  // Each token sequence must parse as a valid SID under config.
  CatalogTrie(std::span<const Entry> entries, const QuantizerConfig& config);

  // True iff the sequence is a complete catalog SID.
  bool contains(std::span<const FlatToken> sequence) const;
  // Children of the node reached by prefix, ascending. nullopt when the prefix
  // is not a path in the trie; empty when it ends at a terminal.
  std::optional<std::vector<FlatToken>> valid_next_tokens(std::span<const FlatToken> prefix) const;
  // Items stored at a complete SID, or nullptr.
  const std::vector<std::string>* items(std::span<const FlatToken> sequence) const;
  std::size_t num_sequences() const { return num_sequences_; }

 private:
  struct Node {
    std::map<FlatToken, std::uint32_t> children;
    std::vector<std::string> items;
  };
  const Node* find(std::span<const FlatToken> prefix) const;

  std::vector<Node> nodes_;
  std::size_t num_sequences_ = 0;
};

CatalogTrie build_trie(const GrCatalog& catalog);
CatalogTrie build_trie(std::span<const std::string> item_ids, std::span<const SemanticId> sids,
                       const QuantizerConfig& config);
CatalogTrie build_trie(std::span<const std::string> item_ids,
                       std::span<const VarLenSemanticId> sids, const QuantizerConfig& config);

// ---------------------------------------------------------------------------
// Interactions

enum class Split { kTrain, kTest };

struct Interaction {
  std::vector<std::string> history;  // oldest first
  std::string target;
  Split split = Split::kTrain;
};

struct InteractionDataset {
  std::vector<Interaction> records;

  std::vector<Interaction> select(Split split) const;
};

// Markov browsing over the catalog. Item popularity follows a Zipf law over a
// seeded random ranking; every item has a fixed successor list drawn by
// popularity. Each step follows a successor with probability follow_prob and
// otherwise jumps to a popularity-weighted item.
struct InteractionGenConfig {
  std::size_t num_train = 20000;
  std::size_t num_test = 1000;
  std::uint32_t history_length = 3;
  std::uint32_t successors_per_item = 3;
  double follow_prob = 0.5;
  double popularity_exponent = 1.0;

  void validate() const;
};

// item_affinity, when given, orders the popularity ranking (higher = more
// popular); otherwise the ranking is a seeded random permutation.
InteractionDataset gen_interactions(std::span<const std::string> item_ids,
                                    const InteractionGenConfig& config, const RandomSource& rng,
                                    std::span<const double> item_affinity = {});

// Affinity proxy for catalog density: the number of catalog items sharing
// each item's layer-1 token.
std::vector<double> layer1_density(std::span<const SemanticId> sids,
                                   const QuantizerConfig& config);

// ---------------------------------------------------------------------------
// Sequence model

// Count-based next-token model over the flat vocabulary. Counts are kept for
// every context length 1..order; a query uses the longest suffix of its
// context that was observed and applies add-alpha smoothing there:
//   P(t | ctx) = (count(ctx, t) + alpha) / (total(ctx) + alpha * V).
// A context with no observed suffix gets the uniform distribution 1/V.
class SequenceModel {
 public:
  SequenceModel(std::uint32_t order, double alpha, std::uint32_t vocab_size);

  // Adds every (context, next) pair of a token stream.
  void observe(std::span<const FlatToken> stream);

  double probability(std::span<const FlatToken> context, FlatToken next) const;
  double log_probability(std::span<const FlatToken> context, FlatToken next) const;

  std::uint32_t order() const { return order_; }
  double alpha() const { return alpha_; }
  std::uint32_t vocab_size() const { return vocab_size_; }

  // Resolved smoothing state for a context; cheap to query per token.
  class Distribution {
   public:
    double probability(FlatToken next) const;
    double log_probability(FlatToken next) const;

   private:
    friend class SequenceModel;
    const std::unordered_map<FlatToken, std::uint64_t>* next_ = nullptr;
    double denominator_ = 1.0;
    double alpha_ = 1.0;
  };
  Distribution distribution(std::span<const FlatToken> context) const;

 private:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::unordered_map<FlatToken, std::uint64_t> next;
  };
  struct KeyHash {
    std::size_t operator()(const std::vector<FlatToken>& key) const;
  };

  std::uint32_t order_;
  double alpha_;
  std::uint32_t vocab_size_;
  std::unordered_map<std::vector<FlatToken>, ContextCounts, KeyHash> table_;
};

// Streams are the concatenated flat tokens of the history followed by the
// target. Throws DataError on an empty dataset or unknown items.
SequenceModel train_seq_model(std::span<const Interaction> records, const GrCatalog& catalog,
                              std::uint32_t order, double alpha);

// ---------------------------------------------------------------------------
// Decoding

struct Hypothesis {
  std::vector<FlatToken> tokens;  // includes the fixed prefix
  double log_prob = 0.0;
};

struct BeamOptions {
  std::uint32_t beam_width = 10;
  std::uint32_t max_len = 3;  // generated tokens, fixed prefix excluded
  const CatalogTrie* trie = nullptr;
  std::vector<FlatToken> fixed_prefix;
};

// Beam search over flat tokens. A hypothesis completes when it emits a
// final-layer token or reaches max_len generated tokens. With a trie, only
// trie children are expanded. Results are sorted by log-probability, ties by
// ascending token sequence, and truncated to beam_width.
std::vector<Hypothesis> beam_search(const SequenceModel& model, std::span<const FlatToken> context,
                                    const BeamOptions& options, const QuantizerConfig& config);

// ---------------------------------------------------------------------------
// Evaluation

struct PartitionMetrics {
  std::size_t records = 0;
  std::vector<double> recall;         // per k
  std::vector<double> invalid_ratio;  // per k
};

struct EvalReport {
  std::vector<std::uint32_t> k_list;
  std::uint32_t beam_width = 0;
  bool trie_mode = false;
  bool given_first_token = false;
  std::vector<Token> head_set;
  PartitionMetrics overall;
  PartitionMetrics head;
  PartitionMetrics tail;
};

struct EvalOptions {
  std::uint32_t beam_width = 50;
  std::vector<std::uint32_t> k_list = {1, 5, 10, 50};
  bool trie_mode = false;
  // Condition generation on the gold item's first token.
  bool given_first_token = false;
  unsigned threads = 1;
};

// recall@k: gold SID within the first k beams. invalid_ratio@k: share of the
// first-k emitted sequences that are not catalog SIDs. Partitions split test
// records on whether the gold item's layer-2 token is in head_set.
EvalReport evaluate(const SequenceModel& model, std::span<const Interaction> test,
                    const GrCatalog& catalog, const CatalogTrie& trie,
                    std::span<const Token> head_set, const EvalOptions& options);

}  // namespace rqsid
