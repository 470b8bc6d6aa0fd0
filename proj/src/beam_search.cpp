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

#include <algorithm>

#include "rqsid/error.hpp"
#include "rqsid/grsim.hpp"
#include "rqsid/parallel.hpp"

namespace rqsid {

namespace {

bool better(const Hypothesis& a, const Hypothesis& b) {
  if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
  return a.tokens < b.tokens;
}

}  // namespace

std::vector<Hypothesis> beam_search(const SequenceModel& model, std::span<const FlatToken> context,
                                    const BeamOptions& options, const QuantizerConfig& config) {
  if (options.beam_width == 0) throw ConfigError("beam width must be >= 1");
  if (options.max_len == 0) throw ConfigError("max_len must be >= 1");
  if (model.vocab_size() != config.vocab_size())
    throw ConsistencyError("model vocabulary does not match the quantizer config");
  for (FlatToken t : options.fixed_prefix) flat_token_layer(t, config);
  if (options.trie && !options.trie->valid_next_tokens(options.fixed_prefix)) return {};

  const std::size_t keep = options.beam_width;
  const std::size_t window = model.order();
  std::vector<Hypothesis> active{{options.fixed_prefix, 0.0}};
  std::vector<Hypothesis> finished;
  if (!options.fixed_prefix.empty() && is_last_layer_token(options.fixed_prefix.back(), config))
    return active;

  std::vector<FlatToken> ctx;
  std::vector<FlatToken> all_tokens(config.vocab_size());
  for (FlatToken t = 0; t < all_tokens.size(); ++t) all_tokens[t] = t;
  std::vector<Hypothesis> candidates;

  for (std::uint32_t step = 1; step <= options.max_len && !active.empty(); ++step) {
    candidates.clear();
    for (const auto& beam : active) {
      // Only the last `order` tokens of context + beam matter to the model.
      ctx.clear();
      const std::size_t from_beam = std::min(window, beam.tokens.size());
      const std::size_t from_context = std::min(window - from_beam, context.size());
      ctx.insert(ctx.end(), context.end() - static_cast<std::ptrdiff_t>(from_context), context.end());
      ctx.insert(ctx.end(), beam.tokens.end() - static_cast<std::ptrdiff_t>(from_beam),
                 beam.tokens.end());
      const auto dist = model.distribution(ctx);

      std::optional<std::vector<FlatToken>> allowed;
      if (options.trie) allowed = options.trie->valid_next_tokens(beam.tokens);
      const std::vector<FlatToken>& expand = allowed ? *allowed : all_tokens;
      for (FlatToken t : expand) {
        Hypothesis h{beam.tokens, beam.log_prob + dist.log_probability(t)};
        h.tokens.push_back(t);
        candidates.push_back(std::move(h));
      }
    }
    if (candidates.size() > keep) {
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                        candidates.end(), better);
      candidates.resize(keep);
    } else {
      std::sort(candidates.begin(), candidates.end(), better);
    }
    active.clear();
    for (auto& c : candidates) {
      if (is_last_layer_token(c.tokens.back(), config) || step == options.max_len) {
        finished.push_back(std::move(c));
      } else {
        active.push_back(std::move(c));
      }
    }
  }
  std::sort(finished.begin(), finished.end(), better);
  if (finished.size() > keep) finished.resize(keep);
  return finished;
}

EvalReport evaluate(const SequenceModel& model, std::span<const Interaction> test,
                    const GrCatalog& catalog, const CatalogTrie& trie,
                    std::span<const Token> head_set, const EvalOptions& options) {
  if (options.beam_width == 0) throw ConfigError("beam width must be >= 1");
  if (options.k_list.empty()) throw ConfigError("k_list must be nonempty");
  for (std::uint32_t k : options.k_list) {
    if (k == 0 || k > options.beam_width) throw ConfigError("every k must be in [1, beam width]");
  }
  const QuantizerConfig& config = catalog.config();
  const std::size_t num_k = options.k_list.size();
  std::vector<bool> is_head(config.codebook_size, false);
  for (Token t : head_set) {
    if (t >= config.codebook_size) throw RangeError("head set token out of range");
    is_head[t] = true;
  }

  struct RecordResult {
    bool head = false;
    std::vector<std::uint8_t> hit;
    std::vector<std::uint32_t> emitted;
    std::vector<std::uint32_t> invalid;
  };
  std::vector<RecordResult> results(test.size());

  parallel_for_blocks(test.size(), 16, options.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<FlatToken> context;
    for (std::size_t r = begin; r < end; ++r) {
      const Interaction& rec = test[r];
      context.clear();
      for (const auto& item : rec.history) {
        const auto& t = catalog.tokens(catalog.index(item));
        context.insert(context.end(), t.begin(), t.end());
      }
      const std::size_t gold_index = catalog.index(rec.target);
      const auto& gold = catalog.tokens(gold_index);

      BeamOptions beam;
      beam.beam_width = options.beam_width;
      beam.max_len = config.num_layers;
      beam.trie = options.trie_mode ? &trie : nullptr;
      if (options.given_first_token) {
        beam.fixed_prefix = {gold.front()};
        beam.max_len = config.num_layers - 1;
      }
      const auto hyps = beam.max_len == 0 ? std::vector<Hypothesis>{{beam.fixed_prefix, 0.0}}
                                          : beam_search(model, context, beam, config);

      RecordResult& out = results[r];
      out.head = is_head[catalog.layer2_token(gold_index)];
      out.hit.assign(num_k, 0);
      out.emitted.assign(num_k, 0);
      out.invalid.assign(num_k, 0);
      for (std::size_t ki = 0; ki < num_k; ++ki) {
        const std::size_t k = std::min<std::size_t>(options.k_list[ki], hyps.size());
        for (std::size_t i = 0; i < k; ++i) {
          if (hyps[i].tokens == gold) out.hit[ki] = 1;
          if (!trie.contains(hyps[i].tokens)) ++out.invalid[ki];
        }
        out.emitted[ki] = static_cast<std::uint32_t>(k);
      }
    }
  });

  EvalReport report;
  report.k_list = options.k_list;
  report.beam_width = options.beam_width;
  report.trie_mode = options.trie_mode;
  report.given_first_token = options.given_first_token;
  report.head_set.assign(head_set.begin(), head_set.end());
  std::sort(report.head_set.begin(), report.head_set.end());

  struct Accumulator {
    std::size_t records = 0;
    std::vector<double> hits, emitted, invalid;
  };
  auto make = [&] { return Accumulator{0, std::vector<double>(num_k), std::vector<double>(num_k),
                                       std::vector<double>(num_k)}; };
  Accumulator all = make(), head = make(), tail = make();
  for (const auto& res : results) {
    for (Accumulator* acc : {&all, res.head ? &head : &tail}) {
      ++acc->records;
      for (std::size_t ki = 0; ki < num_k; ++ki) {
        acc->hits[ki] += res.hit[ki];
        acc->emitted[ki] += res.emitted[ki];
        acc->invalid[ki] += res.invalid[ki];
      }
    }
  }
  auto finish = [&](const Accumulator& acc) {
    PartitionMetrics m;
    m.records = acc.records;
    m.recall.assign(num_k, 0.0);
    m.invalid_ratio.assign(num_k, 0.0);
    for (std::size_t ki = 0; ki < num_k; ++ki) {
      if (acc.records > 0) m.recall[ki] = acc.hits[ki] / static_cast<double>(acc.records);
      if (acc.emitted[ki] > 0) m.invalid_ratio[ki] = acc.invalid[ki] / acc.emitted[ki];
    }
    return m;
  };
  report.overall = finish(all);
  report.head = finish(head);
  report.tail = finish(tail);
  return report;
}

}  // namespace rqsid
