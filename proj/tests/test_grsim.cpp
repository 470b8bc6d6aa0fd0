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
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "rqsid/error.hpp"
#include "rqsid/grsim.hpp"

using namespace rqsid;

namespace {

QuantizerConfig cfg(std::uint32_t L, std::uint32_t M) {
  QuantizerConfig c;
  c.num_layers = L;
  c.codebook_size = M;
  c.dim = 1;
  return c;
}

SemanticId sid(std::vector<Token> t) { return SemanticId{std::move(t)}; }

// Longest observed suffix found by scanning the raw streams.
double model_oracle(const std::vector<std::vector<FlatToken>>& streams, std::uint32_t order,
                    double alpha, std::uint32_t vocab, const std::vector<FlatToken>& ctx,
                    FlatToken next) {
  for (std::size_t len = std::min<std::size_t>(order, ctx.size()); len >= 1; --len) {
    const std::vector<FlatToken> suffix(ctx.end() - static_cast<std::ptrdiff_t>(len), ctx.end());
    double total = 0.0, hits = 0.0;
    for (const auto& s : streams) {
      for (std::size_t i = len; i < s.size(); ++i) {
        if (!std::equal(suffix.begin(), suffix.end(), s.begin() + static_cast<std::ptrdiff_t>(i - len)))
          continue;
        total += 1.0;
        if (s[i] == next) hits += 1.0;
      }
    }
    if (total > 0.0) return (hits + alpha) / (total + alpha * vocab);
  }
  return 1.0 / vocab;
}

// Every sequence the decoder may emit, scored and ranked without pruning.
std::vector<Hypothesis> beam_oracle(const SequenceModel& model, const std::vector<FlatToken>& context,
                                    std::uint32_t max_len, std::uint32_t keep,
                                    const QuantizerConfig& config) {
  std::vector<Hypothesis> done;
  std::vector<Hypothesis> frontier{{{}, 0.0}};
  for (std::uint32_t step = 1; step <= max_len; ++step) {
    std::vector<Hypothesis> next;
    for (const auto& h : frontier) {
      for (FlatToken t = 0; t < config.vocab_size(); ++t) {
        std::vector<FlatToken> full = context;
        full.insert(full.end(), h.tokens.begin(), h.tokens.end());
        Hypothesis n{h.tokens, h.log_prob + std::log(model.probability(full, t))};
        n.tokens.push_back(t);
        if (is_last_layer_token(t, config) || step == max_len) {
          done.push_back(std::move(n));
        } else {
          next.push_back(std::move(n));
        }
      }
    }
    frontier = std::move(next);
  }
  std::sort(done.begin(), done.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.tokens < b.tokens;
  });
  if (done.size() > keep) done.resize(keep);
  return done;
}

// Two items over L = 2, M = 2: A = [0, 2] and B = [1, 3] in flat form.
struct Tiny {
  QuantizerConfig config = cfg(2, 2);
  std::vector<std::string> ids{"A", "B"};
  std::vector<SemanticId> sids{sid({0, 0}), sid({1, 1})};
  GrCatalog catalog = GrCatalog::from_sids(config, ids, sids);
  CatalogTrie trie = build_trie(catalog);
};

}  // namespace

TEST_CASE("trie lookups") {
  const auto c = cfg(3, 4);
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  const std::vector<SemanticId> sids{sid({0, 1, 2}), sid({0, 1, 3}), sid({0, 2, 2}),
                                     sid({0, 1, 2})};
  const auto trie = build_trie(ids, sids, c);
  CHECK(trie.num_sequences() == 3);
  const std::vector<FlatToken> full{0, 5, 10};
  CHECK(trie.contains(full));
  CHECK_FALSE(trie.contains(std::vector<FlatToken>{0, 5}));
  CHECK_FALSE(trie.contains(std::vector<FlatToken>{1, 5, 10}));
  REQUIRE(trie.items(full));
  CHECK(*trie.items(full) == std::vector<std::string>{"a", "d"});
  CHECK(trie.items(std::vector<FlatToken>{0}) == nullptr);
  CHECK(trie.valid_next_tokens(std::vector<FlatToken>{}) == std::vector<FlatToken>{0});
  CHECK(trie.valid_next_tokens(std::vector<FlatToken>{0}) == std::vector<FlatToken>{5, 6});
  CHECK(trie.valid_next_tokens(std::vector<FlatToken>{0, 5}) == std::vector<FlatToken>{10, 11});
  // Terminal: a path with no children. Missing: not a path at all.
  const auto terminal = trie.valid_next_tokens(full);
  REQUIRE(terminal);
  CHECK(terminal->empty());
  CHECK_FALSE(trie.valid_next_tokens(std::vector<FlatToken>{3}));

  SUBCASE("variable-length entries") {
    const std::vector<VarLenSemanticId> v{VarLenSemanticId{{{1, 0}, {3, 2}}}, to_varlen(sids[1])};
    const auto t2 = build_trie(std::vector<std::string>{"x", "y"}, v, c);
    CHECK(t2.contains(std::vector<FlatToken>{0, 10}));
    CHECK(t2.valid_next_tokens(std::vector<FlatToken>{0}) == std::vector<FlatToken>{5, 10});
  }
  CHECK_THROWS_AS(build_trie(std::vector<std::string>{"a"}, sids, c), ConsistencyError);
  CHECK_THROWS_AS(build_trie(std::vector<std::string>{}, std::vector<SemanticId>{}, c), DataError);
}

TEST_CASE("catalog from SIDs with a head set") {
  const auto c = cfg(3, 4);
  const std::vector<std::string> ids{"a", "b"};
  const std::vector<SemanticId> sids{sid({0, 1, 2}), sid({1, 2, 3})};
  const std::vector<Token> head{1};
  const auto cat = GrCatalog::from_sids(c, ids, sids, head);
  CHECK(cat.tokens(0) == std::vector<FlatToken>{0, 10});
  CHECK(cat.tokens(1) == std::vector<FlatToken>{1, 6, 11});
  CHECK(cat.layer2_token(0) == 1);
  CHECK(cat.layer2_token(1) == 2);
  CHECK(cat.index("b") == 1);
  CHECK(cat.contains_item("a"));
  CHECK_THROWS_AS(cat.index("zz"), DataError);
  CHECK_THROWS_AS(GrCatalog::from_sids(c, std::vector<std::string>{"a", "a"}, sids), DataError);
}

TEST_CASE("sequence model example") {
  SequenceModel m(1, 1.0, 2);
  m.observe(std::vector<FlatToken>{0, 1, 0, 1, 0, 1});
  // After token 0 the stream shows 1 three times: (3 + 1) / (3 + 2).
  CHECK(m.probability(std::vector<FlatToken>{0}, 1) == doctest::Approx(0.8));
  // P(B | A) = 0.75 with counts {B: 2} and alpha 1 over V = 2.
  SequenceModel ab(1, 1.0, 2);
  ab.observe(std::vector<FlatToken>{0, 1});
  ab.observe(std::vector<FlatToken>{0, 1});
  CHECK(ab.probability(std::vector<FlatToken>{0}, 1) == doctest::Approx(0.75));
  CHECK(ab.probability(std::vector<FlatToken>{0}, 0) == doctest::Approx(0.25));
  // Unseen contexts are uniform.
  CHECK(ab.probability(std::vector<FlatToken>{1}, 0) == doctest::Approx(0.5));
  CHECK(ab.probability(std::vector<FlatToken>{}, 1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(ab.probability(std::vector<FlatToken>{0}, 2), RangeError);
  CHECK_THROWS_AS(SequenceModel(0, 1.0, 2), ConfigError);
  CHECK_THROWS_AS(SequenceModel(1, 0.0, 2), ConfigError);
  CHECK_THROWS_AS(SequenceModel(1, 1.0, 0), ConfigError);
}

TEST_CASE("sequence model matches a scanning oracle and normalizes") {
  RandomSource rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const std::uint32_t vocab = 2 + static_cast<std::uint32_t>(rng.below(5));
    const std::uint32_t order = 1 + static_cast<std::uint32_t>(rng.below(3));
    const double alpha = 0.05 + rng.uniform01();
    SequenceModel m(order, alpha, vocab);
    std::vector<std::vector<FlatToken>> streams(1 + rng.below(5));
    for (auto& s : streams) {
      s.resize(1 + rng.below(12));
      for (auto& t : s) t = static_cast<FlatToken>(rng.below(vocab));
      m.observe(s);
    }
    for (int q = 0; q < 20; ++q) {
      std::vector<FlatToken> ctx(rng.below(5));
      for (auto& t : ctx) t = static_cast<FlatToken>(rng.below(vocab));
      double sum = 0.0;
      for (FlatToken t = 0; t < vocab; ++t) {
        const double p = m.probability(ctx, t);
        CHECK(p == doctest::Approx(model_oracle(streams, order, alpha, vocab, ctx, t)).epsilon(1e-12));
        sum += p;
      }
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("beam search equals exhaustive ranking when nothing is pruned") {
  RandomSource rng(31);
  for (int trial = 0; trial < 60; ++trial) {
    const std::uint32_t L = 1 + static_cast<std::uint32_t>(rng.below(3));
    const std::uint32_t M = 1 + static_cast<std::uint32_t>(rng.below(4 / L + 1));
    const auto c = cfg(L, M);
    const std::uint32_t V = c.vocab_size();
    if (V > 4) continue;
    SequenceModel m(1 + static_cast<std::uint32_t>(rng.below(2)), 0.1, V);
    for (int s = 0; s < 4; ++s) {
      std::vector<FlatToken> stream(2 + rng.below(6));
      for (auto& t : stream) t = static_cast<FlatToken>(rng.below(V));
      m.observe(stream);
    }
    const std::uint32_t max_len = 1 + static_cast<std::uint32_t>(rng.below(3));
    std::uint32_t B = 1;
    for (std::uint32_t i = 0; i < max_len; ++i) B *= V;
    std::vector<FlatToken> ctx(rng.below(3));
    for (auto& t : ctx) t = static_cast<FlatToken>(rng.below(V));
    BeamOptions opt;
    opt.beam_width = B;
    opt.max_len = max_len;
    const auto got = beam_search(m, ctx, opt, c);
    const auto want = beam_oracle(m, ctx, max_len, B, c);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].tokens == want[i].tokens);
      CHECK(got[i].log_prob == doctest::Approx(want[i].log_prob).epsilon(1e-12));
    }
  }
}

TEST_CASE("trie-constrained beams only emit catalog SIDs") {
  const auto c = cfg(3, 3);
  const std::vector<std::string> ids{"a", "b", "c"};
  const std::vector<SemanticId> sids{sid({0, 1, 2}), sid({2, 2, 0}), sid({0, 0, 0})};
  const auto trie = build_trie(ids, sids, c);
  SequenceModel m(2, 0.5, c.vocab_size());
  m.observe(std::vector<FlatToken>{1, 4, 8, 2, 5, 6});
  BeamOptions opt;
  opt.beam_width = 5;
  opt.trie = &trie;
  const auto hyps = beam_search(m, std::vector<FlatToken>{1}, opt, c);
  CHECK(hyps.size() == 3);
  for (const auto& h : hyps) CHECK(trie.contains(h.tokens));
  opt.fixed_prefix = {2};
  const auto fixed = beam_search(m, std::vector<FlatToken>{}, opt, c);
  REQUIRE(fixed.size() == 1);
  CHECK(fixed[0].tokens == std::vector<FlatToken>{2, 5, 6});
  opt.fixed_prefix = {1};
  CHECK(beam_search(m, std::vector<FlatToken>{}, opt, c).empty());
  opt.beam_width = 0;
  CHECK_THROWS_AS(beam_search(m, std::vector<FlatToken>{}, opt, c), ConfigError);
  SequenceModel other(1, 1.0, 4);
  opt.beam_width = 2;
  CHECK_THROWS_AS(beam_search(other, std::vector<FlatToken>{}, opt, c), ConsistencyError);
}

TEST_CASE("evaluation on a hand-checked catalog") {
  Tiny t;
  // Train streams [0, 2, 0, 2]: after 2 comes 0, after 0 comes 2.
  std::vector<Interaction> train{{{"A"}, "A", Split::kTrain}};
  const auto model = train_seq_model(train, t.catalog, 1, 0.01);
  std::vector<Interaction> test{{{"A"}, "A", Split::kTest}, {{"A"}, "B", Split::kTest}};
  const std::vector<Token> head{0};

  SUBCASE("free decoding") {
    // Beams: [0, 2] (item A) then [0, 0], which is no catalog SID.
    EvalOptions opt;
    opt.beam_width = 2;
    opt.k_list = {1, 2};
    const auto r = evaluate(model, test, t.catalog, t.trie, head, opt);
    CHECK(r.overall.records == 2);
    CHECK(r.head.records == 1);
    CHECK(r.tail.records == 1);
    CHECK(r.overall.recall == std::vector<double>{0.5, 0.5});
    CHECK(r.head.recall == std::vector<double>{1.0, 1.0});
    CHECK(r.tail.recall == std::vector<double>{0.0, 0.0});
    CHECK(r.overall.invalid_ratio == std::vector<double>{0.0, 0.5});
  }
  SUBCASE("trie decoding") {
    EvalOptions opt;
    opt.beam_width = 2;
    opt.k_list = {1, 2};
    opt.trie_mode = true;
    const auto r = evaluate(model, test, t.catalog, t.trie, head, opt);
    CHECK(r.tail.recall == std::vector<double>{0.0, 1.0});
    CHECK(r.overall.invalid_ratio == std::vector<double>{0.0, 0.0});
  }
  SUBCASE("given first token") {
    EvalOptions opt;
    opt.beam_width = 2;
    opt.k_list = {1};
    opt.given_first_token = true;
    const auto r = evaluate(model, test, t.catalog, t.trie, head, opt);
    // B = [1, 3]: after 1 the model is uniform, so [1, 0] wins the tie.
    CHECK(r.overall.recall == std::vector<double>{0.5});
    opt.trie_mode = true;
    CHECK(evaluate(model, test, t.catalog, t.trie, head, opt).overall.recall ==
          std::vector<double>{1.0});
  }
  SUBCASE("errors") {
    EvalOptions opt;
    opt.beam_width = 2;
    opt.k_list = {3};
    CHECK_THROWS_AS(evaluate(model, test, t.catalog, t.trie, head, opt), ConfigError);
    opt.k_list = {0};
    CHECK_THROWS_AS(evaluate(model, test, t.catalog, t.trie, head, opt), ConfigError);
    opt.k_list = {1};
    const std::vector<Token> bad{5};
    CHECK_THROWS_AS(evaluate(model, test, t.catalog, t.trie, bad, opt), RangeError);
    std::vector<Interaction> unknown{{{"A"}, "Z", Split::kTest}};
    CHECK_THROWS_AS(evaluate(model, unknown, t.catalog, t.trie, head, opt), DataError);
    CHECK_THROWS_AS(train_seq_model(std::vector<Interaction>{}, t.catalog, 1, 0.1), DataError);
  }
}

TEST_CASE("interaction generation") {
  std::vector<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.push_back("it" + std::to_string(i));
  InteractionGenConfig g;
  g.num_train = 300;
  g.num_test = 40;
  g.history_length = 4;
  const auto a = gen_interactions(ids, g, RandomSource(1));
  const auto b = gen_interactions(ids, g, RandomSource(1));
  REQUIRE(a.records.size() == 340);
  CHECK(a.select(Split::kTrain).size() == 300);
  CHECK(a.select(Split::kTest).size() == 40);
  const std::set<std::string> known(ids.begin(), ids.end());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].history.size() == 4);
    CHECK(known.count(a.records[i].target) == 1);
    CHECK(a.records[i].history == b.records[i].history);
    CHECK(a.records[i].target == b.records[i].target);
  }
  const auto c = gen_interactions(ids, g, RandomSource(2));
  bool differs = false;
  for (std::size_t i = 0; i < c.records.size(); ++i) differs |= c.records[i].target != a.records[i].target;
  CHECK(differs);

  SUBCASE("affinity decides the most popular item") {
    std::vector<double> affinity(50, 0.0);
    affinity[17] = 10.0;
    g.num_train = 3000;
    g.follow_prob = 0.0;
    const auto d = gen_interactions(ids, g, RandomSource(3), affinity);
    std::map<std::string, int> freq;
    for (const auto& r : d.records) ++freq[r.target];
    const auto top = std::max_element(freq.begin(), freq.end(),
                                      [](auto& x, auto& y) { return x.second < y.second; });
    CHECK(top->first == "it17");
    affinity.pop_back();
    CHECK_THROWS_AS(gen_interactions(ids, g, RandomSource(3), affinity), ConsistencyError);
    std::vector<double> nan(50, std::nan(""));
    CHECK_THROWS_AS(gen_interactions(ids, g, RandomSource(3), nan), DataError);
  }
  SUBCASE("config validation") {
    InteractionGenConfig bad = g;
    bad.follow_prob = 1.5;
    CHECK_THROWS_AS(gen_interactions(ids, bad, RandomSource(1)), ConfigError);
    bad = g;
    bad.history_length = 0;
    CHECK_THROWS_AS(gen_interactions(ids, bad, RandomSource(1)), ConfigError);
    bad = g;
    bad.num_train = 0;
    CHECK_THROWS_AS(gen_interactions(ids, bad, RandomSource(1)), ConfigError);
    CHECK_THROWS_AS(gen_interactions(std::vector<std::string>{}, g, RandomSource(1)), DataError);
  }
}

TEST_CASE("layer-1 density counts items sharing the first token") {
  const auto c = cfg(2, 3);
  const std::vector<SemanticId> sids{sid({0, 1}), sid({0, 2}), sid({2, 0}), sid({0, 0})};
  CHECK(layer1_density(sids, c) == std::vector<double>{3, 3, 1, 3});
}

TEST_CASE("evaluation is independent of the thread count") {
  const auto c = cfg(3, 4);
  std::vector<std::string> ids;
  std::vector<SemanticId> sids;
  RandomSource rng(4);
  for (int i = 0; i < 40; ++i) {
    ids.push_back("x" + std::to_string(i));
    sids.push_back(sid({static_cast<Token>(rng.below(4)), static_cast<Token>(rng.below(4)),
                        static_cast<Token>(rng.below(4))}));
  }
  const auto catalog = GrCatalog::from_sids(c, ids, sids);
  const auto trie = build_trie(catalog);
  InteractionGenConfig g;
  g.num_train = 500;
  g.num_test = 100;
  const auto data = gen_interactions(ids, g, RandomSource(5));
  const auto model = train_seq_model(data.select(Split::kTrain), catalog, 3, 0.1);
  const auto test = data.select(Split::kTest);
  const std::vector<Token> head{0, 1};
  EvalOptions opt;
  opt.beam_width = 10;
  opt.k_list = {1, 5, 10};
  const auto one = evaluate(model, test, catalog, trie, head, opt);
  opt.threads = 4;
  const auto four = evaluate(model, test, catalog, trie, head, opt);
  CHECK(one.overall.recall == four.overall.recall);
  CHECK(one.overall.invalid_ratio == four.overall.invalid_ratio);
  CHECK(one.head.records + one.tail.records == one.overall.records);
  for (std::size_t i = 1; i < 3; ++i) CHECK(one.overall.recall[i] >= one.overall.recall[i - 1]);
}
