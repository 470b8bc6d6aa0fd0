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
#include <numeric>

#include "rqsid/error.hpp"
#include "rqsid/grsim.hpp"

namespace rqsid {

namespace {

class PopularitySampler {
 public:
  explicit PopularitySampler(std::vector<double> weights) : cumulative_(std::move(weights)) {
    std::partial_sum(cumulative_.begin(), cumulative_.end(), cumulative_.begin());
  }

  std::size_t sample(RandomSource& rng) const {
    const double u = rng.uniform01() * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()),
                                 cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace

void InteractionGenConfig::validate() const {
  if (num_train == 0) throw ConfigError("num_train must be >= 1");
  if (history_length == 0) throw ConfigError("history_length must be >= 1");
  if (successors_per_item == 0) throw ConfigError("successors_per_item must be >= 1");
  if (!(follow_prob >= 0.0 && follow_prob <= 1.0))
    throw ConfigError("follow_prob must be in [0, 1]");
  if (!(popularity_exponent >= 0.0)) throw ConfigError("popularity_exponent must be >= 0");
}

std::vector<Interaction> InteractionDataset::select(Split split) const {
  std::vector<Interaction> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

std::vector<double> layer1_density(std::span<const SemanticId> sids,
                                   const QuantizerConfig& config) {
  std::vector<double> per_token(config.codebook_size, 0.0);
  for (const auto& sid : sids) {
    validate(sid, config);
    per_token[sid.tokens[0]] += 1.0;
  }
  std::vector<double> out;
  out.reserve(sids.size());
  for (const auto& sid : sids) out.push_back(per_token[sid.tokens[0]]);
  return out;
}

InteractionDataset gen_interactions(std::span<const std::string> item_ids,
                                    const InteractionGenConfig& config, const RandomSource& rng,
                                    std::span<const double> item_affinity) {
  config.validate();
  const std::size_t n = item_ids.size();
  if (n == 0) throw DataError("cannot generate interactions over an empty catalog");
  if (!item_affinity.empty() && item_affinity.size() != n)
    throw ConsistencyError("item affinity length differs from the catalog");

  // Ranks come from a seeded shuffle, or from descending affinity with the
  // shuffle breaking ties.
  std::vector<std::size_t> ranking(n);
  std::iota(ranking.begin(), ranking.end(), std::size_t{0});
  RandomSource rank_rng = rng.split(0);
  for (std::size_t i = n; i > 1; --i) std::swap(ranking[i - 1], ranking[rank_rng.below(i)]);
  if (!item_affinity.empty()) {
    for (double a : item_affinity) {
      if (!std::isfinite(a)) throw DataError("item affinity must be finite");
    }
    std::stable_sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) {
      return item_affinity[a] > item_affinity[b];
    });
  }
  std::vector<double> weights(n);
  for (std::size_t r = 0; r < n; ++r)
    weights[ranking[r]] = std::pow(static_cast<double>(r + 1), -config.popularity_exponent);
  const PopularitySampler popularity(std::move(weights));

  std::vector<std::size_t> successors(n * config.successors_per_item);
  RandomSource succ_rng = rng.split(1);
  for (auto& s : successors) s = popularity.sample(succ_rng);

  auto walk = [&](RandomSource& walk_rng, Split split) {
    Interaction rec;
    rec.split = split;
    std::size_t current = popularity.sample(walk_rng);
    rec.history.push_back(item_ids[current]);
    for (std::uint32_t step = 0; step < config.history_length; ++step) {
      if (walk_rng.uniform01() < config.follow_prob) {
        current = successors[current * config.successors_per_item +
                             walk_rng.below(config.successors_per_item)];
      } else {
        current = popularity.sample(walk_rng);
      }
      rec.history.push_back(item_ids[current]);
    }
    rec.target = std::move(rec.history.back());
    rec.history.pop_back();
    return rec;
  };

  InteractionDataset out;
  out.records.reserve(config.num_train + config.num_test);
  RandomSource train_rng = rng.split(2);
  for (std::size_t i = 0; i < config.num_train; ++i) out.records.push_back(walk(train_rng, Split::kTrain));
  RandomSource test_rng = rng.split(3);
  for (std::size_t i = 0; i < config.num_test; ++i) out.records.push_back(walk(test_rng, Split::kTest));
  return out;
}

}  // namespace rqsid
