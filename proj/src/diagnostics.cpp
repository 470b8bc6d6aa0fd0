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

#include "rqsid/diagnostics.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <numeric>

#include "rqsid/error.hpp"

namespace rqsid {

namespace {

void check_layer(std::uint32_t layer, std::uint32_t num_layers) {
  if (layer < 1 || layer > num_layers) throw RangeError("layer out of range");
}

void require_nonempty(const LayerHistogram& h) {
  if (h.counts.empty() || h.total() == 0)
    throw UndefinedStatError("statistic undefined for an empty histogram");
}

// Tokens ordered by count descending, then index ascending.
std::vector<Token> frequency_order(const LayerHistogram& h) {
  std::vector<Token> order(h.counts.size());
  std::iota(order.begin(), order.end(), Token{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Token a, Token b) { return h.counts[a] > h.counts[b]; });
  return order;
}

std::uint64_t pack(Token a, Token b) { return (std::uint64_t{a} << 32) | b; }

}  // namespace

std::uint64_t LayerHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

LayerHistogram token_histogram(std::span<const SemanticId> sids, std::uint32_t layer,
                               std::uint32_t codebook_size) {
  if (layer < 1) throw RangeError("layer out of range");
  LayerHistogram h{layer, std::vector<std::uint64_t>(codebook_size, 0)};
  for (const auto& sid : sids) {
    if (layer > sid.tokens.size()) throw RangeError("layer out of range");
    const Token t = sid.tokens[layer - 1];
    if (t >= codebook_size) throw RangeError("SID token out of range");
    ++h.counts[t];
  }
  return h;
}

double entropy_bits(const LayerHistogram& h) {
  require_nonempty(h);
  const double total = static_cast<double>(h.total());
  double e = 0.0;
  for (std::uint64_t c : h.counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    e -= p * std::log2(p);
  }
  return std::max(0.0, e);
}

double gini(const LayerHistogram& h) {
  require_nonempty(h);
  std::vector<std::uint64_t> sorted = h.counts;
  std::sort(sorted.begin(), sorted.end());
  // sum_i sum_j |c_i - c_j| = 2 sum_i (2i - M + 1) c_(i) over ascending counts.
  const auto m = static_cast<__int128>(sorted.size());
  __int128 weighted = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    weighted += (2 * static_cast<__int128>(i) - m + 1) * static_cast<__int128>(sorted[i]);
  }
  const __int128 pairwise = 2 * weighted;
  const __int128 denom = 2 * m * static_cast<__int128>(h.total());
  return static_cast<double>(static_cast<long double>(pairwise) / static_cast<long double>(denom));
}

double stddev(const LayerHistogram& h) {
  if (h.counts.empty()) throw UndefinedStatError("stddev needs at least one slot");
  const double m = static_cast<double>(h.counts.size());
  const double mean = static_cast<double>(h.total()) / m;
  double var = 0.0;
  for (std::uint64_t c : h.counts) {
    const double d = static_cast<double>(c) - mean;
    var += d * d;
  }
  return std::sqrt(var / m);
}

LayerStats layer_stats(const LayerHistogram& h) {
  LayerStats s;
  s.entropy_bits = entropy_bits(h);
  s.gini = gini(h);
  s.stddev = stddev(h);
  s.distinct_tokens = static_cast<std::uint32_t>(
      std::count_if(h.counts.begin(), h.counts.end(), [](std::uint64_t c) { return c > 0; }));
  s.utilization = static_cast<double>(s.distinct_tokens) / static_cast<double>(h.counts.size());
  return s;
}

std::uint64_t distinct_count(std::span<const SemanticId> sids) {
  std::vector<const SemanticId*> ptrs;
  ptrs.reserve(sids.size());
  for (const auto& s : sids) ptrs.push_back(&s);
  std::sort(ptrs.begin(), ptrs.end(), [](auto* a, auto* b) { return *a < *b; });
  auto last = std::unique(ptrs.begin(), ptrs.end(), [](auto* a, auto* b) { return *a == *b; });
  return static_cast<std::uint64_t>(last - ptrs.begin());
}

double path_sparsity(std::span<const SemanticId> sids, const QuantizerConfig& config) {
  if (sids.empty()) throw UndefinedStatError("path sparsity needs at least one SID");
  for (const auto& s : sids) validate(s, config);
  using boost::multiprecision::cpp_int;
  using boost::multiprecision::cpp_rational;
  const cpp_int space = boost::multiprecision::pow(cpp_int(config.codebook_size), config.num_layers);
  return cpp_rational(cpp_int(distinct_count(sids)), space).convert_to<double>();
}

std::vector<TokenDegree> degree_profile(std::span<const SemanticId> sids, std::uint32_t layer,
                                        const QuantizerConfig& config) {
  check_layer(layer, config.num_layers);
  std::vector<TokenDegree> out(config.codebook_size);
  auto count_pairs = [&](std::uint32_t from_layer, bool to_fan_in) {
    std::vector<std::uint64_t> pairs;
    pairs.reserve(sids.size());
    for (const auto& s : sids) {
      validate(s, config);
      pairs.push_back(pack(s.tokens[from_layer - 1], s.tokens[from_layer]));
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    for (std::uint64_t p : pairs) {
      if (to_fan_in) {
        ++out[static_cast<Token>(p & 0xffffffffu)].fan_in;
      } else {
        ++out[static_cast<Token>(p >> 32)].fan_out;
      }
    }
  };
  if (layer > 1) count_pairs(layer - 1, true);
  if (layer < config.num_layers) count_pairs(layer, false);
  return out;
}

std::uint64_t edge_count(std::span<const SemanticId> sids, std::uint32_t layer) {
  std::vector<std::uint64_t> pairs;
  pairs.reserve(sids.size());
  for (const auto& s : sids) {
    if (layer < 1 || layer >= s.tokens.size()) throw RangeError("layer out of range");
    pairs.push_back(pack(s.tokens[layer - 1], s.tokens[layer]));
  }
  std::sort(pairs.begin(), pairs.end());
  return static_cast<std::uint64_t>(std::unique(pairs.begin(), pairs.end()) - pairs.begin());
}

std::vector<double> edge_density(std::span<const SemanticId> sids, const QuantizerConfig& config) {
  std::vector<double> out;
  const double space = static_cast<double>(config.codebook_size) * config.codebook_size;
  for (std::uint32_t l = 1; l < config.num_layers; ++l)
    out.push_back(static_cast<double>(edge_count(sids, l)) / space);
  return out;
}

HeadTailSplit head_tail_split(const LayerHistogram& h, const HeadSelector& selector) {
  const std::size_t m = h.counts.size();
  const std::vector<Token> order = frequency_order(h);
  std::size_t head_size = 0;
  if (const auto* top = std::get_if<TopK>(&selector)) {
    if (top->k > m) throw ConfigError("top-K selector exceeds the codebook size");
    head_size = top->k;
  } else {
    const double p = std::get<Mass>(selector).p;
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("mass selector needs 0 < p <= 1");
    require_nonempty(h);
    const double total = static_cast<double>(h.total());
    std::uint64_t cumulative = 0;
    while (head_size < m) {
      cumulative += h.counts[order[head_size]];
      ++head_size;
      if (static_cast<double>(cumulative) / total >= p) break;
    }
  }
  HeadTailSplit out;
  out.head.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(head_size));
  out.tail.assign(order.begin() + static_cast<std::ptrdiff_t>(head_size), order.end());
  std::sort(out.tail.begin(), out.tail.end());
  return out;
}

bool is_hourglass(std::span<const LayerStats> per_layer, std::uint32_t* pinch_layer) {
  const std::size_t num_layers = per_layer.size();
  if (pinch_layer) *pinch_layer = 0;
  if (num_layers < 3) return false;
  std::size_t pinch = 1;
  for (std::size_t l = 2; l + 1 < num_layers; ++l) {
    if (per_layer[l].entropy_bits < per_layer[pinch].entropy_bits) pinch = l;
  }
  if (pinch_layer) *pinch_layer = static_cast<std::uint32_t>(pinch + 1);
  for (std::size_t l = 1; l + 1 < num_layers; ++l) {
    bool extremal = true;
    for (std::size_t j = 0; j < num_layers && extremal; ++j) {
      if (j == l) continue;
      extremal = per_layer[l].entropy_bits < per_layer[j].entropy_bits &&
                 per_layer[l].gini > per_layer[j].gini;
    }
    if (extremal) return true;
  }
  return false;
}

HourglassReport hourglass_report(std::span<const SemanticId> sids, const QuantizerConfig& config,
                                 const HeadSelector& head_selector) {
  if (sids.empty()) throw UndefinedStatError("hourglass report needs at least one SID");
  for (const auto& s : sids) validate(s, config);
  HourglassReport r;
  r.num_items = sids.size();
  for (std::uint32_t l = 1; l <= config.num_layers; ++l) {
    r.histograms.push_back(token_histogram(sids, l, config.codebook_size));
    r.per_layer.push_back(layer_stats(r.histograms.back()));
  }
  r.distinct_sids = distinct_count(sids);
  r.path_sparsity = path_sparsity(sids, config);
  r.edge_density = edge_density(sids, config);
  r.hourglass_flag = is_hourglass(r.per_layer, &r.pinch_layer);
  const std::uint32_t head_layer = std::min<std::uint32_t>(2, config.num_layers);
  r.head_set = head_tail_split(r.histograms[head_layer - 1], head_selector).head;
  return r;
}

}  // namespace rqsid
