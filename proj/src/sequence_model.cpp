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

#include "rqsid/error.hpp"
#include "rqsid/grsim.hpp"

namespace rqsid {

std::size_t SequenceModel::KeyHash::operator()(const std::vector<FlatToken>& key) const {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ key.size();
  for (FlatToken t : key) {
    h ^= t;
    h *= 0x100000001b3ULL;
    h ^= h >> 29;
  }
  return static_cast<std::size_t>(h);
}

SequenceModel::SequenceModel(std::uint32_t order, double alpha, std::uint32_t vocab_size)
    : order_(order), alpha_(alpha), vocab_size_(vocab_size) {
  if (order == 0) throw ConfigError("sequence model order must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("smoothing alpha must be > 0");
  if (vocab_size == 0) throw ConfigError("vocabulary must be nonempty");
}

void SequenceModel::observe(std::span<const FlatToken> stream) {
  std::vector<FlatToken> key;
  for (std::size_t i = 1; i < stream.size(); ++i) {
    const FlatToken next = stream[i];
    if (next >= vocab_size_) throw RangeError("token outside the model vocabulary");
    const std::size_t max_len = std::min<std::size_t>(order_, i);
    for (std::size_t len = 1; len <= max_len; ++len) {
      key.assign(stream.begin() + static_cast<std::ptrdiff_t>(i - len),
                 stream.begin() + static_cast<std::ptrdiff_t>(i));
      auto& counts = table_[key];
      ++counts.total;
      ++counts.next[next];
    }
  }
}

SequenceModel::Distribution SequenceModel::distribution(std::span<const FlatToken> context) const {
  Distribution d;
  d.alpha_ = alpha_;
  d.denominator_ = alpha_ * vocab_size_;
  std::vector<FlatToken> key;
  for (std::size_t len = std::min<std::size_t>(order_, context.size()); len >= 1; --len) {
    key.assign(context.end() - static_cast<std::ptrdiff_t>(len), context.end());
    auto it = table_.find(key);
    if (it != table_.end()) {
      d.next_ = &it->second.next;
      d.denominator_ = static_cast<double>(it->second.total) + alpha_ * vocab_size_;
      break;
    }
  }
  return d;
}

double SequenceModel::Distribution::probability(FlatToken next) const {
  double count = 0.0;
  if (next_ != nullptr) {
    auto it = next_->find(next);
    if (it != next_->end()) count = static_cast<double>(it->second);
  }
  return (count + alpha_) / denominator_;
}

double SequenceModel::Distribution::log_probability(FlatToken next) const {
  return std::log(probability(next));
}

double SequenceModel::probability(std::span<const FlatToken> context, FlatToken next) const {
  if (next >= vocab_size_) throw RangeError("token outside the model vocabulary");
  return distribution(context).probability(next);
}

double SequenceModel::log_probability(std::span<const FlatToken> context, FlatToken next) const {
  return std::log(probability(context, next));
}

SequenceModel train_seq_model(std::span<const Interaction> records, const GrCatalog& catalog,
                              std::uint32_t order, double alpha) {
  if (records.empty()) throw DataError("cannot train a sequence model on an empty dataset");
  SequenceModel model(order, alpha, catalog.config().vocab_size());
  std::vector<FlatToken> stream;
  for (const auto& rec : records) {
    if (rec.history.empty()) throw DataError("interaction with an empty history");
    stream.clear();
    for (const auto& item : rec.history) {
      const auto& t = catalog.tokens(catalog.index(item));
      stream.insert(stream.end(), t.begin(), t.end());
    }
    const auto& target = catalog.tokens(catalog.index(rec.target));
    stream.insert(stream.end(), target.begin(), target.end());
    model.observe(stream);
  }
  return model;
}

}  // namespace rqsid
