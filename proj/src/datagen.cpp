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

#include "rqsid/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "rqsid/error.hpp"

namespace rqsid {

std::vector<std::string> ClusterSpec::validate() const {
  if (num_clusters == 0) throw ConfigError("num_clusters must be >= 1");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("radius must be positive");
  if (!(center_scale > 0.0) || !std::isfinite(center_scale))
    throw ConfigError("center_scale must be positive");
  if (size_law == SizeLaw::kZipf && !(zipf_exponent > 0.0))
    throw ConfigError("zipf exponent must be positive");
  if (!(outlier_fraction >= 0.0 && outlier_fraction <= 1.0))
    throw ConfigError("outlier_fraction must be in [0, 1]");
  if (outlier_fraction > 0.0 && satellites_per_cluster == 0)
    throw ConfigError("outliers need at least one satellite per cluster");
  if (!(satellite_offset >= 0.0) || !std::isfinite(satellite_offset))
    throw ConfigError("satellite_offset must be non-negative");
  std::vector<std::string> warnings;
  if (radius >= center_scale)
    warnings.emplace_back("radius >= center_scale: clusters will overlap heavily");
  return warnings;
}

std::string item_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "item%07zu", index);
  return buf;
}

EmbeddingCollection gen_uniform(std::size_t n, std::size_t d, const RandomSource& rng) {
  if (n == 0) throw ConfigError("gen_uniform needs n >= 1");
  if (d == 0) throw ConfigError("gen_uniform needs d >= 1");
  RandomSource stream = rng.split(0);
  EmbeddingCollection out(d);
  out.reserve(n);
  std::vector<double> v(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& x : v) x = stream.uniform(-1.0, 1.0);
    out.add(item_name(i), v);
  }
  return out;
}

std::vector<std::size_t> cluster_sizes(std::size_t n, const ClusterSpec& spec) {
  const std::size_t k = spec.num_clusters;
  std::vector<double> weights(k, 1.0);
  if (spec.size_law == SizeLaw::kZipf) {
    for (std::size_t c = 0; c < k; ++c)
      weights[c] = std::pow(static_cast<double>(c + 1), -spec.zipf_exponent);
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> sizes(k);
  std::vector<double> remainders(k);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < k; ++c) {
    const double quota = static_cast<double>(n) * weights[c] / total;
    sizes[c] = static_cast<std::size_t>(std::floor(quota));
    remainders[c] = quota - static_cast<double>(sizes[c]);
    assigned += sizes[c];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++sizes[order[i % k]];
  return sizes;
}

ClusteredData gen_clustered(std::size_t n, std::size_t d, const ClusterSpec& spec,
                            const RandomSource& rng) {
  if (n == 0) throw ConfigError("gen_clustered needs n >= 1");
  if (d == 0) throw ConfigError("gen_clustered needs d >= 1");
  ClusteredData out;
  out.warnings = spec.validate();
  if (spec.num_clusters > n) throw ConfigError("num_clusters exceeds n");

  out.cluster_sizes = cluster_sizes(n, spec);
  std::vector<double> centers(std::size_t{spec.num_clusters} * d);
  RandomSource center_rng = rng.split(0);
  for (double& c : centers) c = center_rng.uniform(-spec.center_scale, spec.center_scale);

  out.data = EmbeddingCollection(d);
  out.data.reserve(n);
  out.labels.reserve(n);
  std::vector<double> v(d);
  std::vector<double> satellites(std::size_t{spec.satellites_per_cluster} * d);
  const double offset = spec.satellite_offset * spec.center_scale;
  std::size_t index = 0;
  for (std::uint32_t c = 0; c < spec.num_clusters; ++c) {
    RandomSource cluster_rng = rng.split(std::uint64_t{c} + 1);
    const double* center = centers.data() + std::size_t{c} * d;
    for (double& s : satellites) s = cluster_rng.uniform(-offset, offset);
    for (std::size_t i = 0; i < out.cluster_sizes[c]; ++i) {
      const double* shift = nullptr;
      if (spec.outlier_fraction > 0.0 && cluster_rng.uniform01() < spec.outlier_fraction) {
        shift = satellites.data() + cluster_rng.below(spec.satellites_per_cluster) * d;
      }
      for (std::size_t j = 0; j < d; ++j) {
        v[j] = center[j] + (shift ? shift[j] : 0.0) + spec.radius * cluster_rng.normal();
      }
      out.data.add(item_name(index++), v);
      out.labels.push_back(c);
    }
  }
  return out;
}

}  // namespace rqsid
