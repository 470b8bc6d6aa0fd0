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
#include <string>
#include <vector>

#include "rqsid/core.hpp"
#include "rqsid/random.hpp"

namespace rqsid {

enum class SizeLaw { kUniform, kZipf };

// Each cluster is a dense Gaussian core plus a few satellite sub-clusters.
// A share `outlier_fraction` of a cluster's points sits around satellites
// offset from the center by up to satellite_offset * center_scale per
// coordinate; these are the large-residual points left over by a first
// quantization layer. outlier_fraction = 0 gives plain Gaussian clusters.
struct ClusterSpec {
  std::uint32_t num_clusters = 256;
  double radius = 0.05;       // within-cluster standard deviation
  double center_scale = 1.0;  // centers are uniform on [-center_scale, center_scale]^d
  SizeLaw size_law = SizeLaw::kZipf;
  double zipf_exponent = 1.2;
  double outlier_fraction = 0.2;
  std::uint32_t satellites_per_cluster = 4;
  double satellite_offset = 0.5;

  // Throws ConfigError on invalid values; returns human-readable warnings for
  // questionable ones (radius >= center_scale).
  std::vector<std::string> validate() const;
};

struct ClusteredData {
  EmbeddingCollection data;
  std::vector<std::uint32_t> labels;
  std::vector<std::size_t> cluster_sizes;
  std::vector<std::string> warnings;
};

// n points i.i.d. uniform on [-1, 1]^d.
EmbeddingCollection gen_uniform(std::size_t n, std::size_t d, const RandomSource& rng);

// Gaussian clusters. Cluster c draws from rng.split(c + 1); centers from
// rng.split(0). Items are emitted cluster by cluster.
ClusteredData gen_clustered(std::size_t n, std::size_t d, const ClusterSpec& spec,
                            const RandomSource& rng);

// Cluster sizes for the given law, rounded by largest remainder (ties to the
// lower cluster index) so they sum to n.
std::vector<std::size_t> cluster_sizes(std::size_t n, const ClusterSpec& spec);

// Item ids are "item" followed by a zero-padded index.
std::string item_name(std::size_t index);

}  // namespace rqsid
