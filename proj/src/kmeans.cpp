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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rqsid/error.hpp"
#include "rqsid/parallel.hpp"
#include "rqsid/quantizer.hpp"

namespace rqsid {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstRowMap = Eigen::Map<const RowMatrix>;

constexpr std::size_t kAssignBlock = 1024;

double squared_distance(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double d = a[j] - b[j];
    s += d * d;
  }
  return s;
}

struct Assignment {
  std::vector<std::uint32_t> labels;
  std::vector<double> distances;
  double sse = 0.0;
  std::size_t changed = 0;
};

// Nearest centroid for every point via ||x||^2 - 2 x.c + ||c||^2. Per-block
// partial sums are reduced in block order.
void assign_points(std::span<const double> points, std::size_t n, std::size_t dim,
                   const std::vector<double>& centroids, std::uint32_t k,
                   const std::vector<double>& point_norms, unsigned threads, Assignment& out) {
  const ConstRowMap c(centroids.data(), k, dim);
  const Eigen::VectorXd c_norms = c.rowwise().squaredNorm();
  const std::size_t num_blocks = (n + kAssignBlock - 1) / kAssignBlock;
  std::vector<double> block_sse(num_blocks, 0.0);
  std::vector<std::size_t> block_changed(num_blocks, 0);
  out.labels.resize(n, std::numeric_limits<std::uint32_t>::max());
  out.distances.resize(n);

  parallel_for_blocks(n, kAssignBlock, threads, [&](std::size_t begin, std::size_t end) {
    const std::size_t rows = end - begin;
    const ConstRowMap x(points.data() + begin * dim, rows, dim);
    const RowMatrix dots = x * c.transpose();
    double sse = 0.0;
    std::size_t changed = 0;
    for (std::size_t r = 0; r < rows; ++r) {
      std::uint32_t best = 0;
      double best_score = c_norms[0] - 2.0 * dots(r, 0);
      for (std::uint32_t j = 1; j < k; ++j) {
        const double score = c_norms[j] - 2.0 * dots(r, j);
        if (score < best_score) {
          best_score = score;
          best = j;
        }
      }
      const std::size_t i = begin + r;
      const double dist = std::max(0.0, point_norms[i] + best_score);
      if (out.labels[i] != best) ++changed;
      out.labels[i] = best;
      out.distances[i] = dist;
      sse += dist;
    }
    block_sse[begin / kAssignBlock] = sse;
    block_changed[begin / kAssignBlock] = changed;
  });
  out.sse = std::accumulate(block_sse.begin(), block_sse.end(), 0.0);
  out.changed = std::accumulate(block_changed.begin(), block_changed.end(), std::size_t{0});
}

}  // namespace

KMeansResult kmeans(std::span<const double> points, std::size_t dim, std::uint32_t num_centroids,
                    std::uint32_t max_iters, double tol, RandomSource& rng, unsigned threads) {
  if (num_centroids == 0) throw ConfigError("kmeans needs at least one centroid");
  if (dim == 0) throw ConfigError("kmeans dimension must be >= 1");
  if (points.empty() || points.size() % dim != 0) throw DataError("kmeans needs a nonempty point set");
  for (double v : points) {
    if (!std::isfinite(v)) throw DataError("kmeans input contains a non-finite value");
  }
  const std::size_t n = points.size() / dim;
  const std::uint32_t k = num_centroids;

  KMeansResult result;
  result.centroids.assign(std::size_t{k} * dim, 0.0);

  // k-means++ seeding.
  std::vector<double> nearest(n);
  {
    const std::size_t first = rng.below(n);
    std::copy_n(points.data() + first * dim, dim, result.centroids.data());
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = squared_distance(points.data() + i * dim, result.centroids.data(), dim);
    for (std::uint32_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (double d : nearest) total += d;
      std::size_t pick = 0;
      if (total > 0.0) {
        const double target = rng.uniform01() * total;
        double cumulative = 0.0;
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (nearest[i] <= 0.0) continue;
          cumulative += nearest[i];
          if (cumulative > target) {
            pick = i;
            break;
          }
        }
        if (pick == n) {
          // Rounding left target at the very end; take the last candidate.
          for (std::size_t i = n; i-- > 0;) {
            if (nearest[i] > 0.0) {
              pick = i;
              break;
            }
          }
        }
      } else {
        pick = rng.below(n);
        ++result.duplicated_centroids;
      }
      double* dst = result.centroids.data() + std::size_t{c} * dim;
      std::copy_n(points.data() + pick * dim, dim, dst);
      for (std::size_t i = 0; i < n; ++i) {
        nearest[i] = std::min(nearest[i], squared_distance(points.data() + i * dim, dst, dim));
      }
    }
  }

  std::vector<double> point_norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = points.data() + i * dim;
    point_norms[i] = std::inner_product(p, p + dim, p, 0.0);
  }

  Assignment current;
  assign_points(points, n, dim, result.centroids, k, point_norms, threads, current);

  std::vector<double> sums(std::size_t{k} * dim);
  std::vector<std::size_t> counts(k);
  std::vector<std::size_t> order;
  for (std::uint32_t it = 1; it <= max_iters; ++it) {
    // Update step with a fixed-order reduction.
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t label = current.labels[i];
      ++counts[label];
      const double* p = points.data() + i * dim;
      double* s = sums.data() + std::size_t{label} * dim;
      for (std::size_t j = 0; j < dim; ++j) s[j] += p[j];
    }
    bool has_empty = false;
    for (std::uint32_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        has_empty = true;
        continue;
      }
      const double inv = 1.0 / static_cast<double>(counts[c]);
      double* dst = result.centroids.data() + std::size_t{c} * dim;
      const double* s = sums.data() + std::size_t{c} * dim;
      for (std::size_t j = 0; j < dim; ++j) dst[j] = s[j] * inv;
    }
    if (has_empty) {
      order.resize(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return current.distances[a] > current.distances[b];
      });
      std::size_t next = 0;
      for (std::uint32_t c = 0; c < k; ++c) {
        if (counts[c] != 0) continue;
        const std::size_t pick = order[next % n];
        ++next;
        std::copy_n(points.data() + pick * dim, dim,
                    result.centroids.data() + std::size_t{c} * dim);
      }
    }

    const double previous_sse = current.sse;
    assign_points(points, n, dim, result.centroids, k, point_norms, threads, current);
    result.iterations = it;
    if (current.changed == 0 && !has_empty) break;
    if (previous_sse <= 0.0) break;
    if ((previous_sse - current.sse) / previous_sse < tol) break;
  }

  result.sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    result.sse += squared_distance(points.data() + i * dim,
                                   result.centroids.data() + std::size_t{current.labels[i]} * dim,
                                   dim);
  }
  result.assignments = std::move(current.labels);
  return result;
}

}  // namespace rqsid
