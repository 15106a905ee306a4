// Copyright 2026 The refeval Authors.
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

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "refeval/error.hpp"
#include "refeval/geometry.hpp"

namespace refeval {

/// The ten IoU thresholds 0.50, 0.55, ..., 0.95. Each value is formed as
/// an exact ratio so that an IoU of, say, 60/100 compares equal to 0.60.
inline constexpr std::array<double, 10> kIouThresholds = {
    50 / 100.0, 55 / 100.0, 60 / 100.0, 65 / 100.0, 70 / 100.0,
    75 / 100.0, 80 / 100.0, 85 / 100.0, 90 / 100.0, 95 / 100.0};

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pred, gt)
  double threshold = 0.5;

  std::size_t size() const { return pairs.size(); }
};

namespace detail {

// Bipartite graph over predictions (left) and ground truths (right) with
// edges where the weight reaches the threshold. Adjacency lists are sorted
// by descending weight, ties by ascending gt index.
class ThresholdGraph {
 public:
  template <typename Weight>
  ThresholdGraph(std::size_t rows, std::size_t cols, Weight&& weight,
                 double threshold)
      : adjacency_(rows), rows_(rows), cols_(cols) {
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double w = weight(i, j);
        if (w >= threshold) {
          edges_.push_back({w, i, j});
          adjacency_[i].push_back(j);
        }
      }
      std::stable_sort(adjacency_[i].begin(), adjacency_[i].end(),
                       [&](std::size_t a, std::size_t b) {
                         return weight(i, a) > weight(i, b);
                       });
    }
    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
      if (a.weight != b.weight) return a.weight > b.weight;
      if (a.pred != b.pred) return a.pred < b.pred;
      return a.gt < b.gt;
    });
  }

  // Greedy pass in descending-weight order, then one augmenting-path search
  // from every still-free prediction in index order. A vertex with no
  // augmenting path never regains one, so a single pass reaches maximum
  // cardinality.
  std::vector<std::pair<std::size_t, std::size_t>> maximum_matching() {
    pred_to_gt_.assign(rows_, kFree);
    gt_to_pred_.assign(cols_, kFree);
    for (const Edge& e : edges_) {
      if (pred_to_gt_[e.pred] == kFree && gt_to_pred_[e.gt] == kFree) {
        pred_to_gt_[e.pred] = e.gt;
        gt_to_pred_[e.gt] = e.pred;
      }
    }
    for (std::size_t i = 0; i < rows_; ++i) {
      if (pred_to_gt_[i] != kFree || adjacency_[i].empty()) continue;
      visited_.assign(cols_, 0);
      augment(i);
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < rows_; ++i) {
      if (pred_to_gt_[i] != kFree) pairs.emplace_back(i, pred_to_gt_[i]);
    }
    return pairs;
  }

 private:
  static constexpr std::size_t kFree = static_cast<std::size_t>(-1);

  struct Edge {
    double weight;
    std::size_t pred;
    std::size_t gt;
  };

  bool augment(std::size_t pred) {
    for (std::size_t gt : adjacency_[pred]) {
      if (visited_[gt]) continue;
      visited_[gt] = 1;
      if (gt_to_pred_[gt] == kFree || augment(gt_to_pred_[gt])) {
        pred_to_gt_[pred] = gt;
        gt_to_pred_[gt] = pred;
        return true;
      }
    }
    return false;
  }

  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<std::size_t> pred_to_gt_;
  std::vector<std::size_t> gt_to_pred_;
  std::vector<std::uint8_t> visited_;
  std::size_t rows_;
  std::size_t cols_;
};

}  // namespace detail

/// One-to-one maximum-cardinality matching over edges with IoU >= threshold.
/// Output pairs are ordered by prediction index and are deterministic.
inline MatchResult match_at_threshold(const IouMatrix& m, double threshold) {
  detail::ThresholdGraph graph(
      m.rows(), m.cols(),
      [&m](std::size_t i, std::size_t j) { return m.at(i, j); }, threshold);
  return {graph.maximum_matching(), threshold};
}

/// Maximum matching size when edges are given by an arbitrary predicate;
/// used by point-in-mask evaluation where the relation is binary.
template <typename Edge>
std::size_t max_matching_size(std::size_t rows, std::size_t cols,
                              Edge&& has_edge) {
  detail::ThresholdGraph graph(
      rows, cols,
      [&has_edge](std::size_t i, std::size_t j) {
        return has_edge(i, j) ? 1.0 : 0.0;
      },
      1.0);
  return graph.maximum_matching().size();
}

inline constexpr std::size_t kBruteForceLimit = 8;

/// Exact maximum matching size by exhaustive search over every subset of
/// the smaller side that can be matched. Test oracle; exponential in
/// min(rows, cols).
inline std::size_t brute_force_match(const IouMatrix& m, double threshold) {
  const bool transpose = m.rows() > m.cols();
  const std::size_t small = transpose ? m.cols() : m.rows();
  const std::size_t large = transpose ? m.rows() : m.cols();
  if (small > kBruteForceLimit) {
    throw Error(ErrorCode::kSizeLimit,
                "min dimension " + std::to_string(small) + " exceeds " +
                    std::to_string(kBruteForceLimit));
  }
  auto edge = [&](std::size_t s, std::size_t l) {
    return (transpose ? m.at(l, s) : m.at(s, l)) >= threshold;
  };
  // reachable[mask]: the small-side vertices in mask can be matched
  // simultaneously using the large-side vertices seen so far.
  std::vector<std::uint8_t> reachable(std::size_t{1} << small, 0);
  reachable[0] = 1;
  for (std::size_t l = 0; l < large; ++l) {
    std::vector<std::uint8_t> next = reachable;
    for (std::size_t mask = 0; mask < reachable.size(); ++mask) {
      if (!reachable[mask]) continue;
      for (std::size_t s = 0; s < small; ++s) {
        if (!(mask & (std::size_t{1} << s)) && edge(s, l)) {
          next[mask | (std::size_t{1} << s)] = 1;
        }
      }
    }
    reachable = std::move(next);
  }
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < reachable.size(); ++mask) {
    if (reachable[mask]) {
      best = std::max<std::size_t>(best, std::popcount(mask));
    }
  }
  return best;
}

}  // namespace refeval
