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


// Independent oracles and fixtures shared by the test binaries. Nothing here
// calls into the library code paths it is used to check.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "refeval/types.hpp"

namespace refeval::testing {

// Pixel-cell rasterization of integer-corner boxes.
inline double raster_iou(const Box& a, const Box& b) {
  const int lo_x = static_cast<int>(std::min(a.x0, b.x0));
  const int hi_x = static_cast<int>(std::max(a.x1, b.x1));
  const int lo_y = static_cast<int>(std::min(a.y0, b.y0));
  const int hi_y = static_cast<int>(std::max(a.y1, b.y1));
  long inter = 0, uni = 0;
  for (int x = lo_x; x < hi_x; ++x) {
    for (int y = lo_y; y < hi_y; ++y) {
      const double cx = x + 0.5, cy = y + 0.5;
      const bool in_a = cx > a.x0 && cx < a.x1 && cy > a.y0 && cy < a.y1;
      const bool in_b = cx > b.x0 && cx < b.x1 && cy > b.y0 && cy < b.y1;
      inter += (in_a && in_b) ? 1 : 0;
      uni += (in_a || in_b) ? 1 : 0;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double raster_intersection(const Box& a, const Box& b) {
  long inter = 0;
  for (int x = static_cast<int>(a.x0); x < static_cast<int>(a.x1); ++x) {
    for (int y = static_cast<int>(a.y0); y < static_cast<int>(a.y1); ++y) {
      const double cx = x + 0.5, cy = y + 0.5;
      inter += (cx > b.x0 && cx < b.x1 && cy > b.y0 && cy < b.y1) ? 1 : 0;
    }
  }
  return static_cast<double>(inter);
}

// Row-major grid[row][col] from runs laid out column-major.
inline std::vector<std::vector<bool>> naive_expand(const RleMask& m) {
  std::vector<bool> flat;
  bool value = false;
  for (std::uint64_t run : m.counts) {
    for (std::uint64_t k = 0; k < run; ++k) flat.push_back(value);
    value = !value;
  }
  std::vector<std::vector<bool>> grid(m.height, std::vector<bool>(m.width));
  for (std::size_t i = 0; i < flat.size(); ++i) {
    grid[i % m.height][i / m.height] = flat[i];
  }
  return grid;
}

// Maximum matching size by trying every injective partial assignment of
// rows to columns.
inline std::size_t enumerate_matching(const std::vector<std::vector<bool>>& edges) {
  const std::size_t rows = edges.size();
  const std::size_t cols = rows ? edges[0].size() : 0;
  std::vector<bool> used(cols, false);
  std::size_t best = 0;
  auto go = [&](auto&& self, std::size_t row, std::size_t matched) -> void {
    if (row == rows) {
      best = std::max(best, matched);
      return;
    }
    if (matched + (rows - row) <= best) return;
    self(self, row + 1, matched);
    for (std::size_t c = 0; c < cols; ++c) {
      if (!used[c] && edges[row][c]) {
        used[c] = true;
        self(self, row + 1, matched + 1);
        used[c] = false;
      }
    }
  };
  go(go, 0, 0);
  return best;
}

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t n, std::int64_t d) {
    const std::int64_t g = std::gcd(n, d);
    return g == 0 ? Rational{0, 1} : Rational{n / g, d / g};
  }
  Rational operator+(const Rational& o) const {
    return make(num * o.den + o.num * den, den * o.den);
  }
  Rational operator*(const Rational& o) const { return make(num * o.num, den * o.den); }
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

struct OracleScores {
  Rational recall, precision, df1;
};

// Per-referring scores from per-threshold match counts, in exact rational
// arithmetic: with M matches, p predictions, g ground truths and n persons,
// F1 = 2M / (p + g) and the penalty is min(n, p) / p.
inline OracleScores symbolic_scores(const std::vector<std::size_t>& matches_per_threshold,
                                    std::int64_t preds, std::int64_t gts,
                                    std::int64_t numerator) {
  OracleScores s;
  if (preds == 0) return s;
  const auto t = static_cast<std::int64_t>(matches_per_threshold.size());
  const Rational penalty = Rational::make(std::min(numerator, preds), preds);
  for (std::size_t m : matches_per_threshold) {
    const auto mm = static_cast<std::int64_t>(m);
    s.recall = s.recall + Rational::make(mm, gts * t);
    s.precision = s.precision + Rational::make(mm, preds * t);
    s.df1 = s.df1 + Rational::make(2 * mm, (preds + gts) * t) * penalty;
  }
  return s;
}

inline Box random_int_box(std::mt19937_64& rng, int extent, int min_size = 0) {
  std::uniform_int_distribution<int> coord(0, extent);
  while (true) {
    int x0 = coord(rng), x1 = coord(rng), y0 = coord(rng), y1 = coord(rng);
    if (x0 > x1) std::swap(x0, x1);
    if (y0 > y1) std::swap(y0, y1);
    if (x1 - x0 >= min_size && y1 - y0 >= min_size) {
      return {double(x0), double(y0), double(x1), double(y1)};
    }
  }
}

inline double random_threshold_grid_iou(std::mt19937_64& rng) {
  // IoU values concentrated around the threshold grid, including exact hits.
  std::uniform_int_distribution<int> kind(0, 3);
  std::uniform_int_distribution<int> step(8, 21);
  std::uniform_real_distribution<double> any(0.0, 1.0);
  switch (kind(rng)) {
    case 0: return 0.0;
    case 1: return std::min(1.0, step(rng) * 5 / 100.0);
    default: return any(rng);
  }
}

}  // namespace refeval::testing
