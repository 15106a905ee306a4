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
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refeval/error.hpp"
#include "refeval/types.hpp"

namespace refeval {

inline double intersection_area(const Box& a, const Box& b) {
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (w <= 0 || h <= 0) return 0.0;
  return w * h;
}

/// Continuous-area intersection over union. A zero union (two degenerate
/// boxes) yields 0.
inline double box_iou(const Box& a, const Box& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0 || inter <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

/// Dense prediction-by-ground-truth IoU table.
class IouMatrix {
 public:
  IouMatrix() = default;
  IouMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "IoU matrix expects " + std::to_string(rows_ * cols_) +
                      " entries");
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }
  double at(std::size_t pred, std::size_t gt) const {
    return values_[pred * cols_ + gt];
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

inline IouMatrix iou_matrix(std::span<const Box> preds,
                            std::span<const Box> gts) {
  std::vector<double> values;
  values.reserve(preds.size() * gts.size());
  for (const Box& p : preds) {
    for (const Box& g : gts) values.push_back(box_iou(p, g));
  }
  return IouMatrix(preds.size(), gts.size(), std::move(values));
}

/// Decoded mask, column-major like the RLE it came from.
struct Bitmap {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint8_t> pixels;

  Bitmap() = default;
  Bitmap(std::uint32_t h, std::uint32_t w, bool fill = false)
      : height(h),
        width(w),
        pixels(static_cast<std::size_t>(h) * w, fill ? 1 : 0) {}

  bool get(std::uint32_t row, std::uint32_t col) const {
    return pixels[static_cast<std::size_t>(col) * height + row] != 0;
  }
  void set(std::uint32_t row, std::uint32_t col, bool v) {
    pixels[static_cast<std::size_t>(col) * height + row] = v ? 1 : 0;
  }

  friend bool operator==(const Bitmap&, const Bitmap&) = default;
};

inline Bitmap rle_decode(const RleMask& mask) {
  const std::uint64_t total = std::accumulate(
      mask.counts.begin(), mask.counts.end(), std::uint64_t{0});
  if (total != mask.pixel_count()) {
    throw Error(ErrorCode::kSumMismatch,
                "run lengths sum to " + std::to_string(total) + ", expected " +
                    std::to_string(mask.pixel_count()));
  }
  Bitmap out(mask.height, mask.width);
  std::size_t pos = 0;
  bool foreground = false;
  for (std::uint64_t run : mask.counts) {
    if (foreground) {
      std::fill_n(out.pixels.begin() + static_cast<std::ptrdiff_t>(pos), run,
                  std::uint8_t{1});
    }
    pos += run;
    foreground = !foreground;
  }
  return out;
}

/// Minimal encoding: only the leading background run may be zero.
inline RleMask rle_encode(const Bitmap& bitmap) {
  RleMask out{bitmap.height, bitmap.width, {}};
  std::uint8_t current = 0;
  std::uint64_t run = 0;
  for (std::uint8_t px : bitmap.pixels) {
    const std::uint8_t v = px ? 1 : 0;
    if (v != current) {
      out.counts.push_back(run);
      run = 0;
      current = v;
    }
    ++run;
  }
  if (run > 0 || out.counts.empty()) out.counts.push_back(run);
  return out;
}

/// True iff (floor(x), floor(y)) indexes a foreground pixel. Walks the runs
/// directly; no bitmap is materialized.
inline bool point_in_mask(const Point& p, const RleMask& mask) {
  if (!p.is_finite() || p.x < 0 || p.y < 0) return false;
  const double col_f = std::floor(p.x);
  const double row_f = std::floor(p.y);
  if (col_f >= mask.width || row_f >= mask.height) return false;
  const auto col = static_cast<std::uint64_t>(col_f);
  const auto row = static_cast<std::uint64_t>(row_f);
  const std::uint64_t index = col * mask.height + row;

  std::uint64_t start = 0;
  bool foreground = false;
  for (std::uint64_t run : mask.counts) {
    if (index < start + run) return foreground;
    start += run;
    foreground = !foreground;
  }
  return false;
}

/// Rectangular mask covering the pixels whose centers fall inside the box.
inline RleMask box_mask(const Box& box, std::uint32_t height,
                        std::uint32_t width) {
  if (height == 0 || width == 0) return rle_encode(Bitmap(height, width));
  auto lo = [](double v, std::uint32_t n) {
    return static_cast<std::uint64_t>(
        std::clamp(std::ceil(v - 0.5), 0.0, static_cast<double>(n)));
  };
  const std::uint64_t h = height, w = width;
  std::uint64_t c0 = lo(box.x0, width), c1 = lo(box.x1, width);
  const std::uint64_t r0 = lo(box.y0, height), r1 = lo(box.y1, height);
  if (r0 >= r1) c1 = c0;

  RleMask mask{height, width, {}};
  auto append = [&](bool foreground, std::uint64_t n) {
    if (n == 0) return;
    const bool last_foreground = mask.counts.size() % 2 == 0;
    if (!mask.counts.empty() && last_foreground == foreground) {
      mask.counts.back() += n;
      return;
    }
    if (mask.counts.empty() && foreground) mask.counts.push_back(0);
    mask.counts.push_back(n);
  };
  append(false, c0 * h);
  for (std::uint64_t c = c0; c < c1; ++c) {
    append(false, r0);
    append(true, r1 - r0);
    append(false, h - r1);
  }
  append(false, (w - std::max(c0, c1)) * h);
  return mask;
}

/// Associates a face with the person box covering the largest fraction of
/// the face. Ties go to the smaller person box, then the lower index.
inline std::optional<std::size_t> link_face_to_person(
    const Box& face, std::span<const Box> persons) {
  const double face_area = face.area();
  if (face_area <= 0) return std::nullopt;
  std::optional<std::size_t> best;
  double best_ratio = 0.0;
  for (std::size_t i = 0; i < persons.size(); ++i) {
    const double ratio = intersection_area(face, persons[i]) / face_area;
    if (ratio <= 0) continue;
    if (!best || ratio > best_ratio ||
        (ratio == best_ratio && persons[i].area() < persons[*best].area())) {
      best = i;
      best_ratio = ratio;
    }
  }
  return best;
}

}  // namespace refeval
