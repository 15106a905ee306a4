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

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace refeval {

/// Axis-aligned rectangle in absolute pixel coordinates, corner form.
///
/// A valid box has finite coordinates with x0 <= x1 and y0 <= y1. Zero-area
/// boxes are valid; they have IoU 0 against everything.
struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  static constexpr Box from_xywh(double x, double y, double w, double h) {
    return {x, y, x + w, y + h};
  }
  constexpr std::array<double, 4> to_xywh() const {
    return {x0, y0, x1 - x0, y1 - y0};
  }

  constexpr double width() const { return x1 - x0; }
  constexpr double height() const { return y1 - y0; }
  constexpr double area() const { return width() * height(); }

  bool is_finite() const {
    return std::isfinite(x0) && std::isfinite(y0) && std::isfinite(x1) &&
           std::isfinite(y1);
  }
  bool is_valid() const { return is_finite() && x0 <= x1 && y0 <= y1; }

  friend bool operator==(const Box&, const Box&) = default;
};

struct Point {
  double x = 0, y = 0;

  bool is_finite() const { return std::isfinite(x) && std::isfinite(y); }

  friend bool operator==(const Point&, const Point&) = default;
};

/// Uncompressed run-length encoded binary mask.
///
/// Runs alternate background/foreground starting with background, over pixels
/// in column-major order (pixel index = col * height + row). A mask whose
/// first pixel is foreground starts with a zero-length background run.
struct RleMask {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint64_t> counts;

  std::uint64_t pixel_count() const {
    return static_cast<std::uint64_t>(height) * width;
  }

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

struct PersonRecord {
  Box box;
  std::optional<RleMask> mask;

  friend bool operator==(const PersonRecord&, const PersonRecord&) = default;
};

enum class Subset {
  kAttribute,
  kPosition,
  kInteraction,
  kReasoning,
  kCelebrity,
  kRejection,
};

inline constexpr std::array<Subset, 6> kAllSubsets = {
    Subset::kAttribute, Subset::kPosition,  Subset::kInteraction,
    Subset::kReasoning, Subset::kCelebrity, Subset::kRejection};

constexpr std::string_view to_string(Subset s) {
  switch (s) {
    case Subset::kAttribute: return "attribute";
    case Subset::kPosition: return "position";
    case Subset::kInteraction: return "interaction";
    case Subset::kReasoning: return "reasoning";
    case Subset::kCelebrity: return "celebrity";
    case Subset::kRejection: return "rejection";
  }
  return "";
}

inline std::optional<Subset> parse_subset(std::string_view name) {
  for (Subset s : kAllSubsets) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

struct ReferringRecord {
  std::string id;
  std::string text;
  Subset subset = Subset::kAttribute;
  std::vector<std::size_t> gt_indices;

  friend bool operator==(const ReferringRecord&,
                         const ReferringRecord&) = default;
};

struct ImageRecord {
  std::string image_id;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<PersonRecord> persons;
  std::vector<ReferringRecord> referrings;

  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

using Dataset = std::vector<ImageRecord>;

struct Rejection {
  friend bool operator==(const Rejection&, const Rejection&) = default;
};

using Payload = std::variant<std::vector<Box>, std::vector<Point>, Rejection>;

/// Model output for one referring expression.
struct PredictionSet {
  std::string referring_id;
  Payload payload = Rejection{};

  bool is_rejection() const {
    return std::holds_alternative<Rejection>(payload);
  }
  const std::vector<Box>* boxes() const {
    return std::get_if<std::vector<Box>>(&payload);
  }
  const std::vector<Point>* points() const {
    return std::get_if<std::vector<Point>>(&payload);
  }

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

}  // namespace refeval
