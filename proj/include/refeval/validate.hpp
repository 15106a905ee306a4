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

#include <numeric>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "refeval/error.hpp"
#include "refeval/types.hpp"

namespace refeval {

enum class ViolationCode {
  kEmptyImageId,
  kDuplicateImageId,
  kBadImageSize,
  kInvalidBox,
  kBoxOutOfBounds,
  kMaskDimensionMismatch,
  kMaskSumMismatch,
  kNoPersons,
  kDuplicateReferringId,
  kOutOfRangeGt,
  kDuplicateGt,
  kRejectionHasGt,
  kMissingGt,
};

constexpr std::string_view to_string(ViolationCode code) {
  switch (code) {
    case ViolationCode::kEmptyImageId: return "EMPTY_IMAGE_ID";
    case ViolationCode::kDuplicateImageId: return "DUPLICATE_IMAGE_ID";
    case ViolationCode::kBadImageSize: return "BAD_IMAGE_SIZE";
    case ViolationCode::kInvalidBox: return "INVALID_BOX";
    case ViolationCode::kBoxOutOfBounds: return "BOX_OUT_OF_BOUNDS";
    case ViolationCode::kMaskDimensionMismatch: return "MASK_DIMENSION_MISMATCH";
    case ViolationCode::kMaskSumMismatch: return "MASK_SUM_MISMATCH";
    case ViolationCode::kNoPersons: return "NO_PERSONS";
    case ViolationCode::kDuplicateReferringId: return "DUPLICATE_REFERRING_ID";
    case ViolationCode::kOutOfRangeGt: return "OUT_OF_RANGE_GT";
    case ViolationCode::kDuplicateGt: return "DUPLICATE_GT";
    case ViolationCode::kRejectionHasGt: return "REJECTION_HAS_GT";
    case ViolationCode::kMissingGt: return "MISSING_GT";
  }
  return "";
}

struct Violation {
  ViolationCode code;
  std::string image_id;
  std::string referring_id;  // empty for image-level violations
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Checks every type invariant of the dataset. Violations are returned in
/// dataset order; an empty result means the dataset is valid.
inline std::vector<Violation> validate_dataset(const Dataset& dataset) {
  std::vector<Violation> out;
  std::unordered_set<std::string> image_ids;
  std::unordered_set<std::string> referring_ids;

  for (const ImageRecord& image : dataset) {
    auto image_violation = [&](ViolationCode code, std::string detail) {
      out.push_back({code, image.image_id, "", std::move(detail)});
    };

    if (image.image_id.empty()) {
      image_violation(ViolationCode::kEmptyImageId, "image_id is empty");
    } else if (!image_ids.insert(image.image_id).second) {
      image_violation(ViolationCode::kDuplicateImageId, image.image_id);
    }
    if (image.width == 0 || image.height == 0) {
      image_violation(ViolationCode::kBadImageSize,
                      std::to_string(image.width) + "x" +
                          std::to_string(image.height));
    }

    for (std::size_t p = 0; p < image.persons.size(); ++p) {
      const PersonRecord& person = image.persons[p];
      const std::string where = "person " + std::to_string(p);
      if (!person.box.is_valid()) {
        image_violation(ViolationCode::kInvalidBox, where);
      } else if (person.box.x0 < 0 || person.box.y0 < 0 ||
                 person.box.x1 > image.width || person.box.y1 > image.height) {
        image_violation(ViolationCode::kBoxOutOfBounds, where);
      }
      if (person.mask) {
        const RleMask& mask = *person.mask;
        if (mask.height != image.height || mask.width != image.width) {
          image_violation(ViolationCode::kMaskDimensionMismatch, where);
        }
        const std::uint64_t sum = std::accumulate(
            mask.counts.begin(), mask.counts.end(), std::uint64_t{0});
        if (sum != mask.pixel_count()) {
          image_violation(ViolationCode::kMaskSumMismatch, where);
        }
      }
    }

    bool needs_persons = false;
    for (const ReferringRecord& ref : image.referrings) {
      auto ref_violation = [&](ViolationCode code, std::string detail) {
        out.push_back({code, image.image_id, ref.id, std::move(detail)});
      };
      if (!referring_ids.insert(ref.id).second) {
        ref_violation(ViolationCode::kDuplicateReferringId, ref.id);
      }
      std::set<std::size_t> seen;
      for (std::size_t idx : ref.gt_indices) {
        if (idx >= image.persons.size()) {
          ref_violation(ViolationCode::kOutOfRangeGt,
                        "gt index " + std::to_string(idx) + " >= " +
                            std::to_string(image.persons.size()));
        } else if (!seen.insert(idx).second) {
          ref_violation(ViolationCode::kDuplicateGt,
                        "gt index " + std::to_string(idx));
        }
      }
      if (ref.subset == Subset::kRejection) {
        if (!ref.gt_indices.empty()) {
          ref_violation(ViolationCode::kRejectionHasGt,
                        std::to_string(ref.gt_indices.size()) + " gt indices");
        }
      } else {
        needs_persons = true;
        if (ref.gt_indices.empty()) {
          ref_violation(ViolationCode::kMissingGt, "non-rejection referring");
        }
      }
    }
    if (needs_persons && image.persons.empty()) {
      image_violation(ViolationCode::kNoPersons,
                      "non-rejection referrings on an image without persons");
    }
  }
  return out;
}

/// Canonicalizes a prediction: an empty box or point list becomes an explicit
/// rejection. Duplicate boxes are preserved.
inline PredictionSet normalize_prediction(PredictionSet raw) {
  if (const auto* boxes = raw.boxes()) {
    for (const Box& b : *boxes) {
      if (!b.is_finite()) {
        throw Error(ErrorCode::kInvalidCoordinate,
                    "non-finite box coordinate in " + raw.referring_id);
      }
      if (!b.is_valid()) {
        throw Error(ErrorCode::kInvalidBox,
                    "inverted box corners in " + raw.referring_id);
      }
    }
    if (boxes->empty()) raw.payload = Rejection{};
  } else if (const auto* points = raw.points()) {
    for (const Point& p : *points) {
      if (!p.is_finite()) {
        throw Error(ErrorCode::kInvalidCoordinate,
                    "non-finite point coordinate in " + raw.referring_id);
      }
    }
    if (points->empty()) raw.payload = Rejection{};
  }
  return raw;
}

}  // namespace refeval
