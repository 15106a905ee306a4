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
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "refeval/error.hpp"
#include "refeval/geometry.hpp"
#include "refeval/matching.hpp"
#include "refeval/types.hpp"
#include "refeval/validate.hpp"

namespace refeval {

/// Per-referring scores, each in [0, 1]. `f1` is the threshold-averaged F1
/// before the density penalty is applied.
struct PRTriple {
  double recall = 0;
  double precision = 0;
  double density_f1 = 0;
  double f1 = 0;

  friend bool operator==(const PRTriple&, const PRTriple&) = default;
};

struct DensityPenalty {
  double value = 1.0;
};

/// Which count forms the numerator of the density penalty.
enum class DensityNumerator {
  kImagePersons,  // every person in the image (default)
  kReferringGt,   // ground-truth boxes of the referring itself
};

/// min(1, numerator / predicted_count).
inline DensityPenalty density_penalty(std::size_t numerator,
                                      std::size_t predicted_count) {
  if (predicted_count == 0) {
    throw Error(ErrorCode::kZeroPredictions,
                "density penalty needs at least one prediction");
  }
  return {std::min(1.0, static_cast<double>(numerator) /
                            static_cast<double>(predicted_count))};
}

struct RecallPrecision {
  double recall = 0;
  double precision = 0;
};

inline RecallPrecision referring_pr_at_threshold(std::span<const Box> preds,
                                                 std::span<const Box> gts,
                                                 double threshold) {
  if (gts.empty()) throw Error(ErrorCode::kEmptyGt, "no ground truth boxes");
  if (preds.empty()) return {0, 0};
  const std::size_t matched =
      match_at_threshold(iou_matrix(preds, gts), threshold).size();
  return {static_cast<double>(matched) / static_cast<double>(gts.size()),
          static_cast<double>(matched) / static_cast<double>(preds.size())};
}

inline double f1_score(double recall, double precision) {
  if (recall + precision == 0) return 0.0;
  return 2 * precision * recall / (precision + recall);
}

namespace detail {

inline std::size_t density_numerator(DensityNumerator mode,
                                     std::size_t persons_in_image,
                                     std::size_t gt_count) {
  return mode == DensityNumerator::kImagePersons ? persons_in_image : gt_count;
}

}  // namespace detail

namespace detail {

// Scores plus the raw match tally: the number of matched pairs summed over
// `slots` evaluations (ten thresholds for boxes, one for points). Means are
// formed from the integer tally with a single division.
struct ScoredReferring {
  PRTriple triple;
  std::size_t match_total = 0;
  std::size_t slots = 0;
};

inline ScoredReferring score_boxes(std::span<const Box> preds,
                                   std::span<const Box> gts,
                                   std::size_t persons_in_image,
                                   DensityNumerator mode) {
  if (gts.empty()) throw Error(ErrorCode::kEmptyGt, "no ground truth boxes");
  ScoredReferring out;
  out.slots = kIouThresholds.size();
  if (preds.empty()) return out;

  const double penalty =
      density_penalty(density_numerator(mode, persons_in_image, gts.size()),
                      preds.size())
          .value;
  const IouMatrix ious = iou_matrix(preds, gts);
  const auto n_gt = static_cast<double>(gts.size());
  const auto n_pred = static_cast<double>(preds.size());

  double f1_sum = 0, df1_sum = 0;
  for (double t : kIouThresholds) {
    const std::size_t matched = match_at_threshold(ious, t).size();
    out.match_total += matched;
    const double f1 = f1_score(static_cast<double>(matched) / n_gt,
                               static_cast<double>(matched) / n_pred);
    f1_sum += f1;
    df1_sum += f1 * penalty;
  }
  const auto n = static_cast<double>(out.slots);
  const auto total = static_cast<double>(out.match_total);
  out.triple = {total / (n * n_gt), total / (n * n_pred), df1_sum / n,
                f1_sum / n};
  return out;
}

inline ScoredReferring score_points(std::span<const Point> points,
                                    std::span<const RleMask> gt_masks,
                                    std::size_t persons_in_image,
                                    DensityNumerator mode) {
  if (gt_masks.empty()) throw Error(ErrorCode::kEmptyGt, "no ground truth masks");
  for (const RleMask& mask : gt_masks) {
    if (mask.height != gt_masks[0].height || mask.width != gt_masks[0].width) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "ground truth masks differ in size");
    }
  }
  ScoredReferring out;
  out.slots = 1;
  if (points.empty()) return out;

  out.match_total =
      max_matching_size(points.size(), gt_masks.size(),
                        [&](std::size_t i, std::size_t j) {
                          return point_in_mask(points[i], gt_masks[j]);
                        });
  const auto matched = static_cast<double>(out.match_total);
  const double recall = matched / static_cast<double>(gt_masks.size());
  const double precision = matched / static_cast<double>(points.size());
  const double f1 = f1_score(recall, precision);
  const double penalty =
      density_penalty(density_numerator(mode, persons_in_image, gt_masks.size()),
                      points.size())
          .value;
  out.triple = {recall, precision, f1 * penalty, f1};
  return out;
}

}  // namespace detail

/// Recall, precision and DensityF1 averaged over the ten IoU thresholds.
/// The density penalty does not depend on the threshold.
inline PRTriple referring_metrics(
    std::span<const Box> preds, std::span<const Box> gts,
    std::size_t persons_in_image,
    DensityNumerator mode = DensityNumerator::kImagePersons) {
  return detail::score_boxes(preds, gts, persons_in_image, mode).triple;
}

/// Point-in-mask variant: a point may match a mask containing it, one to
/// one. No threshold averaging.
inline PRTriple point_referring_metrics(
    std::span<const Point> points, std::span<const RleMask> gt_masks,
    std::size_t persons_in_image,
    DensityNumerator mode = DensityNumerator::kImagePersons) {
  return detail::score_points(points, gt_masks, persons_in_image, mode).triple;
}

/// Percentage of predictions that reject (predict nothing).
inline double rejection_score(std::span<const PredictionSet> predictions) {
  if (predictions.empty()) {
    throw Error(ErrorCode::kEmptyInput, "no rejection-subset predictions");
  }
  const auto rejected = std::count_if(
      predictions.begin(), predictions.end(),
      [](const PredictionSet& p) { return normalize_prediction(p).is_rejection(); });
  return 100.0 * static_cast<double>(rejected) /
         static_cast<double>(predictions.size());
}

struct EvalOptions {
  DensityNumerator numerator = DensityNumerator::kImagePersons;
  // Require point payloads for every non-rejected prediction.
  bool point_eval = false;
  std::optional<Subset> subset;
  unsigned workers = 1;
};

enum class PayloadKind { kBoxes, kPoints, kRejection, kMissing };

/// Score of one referring expression. `scores` is meaningful only for
/// non-rejection subsets.
struct ReferringResult {
  std::string referring_id;
  std::string image_id;
  Subset subset = Subset::kAttribute;
  std::size_t gt_count = 0;
  std::size_t predicted_count = 0;
  PayloadKind payload = PayloadKind::kMissing;
  PRTriple scores;
  std::size_t match_total = 0;  // matched pairs summed over all thresholds
  std::size_t match_slots = 0;  // thresholds evaluated (1 for points)
};

struct EvaluationRun {
  std::vector<ReferringResult> results;  // dataset order
  std::vector<std::string> warnings;
};

namespace detail {

inline Box clamp_box(const Box& b, const ImageRecord& image) {
  const double w = image.width, h = image.height;
  return {std::clamp(b.x0, 0.0, w), std::clamp(b.y0, 0.0, h),
          std::clamp(b.x1, 0.0, w), std::clamp(b.y1, 0.0, h)};
}

struct Job {
  const ImageRecord* image;
  const ReferringRecord* referring;
  const PredictionSet* prediction;  // null when missing
};

inline ReferringResult score_job(const Job& job, const EvalOptions& options,
                                 std::size_t& clamped) {
  const ImageRecord& image = *job.image;
  const ReferringRecord& ref = *job.referring;
  ReferringResult out;
  out.referring_id = ref.id;
  out.image_id = image.image_id;
  out.subset = ref.subset;
  out.gt_count = ref.gt_indices.size();

  if (!job.prediction) {
    out.payload = PayloadKind::kMissing;
    return out;
  }
  const PredictionSet prediction = normalize_prediction(*job.prediction);
  if (prediction.is_rejection()) {
    out.payload = PayloadKind::kRejection;
    return out;
  }
  if (const auto* boxes = prediction.boxes()) {
    out.payload = PayloadKind::kBoxes;
    out.predicted_count = boxes->size();
    if (options.point_eval) {
      throw Error(ErrorCode::kSchemaError,
                  "box prediction for " + ref.id + " under point evaluation");
    }
  } else {
    out.payload = PayloadKind::kPoints;
    out.predicted_count = prediction.points()->size();
  }
  if (ref.subset == Subset::kRejection) return out;

  if (out.payload == PayloadKind::kBoxes) {
    std::vector<Box> preds;
    preds.reserve(prediction.boxes()->size());
    for (const Box& b : *prediction.boxes()) {
      const Box c = clamp_box(b, image);
      if (!(c == b)) ++clamped;
      preds.push_back(c);
    }
    std::vector<Box> gts;
    gts.reserve(ref.gt_indices.size());
    for (std::size_t idx : ref.gt_indices) gts.push_back(image.persons.at(idx).box);
    const ScoredReferring scored =
        score_boxes(preds, gts, image.persons.size(), options.numerator);
    out.scores = scored.triple;
    out.match_total = scored.match_total;
    out.match_slots = scored.slots;
  } else {
    std::vector<RleMask> masks;
    masks.reserve(ref.gt_indices.size());
    for (std::size_t idx : ref.gt_indices) {
      const PersonRecord& person = image.persons.at(idx);
      if (!person.mask) {
        throw Error(ErrorCode::kMissingMask,
                    "person " + std::to_string(idx) + " of image " +
                        image.image_id + " has no mask");
      }
      masks.push_back(*person.mask);
    }
    const ScoredReferring scored = score_points(
        *prediction.points(), masks, image.persons.size(), options.numerator);
    out.scores = scored.triple;
    out.match_total = scored.match_total;
    out.match_slots = scored.slots;
  }
  return out;
}

}  // namespace detail

/// Scores every referring expression (after the optional subset filter).
/// Work is fanned out over `options.workers` threads; results are written
/// into dataset order so output never depends on the worker count.
inline EvaluationRun evaluate_referrings(
    const Dataset& dataset, std::span<const PredictionSet> predictions,
    const EvalOptions& options = {}) {
  std::unordered_map<std::string, const ReferringRecord*> known;
  for (const ImageRecord& image : dataset) {
    for (const ReferringRecord& ref : image.referrings) known.emplace(ref.id, &ref);
  }
  std::unordered_map<std::string, const PredictionSet*> by_id;
  for (const PredictionSet& p : predictions) {
    if (!known.contains(p.referring_id)) {
      throw Error(ErrorCode::kUnknownReferringId, p.referring_id);
    }
    if (!by_id.emplace(p.referring_id, &p).second) {
      throw Error(ErrorCode::kSchemaError,
                  "duplicate prediction for " + p.referring_id);
    }
  }

  EvaluationRun run;
  std::vector<detail::Job> jobs;
  for (const ImageRecord& image : dataset) {
    for (const ReferringRecord& ref : image.referrings) {
      if (options.subset && ref.subset != *options.subset) continue;
      auto it = by_id.find(ref.id);
      const PredictionSet* prediction = it == by_id.end() ? nullptr : it->second;
      if (!prediction) {
        run.warnings.push_back("missing prediction for " + ref.id +
                               "; scored as rejection");
      }
      jobs.push_back({&image, &ref, prediction});
    }
  }

  run.results.resize(jobs.size());
  std::vector<std::size_t> clamped(jobs.size(), 0);
  std::vector<std::exception_ptr> errors(jobs.size());
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < jobs.size(); i += stride) {
      try {
        run.results[i] = detail::score_job(jobs[i], options, clamped[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers =
      std::clamp<std::size_t>(options.workers, 1, std::max<std::size_t>(jobs.size(), 1));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (clamped[i] > 0) {
      run.warnings.push_back("clamped " + std::to_string(clamped[i]) +
                             " predicted box(es) of " + jobs[i].referring->id +
                             " to image bounds");
    }
  }
  return run;
}

/// Percentages (0-100) for one subset.
struct SubsetReport {
  Subset subset = Subset::kAttribute;
  double recall = 0;
  double precision = 0;
  double density_f1 = 0;
  std::size_t n_referrings = 0;
};

struct AverageReport {
  double recall = 0;
  double precision = 0;
  double density_f1 = 0;
};

struct EvalReport {
  std::vector<SubsetReport> per_subset;  // canonical subset order
  std::optional<AverageReport> average;  // absent when no subset present
  std::optional<double> rejection_score;
  std::size_t n_rejection = 0;
  bool point_protocol = false;
  std::vector<std::string> warnings;
};

/// Reduces per-referring results: thresholds were already averaged within a
/// referring; here referrings are averaged within a subset, and subsets are
/// averaged without weights.
inline EvalReport summarize(const EvaluationRun& run, bool point_protocol = false) {
  EvalReport report;
  report.point_protocol = point_protocol;
  report.warnings = run.warnings;

  std::size_t rejected = 0;
  for (Subset subset : kAllSubsets) {
    if (subset == Subset::kRejection) {
      for (const ReferringResult& r : run.results) {
        if (r.subset != Subset::kRejection) continue;
        ++report.n_rejection;
        if (r.payload == PayloadKind::kRejection || r.payload == PayloadKind::kMissing) {
          ++rejected;
        }
      }
      continue;
    }
    SubsetReport sr{subset, 0, 0, 0, 0};
    for (const ReferringResult& r : run.results) {
      if (r.subset != subset) continue;
      sr.recall += r.scores.recall;
      sr.precision += r.scores.precision;
      sr.density_f1 += r.scores.density_f1;
      ++sr.n_referrings;
    }
    if (sr.n_referrings == 0) continue;
    const auto n = static_cast<double>(sr.n_referrings);
    sr.recall = 100.0 * sr.recall / n;
    sr.precision = 100.0 * sr.precision / n;
    sr.density_f1 = 100.0 * sr.density_f1 / n;
    report.per_subset.push_back(sr);
  }

  if (!report.per_subset.empty()) {
    AverageReport avg;
    for (const SubsetReport& sr : report.per_subset) {
      avg.recall += sr.recall;
      avg.precision += sr.precision;
      avg.density_f1 += sr.density_f1;
    }
    const auto n = static_cast<double>(report.per_subset.size());
    avg.recall /= n;
    avg.precision /= n;
    avg.density_f1 /= n;
    report.average = avg;
  }
  if (report.n_rejection > 0) {
    report.rejection_score = 100.0 * static_cast<double>(rejected) /
                             static_cast<double>(report.n_rejection);
  }
  return report;
}

inline EvalReport aggregate(const Dataset& dataset,
                            std::span<const PredictionSet> predictions,
                            const EvalOptions& options = {}) {
  return summarize(evaluate_referrings(dataset, predictions, options),
                   options.point_eval);
}

}  // namespace refeval
