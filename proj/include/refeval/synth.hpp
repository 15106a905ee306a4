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
#include <charconv>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "refeval/error.hpp"
#include "refeval/geometry.hpp"
#include "refeval/metrics.hpp"
#include "refeval/types.hpp"

namespace refeval {

struct CountRange {
  std::size_t lo = 1;
  std::size_t hi = 1;

  bool empty() const { return lo > hi; }
};

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t n_images = 100;
  CountRange persons_per_image{4, 10};
  CountRange gts_per_ref{1, 3};
  CountRange refs_per_image{1, 3};
  std::uint32_t image_width = 640;
  std::uint32_t image_height = 480;
  double jitter = 0.0;  // recorded for downstream jittered baselines
  double rejection_fraction = 0.0;
  bool with_masks = true;
};

/// Exact tallies recorded while generating, kept independent of
/// compute_stats so the two can be cross-checked.
struct GenerationLedger {
  std::size_t n_images = 0;
  std::size_t n_referrings = 0;
  std::size_t n_persons = 0;
  std::size_t n_box_referrings = 0;
  std::size_t total_gt_boxes = 0;
  std::size_t total_tokens = 0;
  std::set<std::string> vocabulary;
  std::uint64_t width_sum = 0;
  std::uint64_t height_sum = 0;
  std::map<std::size_t, std::size_t> persons_per_image_hist;
  std::map<std::size_t, std::size_t> boxes_per_ref_hist;
  std::map<Subset, std::size_t> referrings_per_subset;
};

struct SynthOutput {
  Dataset dataset;
  GenerationLedger ledger;
};

namespace detail {

// Bounded draws from mt19937_64 done by hand: the engine's output sequence
// is fixed by the standard, the std distributions are not.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [lo, hi], by rejection sampling.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo;
    if (span == std::numeric_limits<std::uint64_t>::max()) return engine_();
    const std::uint64_t n = span + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + x % n;
  }

  // Uniform in [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

inline constexpr std::array<std::string_view, 8> kColors = {
    "red", "blue", "green", "black", "white", "yellow", "grey", "orange"};
inline constexpr std::array<std::string_view, 6> kGarments = {
    "shirt", "jacket", "hat", "dress", "coat", "scarf"};
inline constexpr std::array<std::string_view, 5> kNonRejectionSubsets = {
    "attribute", "position", "interaction", "reasoning", "celebrity"};

inline void check_config(const SynthConfig& cfg) {
  auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kInvalidConfig, why);
  };
  if (cfg.persons_per_image.empty() || cfg.gts_per_ref.empty() ||
      cfg.refs_per_image.empty()) {
    fail("ranges must satisfy lo <= hi");
  }
  if (cfg.gts_per_ref.lo < 1) fail("gts_per_ref must start at 1 or more");
  if (cfg.persons_per_image.lo < cfg.gts_per_ref.hi) {
    fail("persons_per_image lower bound must be >= gts_per_ref upper bound");
  }
  if (cfg.image_width == 0 || cfg.image_height == 0) fail("image size must be positive");
  if (!(cfg.jitter >= 0)) fail("jitter must be >= 0");
  if (!(cfg.rejection_fraction >= 0 && cfg.rejection_fraction <= 1)) {
    fail("rejection_fraction must be in [0, 1]");
  }
}

inline constexpr int kPlacementRetries = 2000;

inline std::vector<Box> place_persons(SeededRng& rng, std::size_t count,
                                      std::uint32_t width, std::uint32_t height) {
  const std::uint64_t w_lo = std::max<std::uint64_t>(2, width / 16);
  const std::uint64_t w_hi = std::max<std::uint64_t>(w_lo, width / 4);
  const std::uint64_t h_lo = std::max<std::uint64_t>(2, height / 8);
  const std::uint64_t h_hi = std::max<std::uint64_t>(h_lo, height / 2);
  if (w_hi > width || h_hi > height) {
    throw Error(ErrorCode::kConfigInfeasible, "image too small for person boxes");
  }
  std::vector<Box> boxes;
  for (std::size_t p = 0; p < count; ++p) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
      const std::uint64_t w = rng.uniform_int(w_lo, w_hi);
      const std::uint64_t h = rng.uniform_int(h_lo, h_hi);
      const std::uint64_t x = rng.uniform_int(0, width - w);
      const std::uint64_t y = rng.uniform_int(0, height - h);
      const Box candidate{static_cast<double>(x), static_cast<double>(y),
                          static_cast<double>(x + w), static_cast<double>(y + h)};
      placed = std::all_of(boxes.begin(), boxes.end(), [&](const Box& b) {
        return box_iou(b, candidate) < 0.5;
      });
      if (placed) boxes.push_back(candidate);
    }
    if (!placed) {
      throw Error(ErrorCode::kConfigInfeasible,
                  "could not place person " + std::to_string(p) + " of " +
                      std::to_string(count) + " without overlap");
    }
  }
  return boxes;
}

}  // namespace detail

/// Generates a seeded synthetic benchmark. Person boxes have integer corners
/// and pairwise IoU below 0.5; each person's mask is its box region.
inline SynthOutput generate(const SynthConfig& cfg) {
  detail::check_config(cfg);
  detail::SeededRng rng(cfg.seed);
  SynthOutput out;
  GenerationLedger& ledger = out.ledger;
  std::size_t subset_cursor = 0;

  for (std::size_t i = 0; i < cfg.n_images; ++i) {
    ImageRecord image;
    image.image_id = "synth-" + std::to_string(cfg.seed) + "-" + std::to_string(i);
    image.width = cfg.image_width;
    image.height = cfg.image_height;

    const auto n_persons = static_cast<std::size_t>(
        rng.uniform_int(cfg.persons_per_image.lo, cfg.persons_per_image.hi));
    for (const Box& box : detail::place_persons(rng, n_persons, image.width, image.height)) {
      PersonRecord person{box, std::nullopt};
      if (cfg.with_masks) person.mask = box_mask(box, image.height, image.width);
      image.persons.push_back(std::move(person));
    }

    const auto n_refs = static_cast<std::size_t>(
        rng.uniform_int(cfg.refs_per_image.lo, cfg.refs_per_image.hi));
    for (std::size_t r = 0; r < n_refs; ++r) {
      ReferringRecord ref;
      ref.id = image.image_id + "-r" + std::to_string(r);
      const bool reject = rng.unit() < cfg.rejection_fraction;
      if (reject) {
        ref.subset = Subset::kRejection;
      } else {
        ref.subset = *parse_subset(
            detail::kNonRejectionSubsets[subset_cursor++ % detail::kNonRejectionSubsets.size()]);
        const auto n_gt = static_cast<std::size_t>(
            rng.uniform_int(cfg.gts_per_ref.lo, cfg.gts_per_ref.hi));
        std::vector<std::size_t> pool(n_persons);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t k = 0; k < n_gt; ++k) {
          std::swap(pool[k], pool[rng.uniform_int(k, n_persons - 1)]);
        }
        ref.gt_indices.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n_gt));
        std::sort(ref.gt_indices.begin(), ref.gt_indices.end());
      }

      const std::array<std::string_view, 4> words = {
          reject ? std::string_view("nobody") : std::string_view("person"),
          "in",
          detail::kColors[rng.uniform_int(0, detail::kColors.size() - 1)],
          detail::kGarments[rng.uniform_int(0, detail::kGarments.size() - 1)]};
      for (std::string_view w : words) {
        if (!ref.text.empty()) ref.text += ' ';
        ref.text += w;
        ledger.vocabulary.emplace(w);
        ++ledger.total_tokens;
      }

      ++ledger.n_referrings;
      ++ledger.referrings_per_subset[ref.subset];
      if (!reject) {
        ++ledger.n_box_referrings;
        ledger.total_gt_boxes += ref.gt_indices.size();
        ++ledger.boxes_per_ref_hist[ref.gt_indices.size()];
      }
      image.referrings.push_back(std::move(ref));
    }

    ++ledger.n_images;
    ledger.n_persons += n_persons;
    ledger.width_sum += image.width;
    ledger.height_sum += image.height;
    ++ledger.persons_per_image_hist[n_persons];
    out.dataset.push_back(std::move(image));
  }
  return out;
}

/// Reference predictors.
struct BaselineKind {
  enum class Kind { kAllPersons, kOracle, kTopK, kEmpty, kJitteredOracle };

  Kind kind = Kind::kAllPersons;
  std::size_t k = 1;          // top_k
  double jitter = 0.0;        // jittered_oracle, fraction of box size
  std::uint64_t seed = 1;     // jittered_oracle

  static BaselineKind all_persons() { return {Kind::kAllPersons}; }
  static BaselineKind oracle() { return {Kind::kOracle}; }
  static BaselineKind empty() { return {Kind::kEmpty}; }
  static BaselineKind top_k(std::size_t k) {
    if (k < 1) throw Error(ErrorCode::kInvalidConfig, "top_k needs k >= 1");
    return {Kind::kTopK, k};
  }
  static BaselineKind jittered_oracle(double jitter, std::uint64_t seed = 1) {
    if (!(jitter >= 0)) throw Error(ErrorCode::kInvalidConfig, "jitter must be >= 0");
    return {Kind::kJitteredOracle, 1, jitter, seed};
  }

  /// Accepts "all_persons", "oracle", "empty", "top_k:<k>",
  /// "jittered_oracle:<jitter>".
  static BaselineKind parse(std::string_view text, std::uint64_t seed = 1) {
    const auto colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    const std::string_view arg =
        colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
    auto bad = [&] {
      return Error(ErrorCode::kInvalidConfig, "unknown baseline '" + std::string(text) + "'");
    };
    if (name == "all_persons" && arg.empty()) return all_persons();
    if (name == "oracle" && arg.empty()) return oracle();
    if (name == "empty" && arg.empty()) return empty();
    if (name == "top_k") {
      std::size_t k = 0;
      auto [p, ec] = std::from_chars(arg.data(), arg.data() + arg.size(), k);
      if (ec != std::errc() || p != arg.data() + arg.size()) throw bad();
      return top_k(k);
    }
    if (name == "jittered_oracle") {
      try {
        std::size_t used = 0;
        const double j = std::stod(std::string(arg), &used);
        if (used != arg.size()) throw bad();
        return jittered_oracle(j, seed);
      } catch (const std::logic_error&) {
        throw bad();
      }
    }
    throw bad();
  }
};

inline std::vector<PredictionSet> run_baseline(const BaselineKind& kind,
                                               const Dataset& dataset) {
  using Kind = BaselineKind::Kind;
  detail::SeededRng rng(kind.seed);
  std::vector<PredictionSet> out;
  for (const ImageRecord& image : dataset) {
    for (const ReferringRecord& ref : image.referrings) {
      std::vector<Box> boxes;
      switch (kind.kind) {
        case Kind::kAllPersons:
          for (const PersonRecord& p : image.persons) boxes.push_back(p.box);
          break;
        case Kind::kOracle:
          for (std::size_t idx : ref.gt_indices) boxes.push_back(image.persons.at(idx).box);
          break;
        case Kind::kTopK:
          for (std::size_t n = 0; n < std::min(kind.k, ref.gt_indices.size()); ++n) {
            boxes.push_back(image.persons.at(ref.gt_indices[n]).box);
          }
          break;
        case Kind::kEmpty:
          break;
        case Kind::kJitteredOracle:
          for (std::size_t idx : ref.gt_indices) {
            const Box& b = image.persons.at(idx).box;
            auto shift = [&](double extent) {
              return kind.jitter * extent * (2 * rng.unit() - 1);
            };
            const double x0 = b.x0 + shift(b.width());
            const double y0 = b.y0 + shift(b.height());
            const double x1 = b.x1 + shift(b.width());
            const double y1 = b.y1 + shift(b.height());
            boxes.push_back({std::min(x0, x1), std::min(y0, y1),
                             std::max(x0, x1), std::max(y0, y1)});
          }
          break;
      }
      PredictionSet p{ref.id, std::move(boxes)};
      out.push_back(normalize_prediction(std::move(p)));
    }
  }
  return out;
}

/// Counts at or above this value share one bucket.
inline constexpr std::size_t kInstanceBucketCap = 8;

struct InstanceBucket {
  std::size_t n_referrings = 0;
  double recall = 0;     // mean threshold-averaged recall, in [0, 1]
  double precision = 0;  // mean threshold-averaged precision, in [0, 1]
};

/// Recall and precision grouped by the number of ground-truth instances of
/// each (non-rejection) referring.
inline std::map<std::size_t, InstanceBucket> recall_by_instance_count(
    const Dataset& dataset, std::span<const PredictionSet> predictions,
    const EvalOptions& options = {}) {
  const EvaluationRun run = evaluate_referrings(dataset, predictions, options);

  struct Tally {
    InstanceBucket bucket;
    std::size_t match_total = 0;
    std::size_t gt_count = 0;
    std::size_t slots = 0;
    bool uniform = true;
  };
  std::map<std::size_t, Tally> tallies;
  for (const ReferringResult& r : run.results) {
    if (r.subset == Subset::kRejection) continue;
    Tally& t = tallies[std::min(r.gt_count, kInstanceBucketCap)];
    if (t.bucket.n_referrings == 0) t.gt_count = r.gt_count;
    if (r.gt_count != t.gt_count) t.uniform = false;
    if (r.match_slots != 0) {
      if (t.slots != 0 && t.slots != r.match_slots) t.uniform = false;
      t.slots = r.match_slots;
    }
    ++t.bucket.n_referrings;
    t.bucket.recall += r.scores.recall;
    t.bucket.precision += r.scores.precision;
    t.match_total += r.match_total;
  }

  std::map<std::size_t, InstanceBucket> buckets;
  for (auto& [count, t] : tallies) {
    const auto n = static_cast<double>(t.bucket.n_referrings);
    InstanceBucket b = t.bucket;
    // With one gt count and one slot count the mean recall is a single
    // integer ratio, so e.g. a bucket of 1/3 recalls is exactly 1/3.
    if (t.uniform && t.slots != 0) {
      b.recall = static_cast<double>(t.match_total) /
                 (static_cast<double>(t.slots) * static_cast<double>(t.gt_count) * n);
    } else {
      b.recall /= n;
    }
    b.precision /= n;
    buckets.emplace(count, b);
  }
  return buckets;
}

}  // namespace refeval
