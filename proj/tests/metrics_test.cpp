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


#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "refeval/metrics.hpp"
#include "refeval/synth.hpp"
#include "test_util.hpp"

namespace refeval {
namespace {

using testing::Rational;
using testing::symbolic_scores;

// Per-threshold match counts from the rasterization IoU and exhaustive
// assignment enumeration.
std::vector<std::size_t> oracle_matches(const std::vector<Box>& preds,
                                        const std::vector<Box>& gts) {
  std::vector<std::size_t> out;
  for (int step = 0; step < 10; ++step) {
    const double t = (50 + 5 * step) / 100.0;
    std::vector<std::vector<bool>> edges(preds.size(), std::vector<bool>(gts.size()));
    for (std::size_t i = 0; i < preds.size(); ++i) {
      for (std::size_t j = 0; j < gts.size(); ++j) {
        edges[i][j] = testing::raster_iou(preds[i], gts[j]) >= t;
      }
    }
    out.push_back(testing::enumerate_matching(edges));
  }
  return out;
}

TEST(DensityPenalty, Examples) {
  EXPECT_EQ(density_penalty(8, 2).value, 1.0);
  EXPECT_DOUBLE_EQ(density_penalty(2, 3).value, 2.0 / 3.0);
  EXPECT_EQ(density_penalty(5, 5).value, 1.0);
  try {
    density_penalty(3, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroPredictions);
  }
}

TEST(ReferringPrAtThreshold, Examples) {
  const std::vector<Box> gts = {{0, 0, 10, 10}, {20, 0, 30, 10}, {40, 0, 50, 10}};
  for (double t : kIouThresholds) {
    const auto pr = referring_pr_at_threshold(gts, gts, t);
    EXPECT_EQ(pr.recall, 1.0);
    EXPECT_EQ(pr.precision, 1.0);
  }
  const auto empty = referring_pr_at_threshold({}, gts, 0.5);
  EXPECT_EQ(empty.recall, 0.0);
  EXPECT_EQ(empty.precision, 0.0);

  const std::vector<Box> gt = {{0, 0, 10, 10}};
  const std::vector<Box> pred = {{0, 0, 10, 6}};
  ASSERT_EQ(testing::raster_iou(pred[0], gt[0]), 0.6);
  EXPECT_EQ(referring_pr_at_threshold(pred, gt, 0.55).recall, 1.0);
  EXPECT_EQ(referring_pr_at_threshold(pred, gt, 0.55).precision, 1.0);
  EXPECT_EQ(referring_pr_at_threshold(pred, gt, 0.65).recall, 0.0);
  EXPECT_EQ(referring_pr_at_threshold(pred, gt, 0.65).precision, 0.0);
  EXPECT_THROW(referring_pr_at_threshold(pred, {}, 0.5), Error);
}

TEST(ReferringMetrics, PerfectScore) {
  const std::vector<Box> gts = {{0, 0, 10, 10}, {20, 0, 30, 10}};
  const PRTriple s = referring_metrics(gts, gts, 4);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.precision, 1.0);
  EXPECT_EQ(s.density_f1, 1.0);
}

TEST(ReferringMetrics, OneGtThreePredsTwoPersons) {
  const std::vector<Box> gt = {{0, 0, 10, 10}};
  const std::vector<Box> preds = {{0, 0, 10, 10}, {50, 50, 60, 60}, {80, 80, 90, 90}};
  const auto o = symbolic_scores(oracle_matches(preds, gt), 3, 1, 2);
  EXPECT_EQ(o.recall.num, 1);
  EXPECT_EQ(o.recall.den, 1);
  EXPECT_EQ(o.precision.num, 1);
  EXPECT_EQ(o.precision.den, 3);
  EXPECT_EQ(o.df1.num, 1);
  EXPECT_EQ(o.df1.den, 3);

  const PRTriple s = referring_metrics(preds, gt, 2);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_NEAR(s.precision, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(s.f1, 0.5, 1e-12);
  EXPECT_NEAR(s.density_f1, 1.0 / 3.0, 1e-12);
}

TEST(ReferringMetrics, SinglePairAtIouPointSix) {
  const std::vector<Box> gt = {{0, 0, 10, 10}};
  const std::vector<Box> pred = {{0, 0, 10, 6}};
  const auto matches = oracle_matches(pred, gt);
  EXPECT_EQ(matches, (std::vector<std::size_t>{1, 1, 1, 0, 0, 0, 0, 0, 0, 0}));
  const PRTriple s = referring_metrics(pred, gt, 1);
  EXPECT_NEAR(s.recall, 0.3, 1e-12);
  EXPECT_NEAR(s.precision, 0.3, 1e-12);
  EXPECT_NEAR(s.density_f1, 0.3, 1e-12);
}

TEST(ReferringMetrics, EmptyPredictionsAndEmptyGt) {
  const std::vector<Box> gt = {{0, 0, 10, 10}};
  EXPECT_EQ(referring_metrics({}, gt, 3), PRTriple{});
  try {
    referring_metrics(gt, {}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyGt);
  }
}

TEST(ReferringMetrics, ReferringGtNumerator) {
  const std::vector<Box> gt = {{0, 0, 10, 10}};
  const std::vector<Box> preds = {{0, 0, 10, 10}, {50, 50, 60, 60}};
  // Image numerator: D = min(1, 5/2) = 1. Referring numerator: D = 1/2.
  const PRTriple image = referring_metrics(preds, gt, 5);
  const PRTriple ref = referring_metrics(preds, gt, 5, DensityNumerator::kReferringGt);
  EXPECT_NEAR(image.density_f1, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(ref.density_f1, 1.0 / 3.0, 1e-12);
}

TEST(ReferringMetrics, MatchesSymbolicOracleOnRandomReferrings) {
  std::mt19937_64 rng(21);
  std::uniform_int_distribution<int> count(0, 6), gt_count(1, 6), persons(1, 8);
  for (int i = 0; i < 3000; ++i) {
    std::vector<Box> gts, preds;
    for (int k = gt_count(rng); k > 0; --k) gts.push_back(testing::random_int_box(rng, 30, 1));
    for (int k = count(rng); k > 0; --k) {
      // Mix perturbed copies of gts with free boxes so every threshold sees action.
      if (rng() % 2 && !gts.empty()) {
        Box b = gts[rng() % gts.size()];
        b.x1 += static_cast<double>(rng() % 3);
        b.y0 = std::max(0.0, b.y0 - static_cast<double>(rng() % 2));
        preds.push_back(b);
      } else {
        preds.push_back(testing::random_int_box(rng, 30));
      }
    }
    const int n = persons(rng);
    for (DensityNumerator mode : {DensityNumerator::kImagePersons, DensityNumerator::kReferringGt}) {
      const std::int64_t numerator =
          mode == DensityNumerator::kImagePersons ? n : static_cast<std::int64_t>(gts.size());
      const auto o = symbolic_scores(oracle_matches(preds, gts),
                                     static_cast<std::int64_t>(preds.size()),
                                     static_cast<std::int64_t>(gts.size()), numerator);
      const PRTriple s = referring_metrics(preds, gts, static_cast<std::size_t>(n), mode);
      ASSERT_NEAR(s.recall, o.recall.value(), 1e-12) << i;
      ASSERT_NEAR(s.precision, o.precision.value(), 1e-12) << i;
      ASSERT_NEAR(s.density_f1, o.df1.value(), 1e-12) << i;
    }
  }
}

TEST(ReferringMetrics, DensityF1NeverExceedsF1) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> count(1, 8), persons(1, 8);
  for (int i = 0; i < 3000; ++i) {
    std::vector<Box> gts, preds;
    for (int k = count(rng); k > 0; --k) gts.push_back(testing::random_int_box(rng, 20, 1));
    for (int k = count(rng); k > 0; --k) preds.push_back(testing::random_int_box(rng, 20));
    const auto n = static_cast<std::size_t>(persons(rng));
    const PRTriple s = referring_metrics(preds, gts, n);
    ASSERT_LE(s.density_f1, s.f1);
    ASSERT_LE(s.f1, f1_score(s.recall, s.precision) + 1e-12);
    if (preds.size() <= n) {
      ASSERT_EQ(s.density_f1, s.f1);
    } else if (s.f1 > 0) {
      ASSERT_LT(s.density_f1, s.f1);
    }
  }
}

TEST(ReferringMetrics, RecallNonIncreasingInThreshold) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 500; ++i) {
    std::vector<Box> gts, preds;
    for (int k = 0; k < 4; ++k) gts.push_back(testing::random_int_box(rng, 20, 1));
    for (int k = 0; k < 4; ++k) preds.push_back(testing::random_int_box(rng, 20));
    double prev = 2;
    for (double t : kIouThresholds) {
      const double r = referring_pr_at_threshold(preds, gts, t).recall;
      ASSERT_LE(r, prev);
      prev = r;
    }
    const PRTriple s = referring_metrics(preds, gts, 4);
    ASSERT_LE(s.recall, referring_pr_at_threshold(preds, gts, 0.5).recall + 1e-15);
    ASSERT_GE(s.recall, referring_pr_at_threshold(preds, gts, 0.95).recall - 1e-15);
  }
}

TEST(PointMetrics, Examples) {
  const RleMask mask = box_mask({0, 0, 4, 4}, 8, 8);
  const std::vector<RleMask> masks = {mask};
  const PRTriple one = point_referring_metrics(std::vector<Point>{{1.5, 1.5}}, masks, 1);
  EXPECT_EQ(one.recall, 1.0);
  EXPECT_EQ(one.precision, 1.0);
  EXPECT_EQ(one.density_f1, 1.0);

  const PRTriple two =
      point_referring_metrics(std::vector<Point>{{1.5, 1.5}, {2.5, 0.5}}, masks, 1);
  EXPECT_EQ(two.recall, 1.0);
  EXPECT_EQ(two.precision, 0.5);
  EXPECT_NEAR(two.density_f1, 1.0 / 3.0, 1e-15);  // F1 = 2/3, D = 1/2

  EXPECT_EQ(point_referring_metrics({}, masks, 1), PRTriple{});
}

TEST(PointMetrics, OneToOneAcrossMasks) {
  // Both points fall in the overlap of two masks; each mask takes one point.
  const std::vector<RleMask> masks = {box_mask({0, 0, 4, 4}, 8, 8), box_mask({2, 2, 6, 6}, 8, 8)};
  const PRTriple s = point_referring_metrics(std::vector<Point>{{3, 3}, {3.5, 2.5}}, masks, 2);
  EXPECT_EQ(s.recall, 1.0);
  EXPECT_EQ(s.precision, 1.0);
}

TEST(PointMetrics, Errors) {
  const std::vector<Point> pts = {{1, 1}};
  try {
    point_referring_metrics(pts, {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyGt);
  }
  const std::vector<RleMask> mixed = {RleMask{2, 2, {4}}, RleMask{3, 2, {6}}};
  try {
    point_referring_metrics(pts, mixed, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

std::vector<PredictionSet> rejection_fixture(std::size_t rejections, std::size_t total) {
  std::vector<PredictionSet> out;
  for (std::size_t i = 0; i < total; ++i) {
    PredictionSet p{"r" + std::to_string(i), Rejection{}};
    if (i >= rejections) p.payload = std::vector<Box>{{0, 0, 1, 1}};
    out.push_back(p);
  }
  return out;
}

TEST(RejectionScore, Examples) {
  EXPECT_EQ(rejection_score(rejection_fixture(10, 10)), 100.0);
  EXPECT_EQ(rejection_score(rejection_fixture(0, 10)), 0.0);
  EXPECT_EQ(rejection_score(rejection_fixture(541, 1000)), 54.1);
  // An empty box list is a rejection.
  const std::vector<PredictionSet> empty_list = {{"a", std::vector<Box>{}}};
  EXPECT_EQ(rejection_score(empty_list), 100.0);
  try {
    rejection_score({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyInput);
  }
}

// Four persons; two attribute and position referrings plus one rejection.
Dataset mixed_fixture() {
  ImageRecord image{"img", 100, 100, {}, {}};
  for (int k = 0; k < 4; ++k) {
    const Box b{20.0 * k, 0, 20.0 * k + 10, 10};
    image.persons.push_back({b, box_mask(b, 100, 100)});
  }
  image.referrings = {{"a0", "a", Subset::kAttribute, {0, 1}},
                      {"p0", "p", Subset::kPosition, {2}},
                      {"p1", "p", Subset::kPosition, {3}},
                      {"x0", "x", Subset::kRejection, {}}};
  return {image};
}

TEST(Aggregate, MixedSubsetsByHand) {
  const Dataset ds = mixed_fixture();
  const auto& persons = ds[0].persons;
  const std::vector<PredictionSet> preds = {
      {"a0", std::vector<Box>{persons[0].box, persons[1].box}},
      {"p0", std::vector<Box>{persons[2].box, persons[3].box}},
      {"p1", Rejection{}},
      {"x0", std::vector<Box>{persons[0].box}}};
  const EvalReport r = aggregate(ds, preds);
  ASSERT_EQ(r.per_subset.size(), 2u);
  EXPECT_EQ(r.per_subset[0].subset, Subset::kAttribute);
  EXPECT_EQ(r.per_subset[0].density_f1, 100.0);
  EXPECT_EQ(r.per_subset[1].subset, Subset::kPosition);
  EXPECT_EQ(r.per_subset[1].n_referrings, 2u);
  // p0: R = 1, P = 1/2, F1 = 2/3, D = 1; p1: zeros.
  EXPECT_NEAR(r.per_subset[1].recall, 50.0, 1e-12);
  EXPECT_NEAR(r.per_subset[1].precision, 25.0, 1e-12);
  EXPECT_NEAR(r.per_subset[1].density_f1, 100.0 / 3.0, 1e-12);
  ASSERT_TRUE(r.average.has_value());
  EXPECT_NEAR(r.average->density_f1, (100.0 + 100.0 / 3.0) / 2.0, 1e-12);
  EXPECT_NEAR(r.average->recall, 75.0, 1e-12);
  ASSERT_TRUE(r.rejection_score.has_value());
  EXPECT_EQ(*r.rejection_score, 0.0);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Aggregate, PerfectPredictions) {
  const Dataset ds = mixed_fixture();
  const auto preds = run_baseline(BaselineKind::oracle(), ds);
  const EvalReport r = aggregate(ds, preds);
  for (const SubsetReport& s : r.per_subset) {
    EXPECT_EQ(s.recall, 100.0);
    EXPECT_EQ(s.precision, 100.0);
    EXPECT_EQ(s.density_f1, 100.0);
  }
  EXPECT_EQ(r.average->density_f1, 100.0);
  EXPECT_EQ(*r.rejection_score, 100.0);
}

TEST(Aggregate, AllPersonsRecallIsFull) {
  const Dataset ds = mixed_fixture();
  const EvalReport r = aggregate(ds, run_baseline(BaselineKind::all_persons(), ds));
  for (const SubsetReport& s : r.per_subset) EXPECT_EQ(s.recall, 100.0);
  EXPECT_EQ(*r.rejection_score, 0.0);
}

TEST(Aggregate, MissingPredictionIsRejectionWithWarning) {
  const Dataset ds = mixed_fixture();
  auto preds = run_baseline(BaselineKind::oracle(), ds);
  preds.erase(preds.begin() + 1);  // p0
  const EvalReport r = aggregate(ds, preds);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("p0"), std::string::npos);
  EXPECT_NEAR(r.per_subset[1].recall, 50.0, 1e-12);
}

TEST(Aggregate, UnknownReferringId) {
  const Dataset ds = mixed_fixture();
  const std::vector<PredictionSet> preds = {{"nope", Rejection{}}};
  try {
    aggregate(ds, preds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownReferringId);
  }
}

TEST(Aggregate, SubsetFilter) {
  const Dataset ds = mixed_fixture();
  EvalOptions options;
  options.subset = Subset::kPosition;
  const EvalReport r = aggregate(ds, run_baseline(BaselineKind::oracle(), ds), options);
  ASSERT_EQ(r.per_subset.size(), 1u);
  EXPECT_EQ(r.per_subset[0].subset, Subset::kPosition);
  EXPECT_FALSE(r.rejection_score.has_value());
}

TEST(Aggregate, PointPayloadsUseMasks) {
  const Dataset ds = mixed_fixture();
  const std::vector<PredictionSet> preds = {
      {"a0", std::vector<Point>{{5, 5}, {25, 5}}},
      {"p0", std::vector<Point>{{45, 5}, {46, 6}}},
      {"p1", std::vector<Point>{{95, 95}}},
      {"x0", Rejection{}}};
  EvalOptions options;
  options.point_eval = true;
  const EvalReport r = aggregate(ds, preds, options);
  EXPECT_TRUE(r.point_protocol);
  EXPECT_EQ(r.per_subset[0].density_f1, 100.0);
  EXPECT_NEAR(r.per_subset[1].recall, 50.0, 1e-12);
  EXPECT_NEAR(r.per_subset[1].precision, 25.0, 1e-12);

  const auto boxes = run_baseline(BaselineKind::oracle(), ds);
  EXPECT_THROW(aggregate(ds, boxes, options), Error);
}

TEST(Aggregate, PointPayloadWithoutMaskFails) {
  Dataset ds = mixed_fixture();
  ds[0].persons[0].mask.reset();
  const std::vector<PredictionSet> preds = {{"a0", std::vector<Point>{{5, 5}}}};
  try {
    aggregate(ds, preds);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingMask);
  }
}

TEST(Aggregate, OvershootingBoxesAreClamped) {
  const Dataset ds = mixed_fixture();
  const std::vector<PredictionSet> preds = {{"a0", std::vector<Box>{{-5, -5, 10, 10}}}};
  const EvalReport r = aggregate(ds, preds);
  EXPECT_TRUE(std::any_of(r.warnings.begin(), r.warnings.end(), [](const std::string& w) {
    return w.find("clamped") != std::string::npos;
  }));
  EXPECT_NEAR(r.per_subset[0].recall, 50.0, 1e-12);
}

SynthConfig property_config(std::uint64_t seed) {
  SynthConfig cfg;
  cfg.seed = seed;
  cfg.n_images = 3;
  cfg.persons_per_image = {3, 7};
  cfg.gts_per_ref = {1, 3};
  cfg.refs_per_image = {1, 4};
  cfg.image_width = 160;
  cfg.image_height = 120;
  cfg.rejection_fraction = 0.2;
  return cfg;
}

// Jittered gt boxes plus a few spurious boxes per referring.
std::vector<PredictionSet> noisy_predictions(const Dataset& ds, std::uint64_t seed) {
  auto preds = run_baseline(BaselineKind::jittered_oracle(0.15, seed), ds);
  std::mt19937_64 rng(seed);
  std::size_t k = 0;
  for (const ImageRecord& image : ds) {
    for (std::size_t r = 0; r < image.referrings.size(); ++r, ++k) {
      std::vector<Box> boxes = preds[k].boxes() ? *preds[k].boxes() : std::vector<Box>{};
      for (int extra = static_cast<int>(rng() % 3); extra > 0; --extra) {
        boxes.push_back(image.persons[rng() % image.persons.size()].box);
      }
      if (rng() % 5 == 0) boxes.clear();
      // Eighth-pixel grid keeps every scaled coordinate exactly representable.
      for (Box& b : boxes) {
        b = {std::round(b.x0 * 8) / 8, std::round(b.y0 * 8) / 8, std::round(b.x1 * 8) / 8,
             std::round(b.y1 * 8) / 8};
      }
      preds[k] = normalize_prediction({preds[k].referring_id, boxes});
    }
  }
  return preds;
}

void expect_identical(const EvalReport& a, const EvalReport& b) {
  ASSERT_EQ(a.per_subset.size(), b.per_subset.size());
  for (std::size_t i = 0; i < a.per_subset.size(); ++i) {
    EXPECT_EQ(a.per_subset[i].recall, b.per_subset[i].recall);
    EXPECT_EQ(a.per_subset[i].precision, b.per_subset[i].precision);
    EXPECT_EQ(a.per_subset[i].density_f1, b.per_subset[i].density_f1);
  }
  ASSERT_EQ(a.average.has_value(), b.average.has_value());
  if (a.average) {
    EXPECT_EQ(a.average->recall, b.average->recall);
    EXPECT_EQ(a.average->precision, b.average->precision);
    EXPECT_EQ(a.average->density_f1, b.average->density_f1);
  }
  EXPECT_EQ(a.rejection_score, b.rejection_score);
}

TEST(Aggregate, PermutationInvariant) {
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Dataset ds = generate(property_config(seed)).dataset;
    auto preds = noisy_predictions(ds, seed);
    const EvalReport base = aggregate(ds, preds);

    std::mt19937_64 rng(seed);
    std::shuffle(preds.begin(), preds.end(), rng);
    for (PredictionSet& p : preds) {
      if (auto* boxes = std::get_if<std::vector<Box>>(&p.payload)) {
        std::shuffle(boxes->begin(), boxes->end(), rng);
      }
    }
    for (ImageRecord& image : ds) {
      for (ReferringRecord& ref : image.referrings) {
        std::shuffle(ref.gt_indices.begin(), ref.gt_indices.end(), rng);
      }
    }
    expect_identical(base, aggregate(ds, preds));
  }
}

TEST(Aggregate, ScaleInvariant) {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const Dataset ds = generate(property_config(seed)).dataset;
    const auto preds = noisy_predictions(ds, seed);
    const EvalReport base = aggregate(ds, preds);
    for (double s : {0.25, 0.5, 2.0, 3.0}) {
      Dataset scaled = ds;
      for (ImageRecord& image : scaled) {
        image.width = static_cast<std::uint32_t>(image.width * s);
        image.height = static_cast<std::uint32_t>(image.height * s);
        for (PersonRecord& p : image.persons) {
          p.box = {p.box.x0 * s, p.box.y0 * s, p.box.x1 * s, p.box.y1 * s};
          p.mask.reset();
        }
      }
      auto scaled_preds = preds;
      for (PredictionSet& p : scaled_preds) {
        if (auto* boxes = std::get_if<std::vector<Box>>(&p.payload)) {
          for (Box& b : *boxes) b = {b.x0 * s, b.y0 * s, b.x1 * s, b.y1 * s};
        }
      }
      expect_identical(base, aggregate(scaled, scaled_preds));
    }
  }
}

TEST(Aggregate, WorkerCountDoesNotChangeResults) {
  SynthConfig cfg = property_config(77);
  cfg.n_images = 60;
  const Dataset ds = generate(cfg).dataset;
  const auto preds = noisy_predictions(ds, 77);
  const EvalReport one = aggregate(ds, preds);
  for (unsigned w : {2u, 3u, 8u}) {
    EvalOptions options;
    options.workers = w;
    expect_identical(one, aggregate(ds, preds, options));
  }
}

}  // namespace
}  // namespace refeval
