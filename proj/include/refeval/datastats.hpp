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

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "refeval/types.hpp"

namespace refeval {

/// Lowercases, splits on whitespace and strips leading/trailing ASCII
/// punctuation from each token. Interior punctuation ("second-from-left")
/// is kept.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  auto is_punct = [](char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; };
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    std::size_t b = i, e = j;
    while (b < e && is_punct(text[b])) ++b;
    while (e > b && is_punct(text[e - 1])) --e;
    if (b < e) {
      std::string token(text.substr(b, e - b));
      for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      tokens.push_back(std::move(token));
    }
    i = j;
  }
  return tokens;
}

struct SubsetStats {
  Subset subset = Subset::kAttribute;
  std::size_t n_images = 0;  // images with at least one referring of this subset
  std::size_t n_referrings = 0;
  std::size_t total_boxes = 0;
  std::optional<double> avg_boxes_per_ref;
};

/// Averages are absent (not zero) when their denominator is zero.
struct DatasetStats {
  std::size_t n_images = 0;
  std::size_t n_referrings = 0;
  std::size_t n_persons = 0;
  std::size_t n_box_referrings = 0;  // non-rejection referrings
  std::size_t total_tokens = 0;
  std::size_t total_gt_boxes = 0;
  std::size_t vocab_size = 0;
  std::optional<double> avg_words_per_ref;
  std::optional<double> avg_boxes_per_ref;  // over non-rejection referrings
  std::optional<double> avg_persons_per_image;
  std::optional<std::pair<double, double>> avg_image_size;  // (width, height)
  std::map<std::size_t, std::size_t> persons_per_image_hist;
  std::map<std::size_t, std::size_t> boxes_per_ref_hist;  // non-rejection only
  std::vector<SubsetStats> per_subset;  // canonical order, present subsets only
};

inline DatasetStats compute_stats(const Dataset& dataset) {
  DatasetStats s;
  std::set<std::string> vocab;
  std::map<Subset, SubsetStats> subsets;
  double width_sum = 0, height_sum = 0;

  for (const ImageRecord& image : dataset) {
    ++s.n_images;
    s.n_persons += image.persons.size();
    ++s.persons_per_image_hist[image.persons.size()];
    width_sum += image.width;
    height_sum += image.height;

    std::set<Subset> seen_here;
    for (const ReferringRecord& ref : image.referrings) {
      ++s.n_referrings;
      for (std::string& token : tokenize(ref.text)) {
        ++s.total_tokens;
        vocab.insert(std::move(token));
      }
      SubsetStats& ss = subsets[ref.subset];
      ss.subset = ref.subset;
      ++ss.n_referrings;
      ss.total_boxes += ref.gt_indices.size();
      if (seen_here.insert(ref.subset).second) ++ss.n_images;
      if (ref.subset != Subset::kRejection) {
        ++s.n_box_referrings;
        s.total_gt_boxes += ref.gt_indices.size();
        ++s.boxes_per_ref_hist[ref.gt_indices.size()];
      }
    }
  }

  s.vocab_size = vocab.size();
  if (s.n_referrings > 0) {
    s.avg_words_per_ref = static_cast<double>(s.total_tokens) / static_cast<double>(s.n_referrings);
  }
  if (s.n_box_referrings > 0) {
    s.avg_boxes_per_ref = static_cast<double>(s.total_gt_boxes) / static_cast<double>(s.n_box_referrings);
  }
  if (s.n_images > 0) {
    const auto n = static_cast<double>(s.n_images);
    s.avg_persons_per_image = static_cast<double>(s.n_persons) / n;
    s.avg_image_size = std::make_pair(width_sum / n, height_sum / n);
  }
  for (auto& [subset, ss] : subsets) {
    ss.avg_boxes_per_ref = static_cast<double>(ss.total_boxes) / static_cast<double>(ss.n_referrings);
    s.per_subset.push_back(ss);
  }
  return s;
}

}  // namespace refeval
