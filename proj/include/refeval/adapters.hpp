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
#include <charconv>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "refeval/error.hpp"
#include "refeval/types.hpp"
#include "refeval/validate.hpp"

namespace refeval {

/// Decoded retrieval-style model output: the echoed referring text and the
/// ordered indices of the selected input boxes.
struct RetrievalOutput {
  std::string referring_text;
  std::vector<std::size_t> indices;

  friend bool operator==(const RetrievalOutput&, const RetrievalOutput&) = default;
};

/// Parses `<g>text</g><o><objM>...<objN></o>`. Object tokens are strictly
/// `<obj` + decimal digits + `>`. Text between `</g>` and `<o>` and outside
/// the outer delimiters is ignored.
inline RetrievalOutput parse_retrieval_output(std::string_view text) {
  using npos_t = std::string_view::size_type;
  constexpr npos_t npos = std::string_view::npos;
  const npos_t g_open = text.find("<g>");
  const npos_t g_close = g_open == npos ? npos : text.find("</g>", g_open + 3);
  const npos_t o_open = g_close == npos ? npos : text.find("<o>", g_close + 4);
  const npos_t o_close = o_open == npos ? npos : text.find("</o>", o_open + 3);
  if (o_close == npos) {
    throw Error(ErrorCode::kMalformedOutput,
                "expected <g>...</g><o>...</o> in \"" + std::string(text) + "\"");
  }

  RetrievalOutput out;
  out.referring_text = std::string(text.substr(g_open + 3, g_close - g_open - 3));
  std::string_view span = text.substr(o_open + 3, o_close - o_open - 3);
  while (!span.empty()) {
    if (!span.starts_with("<obj")) {
      throw Error(ErrorCode::kMalformedOutput,
                  "unexpected content in object span: \"" + std::string(span) + "\"");
    }
    const auto end = span.find('>');
    if (end == npos) {
      throw Error(ErrorCode::kBadIndexToken, "unterminated object token");
    }
    const std::string_view digits = span.substr(4, end - 4);
    std::size_t index = 0;
    const auto [ptr, ec] =
        std::from_chars(digits.data(), digits.data() + digits.size(), index);
    if (digits.empty() || ec != std::errc() ||
        ptr != digits.data() + digits.size()) {
      throw Error(ErrorCode::kBadIndexToken,
                  "\"" + std::string(span.substr(0, end + 1)) + "\"");
    }
    out.indices.push_back(index);
    span.remove_prefix(end + 1);
  }
  return out;
}

/// Inverse of parse_retrieval_output.
inline std::string render_retrieval_output(const RetrievalOutput& r) {
  std::string out = "<g>" + r.referring_text + "</g><o>";
  for (std::size_t index : r.indices) {
    out += "<obj" + std::to_string(index) + ">";
  }
  out += "</o>";
  return out;
}

/// Maps object indices onto the input boxes. Repeated indices keep their
/// first occurrence; no indices means rejection.
inline PredictionSet resolve_indices(const RetrievalOutput& r,
                                     std::span<const Box> input_boxes,
                                     std::string referring_id = {}) {
  PredictionSet out{std::move(referring_id), Rejection{}};
  if (r.indices.empty()) return out;
  std::vector<Box> boxes;
  std::unordered_set<std::size_t> seen;
  for (std::size_t index : r.indices) {
    if (index >= input_boxes.size()) {
      throw Error(ErrorCode::kIndexOutOfRange, std::to_string(index));
    }
    if (seen.insert(index).second) boxes.push_back(input_boxes[index]);
  }
  out.payload = std::move(boxes);
  return out;
}

/// Referring id to the person boxes of its image, for resolving raw
/// retrieval records.
class PersonBoxIndex {
 public:
  explicit PersonBoxIndex(const Dataset& dataset) {
    for (const ImageRecord& image : dataset) {
      std::vector<Box> boxes;
      boxes.reserve(image.persons.size());
      for (const PersonRecord& p : image.persons) boxes.push_back(p.box);
      images_.push_back(std::move(boxes));
      for (const ReferringRecord& ref : image.referrings) {
        by_referring_.emplace(ref.id, images_.size() - 1);
      }
    }
  }

  const std::vector<Box>* find(const std::string& referring_id) const {
    auto it = by_referring_.find(referring_id);
    return it == by_referring_.end() ? nullptr : &images_[it->second];
  }

 private:
  std::vector<std::vector<Box>> images_;
  std::unordered_map<std::string, std::size_t> by_referring_;
};

namespace detail {

template <std::size_t N>
std::array<double, N> number_tuple(const nlohmann::json& j, std::size_t line,
                                   const char* what) {
  if (!j.is_array() || j.size() != N) {
    throw ParseError(ErrorCode::kSchemaError, line,
                     std::string(what) + " entries must be arrays of " +
                         std::to_string(N) + " numbers");
  }
  std::array<double, N> out{};
  for (std::size_t k = 0; k < N; ++k) {
    if (!j[k].is_number()) {
      throw ParseError(ErrorCode::kSchemaError, line,
                       std::string(what) + " coordinate is not a number");
    }
    out[k] = j[k].get<double>();
  }
  return out;
}

inline PredictionSet parse_prediction_record(const nlohmann::json& j,
                                             std::size_t line,
                                             const PersonBoxIndex* index) {
  if (!j.is_object()) {
    throw ParseError(ErrorCode::kSchemaError, line, "record is not an object");
  }
  auto id = j.find("referring_id");
  if (id == j.end() || !id->is_string()) {
    throw ParseError(ErrorCode::kSchemaError, line,
                     "missing string field referring_id");
  }
  PredictionSet out{id->get<std::string>(), Rejection{}};
  if (index && !index->find(out.referring_id)) {
    throw ParseError(ErrorCode::kUnknownReferringId, line, out.referring_id);
  }

  int payloads = 0;
  for (const char* key : {"boxes", "points", "rejection", "raw"}) {
    payloads += j.contains(key) ? 1 : 0;
  }
  if (payloads != 1) {
    throw ParseError(ErrorCode::kSchemaError, line,
                     "expected exactly one of boxes, points, rejection, raw");
  }

  if (auto it = j.find("boxes"); it != j.end()) {
    if (!it->is_array()) {
      throw ParseError(ErrorCode::kSchemaError, line, "boxes must be an array");
    }
    std::vector<Box> boxes;
    for (const auto& b : *it) {
      const auto c = number_tuple<4>(b, line, "boxes");
      boxes.push_back({c[0], c[1], c[2], c[3]});
    }
    out.payload = std::move(boxes);
  } else if (auto it = j.find("points"); it != j.end()) {
    if (!it->is_array()) {
      throw ParseError(ErrorCode::kSchemaError, line, "points must be an array");
    }
    std::vector<Point> points;
    for (const auto& p : *it) {
      const auto c = number_tuple<2>(p, line, "points");
      points.push_back({c[0], c[1]});
    }
    out.payload = std::move(points);
  } else if (auto it = j.find("rejection"); it != j.end()) {
    if (!it->is_boolean() || !it->get<bool>()) {
      throw ParseError(ErrorCode::kSchemaError, line, "rejection must be true");
    }
  } else {
    const auto& raw = j["raw"];
    if (!raw.is_string()) {
      throw ParseError(ErrorCode::kSchemaError, line, "raw must be a string");
    }
    if (!index) {
      throw ParseError(ErrorCode::kSchemaError, line,
                       "raw records need the dataset to resolve box indices");
    }
    const std::vector<Box>* boxes = index->find(out.referring_id);
    try {
      out = resolve_indices(parse_retrieval_output(raw.get<std::string>()),
                            *boxes, out.referring_id);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.code(), line, e.detail());
    }
  }

  try {
    return normalize_prediction(std::move(out));
  } catch (const Error& e) {
    throw ParseError(e.code(), line, e.detail());
  }
}

}  // namespace detail

/// Reads line-delimited prediction records. Blank lines are skipped. With
/// `index`, referring ids are checked against the dataset and raw retrieval
/// records are resolved; without it raw records are a schema error.
inline std::vector<PredictionSet> parse_box_predictions(
    std::string_view content, const PersonBoxIndex* index = nullptr) {
  std::vector<PredictionSet> out;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  while (!content.empty()) {
    ++line_no;
    const auto nl = content.find('\n');
    std::string_view line = content.substr(0, nl);
    content.remove_prefix(nl == std::string_view::npos ? content.size() : nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(ErrorCode::kSchemaError, line_no, e.what());
    }
    PredictionSet p = detail::parse_prediction_record(j, line_no, index);
    if (!seen.insert(p.referring_id).second) {
      throw ParseError(ErrorCode::kSchemaError, line_no,
                       "duplicate prediction for " + p.referring_id);
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace refeval
