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

#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "refeval/datastats.hpp"
#include "refeval/error.hpp"
#include "refeval/metrics.hpp"
#include "refeval/synth.hpp"
#include "refeval/types.hpp"
#include "refeval/validate.hpp"

namespace refeval::io {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Dataset records

inline Json to_json(const Box& b) { return Json::array({b.x0, b.y0, b.x1, b.y1}); }

inline Json to_json(const RleMask& m) {
  return Json{{"size", Json::array({m.height, m.width})}, {"counts", m.counts}};
}

inline Json to_json(const ImageRecord& image) {
  Json persons = Json::array();
  for (const PersonRecord& p : image.persons) {
    Json jp{{"box", to_json(p.box)}};
    if (p.mask) jp["mask"] = to_json(*p.mask);
    persons.push_back(std::move(jp));
  }
  Json referrings = Json::array();
  for (const ReferringRecord& r : image.referrings) {
    referrings.push_back(Json{{"id", r.id},
                              {"text", r.text},
                              {"subset", to_string(r.subset)},
                              {"gt_indices", r.gt_indices}});
  }
  return Json{{"image_id", image.image_id},
              {"width", image.width},
              {"height", image.height},
              {"persons", std::move(persons)},
              {"referrings", std::move(referrings)}};
}

namespace detail {

class Reader {
 public:
  explicit Reader(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(const std::string& why,
                         ErrorCode code = ErrorCode::kSchemaError) const {
    throw ParseError(code, line_, why);
  }

  const Json& field(const Json& obj, const char* key) const {
    auto it = obj.find(key);
    if (it == obj.end()) fail(std::string("missing field ") + key);
    return *it;
  }

  std::string string(const Json& obj, const char* key) const {
    const Json& v = field(obj, key);
    if (!v.is_string()) fail(std::string(key) + " must be a string");
    return v.get<std::string>();
  }

  std::uint64_t unsigned_int(const Json& v, const char* what,
                             std::uint64_t max = UINT64_MAX) const {
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() > max) {
      fail(std::string(what) + " must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  const Json& array(const Json& v, const char* what) const {
    if (!v.is_array()) fail(std::string(what) + " must be an array");
    return v;
  }

  Box box(const Json& v) const {
    if (!v.is_array() || v.size() != 4) fail("box must be [x0, y0, x1, y1]");
    double c[4];
    for (std::size_t k = 0; k < 4; ++k) {
      if (!v[k].is_number()) fail("box coordinate is not a number");
      c[k] = v[k].get<double>();
    }
    const Box b{c[0], c[1], c[2], c[3]};
    if (!b.is_finite()) fail("non-finite box coordinate", ErrorCode::kInvalidCoordinate);
    if (!b.is_valid()) fail("box corners out of order", ErrorCode::kInvalidBox);
    return b;
  }

  RleMask mask(const Json& v) const {
    if (!v.is_object()) fail("mask must be an object");
    const Json& size = array(field(v, "size"), "mask size");
    if (size.size() != 2) fail("mask size must be [height, width]");
    RleMask m;
    m.height = static_cast<std::uint32_t>(unsigned_int(size[0], "mask height", UINT32_MAX));
    m.width = static_cast<std::uint32_t>(unsigned_int(size[1], "mask width", UINT32_MAX));
    for (const Json& c : array(field(v, "counts"), "mask counts")) {
      m.counts.push_back(unsigned_int(c, "run length"));
    }
    return m;
  }

 private:
  std::size_t line_;
};

}  // namespace detail

/// Parses one dataset line. Person boxes overshooting the image are clamped
/// and reported through `warnings`.
inline ImageRecord image_from_json(const Json& j, std::size_t line,
                                   std::vector<std::string>* warnings = nullptr) {
  const detail::Reader r(line);
  if (!j.is_object()) r.fail("record is not an object");
  ImageRecord image;
  image.image_id = r.string(j, "image_id");
  image.width = static_cast<std::uint32_t>(r.unsigned_int(r.field(j, "width"), "width", UINT32_MAX));
  image.height = static_cast<std::uint32_t>(r.unsigned_int(r.field(j, "height"), "height", UINT32_MAX));

  for (const Json& jp : r.array(r.field(j, "persons"), "persons")) {
    if (!jp.is_object()) r.fail("person must be an object");
    PersonRecord person;
    person.box = r.box(r.field(jp, "box"));
    const Box clamped = refeval::detail::clamp_box(person.box, image);
    if (!(clamped == person.box)) {
      if (warnings) {
        warnings->push_back("line " + std::to_string(line) + ": clamped person " +
                            std::to_string(image.persons.size()) + " of image " +
                            image.image_id + " to image bounds");
      }
      person.box = clamped;
    }
    if (auto m = jp.find("mask"); m != jp.end() && !m->is_null()) {
      person.mask = r.mask(*m);
    }
    image.persons.push_back(std::move(person));
  }

  for (const Json& jr : r.array(r.field(j, "referrings"), "referrings")) {
    if (!jr.is_object()) r.fail("referring must be an object");
    ReferringRecord ref;
    ref.id = r.string(jr, "id");
    ref.text = r.string(jr, "text");
    const std::string subset = r.string(jr, "subset");
    const auto parsed = parse_subset(subset);
    if (!parsed) r.fail("unknown subset '" + subset + "'");
    ref.subset = *parsed;
    for (const Json& idx : r.array(r.field(jr, "gt_indices"), "gt_indices")) {
      ref.gt_indices.push_back(static_cast<std::size_t>(r.unsigned_int(idx, "gt index")));
    }
    image.referrings.push_back(std::move(ref));
  }
  return image;
}

struct DatasetLoad {
  Dataset dataset;
  std::vector<std::string> warnings;
};

/// Reads line-delimited image records, one pass over the stream.
inline DatasetLoad read_dataset(std::istream& in) {
  DatasetLoad out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError(ErrorCode::kSchemaError, line_no, e.what());
    }
    out.dataset.push_back(image_from_json(j, line_no, &out.warnings));
  }
  return out;
}

inline DatasetLoad parse_dataset(std::string_view content) {
  std::istringstream in{std::string(content)};
  return read_dataset(in);
}

inline void write_dataset(std::ostream& out, const Dataset& dataset) {
  for (const ImageRecord& image : dataset) out << to_json(image).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Predictions

inline Json to_json(const PredictionSet& p) {
  Json j{{"referring_id", p.referring_id}};
  if (const auto* boxes = p.boxes()) {
    Json arr = Json::array();
    for (const Box& b : *boxes) arr.push_back(to_json(b));
    j["boxes"] = std::move(arr);
  } else if (const auto* points = p.points()) {
    Json arr = Json::array();
    for (const Point& pt : *points) arr.push_back(Json::array({pt.x, pt.y}));
    j["points"] = std::move(arr);
  } else {
    j["rejection"] = true;
  }
  return j;
}

inline void write_predictions(std::ostream& out,
                              const std::vector<PredictionSet>& predictions) {
  for (const PredictionSet& p : predictions) out << to_json(p).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Reports

/// One decimal, halves rounded away from zero.
inline std::string format_percent(double value) {
  const double rounded = std::round(value * 10.0) / 10.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", rounded == 0.0 ? 0.0 : rounded);
  return buf;
}

inline Json to_json(const EvalReport& report) {
  Json subsets = Json::array();
  for (const SubsetReport& s : report.per_subset) {
    subsets.push_back(Json{{"subset", to_string(s.subset)},
                           {"recall", s.recall},
                           {"precision", s.precision},
                           {"density_f1", s.density_f1},
                           {"n_referrings", s.n_referrings}});
  }
  Json j{{"protocol", report.point_protocol ? "point" : "box"},
         {"per_subset", std::move(subsets)}};
  if (report.average) {
    j["average"] = Json{{"recall", report.average->recall},
                        {"precision", report.average->precision},
                        {"density_f1", report.average->density_f1}};
  } else {
    j["average"] = nullptr;
  }
  j["rejection_score"] = report.rejection_score ? Json(*report.rejection_score) : Json(nullptr);
  j["n_rejection"] = report.n_rejection;
  j["warnings"] = report.warnings;
  return j;
}

/// Renders subsets as column groups of R / P / DF1, followed by the average
/// and the rejection score, in percent with one decimal.
inline std::string render_table(const EvalReport& report) {
  struct Group {
    std::string title;
    std::vector<std::pair<std::string, std::string>> cells;  // (header, value)
  };
  std::vector<Group> groups;
  auto triple = [](const std::string& title, double r, double p, double df1) {
    return Group{title, {{"R", format_percent(r)}, {"P", format_percent(p)},
                         {"DF1", format_percent(df1)}}};
  };
  for (const SubsetReport& s : report.per_subset) {
    groups.push_back(triple(std::string(to_string(s.subset)), s.recall, s.precision,
                            s.density_f1));
  }
  if (report.average) {
    groups.push_back(triple("Average", report.average->recall,
                            report.average->precision, report.average->density_f1));
  }
  if (report.rejection_score) {
    groups.push_back(Group{"Rejection", {{"Score", format_percent(*report.rejection_score)}}});
  }

  std::string title_row = "|", header_row = "|", value_row = "|";
  for (const Group& g : groups) {
    std::size_t cell_width = 5;
    for (const auto& [h, v] : g.cells) cell_width = std::max({cell_width, h.size(), v.size()});
    const std::size_t inner = g.cells.size() * (cell_width + 1) - 1;
    const std::size_t group_width = std::max(inner, g.title.size());
    const std::size_t pad = cell_width + (group_width - inner) / g.cells.size();
    auto fit = [](const std::string& s, std::size_t w) {
      return std::string(w - std::min(w, s.size()), ' ') + s;
    };
    std::string headers, values;
    for (std::size_t c = 0; c < g.cells.size(); ++c) {
      const std::size_t w = c + 1 == g.cells.size()
                                ? group_width - (pad + 1) * (g.cells.size() - 1)
                                : pad;
      headers += fit(g.cells[c].first, w) + (c + 1 == g.cells.size() ? "" : " ");
      values += fit(g.cells[c].second, w) + (c + 1 == g.cells.size() ? "" : " ");
    }
    title_row += " " + fit(g.title, group_width) + " |";
    header_row += " " + headers + " |";
    value_row += " " + values + " |";
  }
  std::string out = title_row + "\n" + header_row + "\n" + value_row + "\n";
  if (report.point_protocol) out += "(point-in-mask evaluation)\n";
  return out;
}

// ---------------------------------------------------------------------------
// Statistics and synthetic-data sidecars

namespace detail {

template <typename T>
Json optional_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline Json histogram_json(const std::map<std::size_t, std::size_t>& hist) {
  Json arr = Json::array();
  for (const auto& [value, count] : hist) arr.push_back(Json::array({value, count}));
  return arr;
}

}  // namespace detail

inline Json to_json(const DatasetStats& s) {
  Json subsets = Json::array();
  for (const SubsetStats& ss : s.per_subset) {
    subsets.push_back(Json{{"subset", to_string(ss.subset)},
                           {"n_images", ss.n_images},
                           {"n_referrings", ss.n_referrings},
                           {"avg_boxes_per_ref", detail::optional_json(ss.avg_boxes_per_ref)}});
  }
  Json size = nullptr;
  if (s.avg_image_size) size = Json::array({s.avg_image_size->first, s.avg_image_size->second});
  return Json{{"n_images", s.n_images},
              {"n_referrings", s.n_referrings},
              {"n_persons", s.n_persons},
              {"vocab_size", s.vocab_size},
              {"total_tokens", s.total_tokens},
              {"avg_words_per_ref", detail::optional_json(s.avg_words_per_ref)},
              {"avg_boxes_per_ref", detail::optional_json(s.avg_boxes_per_ref)},
              {"avg_persons_per_image", detail::optional_json(s.avg_persons_per_image)},
              {"avg_image_size", size},
              {"persons_per_image_hist", detail::histogram_json(s.persons_per_image_hist)},
              {"boxes_per_ref_hist", detail::histogram_json(s.boxes_per_ref_hist)},
              {"per_subset", std::move(subsets)}};
}

/// Delimiter-separated histogram rows: `histogram,value,count`.
inline std::string histograms_csv(const DatasetStats& s) {
  std::string out = "histogram,value,count\n";
  for (const auto& [v, c] : s.persons_per_image_hist) {
    out += "persons_per_image," + std::to_string(v) + "," + std::to_string(c) + "\n";
  }
  for (const auto& [v, c] : s.boxes_per_ref_hist) {
    out += "boxes_per_ref," + std::to_string(v) + "," + std::to_string(c) + "\n";
  }
  return out;
}

inline Json to_json(const GenerationLedger& l) {
  Json per_subset = Json::object();
  for (const auto& [subset, n] : l.referrings_per_subset) {
    per_subset[std::string(to_string(subset))] = n;
  }
  return Json{{"n_images", l.n_images},
              {"n_referrings", l.n_referrings},
              {"n_persons", l.n_persons},
              {"n_box_referrings", l.n_box_referrings},
              {"total_gt_boxes", l.total_gt_boxes},
              {"total_tokens", l.total_tokens},
              {"vocab_size", l.vocabulary.size()},
              {"width_sum", l.width_sum},
              {"height_sum", l.height_sum},
              {"persons_per_image_hist", detail::histogram_json(l.persons_per_image_hist)},
              {"boxes_per_ref_hist", detail::histogram_json(l.boxes_per_ref_hist)},
              {"referrings_per_subset", std::move(per_subset)}};
}

inline Json to_json(const SynthConfig& c) {
  return Json{{"seed", c.seed},
              {"n_images", c.n_images},
              {"persons_per_image", Json::array({c.persons_per_image.lo, c.persons_per_image.hi})},
              {"gts_per_ref", Json::array({c.gts_per_ref.lo, c.gts_per_ref.hi})},
              {"refs_per_image", Json::array({c.refs_per_image.lo, c.refs_per_image.hi})},
              {"image_size", Json::array({c.image_width, c.image_height})},
              {"jitter", c.jitter},
              {"rejection_fraction", c.rejection_fraction},
              {"with_masks", c.with_masks}};
}

/// Reads a generator config; absent keys keep their defaults.
inline SynthConfig synth_config_from_json(const Json& j) {
  const detail::Reader r(1);
  if (!j.is_object()) r.fail("config must be an object");
  SynthConfig c;
  auto range = [&](const char* key, CountRange& out) {
    if (!j.contains(key)) return;
    const Json& v = r.array(j[key], key);
    if (v.size() != 2) r.fail(std::string(key) + " must be [lo, hi]");
    out = {static_cast<std::size_t>(r.unsigned_int(v[0], key)),
           static_cast<std::size_t>(r.unsigned_int(v[1], key))};
  };
  auto number = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_number()) r.fail(std::string(key) + " must be a number");
    out = j[key].get<double>();
  };
  if (j.contains("seed")) c.seed = r.unsigned_int(j["seed"], "seed");
  if (j.contains("n_images")) c.n_images = static_cast<std::size_t>(r.unsigned_int(j["n_images"], "n_images"));
  range("persons_per_image", c.persons_per_image);
  range("gts_per_ref", c.gts_per_ref);
  range("refs_per_image", c.refs_per_image);
  if (j.contains("image_size")) {
    const Json& v = r.array(j["image_size"], "image_size");
    if (v.size() != 2) r.fail("image_size must be [width, height]");
    c.image_width = static_cast<std::uint32_t>(r.unsigned_int(v[0], "width", UINT32_MAX));
    c.image_height = static_cast<std::uint32_t>(r.unsigned_int(v[1], "height", UINT32_MAX));
  }
  number("jitter", c.jitter);
  number("rejection_fraction", c.rejection_fraction);
  if (j.contains("with_masks")) {
    if (!j["with_masks"].is_boolean()) r.fail("with_masks must be a boolean");
    c.with_masks = j["with_masks"].get<bool>();
  }
  return c;
}

inline Json to_json(const std::vector<Violation>& violations) {
  Json arr = Json::array();
  for (const Violation& v : violations) {
    arr.push_back(Json{{"code", to_string(v.code)},
                       {"image_id", v.image_id},
                       {"referring_id", v.referring_id},
                       {"detail", v.detail}});
  }
  return arr;
}

inline Json to_json(const std::map<std::size_t, InstanceBucket>& buckets) {
  Json arr = Json::array();
  for (const auto& [count, b] : buckets) {
    arr.push_back(Json{{"gt_count", count},
                       {"pooled", count == kInstanceBucketCap},
                       {"n_referrings", b.n_referrings},
                       {"recall", b.recall},
                       {"precision", b.precision}});
  }
  return arr;
}

/// `gt_count,n_referrings,recall,precision` with recall/precision in percent.
inline std::string buckets_table(const std::map<std::size_t, InstanceBucket>& buckets) {
  std::string out = "gt_count,n_referrings,recall,precision\n";
  for (const auto& [count, b] : buckets) {
    out += (count == kInstanceBucketCap ? ">=" : "") + std::to_string(count) + "," +
           std::to_string(b.n_referrings) + "," + format_percent(100.0 * b.recall) + "," +
           format_percent(100.0 * b.precision) + "\n";
  }
  return out;
}

}  // namespace refeval::io
