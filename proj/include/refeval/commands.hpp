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

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "refeval/adapters.hpp"
#include "refeval/datastats.hpp"
#include "refeval/error.hpp"
#include "refeval/io.hpp"
#include "refeval/metrics.hpp"
#include "refeval/synth.hpp"
#include "refeval/validate.hpp"

// Subcommand bodies behind the refeval CLI. Each returns the process exit
// status: 0 success, 1 evaluation or validation failure, 2 usage or format
// error. Diagnostics go to `err` as `file:line: CODE: detail`.
namespace refeval::cli {

enum ExitStatus : int { kSuccess = 0, kFailure = 1, kUsage = 2 };

inline constexpr const char* kWorkersEnv = "REFEVAL_WORKERS";

inline unsigned default_workers() {
  if (const char* env = std::getenv(kWorkersEnv)) {
    try {
      const unsigned long v = std::stoul(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

inline int exit_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchemaError:
    case ErrorCode::kInvalidBox:
    case ErrorCode::kInvalidCoordinate:
    case ErrorCode::kMalformedOutput:
    case ErrorCode::kBadIndexToken:
    case ErrorCode::kIndexOutOfRange:
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kIoError:
      return kUsage;
    default:
      return kFailure;
  }
}

// An Error pinned to the file (and line, when known) it came from.
class FileError : public Error {
 public:
  FileError(const std::string& path, std::size_t line, ErrorCode code,
            const std::string& detail)
      : Error(code, detail), path_(path), line_(line) {}

  std::string location() const {
    return line_ ? path_ + ":" + std::to_string(line_) : path_;
  }

 private:
  std::string path_;
  std::size_t line_;
};

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError(path, 0, ErrorCode::kIoError, "cannot open for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError(path, 0, ErrorCode::kIoError, "cannot open for writing");
  out << content;
  if (!out) throw FileError(path, 0, ErrorCode::kIoError, "write failed");
}

template <typename F>
auto within_file(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const FileError&) {
    throw;
  } catch (const ParseError& e) {
    throw FileError(path, e.line(), e.code(), e.detail());
  } catch (const Error& e) {
    throw FileError(path, 0, e.code(), e.detail());
  }
}

inline io::DatasetLoad load_dataset(const std::string& path, std::ostream& err) {
  io::DatasetLoad load = within_file(path, [&] {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError(path, 0, ErrorCode::kIoError, "cannot open for reading");
    return io::read_dataset(in);
  });
  for (const std::string& w : load.warnings) err << "warning: " << path << ": " << w << '\n';
  return load;
}

inline std::vector<PredictionSet> load_predictions(const std::string& path,
                                                   const Dataset& dataset) {
  const std::string content = read_file(path);
  const PersonBoxIndex index(dataset);
  return within_file(path, [&] { return parse_box_predictions(content, &index); });
}

// Returns false (after printing) when the dataset breaks an invariant.
inline bool check_dataset(const std::string& path, const Dataset& dataset,
                          std::ostream& err) {
  const std::vector<Violation> violations = validate_dataset(dataset);
  for (const Violation& v : violations) {
    err << path << ": " << to_string(v.code) << ": image " << v.image_id
        << (v.referring_id.empty() ? "" : " referring " + v.referring_id) << ": "
        << v.detail << '\n';
  }
  return violations.empty();
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const FileError& e) {
    err << "refeval: " << e.location() << ": " << to_string(e.code()) << ": "
        << e.detail() << '\n';
    return exit_status_for(e.code());
  } catch (const Error& e) {
    err << "refeval: " << to_string(e.code()) << ": " << e.detail() << '\n';
    return exit_status_for(e.code());
  }
}

}  // namespace detail

struct EvaluateArgs {
  std::string dataset_path;
  std::string predictions_path;
  bool point_eval = false;
  DensityNumerator numerator = DensityNumerator::kImagePersons;
  std::optional<Subset> subset;
  std::string report_path;  // machine-readable report; skipped when empty
  std::string table_path;   // rendered table copy; skipped when empty
  unsigned workers = 1;
};

inline int cmd_evaluate(const EvaluateArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const io::DatasetLoad load = detail::load_dataset(args.dataset_path, err);
    if (!detail::check_dataset(args.dataset_path, load.dataset, err)) return int{kFailure};
    const std::vector<PredictionSet> predictions =
        detail::load_predictions(args.predictions_path, load.dataset);

    EvalOptions options;
    options.numerator = args.numerator;
    options.point_eval = args.point_eval;
    options.subset = args.subset;
    options.workers = args.workers;
    const EvalReport report = aggregate(load.dataset, predictions, options);

    for (const std::string& w : report.warnings) err << "warning: " << w << '\n';
    const std::string table = io::render_table(report);
    out << table;
    if (!args.table_path.empty()) detail::write_file(args.table_path, table);
    if (!args.report_path.empty()) {
      detail::write_file(args.report_path, io::to_json(report).dump(2) + "\n");
    }
    return int{kSuccess};
  });
}

inline int cmd_validate(const std::string& dataset_path, const std::string& report_path,
                        std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const io::DatasetLoad load = detail::load_dataset(dataset_path, err);
    const std::vector<Violation> violations = validate_dataset(load.dataset);
    const std::string json = io::to_json(violations).dump(2) + "\n";
    if (!report_path.empty()) detail::write_file(report_path, json);
    detail::check_dataset(dataset_path, load.dataset, err);
    out << violations.size() << " violation(s) in " << load.dataset.size() << " image(s)\n";
    return violations.empty() ? int{kSuccess} : int{kFailure};
  });
}

inline int cmd_stats(const std::string& dataset_path, const std::string& report_path,
                     const std::string& hist_path, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const io::DatasetLoad load = detail::load_dataset(dataset_path, err);
    const DatasetStats stats = compute_stats(load.dataset);
    const std::string json = io::to_json(stats).dump(2) + "\n";
    out << json;
    if (!report_path.empty()) detail::write_file(report_path, json);
    if (!hist_path.empty()) detail::write_file(hist_path, io::histograms_csv(stats));
    return int{kSuccess};
  });
}

struct SynthArgs {
  std::string config_path;  // overrides the flag values when given
  SynthConfig config;
  std::string out_path;
  std::string ledger_path;
};

inline int cmd_synth(const SynthArgs& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    SynthConfig config = args.config;
    if (!args.config_path.empty()) {
      const std::string text = detail::read_file(args.config_path);
      config = detail::within_file(args.config_path, [&] {
        io::Json j;
        try {
          j = io::Json::parse(text);
        } catch (const io::Json::parse_error& e) {
          throw ParseError(ErrorCode::kSchemaError, 1, e.what());
        }
        return io::synth_config_from_json(j);
      });
    }
    const SynthOutput synth = generate(config);
    std::ostringstream data;
    io::write_dataset(data, synth.dataset);
    if (args.out_path.empty()) {
      out << data.str();
    } else {
      detail::write_file(args.out_path, data.str());
    }
    if (!args.ledger_path.empty()) {
      io::Json sidecar{{"config", io::to_json(config)}, {"ledger", io::to_json(synth.ledger)}};
      detail::write_file(args.ledger_path, sidecar.dump(2) + "\n");
    }
    return int{kSuccess};
  });
}

inline int cmd_baseline(const std::string& kind, std::uint64_t seed,
                        const std::string& dataset_path, const std::string& out_path,
                        std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const BaselineKind baseline = BaselineKind::parse(kind, seed);
    const io::DatasetLoad load = detail::load_dataset(dataset_path, err);
    if (!detail::check_dataset(dataset_path, load.dataset, err)) return int{kFailure};
    std::ostringstream preds;
    io::write_predictions(preds, run_baseline(baseline, load.dataset));
    if (out_path.empty()) {
      out << preds.str();
    } else {
      detail::write_file(out_path, preds.str());
    }
    return int{kSuccess};
  });
}

struct Figure6Args {
  std::string dataset_path;
  std::string predictions_path;
  DensityNumerator numerator = DensityNumerator::kImagePersons;
  std::string json_path;
  unsigned workers = 1;
};

inline int cmd_figure6(const Figure6Args& args, std::ostream& out, std::ostream& err) {
  return detail::guarded(err, [&] {
    const io::DatasetLoad load = detail::load_dataset(args.dataset_path, err);
    if (!detail::check_dataset(args.dataset_path, load.dataset, err)) return int{kFailure};
    const std::vector<PredictionSet> predictions =
        detail::load_predictions(args.predictions_path, load.dataset);
    EvalOptions options;
    options.numerator = args.numerator;
    options.workers = args.workers;
    const auto buckets = recall_by_instance_count(load.dataset, predictions, options);
    out << io::buckets_table(buckets);
    if (!args.json_path.empty()) {
      detail::write_file(args.json_path, io::to_json(buckets).dump(2) + "\n");
    }
    return int{kSuccess};
  });
}

}  // namespace refeval::cli
