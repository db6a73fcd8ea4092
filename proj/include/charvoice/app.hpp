#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "charvoice/corpus.hpp"
#include "charvoice/encoders.hpp"
#include "charvoice/error.hpp"
#include "charvoice/evaluation.hpp"
#include "charvoice/representation.hpp"

namespace charvoice::app {

namespace fs = std::filesystem;

enum ExitCode : int { kSuccess = 0, kNoQueries = 1, kInputError = 2 };

struct ExternalFiles {
  fs::path quotes;
  fs::path sets;  // optional set-level vectors
};

// Everything a run needs. Read from a key = value file with [sections]:
//
//   [corpus]      path, schema, min_role, intermediate_threshold, major_threshold
//   [experiment]  strategy, min_q, n_grid, split_chapter, aggregation
//   [run]         output, seed, threads
//   [encoder.ID]  kind plus kind-specific parameters; external encoders
//                 name their files with `quotes` and `sets`
//
// Relative paths resolve against the config file's directory.
struct RunConfig {
  fs::path corpus_path;
  fs::path schema_path;
  fs::path output_dir = "charvoice-out";
  Role min_role = Role::Intermediate;
  RoleThresholds thresholds;

  std::vector<EncoderSpec> encoders;
  std::map<std::string, ExternalFiles> external_files;

  ExperimentSpec experiment;
  std::vector<std::size_t> n_grid = {1, 5, 10, 20, 50};
  Aggregation aggregation = Aggregation::QueryMean;

  std::uint64_t seed = 0;
  std::size_t threads = 1;

  static RunConfig from_file(const fs::path& path);

  // Paths come from CHARVOICE_CORPUS, CHARVOICE_SCHEMA and CHARVOICE_OUTPUT
  // when those are set.
  void apply_environment();

  // Throws ConfigError when a referenced path is missing or a value is out of
  // range. `need_encoders` is false for commands that only read the corpus.
  void validate(bool need_encoders) const;
};

// Parses "1,5,10" into an ascending list.
std::vector<std::size_t> parse_n_grid(std::string_view text);

// Built-in encoder with default parameters, by kind name, using `seed`.
EncoderSpec builtin_encoder(std::string_view kind, std::uint64_t seed);

Corpus load_configured_corpus(const RunConfig& config);

// Each command reports progress on `out` and returns an ExitCode. Errors
// from the library propagate as exceptions; run_command maps them to codes.
int cmd_ingest(const RunConfig& config, std::ostream& out);
int cmd_stats(const RunConfig& config, std::ostream& out, bool per_novel);
int cmd_encode(const RunConfig& config, std::ostream& out);
int cmd_run(const RunConfig& config, std::ostream& out);
int cmd_report(const std::vector<fs::path>& reports, std::ostream& out, bool per_novel);

// Runs `fn`, printing library errors to `err` and converting them to
// kInputError.
template <typename Fn>
int run_command(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    for (const auto& d : e.details()) err << "  " << d << '\n';
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
  }
  return kInputError;
}

}  // namespace charvoice::app
