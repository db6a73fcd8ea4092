#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "charvoice/app.hpp"

namespace cv = charvoice;
namespace app = charvoice::app;

namespace {

struct Flags {
  std::string config;
  std::string corpus;
  std::string schema;
  std::string output;
  std::string strategy;
  std::string min_role;
  std::string aggregation;
  std::string n_grid;
  std::optional<std::size_t> min_q;
  std::optional<std::size_t> split_chapter;
  std::optional<std::size_t> threads;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> encoders;
  std::vector<std::string> embeddings;
  std::vector<std::string> set_embeddings;
  bool per_novel = false;
  bool verbose = false;
};

std::pair<std::string, std::string> split_assignment(const std::string& value,
                                                     const char* flag) {
  const auto eq = value.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == value.size()) {
    throw cv::ConfigError(std::string(flag) + " expects ID=PATH, got '" + value + "'");
  }
  return {value.substr(0, eq), value.substr(eq + 1)};
}

// Precedence: command-line flags, then environment, then the config file.
app::RunConfig build_config(const Flags& f) {
  app::RunConfig c;
  if (!f.config.empty()) c = app::RunConfig::from_file(f.config);
  c.apply_environment();

  if (!f.corpus.empty()) c.corpus_path = f.corpus;
  if (!f.schema.empty()) c.schema_path = f.schema;
  if (!f.output.empty()) c.output_dir = f.output;
  if (!f.strategy.empty()) {
    const auto s = cv::parse_strategy(f.strategy);
    if (!s) throw cv::ConfigError("unknown strategy '" + f.strategy + "'");
    c.experiment.strategy = *s;
  }
  if (!f.min_role.empty()) {
    const auto r = cv::parse_role(f.min_role);
    if (!r) throw cv::ConfigError("unknown role '" + f.min_role + "'");
    c.min_role = *r;
  }
  if (!f.aggregation.empty()) {
    const auto a = cv::parse_aggregation(f.aggregation);
    if (!a) throw cv::ConfigError("unknown aggregation '" + f.aggregation + "'");
    c.aggregation = *a;
  }
  if (!f.n_grid.empty()) c.n_grid = app::parse_n_grid(f.n_grid);
  if (f.min_q) c.experiment.min_query_quotes = *f.min_q;
  if (f.split_chapter) c.experiment.split_chapter = *f.split_chapter;
  if (f.threads) c.threads = *f.threads;
  if (f.seed) c.seed = *f.seed;

  if (!f.encoders.empty() || !f.embeddings.empty()) {
    c.encoders.clear();
    c.external_files.clear();
  }
  for (const auto& kind : f.encoders) c.encoders.push_back(app::builtin_encoder(kind, c.seed));
  for (const auto& value : f.embeddings) {
    auto [id, path] = split_assignment(value, "--embeddings");
    c.encoders.push_back(cv::EncoderSpec::external(id));
    c.external_files[id].quotes = path;
  }
  for (const auto& value : f.set_embeddings) {
    auto [id, path] = split_assignment(value, "--set-embeddings");
    if (!c.external_files.contains(id)) {
      throw cv::ConfigError("--set-embeddings " + id + " has no matching --embeddings");
    }
    c.external_files[id].sets = path;
  }
  return c;
}

void add_corpus_options(CLI::App* cmd, Flags& f) {
  cmd->add_option("-c,--config", f.config, "Run configuration file");
  cmd->add_option("--corpus", f.corpus, "Corpus root directory");
  cmd->add_option("--schema", f.schema, "Ingest schema file");
  cmd->add_option("-o,--output", f.output, "Output directory");
  cmd->add_option("--min-role", f.min_role, "Smallest role kept (minor, intermediate, major)");
  cmd->add_option("--threads", f.threads, "Worker threads");
}

void add_experiment_options(CLI::App* cmd, Flags& f) {
  cmd->add_option("--strategy", f.strategy, "chapterwise, explicit or reading_order");
  cmd->add_option("--min-q", f.min_q, "Minimum query quotes per chapter");
  cmd->add_option("--n-grid", f.n_grid, "Reading-order query sizes, e.g. 1,5,10");
  cmd->add_option("--split-chapter", f.split_chapter, "First held-out chapter for reading order");
}

void add_encoder_options(CLI::App* cmd, Flags& f) {
  cmd->add_option("--encoder", f.encoders, "Built-in encoder: char_ngram, token_unigram, function_words");
  cmd->add_option("--embeddings", f.embeddings, "External quote vectors as ID=PATH");
  cmd->add_option("--set-embeddings", f.set_embeddings, "External set vectors as ID=PATH");
  cmd->add_option("--seed", f.seed, "Hashing seed");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Character voice evaluation over annotated novels"};
  cli.require_subcommand(1);
  Flags f;
  cli.add_flag("-v,--verbose", f.verbose, "Debug logging");

  auto* ingest = cli.add_subcommand("ingest", "Load and validate a corpus, write a JSON-lines dump");
  add_corpus_options(ingest, f);

  auto* stats = cli.add_subcommand("stats", "Query and target statistics for an experiment");
  add_corpus_options(stats, f);
  add_experiment_options(stats, f);
  stats->add_flag("--per-novel,!--no-per-novel", f.per_novel, "Include per-novel rows");

  auto* encode = cli.add_subcommand("encode", "Write quote embeddings and the subset manifest");
  add_corpus_options(encode, f);
  add_experiment_options(encode, f);
  add_encoder_options(encode, f);

  auto* run = cli.add_subcommand("run", "Score queries and write AUC reports");
  add_corpus_options(run, f);
  add_experiment_options(run, f);
  add_encoder_options(run, f);
  run->add_option("--aggregation", f.aggregation, "query_mean or pooled_pairs");

  auto* report = cli.add_subcommand("report", "Print tables from report CSVs");
  std::vector<std::string> inputs;
  report->add_option("-i,--input,inputs", inputs, "Report CSV files")->required();
  report->add_flag("--per-novel", f.per_novel, "Include per-novel rows");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : app::kInputError;
  }

  spdlog::set_default_logger(spdlog::default_logger()->clone("charvoice"));
  spdlog::set_level(f.verbose ? spdlog::level::debug : spdlog::level::warn);

  return app::run_command(std::cerr, [&]() -> int {
    if (*report) {
      std::vector<app::fs::path> paths(inputs.begin(), inputs.end());
      return app::cmd_report(paths, std::cout, f.per_novel);
    }
    const app::RunConfig config = build_config(f);
    if (*ingest) return app::cmd_ingest(config, std::cout);
    if (*stats) return app::cmd_stats(config, std::cout, f.per_novel);
    if (*encode) return app::cmd_encode(config, std::cout);
    return app::cmd_run(config, std::cout);
  });
}
