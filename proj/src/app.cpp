#include "charvoice/app.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <spdlog/spdlog.h>

#include "charvoice/experiment.hpp"
#include "charvoice/report.hpp"
#include "charvoice/stats.hpp"
#include "charvoice/text.hpp"

namespace charvoice::app {

namespace pt = boost::property_tree;

namespace {

template <typename T>
T parse_number(std::string_view value, std::string_view key) {
  const std::string_view v = text::trim(value);
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("config: {} must be a non-negative integer, got '{}'", key, value));
  }
  return out;
}

fs::path resolve(const fs::path& base, const std::string& value) {
  if (value.empty()) return {};
  fs::path p(value);
  return p.is_absolute() ? p : base / p;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError(fmt::format("cannot write {}", path.string()));
  return out;
}

void ensure_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IngestError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
}

std::unique_ptr<EmbeddingSource> make_source(const RunConfig& config, const EncoderSpec& spec) {
  if (spec.kind != EncoderKind::External) {
    return std::make_unique<BuiltinEncoderSource>(spec, config.threads);
  }
  const auto& files = config.external_files.at(spec.encoder_id);
  EmbeddingFile quotes = import_embeddings(files.quotes, spec);
  std::vector<SetEmbedding> sets;
  if (!files.sets.empty()) {
    EncoderSpec set_spec = spec;
    set_spec.params.erase("dim");
    sets = import_embeddings(files.sets, set_spec).sets;
  }
  return std::make_unique<ImportedEmbeddingSource>(spec.encoder_id, quotes.quote_table(),
                                                   std::move(sets));
}

ExperimentOptions options_of(const RunConfig& config) {
  ExperimentOptions options;
  options.min_role = config.min_role;
  options.aggregation = config.aggregation;
  options.threads = config.threads;
  return options;
}

void print_summary(std::ostream& out, const ExperimentResult& r) {
  const auto value = [](const GroupSummary& g) {
    return g.n_novels == 0 ? std::string("NA") : fmt::format("{:.4f} ({:.4f})", g.mean, g.std);
  };
  fmt::print(out, "{}: queries={} cc={} cq={} skipped={} dropped={}\n", r.encoder_id,
             r.n_queries, value(r.cc.macro), value(r.cq.macro), r.skipped.size(),
             r.dropped.size());
}

}  // namespace

std::vector<std::size_t> parse_n_grid(std::string_view text) {
  std::vector<std::size_t> grid;
  std::stringstream ss{std::string(text)};
  for (std::string part; std::getline(ss, part, ',');) {
    if (text::trim(part).empty()) continue;
    grid.push_back(parse_number<std::size_t>(part, "n_grid"));
  }
  return grid;
}

EncoderSpec builtin_encoder(std::string_view kind, std::uint64_t seed) {
  const auto parsed = parse_encoder_kind(kind);
  if (!parsed || *parsed == EncoderKind::External) {
    throw ConfigError(fmt::format("unknown built-in encoder '{}'", kind));
  }
  switch (*parsed) {
    case EncoderKind::CharNgram:
      return EncoderSpec::char_ngram(3, kDefaultHashDim, seed);
    case EncoderKind::TokenUnigram:
      return EncoderSpec::token_unigram(kDefaultHashDim, seed);
    default:
      return EncoderSpec::function_words();
  }
}

RunConfig RunConfig::from_file(const fs::path& path) {
  pt::ptree tree;
  try {
    pt::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("cannot read config {}: {}", path.string(), e.message()));
  }
  const fs::path base = path.parent_path();
  const auto get = [&](const std::string& key) {
    return std::string(text::trim(tree.get<std::string>(key, "")));
  };

  RunConfig c;
  c.corpus_path = resolve(base, get("corpus.path"));
  c.schema_path = resolve(base, get("corpus.schema"));
  if (auto v = get("corpus.min_role"); !v.empty()) {
    const auto role = parse_role(v);
    if (!role) throw ConfigError(fmt::format("config: unknown min_role '{}'", v));
    c.min_role = *role;
  }
  if (auto v = get("corpus.intermediate_threshold"); !v.empty()) {
    c.thresholds.intermediate = parse_number<std::size_t>(v, "intermediate_threshold");
  }
  if (auto v = get("corpus.major_threshold"); !v.empty()) {
    c.thresholds.major = parse_number<std::size_t>(v, "major_threshold");
  }

  if (auto v = get("experiment.strategy"); !v.empty()) {
    const auto s = parse_strategy(v);
    if (!s) throw ConfigError(fmt::format("config: unknown strategy '{}'", v));
    c.experiment.strategy = *s;
  }
  if (auto v = get("experiment.min_q"); !v.empty()) {
    c.experiment.min_query_quotes = parse_number<std::size_t>(v, "min_q");
  }
  if (auto v = get("experiment.n_grid"); !v.empty()) c.n_grid = parse_n_grid(v);
  if (auto v = get("experiment.split_chapter"); !v.empty()) {
    c.experiment.split_chapter = parse_number<std::size_t>(v, "split_chapter");
  }
  if (auto v = get("experiment.aggregation"); !v.empty()) {
    const auto a = parse_aggregation(v);
    if (!a) throw ConfigError(fmt::format("config: unknown aggregation '{}'", v));
    c.aggregation = *a;
  }

  if (auto v = get("run.output"); !v.empty()) c.output_dir = resolve(base, v);
  if (auto v = get("run.seed"); !v.empty()) c.seed = parse_number<std::uint64_t>(v, "seed");
  if (auto v = get("run.threads"); !v.empty()) c.threads = parse_number<std::size_t>(v, "threads");

  for (const auto& [section, child] : tree) {
    if (section.rfind("encoder.", 0) != 0) continue;
    EncoderSpec spec;
    spec.encoder_id = section.substr(8);
    const std::string kind = child.get<std::string>("kind", "");
    const auto parsed = parse_encoder_kind(kind);
    if (!parsed) {
      throw ConfigError(fmt::format("config: encoder '{}' has unknown kind '{}'", spec.encoder_id, kind));
    }
    spec.kind = *parsed;
    ExternalFiles files;
    for (const auto& [key, value] : child) {
      const std::string v(text::trim(value.data()));
      if (key == "kind") continue;
      if (spec.kind == EncoderKind::External && key == "quotes") {
        files.quotes = resolve(base, v);
      } else if (spec.kind == EncoderKind::External && key == "sets") {
        files.sets = resolve(base, v);
      } else {
        spec.params[key] = v;
      }
    }
    if ((spec.kind == EncoderKind::CharNgram || spec.kind == EncoderKind::TokenUnigram) &&
        !spec.params.contains("seed")) {
      spec.params["seed"] = std::to_string(c.seed);
    }
    if (spec.kind == EncoderKind::External) c.external_files[spec.encoder_id] = files;
    c.encoders.push_back(std::move(spec));
  }
  return c;
}

void RunConfig::apply_environment() {
  if (const char* v = std::getenv("CHARVOICE_CORPUS"); v != nullptr && *v != '\0') corpus_path = v;
  if (const char* v = std::getenv("CHARVOICE_SCHEMA"); v != nullptr && *v != '\0') schema_path = v;
  if (const char* v = std::getenv("CHARVOICE_OUTPUT"); v != nullptr && *v != '\0') output_dir = v;
}

void RunConfig::validate(bool need_encoders) const {
  if (corpus_path.empty()) throw ConfigError("no corpus path configured");
  if (!fs::is_directory(corpus_path)) {
    throw ConfigError(fmt::format("corpus path {} does not exist", corpus_path.string()));
  }
  if (schema_path.empty()) throw ConfigError("no schema path configured");
  if (!fs::is_regular_file(schema_path)) {
    throw ConfigError(fmt::format("schema file {} does not exist", schema_path.string()));
  }
  if (thresholds.intermediate > thresholds.major) {
    throw ConfigError("intermediate_threshold must not exceed major_threshold");
  }
  if (experiment.min_query_quotes < 1) throw ConfigError("min_q must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (experiment.strategy == Strategy::ReadingOrder) {
    if (n_grid.empty()) throw ConfigError("reading_order needs a non-empty n_grid");
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
      if (n_grid[k] < 1 || (k > 0 && n_grid[k] <= n_grid[k - 1])) {
        throw ConfigError("n_grid must be positive and strictly ascending");
      }
    }
  }
  if (!need_encoders) return;
  if (encoders.empty()) throw ConfigError("no encoder configured");
  std::set<std::string> ids;
  for (const auto& spec : encoders) {
    spec.validate();
    if (!ids.insert(spec.encoder_id).second) {
      throw ConfigError(fmt::format("duplicate encoder id '{}'", spec.encoder_id));
    }
    if (spec.kind != EncoderKind::External) continue;
    const auto it = external_files.find(spec.encoder_id);
    if (it == external_files.end() || it->second.quotes.empty()) {
      throw ConfigError(fmt::format("external encoder '{}' needs a quotes file", spec.encoder_id));
    }
    for (const auto& p : {it->second.quotes, it->second.sets}) {
      if (!p.empty() && !fs::is_regular_file(p)) {
        throw ConfigError(fmt::format("embedding file {} does not exist", p.string()));
      }
    }
  }
}

Corpus load_configured_corpus(const RunConfig& config) {
  const IngestSchema schema = IngestSchema::from_file(config.schema_path);
  LoadOptions options;
  options.thresholds = config.thresholds;
  options.threads = config.threads;
  return load_corpus(config.corpus_path, schema, options);
}

int cmd_ingest(const RunConfig& config, std::ostream& out) {
  config.validate(false);
  const Corpus corpus = load_configured_corpus(config);
  ensure_output_dir(config.output_dir);
  const fs::path dump_path = config.output_dir / "corpus.jsonl";
  {
    auto dump = open_output(dump_path);
    write_corpus_dump(corpus, config.min_role, dump);
  }

  std::size_t characters = 0, choral = 0, retained_quotes = 0;
  std::map<Role, std::size_t> by_role;
  for (const auto& novel : corpus.novels) {
    characters += novel.characters.size();
    choral += novel.choral_quote_ids.size();
    for (const auto& c : novel.characters) ++by_role[c.role];
    retained_quotes += NovelView(novel, config.min_role).quotes().size();
  }
  fmt::print(out, "novels: {}\n", corpus.novels.size());
  fmt::print(out, "quotes: {}\n", corpus.quote_count());
  fmt::print(out, "multi-speaker quotes excluded: {}\n", choral);
  fmt::print(out, "characters: {} (major {}, intermediate {}, minor {})\n", characters,
             by_role[Role::Major], by_role[Role::Intermediate], by_role[Role::Minor]);
  fmt::print(out, "quotes of {} and above: {}\n", to_string(config.min_role), retained_quotes);
  fmt::print(out, "dump: {}\n", dump_path.string());
  return kSuccess;
}

int cmd_stats(const RunConfig& config, std::ostream& out, bool per_novel) {
  config.validate(false);
  const Corpus corpus = load_configured_corpus(config);
  ExperimentSpec spec = config.experiment;
  if (spec.strategy == Strategy::ReadingOrder) {
    for (std::size_t n : config.n_grid) {
      spec.n_quotes = n;
      fmt::print(out, "n = {}\n", n);
      print_query_stats(out, compute_query_stats(corpus, spec, config.min_role), per_novel);
      out << '\n';
    }
    return kSuccess;
  }
  const auto stats = compute_query_stats(corpus, spec, config.min_role);
  print_query_stats(out, stats, per_novel);
  return stats.total_queries == 0 ? kNoQueries : kSuccess;
}

int cmd_encode(const RunConfig& config, std::ostream& out) {
  config.validate(true);
  const Corpus corpus = load_configured_corpus(config);
  ensure_output_dir(config.output_dir);

  for (const auto& spec : config.encoders) {
    if (spec.kind == EncoderKind::External) {
      fmt::print(out, "{}: external, skipped\n", spec.encoder_id);
      continue;
    }
    EmbeddingFile file;
    file.dim = spec.dim();
    file.encoder_id = spec.encoder_id;
    file.kind = RecordKind::Quote;
    EncodeStats stats;
    for (const auto& novel : corpus.novels) {
      const NovelView view(novel, config.min_role);
      auto table = encode_quotes(view.quotes(), spec, config.threads, &stats);
      for (const Quote* q : view.quotes()) {
        file.quotes.push_back({q->quote_id, spec.encoder_id, std::move(table.at(q->quote_id))});
      }
    }
    const fs::path path = config.output_dir / (spec.encoder_id + ".emb");
    auto stream = open_output(path);
    write_embeddings(stream, file);
    fmt::print(out, "{}: {} quote vectors (dim {}, {} featureless) -> {}\n", spec.encoder_id,
               file.quotes.size(), file.dim, stats.featureless, path.string());
  }

  const fs::path manifest_path = config.output_dir / "manifest.jsonl";
  auto manifest = open_output(manifest_path);
  std::size_t entries = 0;
  for (const auto& novel : corpus.novels) {
    const NovelView view(novel, config.min_role);
    std::vector<SubsetSpec> subsets;
    if (config.experiment.strategy == Strategy::ReadingOrder) {
      for (std::size_t n : config.n_grid) {
        SubsetSpec s = SubsetSpec::reading_order(n);
        s.split_chapter = config.experiment.split_chapter;
        subsets.push_back(s);
      }
    } else {
      subsets = config.experiment.subsets(view);
    }
    for (const auto& subset : subsets) {
      const BundlePlan plan = plan_bundle(view, subset);
      if (plan.queries.empty()) continue;
      write_manifest(manifest, plan);
      entries += plan.queries.size() + plan.targets.size();
    }
  }
  fmt::print(out, "manifest: {} entries -> {}\n", entries, manifest_path.string());
  return kSuccess;
}

int cmd_run(const RunConfig& config, std::ostream& out) {
  config.validate(true);
  const Corpus corpus = load_configured_corpus(config);
  ensure_output_dir(config.output_dir);
  const ExperimentOptions options = options_of(config);

  std::size_t total_queries = 0;
  for (const auto& spec : config.encoders) {
    const auto source = make_source(config, spec);
    if (config.experiment.strategy == Strategy::ReadingOrder) {
      std::vector<ExperimentResult> results;
      const auto rows = reading_order_curve(corpus, *source, config.n_grid, options,
                                            config.experiment.split_chapter, &results);
      {
        auto curve = open_output(config.output_dir / ("curve_" + spec.encoder_id + ".tsv"));
        write_curve_tsv(curve, rows);
      }
      for (const auto& r : results) {
        const std::string stem = fmt::format("{}_n{}", spec.encoder_id, r.spec.n_quotes);
        auto report = open_output(config.output_dir / ("report_" + stem + ".csv"));
        write_report_csv(report, r);
        auto skipped = open_output(config.output_dir / ("skipped_" + stem + ".tsv"));
        write_skipped_tsv(skipped, r);
        total_queries += r.n_queries;
        fmt::print(out, "n={} ", r.spec.n_quotes);
        print_summary(out, r);
      }
    } else {
      const ExperimentResult r = run_experiment(corpus, *source, config.experiment, options);
      auto report = open_output(config.output_dir / ("report_" + spec.encoder_id + ".csv"));
      write_report_csv(report, r);
      auto skipped = open_output(config.output_dir / ("skipped_" + spec.encoder_id + ".tsv"));
      write_skipped_tsv(skipped, r);
      total_queries += r.n_queries;
      print_summary(out, r);
    }
  }
  if (total_queries == 0) {
    fmt::print(out, "no queries were produced\n");
    return kNoQueries;
  }
  return kSuccess;
}

int cmd_report(const std::vector<fs::path>& reports, std::ostream& out, bool per_novel) {
  if (reports.empty()) throw ConfigError("report: no report files given");
  std::vector<ReportTable> tables;
  for (const auto& p : reports) {
    if (!fs::is_regular_file(p)) throw IngestError(fmt::format("cannot read {}", p.string()));
    tables.push_back(read_report_csv(p));
  }
  print_report_tables(out, tables, per_novel);
  return kSuccess;
}

}  // namespace charvoice::app
