#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "charvoice/corpus.hpp"
#include "charvoice/representation.hpp"

namespace charvoice {

struct NovelQueryStats {
  std::string novel_id;
  std::string title;
  std::size_t chapters = 0;
  std::size_t quotes = 0;           // single-speaker quotes, all roles
  std::size_t explicit_quotes = 0;  // same population
  std::size_t retained_quotes = 0;
  std::size_t retained_explicit_quotes = 0;
  std::size_t speakers_all = 0;       // characters with at least one quote
  std::size_t speakers_retained = 0;  // characters at or above min_role
  std::size_t active_characters = 0;  // retained characters with a query
  std::size_t queries = 0;
  std::size_t dropped_queries = 0;
  double mean_query_length = 0.0;        // quotes per query
  double mean_character_targets = 0.0;   // per query
  double mean_quote_targets = 0.0;       // per query
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
  std::size_t n = 0;
};

// Corpus-level summary of a query/target design. Speaker counts average
// over every novel; activity, queries, query length and targets average over
// novels with at least one query.
struct QueryStatsSummary {
  Strategy strategy = Strategy::Chapterwise;
  std::vector<NovelQueryStats> per_novel;
  std::size_t total_queries = 0;
  std::size_t total_quotes = 0;
  MeanStd speakers_retained;
  MeanStd speakers_all;
  MeanStd activity_pct;
  MeanStd queries;
  MeanStd query_length;
  MeanStd character_targets;
  MeanStd quote_targets;
  double explicit_share_pct = 0.0;           // all single-speaker quotes
  double retained_explicit_share_pct = 0.0;  // quotes of retained speakers
  std::vector<std::string> novels_without_queries;
};

QueryStatsSummary compute_query_stats(const Corpus& corpus, const ExperimentSpec& spec,
                                      Role min_role = Role::Intermediate);

void print_query_stats(std::ostream& out, const QueryStatsSummary& stats, bool per_novel);

}  // namespace charvoice
