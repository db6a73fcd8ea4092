#include "charvoice/experiment.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "charvoice/parallel.hpp"

namespace charvoice {

BuiltinEncoderSource::BuiltinEncoderSource(EncoderSpec spec, std::size_t threads)
    : spec_(std::move(spec)), threads_(threads) {
  spec_.validate();
  if (spec_.kind == EncoderKind::External) {
    throw ConfigError(fmt::format("encoder '{}' is external", spec_.encoder_id));
  }
}

QuoteEmbeddingTable BuiltinEncoderSource::embeddings_for(const NovelView& novel) const {
  EncodeStats stats;
  auto table = encode_quotes(novel.quotes(), spec_, threads_, &stats);
  featureless_ += stats.featureless;
  return table;
}

ImportedEmbeddingSource::ImportedEmbeddingSource(std::string encoder_id,
                                                 QuoteEmbeddingTable quotes,
                                                 std::vector<SetEmbedding> sets)
    : encoder_id_(std::move(encoder_id)), quotes_(std::move(quotes)), sets_(std::move(sets)) {}

QuoteEmbeddingTable ImportedEmbeddingSource::embeddings_for(const NovelView& novel) const {
  QuoteEmbeddingTable table;
  std::vector<std::string> missing;
  for (const Quote* q : novel.quotes()) {
    const auto it = quotes_.find(q->quote_id);
    if (it == quotes_.end()) {
      missing.push_back(q->quote_id);
    } else {
      table.emplace(it->first, it->second);
    }
  }
  if (!missing.empty()) {
    throw ValidationError(fmt::format("{}: {} retained quote(s) have no '{}' embedding: {}",
                                      novel.novel_id(), missing.size(), encoder_id_,
                                      fmt::join(missing, ", ")),
                          missing);
  }
  return table;
}

namespace {

struct NovelOutcome {
  std::vector<QueryAuc> cc;
  std::vector<QueryAuc> cq;
  std::vector<SkippedQuery> skipped;
  std::vector<QueryKey> dropped;
  std::size_t n_queries = 0;
};

void evaluate_bundle(const NovelView& novel, const QueryTargetBundle& bundle,
                     ZeroVectorCounter& zeros, NovelOutcome& out) {
  for (const auto& query : bundle.queries) {
    ++out.n_queries;
    const QueryKey key{query.novel_id, query.character_id, query.subset_descriptor};
    const Character* c = novel.find_character(query.character_id);
    const Role role = c != nullptr ? c->role : Role::Minor;

    if (bundle.character_targets.size() < 2) {
      out.skipped.push_back({key, Evaluation::CharacterCharacter, SkipReason::NoNegativeTargets});
    } else {
      const ScoredQuery scored = auc_cc(query, bundle.character_targets, &zeros);
      out.cc.push_back({key, role, scored.auc, scored.scores.positive_scores.size(),
                        scored.scores.negative_scores.size(), scored.counts});
    }

    const CqOutcome cq = auc_cq(query, bundle.quote_targets, &zeros);
    if (cq.scored) {
      out.cq.push_back({key, role, cq.scored->auc, cq.scored->scores.positive_scores.size(),
                        cq.scored->scores.negative_scores.size(), cq.scored->counts});
    } else {
      out.skipped.push_back({key, Evaluation::CharacterQuote, cq.reason});
    }
  }
}

void evaluate_subset(const NovelView& view, const QuoteEmbeddingTable& table,
                     const EmbeddingSource& source, const SubsetSpec& subset,
                     ZeroVectorCounter& zeros, NovelOutcome& out) {
  const BundlePlan plan = plan_bundle(view, subset);
  for (const auto& c : plan.dropped_queries) {
    out.dropped.push_back({plan.novel_id, c, subset.descriptor(Side::Query)});
  }
  if (plan.queries.empty()) return;
  QueryTargetBundle bundle = materialize(plan, table, source.encoder_id());
  if (!source.set_embeddings().empty()) {
    bundle = attach_set_embeddings(std::move(bundle), source.set_embeddings());
  }
  evaluate_bundle(view, bundle, zeros, out);
}

ExperimentResult assemble(const Corpus& corpus, const std::string& encoder_id,
                          const ExperimentSpec& spec, const ExperimentOptions& options,
                          std::vector<NovelOutcome>& outcomes, std::size_t zero_scores) {
  ExperimentResult result;
  result.encoder_id = encoder_id;
  result.spec = spec;
  result.zero_vector_scores = zero_scores;
  std::vector<QueryAuc> cc;
  std::vector<QueryAuc> cq;
  std::vector<std::string> novel_ids;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    auto& o = outcomes[i];
    novel_ids.push_back(corpus.novels[i].novel_id);
    result.n_queries += o.n_queries;
    std::move(o.cc.begin(), o.cc.end(), std::back_inserter(cc));
    std::move(o.cq.begin(), o.cq.end(), std::back_inserter(cq));
    std::move(o.skipped.begin(), o.skipped.end(), std::back_inserter(result.skipped));
    std::move(o.dropped.begin(), o.dropped.end(), std::back_inserter(result.dropped));
  }
  result.cc = aggregate(std::move(cc), novel_ids, options.aggregation);
  result.cq = aggregate(std::move(cq), novel_ids, options.aggregation);
  if (!result.skipped.empty()) {
    spdlog::info("{}: {} query evaluation(s) skipped", encoder_id, result.skipped.size());
  }
  return result;
}

}  // namespace

ExperimentResult run_experiment(const Corpus& corpus, const EmbeddingSource& source,
                                const ExperimentSpec& spec, const ExperimentOptions& options) {
  std::vector<NovelOutcome> outcomes(corpus.novels.size());
  ZeroVectorCounter zeros;
  parallel_for(corpus.novels.size(), options.threads, [&](std::size_t i) {
    const NovelView view(corpus.novels[i], options.min_role);
    const QuoteEmbeddingTable table = source.embeddings_for(view);
    for (const auto& subset : spec.subsets(view)) {
      evaluate_subset(view, table, source, subset, zeros, outcomes[i]);
    }
  });
  return assemble(corpus, source.encoder_id(), spec, options, outcomes, zeros.count.load());
}

std::vector<CurveRow> reading_order_curve(const Corpus& corpus, const EmbeddingSource& source,
                                          std::span<const std::size_t> n_grid,
                                          const ExperimentOptions& options,
                                          std::optional<std::size_t> split_chapter,
                                          std::vector<ExperimentResult>* results) {
  if (n_grid.empty()) throw ConfigError("reading_order_curve: empty n grid");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] < 1 || (k > 0 && n_grid[k] <= n_grid[k - 1])) {
      throw ConfigError("reading_order_curve: n grid must be positive and strictly ascending");
    }
  }

  // outcomes[grid index][novel index]
  std::vector<std::vector<NovelOutcome>> outcomes(
      n_grid.size(), std::vector<NovelOutcome>(corpus.novels.size()));
  std::vector<ZeroVectorCounter> zeros(n_grid.size());
  parallel_for(corpus.novels.size(), options.threads, [&](std::size_t i) {
    const NovelView view(corpus.novels[i], options.min_role);
    const QuoteEmbeddingTable table = source.embeddings_for(view);
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
      SubsetSpec subset = SubsetSpec::reading_order(n_grid[k]);
      subset.split_chapter = split_chapter;
      evaluate_subset(view, table, source, subset, zeros[k], outcomes[k][i]);
    }
  });

  std::vector<CurveRow> rows;
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    ExperimentSpec spec;
    spec.strategy = Strategy::ReadingOrder;
    spec.n_quotes = n_grid[k];
    spec.split_chapter = split_chapter;
    ExperimentResult r =
        assemble(corpus, source.encoder_id(), spec, options, outcomes[k], zeros[k].count.load());
    CurveRow row;
    row.n = n_grid[k];
    row.n_queries = r.n_queries;
    if (r.cc.macro.n_novels > 0) row.cc_macro = r.cc.macro.mean;
    if (r.cq.macro.n_novels > 0) row.cq_macro = r.cq.macro.mean;
    rows.push_back(row);
    if (results != nullptr) results->push_back(std::move(r));
  }
  return rows;
}

}  // namespace charvoice
