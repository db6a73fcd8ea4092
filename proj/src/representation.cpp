#include "charvoice/representation.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "json.hpp"

namespace charvoice {

std::string_view to_string(Strategy strategy) {
  switch (strategy) {
    case Strategy::Chapterwise:
      return "chapterwise";
    case Strategy::Explicit:
      return "explicit";
    case Strategy::ReadingOrder:
      return "reading_order";
  }
  return "?";
}

std::optional<Strategy> parse_strategy(std::string_view name) {
  for (auto s : {Strategy::Chapterwise, Strategy::Explicit, Strategy::ReadingOrder}) {
    if (to_string(s) == name) return s;
  }
  return std::nullopt;
}

SubsetSpec SubsetSpec::chapterwise(std::size_t chapter, std::size_t min_q) {
  SubsetSpec s;
  s.strategy = Strategy::Chapterwise;
  s.chapter_index = chapter;
  s.min_query_quotes = min_q;
  return s;
}

SubsetSpec SubsetSpec::explicit_only(std::size_t chapter, std::size_t min_q) {
  SubsetSpec s = chapterwise(chapter, min_q);
  s.strategy = Strategy::Explicit;
  return s;
}

SubsetSpec SubsetSpec::reading_order(std::size_t n) {
  SubsetSpec s;
  s.strategy = Strategy::ReadingOrder;
  s.n_quotes = n;
  return s;
}

std::string SubsetSpec::descriptor(Side side) const {
  const char side_tag = side == Side::Query ? 'q' : 't';
  if (strategy == Strategy::ReadingOrder) {
    return fmt::format("{}:n={}:side={}", to_string(strategy), n_quotes, side_tag);
  }
  return fmt::format("{}:chapter={}:side={}", to_string(strategy), chapter_index, side_tag);
}

std::size_t reading_order_split(std::size_t chapter_count,
                                std::optional<std::size_t> split_chapter) {
  if (split_chapter) return *split_chapter;
  return (chapter_count + 1) / 2;
}

std::vector<SubsetSpec> ExperimentSpec::subsets(const NovelView& novel) const {
  std::vector<SubsetSpec> out;
  if (strategy == Strategy::ReadingOrder) {
    SubsetSpec s = SubsetSpec::reading_order(n_quotes);
    s.split_chapter = split_chapter;
    out.push_back(s);
    return out;
  }
  for (std::size_t t = 0; t < novel.chapter_count(); ++t) {
    out.push_back(strategy == Strategy::Explicit ? SubsetSpec::explicit_only(t, min_query_quotes)
                                                 : SubsetSpec::chapterwise(t, min_query_quotes));
  }
  return out;
}

BundlePlan plan_bundle(const NovelView& novel, const SubsetSpec& subset) {
  BundlePlan plan;
  plan.novel_id = novel.novel_id();
  plan.subset = subset;

  std::map<std::string_view, std::vector<const Quote*>> query_quotes;
  std::map<std::string_view, std::vector<const Quote*>> target_quotes;

  if (subset.strategy == Strategy::ReadingOrder) {
    if (subset.n_quotes < 1) throw ValidationError("reading order needs n >= 1");
    const std::size_t split = reading_order_split(novel.chapter_count(), subset.split_chapter);
    for (const Quote* q : novel.quotes()) {
      if (q->chapter_index < split) {
        auto& bucket = query_quotes[q->speaker_id];
        if (bucket.size() < subset.n_quotes) bucket.push_back(q);
      } else {
        target_quotes[q->speaker_id].push_back(q);
        plan.heldout_quotes.push_back(q);
      }
    }
  } else {
    if (subset.chapter_index >= novel.chapter_count()) {
      throw ValidationError(fmt::format("{}: chapter {} out of range (chapter_count {})",
                                        novel.novel_id(), subset.chapter_index,
                                        novel.chapter_count()));
    }
    if (subset.min_query_quotes < 1) throw ValidationError("min_query_quotes must be >= 1");
    const bool explicit_only = subset.strategy == Strategy::Explicit;
    for (const Quote* q : novel.quotes()) {
      if (q->chapter_index == subset.chapter_index) {
        if (!explicit_only || q->referent_type == ReferentType::Explicit) {
          query_quotes[q->speaker_id].push_back(q);
        }
      } else {
        target_quotes[q->speaker_id].push_back(q);
        plan.heldout_quotes.push_back(q);
      }
    }
  }

  const std::size_t bar = subset.strategy == Strategy::ReadingOrder ? subset.n_quotes
                                                                    : subset.min_query_quotes;
  for (const Character* c : novel.characters()) {
    const auto targets = target_quotes.find(c->character_id);
    const bool has_target = targets != target_quotes.end();
    if (has_target) plan.targets.push_back({c->character_id, targets->second});

    const auto queries = query_quotes.find(c->character_id);
    if (queries == query_quotes.end() || queries->second.size() < bar) continue;
    if (!has_target) {
      plan.dropped_queries.push_back(c->character_id);
      continue;
    }
    plan.queries.push_back({c->character_id, queries->second});
  }

  if (!plan.dropped_queries.empty()) {
    spdlog::debug("{} {}: dropped queries without held-out target: {}", plan.novel_id,
                  subset.descriptor(Side::Query), fmt::join(plan.dropped_queries, ", "));
  }
  if (plan.queries.empty()) {
    spdlog::debug("{} {}: no queries", plan.novel_id, subset.descriptor(Side::Query));
  }
  return plan;
}

QueryTargetBundle materialize(const BundlePlan& plan, const QuoteEmbeddingTable& embeddings,
                              std::string_view encoder_id) {
  std::vector<std::string> missing;
  const auto lookup = [&](const Quote* q) -> const Embedding* {
    const auto it = embeddings.find(q->quote_id);
    if (it == embeddings.end()) {
      missing.push_back(q->quote_id);
      return nullptr;
    }
    return &it->second;
  };

  QueryTargetBundle bundle;
  bundle.novel_id = plan.novel_id;
  bundle.subset = plan.subset;
  bundle.heldout_descriptor = plan.subset.descriptor(Side::Target);
  bundle.dropped_queries = plan.dropped_queries;

  const auto pool = [&](const MemberSet& members, Side side) {
    CharacterEmbedding e;
    e.novel_id = plan.novel_id;
    e.character_id = members.character_id;
    e.subset_descriptor = plan.subset.descriptor(side);
    e.encoder_id = std::string(encoder_id);
    e.support_count = members.quotes.size();
    std::vector<const Embedding*> vectors;
    for (const Quote* q : members.quotes) {
      e.quote_ids.push_back(q->quote_id);
      if (const Embedding* v = lookup(q)) vectors.push_back(v);
    }
    if (vectors.size() == members.quotes.size()) e.vector = pool_mean(vectors);
    return e;
  };

  for (const auto& m : plan.queries) bundle.queries.push_back(pool(m, Side::Query));
  for (const auto& m : plan.targets) bundle.character_targets.push_back(pool(m, Side::Target));
  for (const Quote* q : plan.heldout_quotes) {
    bundle.quote_targets.push_back({q->quote_id, q->speaker_id, lookup(q)});
  }

  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    throw ValidationError(fmt::format("{}: {} quote(s) have no embedding: {}", plan.novel_id,
                                      missing.size(), fmt::join(missing, ", ")),
                          missing);
  }
  return bundle;
}

QueryTargetBundle build_chapterwise(const NovelView& novel, const QuoteEmbeddingTable& embeddings,
                                    std::size_t chapter, std::size_t min_q,
                                    std::string_view encoder_id) {
  return materialize(plan_bundle(novel, SubsetSpec::chapterwise(chapter, min_q)), embeddings,
                     encoder_id);
}

QueryTargetBundle build_explicit(const NovelView& novel, const QuoteEmbeddingTable& embeddings,
                                 std::size_t chapter, std::size_t min_q,
                                 std::string_view encoder_id) {
  return materialize(plan_bundle(novel, SubsetSpec::explicit_only(chapter, min_q)), embeddings,
                     encoder_id);
}

QueryTargetBundle build_reading_order(const NovelView& novel,
                                      const QuoteEmbeddingTable& embeddings, std::size_t n,
                                      std::string_view encoder_id) {
  return materialize(plan_bundle(novel, SubsetSpec::reading_order(n)), embeddings, encoder_id);
}

QueryTargetBundle attach_set_embeddings(QueryTargetBundle bundle,
                                        std::span<const SetEmbedding> sets) {
  std::map<std::tuple<std::string_view, std::string_view, std::string_view>, const SetEmbedding*>
      index;
  for (const auto& s : sets) {
    index[{s.novel_id, s.character_id, s.subset_descriptor}] = &s;
  }
  std::vector<std::string> uncovered;
  std::optional<Eigen::Index> dim;
  const auto substitute = [&](CharacterEmbedding& e) {
    const auto it = index.find({e.novel_id, e.character_id, e.subset_descriptor});
    if (it == index.end()) {
      uncovered.push_back(fmt::format("({}, {}, {})", e.novel_id, e.character_id,
                                      e.subset_descriptor));
      return;
    }
    const SetEmbedding& s = *it->second;
    if (dim && *dim != s.vector.size()) {
      throw ValidationError("attach_set_embeddings: set vectors have different dimensions");
    }
    dim = s.vector.size();
    e.vector = s.vector;
    e.encoder_id = s.encoder_id;
  };
  for (auto& q : bundle.queries) substitute(q);
  for (auto& t : bundle.character_targets) substitute(t);
  if (!uncovered.empty()) {
    throw ValidationError(fmt::format("{} set embedding key(s) not covered: {}", uncovered.size(),
                                      fmt::join(uncovered, ", ")),
                          uncovered);
  }
  return bundle;
}

void write_manifest(std::ostream& out, const BundlePlan& plan) {
  const auto emit = [&](const MemberSet& m, Side side) {
    nlohmann::ordered_json record;
    record["novel_id"] = plan.novel_id;
    record["character_id"] = m.character_id;
    record["subset_descriptor"] = plan.subset.descriptor(side);
    record["side"] = side == Side::Query ? "query" : "target";
    auto ids = nlohmann::json::array();
    for (const Quote* q : m.quotes) ids.push_back(q->quote_id);
    record["quote_ids"] = std::move(ids);
    out << record.dump() << '\n';
  };
  for (const auto& m : plan.queries) emit(m, Side::Query);
  for (const auto& m : plan.targets) emit(m, Side::Target);
}

}  // namespace charvoice
