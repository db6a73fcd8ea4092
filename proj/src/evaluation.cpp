#include "charvoice/evaluation.hpp"

#include <cmath>
#include <limits>
#include <map>

#include <fmt/format.h>

namespace charvoice {

PairCounts rank_pairs(std::span<const double> positives, std::span<const double> negatives) {
  std::vector<double> sorted(negatives.begin(), negatives.end());
  std::sort(sorted.begin(), sorted.end());
  PairCounts counts;
  for (double p : positives) {
    const auto lower = std::lower_bound(sorted.begin(), sorted.end(), p);
    const auto upper = std::upper_bound(lower, sorted.end(), p);
    counts.wins += static_cast<std::uint64_t>(lower - sorted.begin());
    counts.ties += static_cast<std::uint64_t>(upper - lower);
  }
  counts.pairs = static_cast<std::uint64_t>(positives.size()) * negatives.size();
  return counts;
}

double mann_whitney_auc(std::span<const double> positives, std::span<const double> negatives) {
  if (positives.empty() || negatives.empty()) {
    throw ValidationError("mann_whitney_auc: need at least one positive and one negative");
  }
  return rank_pairs(positives, negatives).auc();
}

std::string_view to_string(SkipReason reason) {
  switch (reason) {
    case SkipReason::NoPositiveTargets:
      return "no_positive_targets";
    case SkipReason::NoNegativeTargets:
      return "no_negative_targets";
  }
  return "?";
}

std::string_view to_string(Evaluation evaluation) {
  return evaluation == Evaluation::CharacterCharacter ? "cc" : "cq";
}

std::string_view to_string(Aggregation aggregation) {
  return aggregation == Aggregation::QueryMean ? "query_mean" : "pooled_pairs";
}

std::optional<Aggregation> parse_aggregation(std::string_view name) {
  if (name == "query_mean") return Aggregation::QueryMean;
  if (name == "pooled_pairs") return Aggregation::PooledPairs;
  return std::nullopt;
}

ScoredQuery auc_cc(const CharacterEmbedding& query, std::span<const CharacterEmbedding> targets,
                   ZeroVectorCounter* zeros) {
  ScoredQuery out;
  out.scores.key = {query.novel_id, query.character_id, query.subset_descriptor};
  std::size_t positives = 0;
  for (const auto& target : targets) {
    const double score = cosine(query.vector, target.vector, zeros);
    if (target.character_id == query.character_id) {
      ++positives;
      out.scores.positive_scores.push_back(score);
    } else {
      out.scores.negative_scores.push_back(score);
    }
  }
  if (positives != 1) {
    throw ValidationError(fmt::format("auc_cc: query {} has {} positive targets, expected 1",
                                      query.character_id, positives));
  }
  if (out.scores.negative_scores.empty()) {
    throw ValidationError(fmt::format("auc_cc: query {} has no negative targets",
                                      query.character_id));
  }
  out.counts = rank_pairs(out.scores.positive_scores, out.scores.negative_scores);
  out.auc = out.counts.auc();
  return out;
}

CqOutcome auc_cq(const CharacterEmbedding& query, std::span<const QuoteTarget> quote_targets,
                 ZeroVectorCounter* zeros) {
  ScoredQuery scored;
  scored.scores.key = {query.novel_id, query.character_id, query.subset_descriptor};
  for (const auto& target : quote_targets) {
    if (target.vector == nullptr) {
      throw ValidationError(fmt::format("auc_cq: quote {} has no embedding", target.quote_id));
    }
    const double score = cosine(query.vector, *target.vector, zeros);
    if (target.speaker_id == query.character_id) {
      scored.scores.positive_scores.push_back(score);
    } else {
      scored.scores.negative_scores.push_back(score);
    }
  }
  CqOutcome outcome;
  if (scored.scores.positive_scores.empty()) {
    outcome.reason = SkipReason::NoPositiveTargets;
    return outcome;
  }
  if (scored.scores.negative_scores.empty()) {
    outcome.reason = SkipReason::NoNegativeTargets;
    return outcome;
  }
  scored.counts = rank_pairs(scored.scores.positive_scores, scored.scores.negative_scores);
  scored.auc = scored.counts.auc();
  outcome.scored = std::move(scored);
  return outcome;
}

namespace {

struct MeanStd {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = 0.0;
};

MeanStd population(const std::vector<double>& values) {
  MeanStd out;
  if (values.empty()) return out;
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(values.size()));
  return out;
}

// Per-novel value for a group of queries under the chosen aggregation.
double novel_value(const std::vector<const QueryAuc*>& queries, Aggregation aggregation) {
  if (aggregation == Aggregation::PooledPairs) {
    PairCounts pooled;
    for (const QueryAuc* q : queries) {
      pooled.wins += q->counts.wins;
      pooled.ties += q->counts.ties;
      pooled.pairs += q->counts.pairs;
    }
    return pooled.auc();
  }
  std::vector<double> aucs;
  for (const QueryAuc* q : queries) aucs.push_back(q->auc);
  return population(aucs).mean;
}

GroupSummary summarize_over_novels(
    const std::vector<std::vector<const QueryAuc*>>& by_novel, Aggregation aggregation) {
  GroupSummary summary;
  std::vector<double> values;
  for (const auto& queries : by_novel) {
    if (queries.empty()) continue;
    values.push_back(novel_value(queries, aggregation));
    summary.n_queries += queries.size();
  }
  const MeanStd ms = population(values);
  summary.mean = ms.mean;
  summary.std = ms.std;
  summary.n_novels = values.size();
  return summary;
}

}  // namespace

AucReport aggregate(std::vector<QueryAuc> per_query, std::span<const std::string> novel_ids,
                    Aggregation aggregation) {
  AucReport report;
  report.aggregation = aggregation;
  std::sort(per_query.begin(), per_query.end(),
            [](const QueryAuc& a, const QueryAuc& b) { return a.key < b.key; });
  report.per_query = std::move(per_query);

  std::vector<std::string> novels(novel_ids.begin(), novel_ids.end());
  for (const auto& q : report.per_query) novels.push_back(q.key.novel_id);
  std::sort(novels.begin(), novels.end());
  novels.erase(std::unique(novels.begin(), novels.end()), novels.end());

  std::map<std::string_view, std::size_t> novel_index;
  for (std::size_t i = 0; i < novels.size(); ++i) novel_index[novels[i]] = i;

  std::vector<std::vector<const QueryAuc*>> by_novel(novels.size());
  std::map<Role, std::vector<std::vector<const QueryAuc*>>> by_role;
  for (const auto& q : report.per_query) {
    if (!(q.auc >= 0.0 && q.auc <= 1.0)) {
      throw ValidationError(fmt::format("aggregate: AUC {} outside [0, 1]", q.auc));
    }
    const std::size_t idx = novel_index.at(q.key.novel_id);
    by_novel[idx].push_back(&q);
    auto& role_groups = by_role[q.role];
    role_groups.resize(novels.size());
    role_groups[idx].push_back(&q);
  }

  for (std::size_t i = 0; i < novels.size(); ++i) {
    if (by_novel[i].empty()) {
      report.excluded_novels.push_back(novels[i]);
      continue;
    }
    std::vector<double> aucs;
    for (const QueryAuc* q : by_novel[i]) aucs.push_back(q->auc);
    NovelSummary s;
    s.novel_id = novels[i];
    s.mean = novel_value(by_novel[i], aggregation);
    s.std = population(aucs).std;
    s.n_queries = aucs.size();
    report.per_novel.push_back(std::move(s));
  }

  report.macro = summarize_over_novels(by_novel, aggregation);
  for (Role role : {Role::Major, Role::Intermediate, Role::Minor}) {
    const auto it = by_role.find(role);
    if (it == by_role.end()) continue;
    report.per_role.push_back({role, summarize_over_novels(it->second, aggregation)});
  }
  return report;
}

}  // namespace charvoice
