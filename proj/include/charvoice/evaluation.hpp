#pragma once

#include <algorithm>
#include <atomic>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "charvoice/corpus.hpp"
#include "charvoice/error.hpp"
#include "charvoice/representation.hpp"

namespace charvoice {

// Counts cosine evaluations that involved an all-zero vector.
struct ZeroVectorCounter {
  std::atomic<std::size_t> count{0};
};

// dot(a, b) / (|a| |b|) clamped to [-1, 1]. A pair involving an all-zero
// vector scores 0 and is counted in `zeros`.
template <typename DerivedA, typename DerivedB>
double cosine(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b,
              ZeroVectorCounter* zeros = nullptr) {
  if (a.size() != b.size()) throw ValidationError("cosine: vectors have different dimensions");
  const auto da = a.template cast<double>();
  const auto db = b.template cast<double>();
  const double na = da.norm();
  const double nb = db.norm();
  if (na == 0.0 || nb == 0.0) {
    if (zeros != nullptr) ++zeros->count;
    return 0.0;
  }
  return std::clamp(da.dot(db) / (na * nb), -1.0, 1.0);
}

// Outcome counts over every (positive, negative) score pair.
struct PairCounts {
  std::uint64_t wins = 0;  // positive strictly above negative
  std::uint64_t ties = 0;
  std::uint64_t pairs = 0;

  double auc() const {
    return (2.0 * static_cast<double>(wins) + static_cast<double>(ties)) /
           (2.0 * static_cast<double>(pairs));
  }
};

// Mann-Whitney pair counts in O((P + N) log N) by sorting the negatives.
PairCounts rank_pairs(std::span<const double> positives, std::span<const double> negatives);

// Probability that a positive outranks a negative, ties credited one half.
// Throws ValidationError when either side is empty.
double mann_whitney_auc(std::span<const double> positives, std::span<const double> negatives);

struct QueryKey {
  std::string novel_id;
  std::string character_id;
  std::string descriptor;

  friend auto operator<=>(const QueryKey&, const QueryKey&) = default;
  friend bool operator==(const QueryKey&, const QueryKey&) = default;
};

struct RankedScores {
  QueryKey key;
  std::vector<double> positive_scores;
  std::vector<double> negative_scores;
};

struct ScoredQuery {
  double auc = 0.0;
  PairCounts counts;
  RankedScores scores;
};

// Character-Character: the query's own held-out character target against
// every other character target. Throws ValidationError without exactly one
// positive target or without negatives.
ScoredQuery auc_cc(const CharacterEmbedding& query, std::span<const CharacterEmbedding> targets,
                   ZeroVectorCounter* zeros = nullptr);

enum class SkipReason { NoPositiveTargets, NoNegativeTargets };
std::string_view to_string(SkipReason reason);

struct CqOutcome {
  std::optional<ScoredQuery> scored;
  SkipReason reason = SkipReason::NoPositiveTargets;  // meaningful when !scored
};

// Character-Quote: held-out quotes of the query character against held-out
// quotes of everyone else.
CqOutcome auc_cq(const CharacterEmbedding& query, std::span<const QuoteTarget> quote_targets,
                 ZeroVectorCounter* zeros = nullptr);

enum class Evaluation { CharacterCharacter, CharacterQuote };
std::string_view to_string(Evaluation evaluation);

struct QueryAuc {
  QueryKey key;
  Role role = Role::Intermediate;
  double auc = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  PairCounts counts;
};

// Per-novel means use the per-query AUCs (QueryMean) or pool the pair
// counts of all the novel's queries (PooledPairs).
enum class Aggregation { QueryMean, PooledPairs };
std::string_view to_string(Aggregation aggregation);
std::optional<Aggregation> parse_aggregation(std::string_view name);

struct NovelSummary {
  std::string novel_id;
  double mean = 0.0;
  double std = 0.0;  // population std of per-query AUCs
  std::size_t n_queries = 0;
};

struct GroupSummary {
  double mean = 0.0;  // NaN when no novel contributes
  double std = 0.0;   // population std over per-novel values
  std::size_t n_novels = 0;
  std::size_t n_queries = 0;
};

struct RoleSummary {
  Role role = Role::Intermediate;
  GroupSummary summary;
};

struct AucReport {
  Aggregation aggregation = Aggregation::QueryMean;
  std::vector<QueryAuc> per_query;  // sorted by key
  std::vector<NovelSummary> per_novel;
  std::vector<RoleSummary> per_role;  // Major first
  GroupSummary macro;
  // Novels considered but without any scored query.
  std::vector<std::string> excluded_novels;
};

// Macro mean and std are taken over per-novel values; per-role rows do the
// same restricted to queries of that role. Result does not depend on the
// order of `per_query`.
AucReport aggregate(std::vector<QueryAuc> per_query, std::span<const std::string> novel_ids,
                    Aggregation aggregation = Aggregation::QueryMean);

}  // namespace charvoice
