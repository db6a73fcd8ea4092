#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include <Eigen/Core>

#include "charvoice/corpus.hpp"
#include "charvoice/encoders.hpp"
#include "charvoice/error.hpp"

namespace charvoice {

namespace detail {

template <typename T>
const T& deref(const T& value) {
  return value;
}
template <typename T>
const T& deref(const T* value) {
  return *value;
}
template <typename T>
const T& deref(T* value) {
  return *value;
}

}  // namespace detail

// Coordinate-wise arithmetic mean of equal-dimension vectors, without
// re-normalization. Accepts a range of Eigen vectors or of pointers to them.
// Accumulates in double regardless of the storage scalar.
template <std::ranges::input_range Range>
auto pool_mean(const Range& vectors) {
  using Vec = std::remove_cvref_t<decltype(detail::deref(*std::ranges::begin(vectors)))>;
  using Scalar = typename Vec::Scalar;
  Eigen::VectorXd acc;
  std::size_t count = 0;
  for (const auto& item : vectors) {
    const auto& v = detail::deref(item);
    if (count == 0) {
      acc = v.template cast<double>();
    } else {
      if (v.size() != acc.size()) {
        throw ValidationError("pool_mean: vectors have different dimensions");
      }
      acc += v.template cast<double>();
    }
    ++count;
  }
  if (count == 0) throw ValidationError("pool_mean: empty list of vectors");
  acc /= static_cast<double>(count);
  return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>(acc.template cast<Scalar>());
}

enum class Strategy { Chapterwise, Explicit, ReadingOrder };
enum class Side { Query, Target };

std::string_view to_string(Strategy strategy);
std::optional<Strategy> parse_strategy(std::string_view name);

// Which quotes form the query side of one bundle. Chapterwise and Explicit
// use chapter_index and min_query_quotes; ReadingOrder uses n_quotes and the
// split between the two halves of the novel.
struct SubsetSpec {
  Strategy strategy = Strategy::Chapterwise;
  std::size_t chapter_index = 0;
  std::size_t n_quotes = 0;
  std::size_t min_query_quotes = 5;
  // First chapter of the held-out half; ceil(chapter_count / 2) when unset.
  std::optional<std::size_t> split_chapter;

  static SubsetSpec chapterwise(std::size_t chapter, std::size_t min_q = 5);
  static SubsetSpec explicit_only(std::size_t chapter, std::size_t min_q = 5);
  static SubsetSpec reading_order(std::size_t n);

  // Canonical "<strategy>:<param>=<value>:side=<q|t>" key.
  std::string descriptor(Side side) const;
};

// ceil(chapter_count / 2) unless overridden.
std::size_t reading_order_split(std::size_t chapter_count,
                                std::optional<std::size_t> split_chapter = std::nullopt);

// One experiment across every chapter (or the single reading-order split) of
// a novel.
struct ExperimentSpec {
  Strategy strategy = Strategy::Chapterwise;
  std::size_t min_query_quotes = 5;
  std::size_t n_quotes = 1;
  std::optional<std::size_t> split_chapter;

  std::vector<SubsetSpec> subsets(const NovelView& novel) const;
};

struct MemberSet {
  std::string character_id;
  std::vector<const Quote*> quotes;  // reading order
};

// Quote membership of a bundle before any vectors are attached.
struct BundlePlan {
  std::string novel_id;
  SubsetSpec subset;
  std::vector<MemberSet> queries;
  std::vector<MemberSet> targets;
  std::vector<const Quote*> heldout_quotes;
  // Characters that met the query bar but have no held-out quote.
  std::vector<std::string> dropped_queries;
};

BundlePlan plan_bundle(const NovelView& novel, const SubsetSpec& subset);

struct CharacterEmbedding {
  std::string novel_id;
  std::string character_id;
  std::string subset_descriptor;
  std::string encoder_id;
  Embedding vector;
  std::size_t support_count = 0;
  std::vector<std::string> quote_ids;
};

// Borrows the vector from the embedding table used to build the bundle.
struct QuoteTarget {
  std::string quote_id;
  std::string speaker_id;
  const Embedding* vector = nullptr;
};

struct QueryTargetBundle {
  std::string novel_id;
  SubsetSpec subset;
  std::vector<CharacterEmbedding> queries;
  std::vector<CharacterEmbedding> character_targets;
  std::vector<QuoteTarget> quote_targets;
  std::string heldout_descriptor;
  std::vector<std::string> dropped_queries;
};

// Mean-pools the plan's member sets. Throws ValidationError listing every
// quote of the plan that has no embedding.
QueryTargetBundle materialize(const BundlePlan& plan, const QuoteEmbeddingTable& embeddings,
                              std::string_view encoder_id);

QueryTargetBundle build_chapterwise(const NovelView& novel, const QuoteEmbeddingTable& embeddings,
                                    std::size_t chapter, std::size_t min_q,
                                    std::string_view encoder_id);
QueryTargetBundle build_explicit(const NovelView& novel, const QuoteEmbeddingTable& embeddings,
                                 std::size_t chapter, std::size_t min_q,
                                 std::string_view encoder_id);
QueryTargetBundle build_reading_order(const NovelView& novel,
                                      const QuoteEmbeddingTable& embeddings, std::size_t n,
                                      std::string_view encoder_id);

// Replaces pooled query and character-target vectors with externally
// computed set vectors keyed by (novel, character, descriptor).
QueryTargetBundle attach_set_embeddings(QueryTargetBundle bundle,
                                        std::span<const SetEmbedding> sets);

// One JSON object per member set: novel_id, character_id, subset_descriptor,
// side, quote_ids.
void write_manifest(std::ostream& out, const BundlePlan& plan);

}  // namespace charvoice
