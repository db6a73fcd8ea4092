#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "charvoice/corpus.hpp"
#include "charvoice/encoders.hpp"
#include "charvoice/evaluation.hpp"
#include "charvoice/representation.hpp"

namespace charvoice {

// Supplies per-quote vectors one novel at a time, plus optional set-level
// vectors that replace mean pooling.
class EmbeddingSource {
 public:
  virtual ~EmbeddingSource() = default;
  virtual const std::string& encoder_id() const = 0;
  virtual QuoteEmbeddingTable embeddings_for(const NovelView& novel) const = 0;
  virtual std::span<const SetEmbedding> set_embeddings() const { return {}; }
};

// Encodes quotes on the fly with a built-in encoder.
class BuiltinEncoderSource : public EmbeddingSource {
 public:
  explicit BuiltinEncoderSource(EncoderSpec spec, std::size_t threads = 1);

  const std::string& encoder_id() const override { return spec_.encoder_id; }
  QuoteEmbeddingTable embeddings_for(const NovelView& novel) const override;
  std::size_t featureless_quotes() const { return featureless_; }

 private:
  EncoderSpec spec_;
  std::size_t threads_;
  mutable std::atomic<std::size_t> featureless_{0};
};

// Serves embeddings read from interchange files.
class ImportedEmbeddingSource : public EmbeddingSource {
 public:
  ImportedEmbeddingSource(std::string encoder_id, QuoteEmbeddingTable quotes,
                          std::vector<SetEmbedding> sets = {});

  const std::string& encoder_id() const override { return encoder_id_; }
  QuoteEmbeddingTable embeddings_for(const NovelView& novel) const override;
  std::span<const SetEmbedding> set_embeddings() const override { return sets_; }

 private:
  std::string encoder_id_;
  QuoteEmbeddingTable quotes_;
  std::vector<SetEmbedding> sets_;
};

struct ExperimentOptions {
  Role min_role = Role::Intermediate;
  Aggregation aggregation = Aggregation::QueryMean;
  std::size_t threads = 1;
};

struct SkippedQuery {
  QueryKey key;
  Evaluation evaluation = Evaluation::CharacterCharacter;
  SkipReason reason = SkipReason::NoNegativeTargets;
};

struct ExperimentResult {
  std::string encoder_id;
  ExperimentSpec spec;
  AucReport cc;
  AucReport cq;
  std::size_t n_queries = 0;
  std::vector<SkippedQuery> skipped;
  // Query keys dropped at bundle construction for lack of a held-out target.
  std::vector<QueryKey> dropped;
  std::size_t zero_vector_scores = 0;
};

ExperimentResult run_experiment(const Corpus& corpus, const EmbeddingSource& source,
                                const ExperimentSpec& spec, const ExperimentOptions& options = {});

struct CurveRow {
  std::size_t n = 0;
  std::optional<double> cc_macro;  // empty when no query was scored
  std::optional<double> cq_macro;
  std::size_t n_queries = 0;
};

// Reading-order experiment for every n of an ascending, positive grid.
// Quotes of each novel are encoded once for the whole grid.
std::vector<CurveRow> reading_order_curve(const Corpus& corpus, const EmbeddingSource& source,
                                          std::span<const std::size_t> n_grid,
                                          const ExperimentOptions& options = {},
                                          std::optional<std::size_t> split_chapter = std::nullopt,
                                          std::vector<ExperimentResult>* results = nullptr);

}  // namespace charvoice
