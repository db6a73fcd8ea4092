#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "charvoice/corpus.hpp"

namespace charvoice {

// Quote and character vectors. Stored in single precision, which is also the
// precision of the interchange format.
using Embedding = Eigen::VectorXf;

enum class EncoderKind { CharNgram, TokenUnigram, FunctionWord, External };

std::string_view to_string(EncoderKind kind);
std::optional<EncoderKind> parse_encoder_kind(std::string_view name);

inline constexpr int kDefaultHashDim = 4096;

// Encoder identity plus kind-specific parameters:
//   char_ngram:     n, dim, seed, normalize
//   token_unigram:  dim, seed, normalize
//   function_words: stopwords (list id) or words (comma-separated)
//   external:       dim (optional, checked against the file header)
struct EncoderSpec {
  std::string encoder_id;
  EncoderKind kind = EncoderKind::CharNgram;
  std::map<std::string, std::string> params;

  static EncoderSpec char_ngram(int n = 3, int dim = kDefaultHashDim, std::uint64_t seed = 0);
  static EncoderSpec token_unigram(int dim = kDefaultHashDim, std::uint64_t seed = 0);
  static EncoderSpec function_words(std::string list_id = "english");
  static EncoderSpec external(std::string encoder_id, int dim = 0);

  int n() const;
  // 0 for external encoders without a declared dimension.
  int dim() const;
  std::uint64_t seed() const;
  bool normalize() const;
  std::vector<std::string> stopwords() const;

  // Throws ConfigError when the parameters break the kind's invariants.
  void validate() const;
};

// Signed feature hashing of overlapping character n-grams over the
// lowercased, whitespace-collapsed text, then L2 normalization. Texts shorter
// than n code points have no n-grams and encode to the zero vector.
Embedding encode_char_ngram(std::string_view text, int n, int dim, std::uint64_t seed,
                            bool normalize = true);

// Hashed term frequencies of lowercased word tokens, L2-normalized.
Embedding encode_token_unigram(std::string_view text, int dim, std::uint64_t seed,
                               bool normalize = true);

// Relative frequency of each listed word among all tokens of the text.
Embedding encode_function_words(std::string_view text, std::span<const std::string> stopwords);

// Built-in stopword lists by id. Throws ConfigError for unknown ids.
const std::vector<std::string>& stopword_list(std::string_view list_id);

// Dispatches on spec.kind. External encoders cannot encode text.
Embedding encode(const EncoderSpec& spec, std::string_view text);

// Seeded 64-bit hash used for feature hashing.
std::uint64_t feature_hash(std::string_view bytes, std::uint64_t seed);

using QuoteEmbeddingTable = std::unordered_map<std::string, Embedding>;

struct EncodeStats {
  // Quotes with no features for the encoder (e.g. punctuation only), stored
  // as zero vectors.
  std::size_t featureless = 0;
};

QuoteEmbeddingTable encode_quotes(std::span<const Quote* const> quotes, const EncoderSpec& spec,
                                  std::size_t threads = 1, EncodeStats* stats = nullptr);

struct QuoteEmbedding {
  std::string quote_id;
  std::string encoder_id;
  Embedding vector;

  int dim() const { return static_cast<int>(vector.size()); }
};

// Externally pooled vector for a set of quotes.
struct SetEmbedding {
  std::string novel_id;
  std::string character_id;
  std::string subset_descriptor;
  std::string encoder_id;
  Embedding vector;
  // Number of pooled quotes; 0 when read from an interchange file, which does
  // not record it.
  std::size_t support_count = 0;

  int dim() const { return static_cast<int>(vector.size()); }
};

enum class RecordKind { Quote, Set, Mixed };

// Line-delimited embedding interchange:
//   #dim=<d> encoder=<id> kind=<quote|set|mixed>
//   quote <quote_id> <d floats>
//   set <novel_id> <character_id> <subset_descriptor> <d floats>
struct EmbeddingFile {
  int dim = 0;
  std::string encoder_id;
  RecordKind kind = RecordKind::Quote;
  std::vector<QuoteEmbedding> quotes;
  std::vector<SetEmbedding> sets;

  QuoteEmbeddingTable quote_table() const;
};

// Validates every record; ValidationError details carry "line N: reason".
EmbeddingFile read_embeddings(std::istream& in, std::string_view source,
                              const EncoderSpec* expected = nullptr);
EmbeddingFile import_embeddings(const std::filesystem::path& path, const EncoderSpec& expected);

// Floats are written as the shortest decimal that reads back to the same
// float32, so export followed by import is bit-exact.
void write_embeddings(std::ostream& out, const EmbeddingFile& file);

}  // namespace charvoice
