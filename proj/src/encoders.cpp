#include "charvoice/encoders.hpp"

#include <charconv>
#include <sstream>

#include <fmt/format.h>

#include "charvoice/error.hpp"
#include "charvoice/parallel.hpp"
#include "charvoice/text.hpp"

namespace charvoice {

std::string_view to_string(EncoderKind kind) {
  switch (kind) {
    case EncoderKind::CharNgram:
      return "char_ngram";
    case EncoderKind::TokenUnigram:
      return "token_unigram";
    case EncoderKind::FunctionWord:
      return "function_words";
    case EncoderKind::External:
      return "external";
  }
  return "?";
}

std::optional<EncoderKind> parse_encoder_kind(std::string_view name) {
  for (auto kind : {EncoderKind::CharNgram, EncoderKind::TokenUnigram, EncoderKind::FunctionWord,
                    EncoderKind::External}) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

template <typename T>
T param_number(const EncoderSpec& spec, const std::string& key, T fallback) {
  const auto it = spec.params.find(key);
  if (it == spec.params.end() || it->second.empty()) return fallback;
  T value{};
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(
        fmt::format("encoder '{}': parameter {} is not a number: '{}'", spec.encoder_id, key, s));
  }
  return value;
}

void add_hashed(Eigen::VectorXd& acc, std::string_view feature, std::uint64_t seed) {
  const std::uint64_t h = feature_hash(feature, seed);
  const auto bucket = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(acc.size()));
  acc[bucket] += (h >> 63) != 0 ? -1.0 : 1.0;
}

Embedding finish(Eigen::VectorXd& acc, bool normalize) {
  if (normalize) {
    const double norm = acc.norm();
    if (norm > 0.0) acc /= norm;
  }
  return acc.cast<float>();
}

void require_dim(int dim) {
  if (dim < 2) throw ConfigError(fmt::format("hashed encoders need dim >= 2, got {}", dim));
}

}  // namespace

std::uint64_t feature_hash(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = 0xCBF29CE484222325ULL ^ splitmix64(seed);
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return splitmix64(h);
}

Embedding encode_char_ngram(std::string_view text, int n, int dim, std::uint64_t seed,
                            bool normalize) {
  if (n < 1) throw ConfigError(fmt::format("char n-gram order must be >= 1, got {}", n));
  require_dim(dim);
  const std::u32string normalized = text::normalize(text);
  if (normalized.empty()) throw ValidationError("encode_char_ngram: empty text");

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  const auto order = static_cast<std::size_t>(n);
  const std::u32string_view view(normalized);
  for (std::size_t i = 0; i + order <= view.size(); ++i) {
    add_hashed(acc, text::encode_utf8(view.substr(i, order)), seed);
  }
  return finish(acc, normalize);
}

Embedding encode_token_unigram(std::string_view text, int dim, std::uint64_t seed,
                               bool normalize) {
  require_dim(dim);
  const auto tokens = text::tokenize_words(text);
  if (tokens.empty()) throw ValidationError("encode_token_unigram: empty token stream");
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(dim);
  for (const auto& token : tokens) add_hashed(acc, token, seed);
  return finish(acc, normalize);
}

Embedding encode_function_words(std::string_view text, std::span<const std::string> stopwords) {
  if (stopwords.empty()) throw ConfigError("encode_function_words: empty stopword list");
  if (text::trim(text).empty()) throw ValidationError("encode_function_words: empty text");
  const auto tokens = text::tokenize_words(text);
  std::unordered_map<std::string_view, Eigen::Index> index;
  for (std::size_t i = 0; i < stopwords.size(); ++i) {
    index.emplace(stopwords[i], static_cast<Eigen::Index>(i));
  }
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(stopwords.size()));
  for (const auto& token : tokens) {
    if (auto it = index.find(token); it != index.end()) counts[it->second] += 1.0;
  }
  if (!tokens.empty()) counts /= static_cast<double>(tokens.size());
  return counts.cast<float>();
}

const std::vector<std::string>& stopword_list(std::string_view list_id) {
  static const std::vector<std::string> english = {
      "the",   "and",   "to",    "of",    "a",     "i",     "in",    "that",  "it",
      "you",   "he",    "was",   "is",    "his",   "her",   "she",   "with",  "for",
      "as",    "not",   "be",    "but",   "have",  "my",    "at",    "on",    "me",
      "him",   "so",    "all",   "had",   "by",    "we",    "no",    "what",  "this",
      "or",    "if",    "they",  "from",  "will",  "would", "there", "do",    "an",
      "are",   "been",  "which", "were",  "them",  "one",   "can",   "your",  "when",
      "who",   "must",  "shall", "should", "could", "may",  "very",  "our",   "its",
      "upon",  "than",  "then",  "now",   "how",   "more",  "yes",   "oh",    "well"};
  if (list_id == "english") return english;
  throw ConfigError(fmt::format("unknown stopword list '{}'", list_id));
}

EncoderSpec EncoderSpec::char_ngram(int n, int dim, std::uint64_t seed) {
  return {fmt::format("char{}gram", n),
          EncoderKind::CharNgram,
          {{"n", std::to_string(n)}, {"dim", std::to_string(dim)}, {"seed", std::to_string(seed)}}};
}

EncoderSpec EncoderSpec::token_unigram(int dim, std::uint64_t seed) {
  return {"unigram",
          EncoderKind::TokenUnigram,
          {{"dim", std::to_string(dim)}, {"seed", std::to_string(seed)}}};
}

EncoderSpec EncoderSpec::function_words(std::string list_id) {
  return {"function_words", EncoderKind::FunctionWord, {{"stopwords", std::move(list_id)}}};
}

EncoderSpec EncoderSpec::external(std::string encoder_id, int dim) {
  EncoderSpec spec{std::move(encoder_id), EncoderKind::External, {}};
  if (dim > 0) spec.params["dim"] = std::to_string(dim);
  return spec;
}

int EncoderSpec::n() const { return param_number<int>(*this, "n", 3); }

int EncoderSpec::dim() const {
  switch (kind) {
    case EncoderKind::FunctionWord:
      return static_cast<int>(stopwords().size());
    case EncoderKind::External:
      return param_number<int>(*this, "dim", 0);
    default:
      return param_number<int>(*this, "dim", kDefaultHashDim);
  }
}

std::uint64_t EncoderSpec::seed() const { return param_number<std::uint64_t>(*this, "seed", 0); }

bool EncoderSpec::normalize() const {
  const auto it = params.find("normalize");
  if (it == params.end() || it->second.empty()) return true;
  const auto& v = it->second;
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("encoder '{}': normalize must be a boolean, got '{}'",
                                encoder_id, v));
}

std::vector<std::string> EncoderSpec::stopwords() const {
  if (auto it = params.find("words"); it != params.end() && !it->second.empty()) {
    std::vector<std::string> words;
    std::stringstream ss(it->second);
    for (std::string w; std::getline(ss, w, ',');) {
      if (auto t = text::trim(w); !t.empty()) words.emplace_back(t);
    }
    return words;
  }
  const auto it = params.find("stopwords");
  return stopword_list(it == params.end() || it->second.empty() ? "english" : it->second);
}

void EncoderSpec::validate() const {
  if (encoder_id.empty()) throw ConfigError("encoder id must be non-empty");
  for (char c : encoder_id) {
    if (c == ' ' || c == '\t' || c == '\n') {
      throw ConfigError(fmt::format("encoder id '{}' must not contain whitespace", encoder_id));
    }
  }
  switch (kind) {
    case EncoderKind::CharNgram:
      if (n() < 1) throw ConfigError(fmt::format("encoder '{}': n must be >= 1", encoder_id));
      [[fallthrough]];
    case EncoderKind::TokenUnigram:
      require_dim(dim());
      seed();
      normalize();
      break;
    case EncoderKind::FunctionWord:
      if (stopwords().empty()) {
        throw ConfigError(fmt::format("encoder '{}': empty stopword list", encoder_id));
      }
      break;
    case EncoderKind::External:
      if (dim() < 0) throw ConfigError(fmt::format("encoder '{}': dim must be > 0", encoder_id));
      break;
  }
}

Embedding encode(const EncoderSpec& spec, std::string_view text) {
  switch (spec.kind) {
    case EncoderKind::CharNgram:
      return encode_char_ngram(text, spec.n(), spec.dim(), spec.seed(), spec.normalize());
    case EncoderKind::TokenUnigram:
      return encode_token_unigram(text, spec.dim(), spec.seed(), spec.normalize());
    case EncoderKind::FunctionWord: {
      const auto words = spec.stopwords();
      return encode_function_words(text, words);
    }
    case EncoderKind::External:
      break;
  }
  throw ConfigError(
      fmt::format("encoder '{}' is external; import its embeddings instead", spec.encoder_id));
}

QuoteEmbeddingTable encode_quotes(std::span<const Quote* const> quotes, const EncoderSpec& spec,
                                  std::size_t threads, EncodeStats* stats) {
  spec.validate();
  std::vector<Embedding> vectors(quotes.size());
  std::vector<char> featureless(quotes.size(), 0);
  const int dim = spec.dim();
  parallel_for(quotes.size(), threads, [&](std::size_t i) {
    try {
      vectors[i] = encode(spec, quotes[i]->clean_text);
    } catch (const ValidationError&) {
      vectors[i] = Embedding::Zero(dim);
      featureless[i] = 1;
    }
  });
  QuoteEmbeddingTable table;
  table.reserve(quotes.size());
  for (std::size_t i = 0; i < quotes.size(); ++i) {
    if (featureless[i] != 0 && stats != nullptr) ++stats->featureless;
    table.emplace(quotes[i]->quote_id, std::move(vectors[i]));
  }
  return table;
}

}  // namespace charvoice
