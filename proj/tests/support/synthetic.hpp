#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace charvoice::testing {

// Generated novels in the public PDNC layout (quotation_info.csv,
// character_info.csv, novel_text.txt with chapter headings). Each character
// speaks with a small private vocabulary mixed into shared filler words, so
// stylometric encoders have something to find.
struct SynthQuote {
  std::string id;
  std::string text;  // as written to quoteText, incises included
  std::vector<std::string> segments;
  std::string type;  // Explicit, Anaphoric, Implicit
  std::vector<std::string> speakers;  // main names; more than one is choral
  std::size_t chapter = 0;
};

struct SynthCharacter {
  std::string id;
  std::string name;
  std::vector<std::string> aliases;
};

struct SynthNovel {
  std::string dir_name;
  std::size_t chapters = 0;
  std::vector<SynthCharacter> characters;
  std::vector<SynthQuote> quotes;  // reading order
};

struct SynthOptions {
  std::size_t novels = 6;
  std::size_t min_chapters = 6;
  std::size_t max_chapters = 14;
  std::size_t characters = 12;
  double explicit_share = 0.3;
  // The last `no_explicit_novels` novels get no Explicit quotes at all.
  std::size_t no_explicit_novels = 1;
  double choral_share = 0.01;
  double voice_strength = 0.35;
  std::uint64_t seed = 7;
};

struct SynthCorpus {
  std::vector<SynthNovel> novels;
};

SynthCorpus make_synthetic_corpus(const SynthOptions& options);

// Writes one directory per novel under `root`.
void write_synthetic_corpus(const SynthCorpus& corpus, const std::filesystem::path& root);

// Path of the shipped PDNC schema in the source tree.
std::filesystem::path pdnc_schema_path();

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& prefix);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace charvoice::testing
