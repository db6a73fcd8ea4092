#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace charvoice {

enum class ReferentType { Explicit, Anaphoric, Implicit };

// Ordered by prominence so that `role >= Role::Intermediate` reads naturally.
enum class Role { Minor = 0, Intermediate = 1, Major = 2 };

std::string_view to_string(ReferentType type);
std::string_view to_string(Role role);
std::optional<Role> parse_role(std::string_view name);

struct RoleThresholds {
  std::size_t intermediate = 10;
  std::size_t major = 100;

  Role classify(std::size_t quote_count) const {
    if (quote_count >= major) return Role::Major;
    if (quote_count >= intermediate) return Role::Intermediate;
    return Role::Minor;
  }
};

struct Quote {
  std::string quote_id;
  std::string novel_id;
  std::size_t chapter_index = 0;
  // Position in the novel's reading order.
  std::size_t ordinal = 0;
  std::string raw_text;
  std::string clean_text;
  ReferentType referent_type = ReferentType::Implicit;
  std::string speaker_id;
};

struct Character {
  std::string character_id;
  std::string novel_id;
  std::string main_name;
  std::set<std::string> aliases;
  Role role = Role::Minor;
  std::size_t quote_count = 0;
};

struct Novel {
  std::string novel_id;
  std::string title;
  std::string author;
  std::size_t chapter_count = 0;
  std::vector<Character> characters;
  // Sorted by ordinal.
  std::vector<Quote> quotes;
  // Quotes annotated with several speakers; kept out of queries and targets.
  std::vector<std::string> choral_quote_ids;

  const Character* find_character(std::string_view character_id) const;
};

struct Provenance {
  std::filesystem::path source;
  std::string schema_version;
};

struct Corpus {
  std::vector<Novel> novels;
  Provenance provenance;

  const Novel* find_novel(std::string_view novel_id) const;
  std::size_t quote_count() const;
};

// Declarative mapping from a per-novel directory layout to corpus fields.
// Loaded from a key = value file with [sections]; see schemas/pdnc.schema.
struct IngestSchema {
  enum class ChapterSource { Column, Headings };

  std::string version;

  std::string quote_file;
  std::string character_file;
  std::string text_file;      // novel text, needed for ChapterSource::Headings
  std::string metadata_file;  // optional key = value file (title, author, ...)

  char quote_delimiter = ',';
  std::string quote_id_column;
  std::string quote_text_column;
  std::string quote_segments_column;      // list of speech segments
  std::string quote_incise_spans_column;  // list of [begin, end) code-point spans
  std::string quote_type_column;
  std::string quote_speaker_column;
  std::string quote_chapter_column;
  std::size_t chapter_base = 0;
  std::string quote_offset_column;  // position in the novel text

  // Lowercased annotation label -> referent type.
  std::map<std::string, ReferentType> type_labels;

  char character_delimiter = ',';
  std::string character_id_column;
  std::string character_name_column;
  std::string character_aliases_column;

  ChapterSource chapter_source = ChapterSource::Column;
  std::string chapter_heading_pattern;

  static IngestSchema from_file(const std::filesystem::path& path);
  static IngestSchema parse(std::istream& in, std::string_view source);
};

struct LoadOptions {
  RoleThresholds thresholds;
  std::size_t threads = 1;
};

// One subdirectory per novel. Throws IngestError for missing or unreadable
// files and ValidationError for contract violations.
Corpus load_corpus(const std::filesystem::path& root,
                   const IngestSchema& schema, const LoadOptions& options = {});

Novel load_novel(const std::filesystem::path& novel_dir,
                 const IngestSchema& schema, const RoleThresholds& thresholds);

// Half-open [begin, end) range of code points.
struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  friend bool operator==(const TextSpan&, const TextSpan&) = default;
};

// Removes incise spans and joins the remaining speech segments, each trimmed,
// with a single space. Spans must be sorted, disjoint and in bounds.
std::string strip_incise(std::string_view raw_text,
                         std::span<const TextSpan> incises);

// Joins speech segments the same way strip_incise does.
std::string join_segments(std::span<const std::string> segments);

struct QuoteMarkPair {
  std::string open;
  std::string close;
  // For marks whose open and close coincide (straight quotes): an opening
  // mark must not follow a word character and a closing mark must not precede
  // one, so apostrophes inside words are skipped.
  bool disambiguate = false;
};

// Curly double and single quotes plus disambiguated straight double quotes.
std::vector<QuoteMarkPair> default_quote_marks();

struct DetectedQuote {
  TextSpan span;  // content between the marks, in code points
  bool unterminated = false;

  friend bool operator==(const DetectedQuote&, const DetectedQuote&) = default;
};

// Finds the spans enclosed by matching quote marks, in document order. An
// open mark left unmatched at the end of its paragraph (blank-line separated)
// produces a span running to the paragraph end, flagged unterminated.
std::vector<DetectedQuote> detect_quotes(std::string_view text,
                                         std::span<const QuoteMarkPair> marks);

// Read-only view of a novel restricted to speakers of at least `min_role`.
// Borrows from the novel, which must outlive it.
class NovelView {
 public:
  NovelView(const Novel& novel, Role min_role);

  const Novel& novel() const { return *novel_; }
  const std::string& novel_id() const { return novel_->novel_id; }
  std::size_t chapter_count() const { return novel_->chapter_count; }
  Role min_role() const { return min_role_; }

  std::span<const Quote* const> quotes() const { return quotes_; }
  std::span<const Character* const> characters() const { return characters_; }
  const Character* find_character(std::string_view character_id) const;

 private:
  const Novel* novel_;
  Role min_role_;
  std::vector<const Quote*> quotes_;
  std::vector<const Character*> characters_;
};

inline NovelView filter_speakers(const Novel& novel, Role min_role) {
  return NovelView(novel, min_role);
}

// One JSON object per line: quote_id, novel_id, chapter_index, ordinal,
// referent_type, speaker_id, clean_text. Only speakers of at least min_role.
void write_corpus_dump(const Corpus& corpus, Role min_role, std::ostream& out);

}  // namespace charvoice
