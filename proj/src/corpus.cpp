#include "charvoice/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <regex>
#include <sstream>
#include <unordered_map>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "charvoice/csv.hpp"
#include "charvoice/error.hpp"
#include "charvoice/parallel.hpp"
#include "charvoice/text.hpp"
#include "json.hpp"

namespace charvoice {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

std::string_view to_string(ReferentType type) {
  switch (type) {
    case ReferentType::Explicit:
      return "explicit";
    case ReferentType::Anaphoric:
      return "anaphoric";
    case ReferentType::Implicit:
      return "implicit";
  }
  return "?";
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Minor:
      return "minor";
    case Role::Intermediate:
      return "intermediate";
    case Role::Major:
      return "major";
  }
  return "?";
}

std::optional<Role> parse_role(std::string_view name) {
  std::string lower;
  for (char c : text::trim(name)) {
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (lower == "minor") return Role::Minor;
  if (lower == "intermediate") return Role::Intermediate;
  if (lower == "major") return Role::Major;
  return std::nullopt;
}

const Character* Novel::find_character(std::string_view character_id) const {
  for (const auto& c : characters) {
    if (c.character_id == character_id) return &c;
  }
  return nullptr;
}

const Novel* Corpus::find_novel(std::string_view novel_id) const {
  for (const auto& n : novels) {
    if (n.novel_id == novel_id) return &n;
  }
  return nullptr;
}

std::size_t Corpus::quote_count() const {
  std::size_t total = 0;
  for (const auto& n : novels) total += n.quotes.size();
  return total;
}

namespace {

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

char parse_delimiter(const std::string& value, std::string_view source) {
  if (value.empty() || value == ",") return ',';
  if (value == "\\t" || value == "tab") return '\t';
  if (value.size() == 1) return value.front();
  throw ConfigError(fmt::format("{}: unsupported delimiter '{}'", source, value));
}

std::size_t parse_size(std::string_view value, std::string_view what) {
  const std::string_view v = text::trim(value);
  std::size_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    throw ValidationError(fmt::format("{}: not a non-negative integer: '{}'", what, value));
  }
  return out;
}

// First integer found in a value such as "1234", "[1234, 1290]" or
// "[[1234, 1290], [1400, 1420]]".
std::optional<std::size_t> first_integer(std::string_view value) {
  std::size_t i = 0;
  while (i < value.size() && !std::isdigit(static_cast<unsigned char>(value[i]))) ++i;
  if (i == value.size()) return std::nullopt;
  std::size_t out = 0;
  std::from_chars(value.data() + i, value.data() + value.size(), out);
  return out;
}

std::vector<TextSpan> parse_spans(std::string_view value, std::string_view what) {
  std::vector<TextSpan> spans;
  for (const auto& element : csv::split_list_literal(value)) {
    const auto pair = csv::split_list_literal(element);
    if (pair.size() != 2) {
      throw ValidationError(fmt::format("{}: malformed span '{}'", what, element));
    }
    spans.push_back({parse_size(pair[0], what), parse_size(pair[1], what)});
  }
  return spans;
}

std::vector<std::size_t> heading_offsets(const fs::path& text_path,
                                         const std::string& pattern) {
  std::ifstream in(text_path, std::ios::binary);
  if (!in) throw IngestError(fmt::format("cannot read {}", text_path.string()));
  const std::regex heading(pattern);
  std::vector<std::size_t> offsets;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    if (std::regex_search(line, heading)) offsets.push_back(offset);
    offset += line.size() + 1;
  }
  return offsets;
}

std::string sanitize_id(std::string_view raw) {
  std::string out(text::trim(raw));
  for (char& c : out) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') c = '_';
  }
  return out;
}

}  // namespace

IngestSchema IngestSchema::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read schema file {}", path.string()));
  return parse(in, path.string());
}

IngestSchema IngestSchema::parse(std::istream& in, std::string_view source) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(fmt::format("{}: {}", source, e.message()));
  }
  const auto get = [&](const std::string& key) {
    return std::string(text::trim(tree.get<std::string>(key, "")));
  };
  const auto require = [&](const std::string& key) {
    std::string v = get(key);
    if (v.empty()) throw ConfigError(fmt::format("{}: missing key '{}'", source, key));
    return v;
  };

  IngestSchema s;
  s.version = get("version");
  if (s.version.empty()) s.version = "unversioned";
  s.quote_file = require("files.quotes");
  s.character_file = require("files.characters");
  s.text_file = get("files.text");
  s.metadata_file = get("files.metadata");

  s.quote_delimiter = parse_delimiter(get("quotes.delimiter"), source);
  s.quote_id_column = require("quotes.id");
  s.quote_text_column = require("quotes.text");
  s.quote_segments_column = get("quotes.segments");
  s.quote_incise_spans_column = get("quotes.incise_spans");
  s.quote_type_column = require("quotes.type");
  s.quote_speaker_column = require("quotes.speaker");
  s.quote_chapter_column = get("quotes.chapter");
  s.quote_offset_column = get("quotes.offset");
  if (auto base = get("quotes.chapter_base"); !base.empty()) {
    s.chapter_base = parse_size(base, "quotes.chapter_base");
  }

  const std::pair<const char*, ReferentType> kinds[] = {
      {"types.explicit", ReferentType::Explicit},
      {"types.anaphoric", ReferentType::Anaphoric},
      {"types.implicit", ReferentType::Implicit}};
  for (const auto& [key, type] : kinds) {
    for (const auto& label : csv::split_list_literal("[" + require(key) + "]")) {
      s.type_labels[lowercase_ascii(text::trim(label))] = type;
    }
  }

  s.character_delimiter = parse_delimiter(get("characters.delimiter"), source);
  s.character_id_column = require("characters.id");
  s.character_name_column = require("characters.name");
  s.character_aliases_column = get("characters.aliases");

  const std::string chapter_source = get("chapters.source");
  if (chapter_source.empty() || chapter_source == "column") {
    s.chapter_source = ChapterSource::Column;
    if (s.quote_chapter_column.empty()) {
      throw ConfigError(fmt::format(
          "{}: chapters.source = column requires quotes.chapter", source));
    }
  } else if (chapter_source == "headings") {
    s.chapter_source = ChapterSource::Headings;
    s.chapter_heading_pattern = require("chapters.heading_pattern");
    if (s.text_file.empty() || s.quote_offset_column.empty()) {
      throw ConfigError(fmt::format(
          "{}: chapters.source = headings requires files.text and quotes.offset",
          source));
    }
    try {
      std::regex check(s.chapter_heading_pattern);
    } catch (const std::regex_error& e) {
      throw ConfigError(fmt::format("{}: bad heading_pattern: {}", source, e.what()));
    }
  } else {
    throw ConfigError(fmt::format("{}: unknown chapters.source '{}'", source, chapter_source));
  }
  return s;
}

Novel load_novel(const fs::path& novel_dir, const IngestSchema& schema,
                 const RoleThresholds& thresholds) {
  Novel novel;
  novel.novel_id = sanitize_id(novel_dir.filename().string());
  novel.title = novel_dir.filename().string();

  std::optional<std::size_t> declared_chapters;
  if (!schema.metadata_file.empty()) {
    const fs::path meta_path = novel_dir / schema.metadata_file;
    if (fs::exists(meta_path)) {
      pt::ptree meta;
      try {
        pt::read_ini(meta_path.string(), meta);
      } catch (const pt::ini_parser_error& e) {
        throw IngestError(fmt::format("{}: {}", meta_path.string(), e.message()));
      }
      novel.title = meta.get<std::string>("title", novel.title);
      novel.author = meta.get<std::string>("author", "");
      if (auto n = meta.get_optional<std::string>("chapter_count")) {
        declared_chapters = parse_size(*n, meta_path.string() + ": chapter_count");
      }
    }
  }

  // Characters.
  const fs::path char_path = novel_dir / schema.character_file;
  const auto chars = csv::Table::read(char_path, schema.character_delimiter);
  const std::size_t c_id = chars.require_column(schema.character_id_column);
  const std::size_t c_name = chars.require_column(schema.character_name_column);
  std::optional<std::size_t> c_aliases;
  if (!schema.character_aliases_column.empty()) {
    c_aliases = chars.require_column(schema.character_aliases_column);
  }

  std::unordered_map<std::string, std::size_t> by_id;
  std::unordered_map<std::string, std::size_t> by_name;
  std::unordered_map<std::string, std::vector<std::size_t>> by_alias;
  for (std::size_t r = 0; r < chars.rows(); ++r) {
    const auto& row = chars.row(r);
    Character c;
    c.character_id = sanitize_id(row[c_id]);
    c.novel_id = novel.novel_id;
    c.main_name = std::string(text::trim(row[c_name]));
    if (c.character_id.empty()) {
      throw ValidationError(fmt::format("{}:{}: empty character id",
                                        char_path.string(), chars.line_of(r)));
    }
    if (by_id.contains(c.character_id)) {
      throw ValidationError(fmt::format("{}:{}: duplicate character id '{}'",
                                        char_path.string(), chars.line_of(r),
                                        c.character_id));
    }
    c.aliases.insert(c.main_name);
    if (c_aliases) {
      const std::string& raw = row[*c_aliases];
      const std::string_view trimmed = text::trim(raw);
      std::vector<std::string> names;
      if (!trimmed.empty() && (trimmed.front() == '[' || trimmed.front() == '{')) {
        names = csv::split_list_literal(trimmed);
      } else {
        std::stringstream ss{std::string(trimmed)};
        for (std::string part; std::getline(ss, part, ';');) names.push_back(part);
      }
      for (const auto& name : names) {
        if (auto t = text::trim(name); !t.empty()) c.aliases.emplace(t);
      }
    }
    const std::size_t idx = novel.characters.size();
    by_id[c.character_id] = idx;
    by_name.emplace(c.main_name, idx);
    for (const auto& alias : c.aliases) by_alias[alias].push_back(idx);
    novel.characters.push_back(std::move(c));
  }

  const auto resolve = [&](std::string_view speaker) -> std::optional<std::size_t> {
    const std::string key(text::trim(speaker));
    if (auto it = by_id.find(sanitize_id(key)); it != by_id.end()) return it->second;
    if (auto it = by_name.find(key); it != by_name.end()) return it->second;
    if (auto it = by_alias.find(key); it != by_alias.end() && it->second.size() == 1) {
      return it->second.front();
    }
    return std::nullopt;
  };

  // Chapter boundaries when chapters come from headings in the text.
  std::vector<std::size_t> headings;
  if (schema.chapter_source == IngestSchema::ChapterSource::Headings) {
    headings = heading_offsets(novel_dir / schema.text_file,
                               schema.chapter_heading_pattern);
  }

  // Quotes.
  const fs::path quote_path = novel_dir / schema.quote_file;
  const auto table = csv::Table::read(quote_path, schema.quote_delimiter);
  const std::size_t q_id = table.require_column(schema.quote_id_column);
  const std::size_t q_text = table.require_column(schema.quote_text_column);
  const std::size_t q_type = table.require_column(schema.quote_type_column);
  const std::size_t q_speaker = table.require_column(schema.quote_speaker_column);
  const auto optional_column = [&](const std::string& name) -> std::optional<std::size_t> {
    if (name.empty()) return std::nullopt;
    return table.require_column(name);
  };
  const auto q_segments = optional_column(schema.quote_segments_column);
  const auto q_incises = optional_column(schema.quote_incise_spans_column);
  const auto q_chapter = optional_column(schema.quote_chapter_column);
  const auto q_offset = optional_column(schema.quote_offset_column);

  std::vector<std::string> unresolved;
  std::vector<std::string> bad_types;
  std::vector<std::string> empty_text;
  std::vector<std::string> bad_chapters;
  std::unordered_map<std::string, bool> seen_ids;
  std::size_t max_chapter = 0;

  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto& row = table.row(r);
    const std::string where = fmt::format("{}:{}", quote_path.string(), table.line_of(r));
    Quote q;
    q.novel_id = novel.novel_id;
    q.quote_id = novel.novel_id + "/" + sanitize_id(row[q_id]);
    if (seen_ids.contains(q.quote_id)) {
      throw ValidationError(fmt::format("{}: duplicate quote id '{}'", where, q.quote_id));
    }
    seen_ids[q.quote_id] = true;
    q.raw_text = row[q_text];

    if (q_segments && !text::trim(row[*q_segments]).empty()) {
      const auto segments = csv::split_list_literal(row[*q_segments]);
      q.clean_text = join_segments(segments);
    } else if (q_incises) {
      q.clean_text = strip_incise(q.raw_text, parse_spans(row[*q_incises], where));
    } else {
      q.clean_text = std::string(text::trim(q.raw_text));
    }
    if (q.clean_text.empty()) empty_text.push_back(q.quote_id);

    const std::string label = lowercase_ascii(text::trim(row[q_type]));
    if (auto it = schema.type_labels.find(label); it != schema.type_labels.end()) {
      q.referent_type = it->second;
    } else {
      bad_types.push_back(fmt::format("{} ('{}')", q.quote_id, row[q_type]));
    }

    if (q_chapter) {
      const std::size_t raw_chapter = parse_size(row[*q_chapter], where);
      if (raw_chapter < schema.chapter_base) {
        bad_chapters.push_back(q.quote_id);
      } else {
        q.chapter_index = raw_chapter - schema.chapter_base;
      }
    } else if (!headings.empty() && q_offset) {
      const auto offset = first_integer(row[*q_offset]);
      if (!offset) {
        throw ValidationError(fmt::format("{}: no offset in '{}'", where, row[*q_offset]));
      }
      const auto it = std::upper_bound(headings.begin(), headings.end(), *offset);
      q.chapter_index = it == headings.begin()
                            ? 0
                            : static_cast<std::size_t>(it - headings.begin()) - 1;
    }
    max_chapter = std::max(max_chapter, q.chapter_index);

    const auto speakers = csv::split_list_literal(row[q_speaker]);
    if (speakers.size() > 1) {
      novel.choral_quote_ids.push_back(q.quote_id);
      continue;
    }
    const auto idx = resolve(speakers.empty() ? std::string_view{} : speakers.front());
    if (!idx) {
      unresolved.push_back(q.quote_id);
      continue;
    }
    q.speaker_id = novel.characters[*idx].character_id;
    novel.quotes.push_back(std::move(q));
  }

  if (!bad_types.empty()) {
    throw ValidationError(
        fmt::format("{}: unknown quote type label for {} quote(s): {}",
                    quote_path.string(), bad_types.size(), fmt::join(bad_types, ", ")),
        bad_types);
  }
  if (!unresolved.empty()) {
    throw ValidationError(
        fmt::format("{}: unresolvable speaker for {} quote(s): {}",
                    quote_path.string(), unresolved.size(), fmt::join(unresolved, ", ")),
        unresolved);
  }
  if (!empty_text.empty()) {
    throw ValidationError(
        fmt::format("{}: empty text after incise removal: {}", quote_path.string(),
                    fmt::join(empty_text, ", ")),
        empty_text);
  }
  if (!bad_chapters.empty()) {
    throw ValidationError(
        fmt::format("{}: chapter below chapter_base: {}", quote_path.string(),
                    fmt::join(bad_chapters, ", ")),
        bad_chapters);
  }
  if (!novel.choral_quote_ids.empty()) {
    spdlog::info("{}: excluded {} multi-speaker quote(s): {}", novel.novel_id,
                 novel.choral_quote_ids.size(), fmt::join(novel.choral_quote_ids, ", "));
  }

  if (declared_chapters) {
    novel.chapter_count = *declared_chapters;
  } else if (!headings.empty()) {
    novel.chapter_count = headings.size();
  } else {
    novel.chapter_count = max_chapter + 1;
  }
  if (novel.chapter_count == 0) {
    throw ValidationError(fmt::format("{}: chapter_count must be positive", novel.novel_id));
  }
  std::vector<std::string> out_of_range;
  for (const auto& q : novel.quotes) {
    if (q.chapter_index >= novel.chapter_count) out_of_range.push_back(q.quote_id);
  }
  if (!out_of_range.empty()) {
    throw ValidationError(
        fmt::format("{}: chapter index beyond chapter_count {}: {}", novel.novel_id,
                    novel.chapter_count, fmt::join(out_of_range, ", ")),
        out_of_range);
  }

  // Reading order: chapter first, annotation order within a chapter.
  std::stable_sort(novel.quotes.begin(), novel.quotes.end(),
                   [](const Quote& a, const Quote& b) {
                     return a.chapter_index < b.chapter_index;
                   });
  for (std::size_t i = 0; i < novel.quotes.size(); ++i) {
    novel.quotes[i].ordinal = i;
    ++novel.characters[by_id.at(novel.quotes[i].speaker_id)].quote_count;
  }
  for (auto& c : novel.characters) c.role = thresholds.classify(c.quote_count);
  return novel;
}

Corpus load_corpus(const fs::path& root, const IngestSchema& schema,
                   const LoadOptions& options) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IngestError(fmt::format("corpus root {} is not a readable directory", root.string()));
  }
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (entry.is_directory()) dirs.push_back(entry.path());
  }
  if (dirs.empty()) {
    throw IngestError(fmt::format("corpus root {} contains no novel directories", root.string()));
  }
  std::sort(dirs.begin(), dirs.end());

  Corpus corpus;
  corpus.provenance = {root, schema.version};
  corpus.novels.resize(dirs.size());
  parallel_for(dirs.size(), options.threads, [&](std::size_t i) {
    corpus.novels[i] = load_novel(dirs[i], schema, options.thresholds);
  });

  std::vector<std::string> ids;
  for (const auto& n : corpus.novels) ids.push_back(n.novel_id);
  std::sort(ids.begin(), ids.end());
  if (auto dup = std::adjacent_find(ids.begin(), ids.end()); dup != ids.end()) {
    throw ValidationError(fmt::format("duplicate novel id '{}'", *dup));
  }
  return corpus;
}

NovelView::NovelView(const Novel& novel, Role min_role)
    : novel_(&novel), min_role_(min_role) {
  for (const auto& c : novel.characters) {
    if (c.role >= min_role) characters_.push_back(&c);
  }
  for (const auto& q : novel.quotes) {
    const Character* speaker = novel.find_character(q.speaker_id);
    if (speaker != nullptr && speaker->role >= min_role) quotes_.push_back(&q);
  }
}

const Character* NovelView::find_character(std::string_view character_id) const {
  for (const Character* c : characters_) {
    if (c->character_id == character_id) return c;
  }
  return nullptr;
}

void write_corpus_dump(const Corpus& corpus, Role min_role, std::ostream& out) {
  for (const auto& novel : corpus.novels) {
    const NovelView view(novel, min_role);
    for (const Quote* q : view.quotes()) {
      nlohmann::ordered_json record;
      record["quote_id"] = q->quote_id;
      record["novel_id"] = q->novel_id;
      record["chapter_index"] = q->chapter_index;
      record["ordinal"] = q->ordinal;
      record["referent_type"] = to_string(q->referent_type);
      record["speaker_id"] = q->speaker_id;
      record["clean_text"] = q->clean_text;
      out << record.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    }
  }
}

}  // namespace charvoice
