#include <fmt/format.h>

#include "charvoice/corpus.hpp"
#include "charvoice/error.hpp"
#include "charvoice/text.hpp"

namespace charvoice {

std::string join_segments(std::span<const std::string> segments) {
  std::string out;
  for (const auto& segment : segments) {
    const std::string_view t = text::trim(segment);
    if (t.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(t);
  }
  return out;
}

std::string strip_incise(std::string_view raw_text, std::span<const TextSpan> incises) {
  const std::u32string cps = text::decode_utf8(raw_text);
  std::size_t previous_end = 0;
  for (const auto& span : incises) {
    if (span.begin > span.end || span.end > cps.size()) {
      throw ValidationError(fmt::format("incise span [{}, {}) out of bounds for text of length {}",
                                        span.begin, span.end, cps.size()));
    }
    if (span.begin < previous_end) {
      throw ValidationError(fmt::format("incise span [{}, {}) overlaps or is out of order",
                                        span.begin, span.end));
    }
    previous_end = span.end;
  }

  std::u32string out;
  std::size_t cursor = 0;
  const auto take = [&](std::size_t begin, std::size_t end) {
    const std::u32string_view segment =
        text::trim(std::u32string_view(cps).substr(begin, end - begin));
    if (segment.empty()) return;
    if (!out.empty()) out.push_back(U' ');
    out.append(segment);
  };
  for (const auto& span : incises) {
    take(cursor, span.begin);
    cursor = span.end;
  }
  take(cursor, cps.size());
  return text::encode_utf8(out);
}

std::vector<QuoteMarkPair> default_quote_marks() {
  return {
      {"“", "”", false},
      {"‘", "’", true},
      {"\"", "\"", true},
  };
}

namespace {

struct DecodedPair {
  std::u32string open;
  std::u32string close;
  bool disambiguate;
};

bool matches_at(std::u32string_view text, std::size_t i, std::u32string_view mark) {
  return text.substr(i, mark.size()) == mark;
}

// A paragraph break is a newline followed by an otherwise blank line.
// Returns the index of the second newline.
std::optional<std::size_t> paragraph_break(std::u32string_view text, std::size_t i) {
  if (text[i] != U'\n') return std::nullopt;
  std::size_t j = i + 1;
  while (j < text.size() && text[j] != U'\n' && text::is_space(text[j])) ++j;
  if (j < text.size() && text[j] == U'\n') return j;
  return std::nullopt;
}

std::size_t trim_end(std::u32string_view text, std::size_t begin, std::size_t end) {
  while (end > begin && text::is_space(text[end - 1])) --end;
  return end;
}

}  // namespace

std::vector<DetectedQuote> detect_quotes(std::string_view utf8_text,
                                         std::span<const QuoteMarkPair> marks) {
  if (marks.empty()) throw ConfigError("detect_quotes: empty quote mark configuration");
  std::vector<DecodedPair> pairs;
  for (const auto& m : marks) {
    if (m.open.empty() || m.close.empty()) {
      throw ConfigError("detect_quotes: quote marks must be non-empty");
    }
    pairs.push_back({text::decode_utf8(m.open), text::decode_utf8(m.close), m.disambiguate});
  }

  const std::u32string cps = text::decode_utf8(utf8_text);
  const std::u32string_view view(cps);
  std::vector<DetectedQuote> found;
  const DecodedPair* open = nullptr;
  std::size_t content_begin = 0;

  const auto word_before = [&](std::size_t i) {
    return i > 0 && text::is_word_char(view[i - 1]);
  };
  const auto word_at = [&](std::size_t i) {
    return i < view.size() && text::is_word_char(view[i]);
  };

  std::size_t i = 0;
  while (i < view.size()) {
    if (auto br = paragraph_break(view, i)) {
      if (open != nullptr) {
        found.push_back({{content_begin, trim_end(view, content_begin, i)}, true});
        open = nullptr;
      }
      i = *br + 1;
      continue;
    }
    if (open != nullptr) {
      if (matches_at(view, i, open->close) &&
          !(open->disambiguate && word_at(i + open->close.size()))) {
        found.push_back({{content_begin, i}, false});
        i += open->close.size();
        open = nullptr;
        continue;
      }
      ++i;
      continue;
    }
    bool opened = false;
    for (const auto& pair : pairs) {
      if (!matches_at(view, i, pair.open)) continue;
      const std::size_t after = i + pair.open.size();
      if (pair.disambiguate &&
          (word_before(i) || after >= view.size() || text::is_space(view[after]))) {
        continue;
      }
      open = &pair;
      content_begin = after;
      i = after;
      opened = true;
      break;
    }
    if (!opened) ++i;
  }
  if (open != nullptr) {
    found.push_back({{content_begin, trim_end(view, content_begin, view.size())}, true});
  }
  return found;
}

}  // namespace charvoice
