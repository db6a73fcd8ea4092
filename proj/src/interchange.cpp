#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "charvoice/encoders.hpp"
#include "charvoice/error.hpp"

namespace charvoice {

namespace {

std::string_view kind_name(RecordKind kind) {
  switch (kind) {
    case RecordKind::Quote:
      return "quote";
    case RecordKind::Set:
      return "set";
    case RecordKind::Mixed:
      return "mixed";
  }
  return "?";
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool has_whitespace(std::string_view s) {
  return s.empty() || s.find_first_of(" \t\r\n") != std::string_view::npos;
}

}  // namespace

QuoteEmbeddingTable EmbeddingFile::quote_table() const {
  QuoteEmbeddingTable table;
  table.reserve(quotes.size());
  for (const auto& q : quotes) table.emplace(q.quote_id, q.vector);
  return table;
}

EmbeddingFile read_embeddings(std::istream& in, std::string_view source,
                              const EncoderSpec* expected) {
  EmbeddingFile file;
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) {
    throw ValidationError(fmt::format("{}: empty embedding file", source));
  }
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.rfind("#dim=", 0) != 0) {
    throw ValidationError(fmt::format("{}:1: header must start with '#dim='", source),
                          {"line 1: bad header"});
  }
  bool have_kind = false;
  for (auto token : split_ws(std::string_view(line).substr(1))) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) continue;
    const auto key = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    if (key == "dim") {
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), file.dim);
      if (ec != std::errc() || ptr != value.data() + value.size() || file.dim <= 0) {
        throw ValidationError(fmt::format("{}:1: invalid dim '{}'", source, value),
                              {"line 1: invalid dim"});
      }
    } else if (key == "encoder") {
      file.encoder_id = std::string(value);
    } else if (key == "kind") {
      have_kind = true;
      if (value == "quote") {
        file.kind = RecordKind::Quote;
      } else if (value == "set") {
        file.kind = RecordKind::Set;
      } else if (value == "mixed") {
        file.kind = RecordKind::Mixed;
      } else {
        throw ValidationError(fmt::format("{}:1: unknown kind '{}'", source, value),
                              {"line 1: unknown kind"});
      }
    }
  }
  if (file.dim <= 0 || file.encoder_id.empty() || !have_kind) {
    throw ValidationError(
        fmt::format("{}:1: header needs dim, encoder and kind", source), {"line 1: bad header"});
  }
  if (expected != nullptr) {
    if (expected->encoder_id != file.encoder_id) {
      throw ValidationError(fmt::format("{}:1: encoder '{}' does not match expected '{}'", source,
                                        file.encoder_id, expected->encoder_id),
                            {"line 1: encoder mismatch"});
    }
    if (const int want = expected->dim(); want > 0 && want != file.dim) {
      throw ValidationError(fmt::format("{}:1: header dim {} does not match expected {}", source,
                                        file.dim, want),
                            {"line 1: dim mismatch"});
    }
  }

  std::vector<std::string> problems;
  std::set<std::string> seen_quotes;
  std::set<std::string> seen_sets;
  const auto fail = [&](std::string reason) {
    problems.push_back(fmt::format("line {}: {}", line_no, std::move(reason)));
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto tokens = split_ws(line);
    const std::string_view tag = tokens.front();
    std::size_t id_fields = 0;
    if (tag == "quote") {
      id_fields = 1;
      if (file.kind == RecordKind::Set) {
        fail("quote record in a set-only file");
        continue;
      }
    } else if (tag == "set") {
      id_fields = 3;
      if (file.kind == RecordKind::Quote) {
        fail("set record in a quote-only file");
        continue;
      }
    } else {
      fail(fmt::format("unknown record tag '{}'", tag));
      continue;
    }
    const std::size_t values = tokens.size() < 1 + id_fields ? 0 : tokens.size() - 1 - id_fields;
    if (tokens.size() < 1 + id_fields || values != static_cast<std::size_t>(file.dim)) {
      fail(fmt::format("expected {} values, found {}", file.dim, values));
      continue;
    }
    Embedding vector(file.dim);
    bool ok = true;
    for (int k = 0; k < file.dim; ++k) {
      const auto tok = tokens[1 + id_fields + static_cast<std::size_t>(k)];
      float v = 0.0f;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size()) {
        fail(fmt::format("value {} is not a number: '{}'", k, tok));
        ok = false;
        break;
      }
      if (!std::isfinite(v)) {
        fail(fmt::format("value {} is not finite", k));
        ok = false;
        break;
      }
      vector[k] = v;
    }
    if (!ok) continue;

    if (id_fields == 1) {
      std::string id(tokens[1]);
      if (!seen_quotes.insert(id).second) {
        fail(fmt::format("duplicate quote id '{}'", id));
        continue;
      }
      file.quotes.push_back({std::move(id), file.encoder_id, std::move(vector)});
    } else {
      SetEmbedding set;
      set.novel_id = std::string(tokens[1]);
      set.character_id = std::string(tokens[2]);
      set.subset_descriptor = std::string(tokens[3]);
      set.encoder_id = file.encoder_id;
      set.vector = std::move(vector);
      const std::string key =
          set.novel_id + '\x1f' + set.character_id + '\x1f' + set.subset_descriptor;
      if (!seen_sets.insert(key).second) {
        fail(fmt::format("duplicate set key ({}, {}, {})", set.novel_id, set.character_id,
                         set.subset_descriptor));
        continue;
      }
      file.sets.push_back(std::move(set));
    }
  }
  if (!problems.empty()) {
    std::string summary = problems.front();
    if (problems.size() > 1) summary += fmt::format(" (and {} more)", problems.size() - 1);
    throw ValidationError(fmt::format("{}: {}", source, summary), problems);
  }
  return file;
}

EmbeddingFile import_embeddings(const std::filesystem::path& path, const EncoderSpec& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError(fmt::format("cannot read embedding file {}", path.string()));
  return read_embeddings(in, path.string(), &expected);
}

void write_embeddings(std::ostream& out, const EmbeddingFile& file) {
  if (file.dim <= 0) throw ValidationError("write_embeddings: dim must be positive");
  if (has_whitespace(file.encoder_id)) {
    throw ValidationError(fmt::format("encoder id '{}' must not contain whitespace", file.encoder_id));
  }
  out << "#dim=" << file.dim << " encoder=" << file.encoder_id << " kind=" << kind_name(file.kind)
      << '\n';
  char buf[64];
  const auto write_vector = [&](const Embedding& v) {
    if (v.size() != file.dim) {
      throw ValidationError(
          fmt::format("write_embeddings: vector of dim {} under header dim {}", v.size(), file.dim));
    }
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (!std::isfinite(v[k])) throw ValidationError("write_embeddings: non-finite value");
      const auto res = std::to_chars(buf, buf + sizeof(buf), v[k]);
      out << ' ';
      out.write(buf, res.ptr - buf);
    }
    out << '\n';
  };
  for (const auto& q : file.quotes) {
    if (has_whitespace(q.quote_id)) {
      throw ValidationError(fmt::format("quote id '{}' must not contain whitespace", q.quote_id));
    }
    out << "quote " << q.quote_id;
    write_vector(q.vector);
  }
  for (const auto& s : file.sets) {
    if (has_whitespace(s.novel_id) || has_whitespace(s.character_id) ||
        has_whitespace(s.subset_descriptor)) {
      throw ValidationError("set record ids must not contain whitespace");
    }
    out << "set " << s.novel_id << ' ' << s.character_id << ' ' << s.subset_descriptor;
    write_vector(s.vector);
  }
}

}  // namespace charvoice
