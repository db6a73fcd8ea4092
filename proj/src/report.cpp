#include "charvoice/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "charvoice/csv.hpp"
#include "charvoice/error.hpp"

namespace charvoice {

namespace {

std::string field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string number(double v) { return std::isnan(v) ? "NA" : fmt::format("{:.6f}", v); }

std::string experiment_name(const ExperimentSpec& spec) {
  if (spec.strategy == Strategy::ReadingOrder) {
    return fmt::format("{}:n={}", to_string(spec.strategy), spec.n_quotes);
  }
  return fmt::format("{}:min_q={}", to_string(spec.strategy), spec.min_query_quotes);
}

}  // namespace

void write_report_csv(std::ostream& out, const ExperimentResult& result) {
  out << "section,evaluation,encoder,experiment,aggregation,novel_id,character_id,descriptor,"
         "role,auc,std,n_pos,n_neg,n_queries,n_novels\n";
  const std::string enc = field(result.encoder_id);
  const std::string exp = field(experiment_name(result.spec));
  for (const auto* report : {&result.cc, &result.cq}) {
    const auto eval = to_string(report == &result.cc ? Evaluation::CharacterCharacter
                                                     : Evaluation::CharacterQuote);
    const auto agg = to_string(report->aggregation);
    const auto prefix = [&](std::string_view section) {
      return fmt::format("{},{},{},{},{}", section, eval, enc, exp, agg);
    };
    for (const auto& q : report->per_query) {
      out << fmt::format("{},{},{},{},{},{},,{},{},,\n", prefix("per_query"),
                         field(q.key.novel_id), field(q.key.character_id),
                         field(q.key.descriptor), to_string(q.role), number(q.auc), q.n_pos,
                         q.n_neg);
    }
    for (const auto& n : report->per_novel) {
      out << fmt::format("{},{},,,,{},{},,,{},\n", prefix("per_novel"), field(n.novel_id),
                         number(n.mean), number(n.std), n.n_queries);
    }
    for (const auto& r : report->per_role) {
      out << fmt::format("{},,,,{},{},{},,,{},{}\n", prefix("per_role"), to_string(r.role),
                         number(r.summary.mean), number(r.summary.std), r.summary.n_queries,
                         r.summary.n_novels);
    }
    out << fmt::format("{},,,,,{},{},,,{},{}\n", prefix("macro"), number(report->macro.mean),
                       number(report->macro.std), report->macro.n_queries,
                       report->macro.n_novels);
    for (const auto& id : report->excluded_novels) {
      out << fmt::format("{},{},,,,,,,,,\n", prefix("excluded"), field(id));
    }
  }
}

void write_curve_tsv(std::ostream& out, std::span<const CurveRow> rows) {
  out << "n\tcc_auc\tcq_auc\tn_queries\n";
  for (const auto& r : rows) {
    out << fmt::format("{}\t{}\t{}\t{}\n", r.n, r.cc_macro ? number(*r.cc_macro) : "NA",
                       r.cq_macro ? number(*r.cq_macro) : "NA", r.n_queries);
  }
}

void write_skipped_tsv(std::ostream& out, const ExperimentResult& result) {
  out << "evaluation\tnovel_id\tcharacter_id\tdescriptor\treason\n";
  for (const auto& s : result.skipped) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\n", to_string(s.evaluation), s.key.novel_id,
                       s.key.character_id, s.key.descriptor, to_string(s.reason));
  }
  for (const auto& d : result.dropped) {
    out << fmt::format("both\t{}\t{}\t{}\tno_heldout_target\n", d.novel_id, d.character_id,
                       d.descriptor);
  }
}

std::optional<ReportTable::Row> ReportTable::find(std::string_view section,
                                                  std::string_view evaluation,
                                                  std::string_view label) const {
  for (const auto& r : rows) {
    if (r.section == section && r.evaluation == evaluation && r.label == label) return r;
  }
  return std::nullopt;
}

ReportTable read_report_csv(const std::filesystem::path& path) {
  const auto table = csv::Table::read(path, ',');
  const auto col = [&](std::string_view name) { return table.require_column(name); };
  const std::size_t c_section = col("section"), c_eval = col("evaluation"),
                    c_enc = col("encoder"), c_exp = col("experiment"), c_novel = col("novel_id"),
                    c_role = col("role"), c_auc = col("auc"), c_std = col("std"),
                    c_nq = col("n_queries");
  const auto parse_double = [&](const std::string& s, std::size_t r) {
    if (s == "NA") return std::nan("");
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ValidationError(fmt::format("{}:{}: not a number '{}'", path.string(),
                                        table.line_of(r), s));
    }
    return v;
  };

  ReportTable out;
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const auto& row = table.row(r);
    const std::string& section = row[c_section];
    if (out.encoder_id.empty()) {
      out.encoder_id = row[c_enc];
      out.experiment = row[c_exp];
    }
    if (section == "per_query" || section == "excluded") continue;
    ReportTable::Row entry;
    entry.section = section;
    entry.evaluation = row[c_eval];
    entry.label = section == "per_novel" ? row[c_novel] : section == "per_role" ? row[c_role] : "";
    entry.mean = parse_double(row[c_auc], r);
    entry.std = parse_double(row[c_std], r);
    if (!row[c_nq].empty()) entry.n_queries = static_cast<std::size_t>(parse_double(row[c_nq], r));
    out.rows.push_back(std::move(entry));
  }
  if (out.encoder_id.empty()) {
    throw ValidationError(fmt::format("{}: report has no rows", path.string()));
  }
  return out;
}

void print_report_tables(std::ostream& out, std::span<const ReportTable> reports,
                         bool per_novel) {
  const auto cell = [](const std::optional<ReportTable::Row>& r) {
    if (!r || std::isnan(r->mean)) return std::string("NA");
    return fmt::format("{:.1f} ({:.1f})", 100.0 * r->mean, 100.0 * r->std);
  };
  fmt::print(out, "{:<20}{:<28}{:>16}{:>16}\n", "encoder", "experiment", "CC", "CQ");
  for (const auto& rep : reports) {
    fmt::print(out, "{:<20}{:<28}{:>16}{:>16}\n", rep.encoder_id, rep.experiment,
               cell(rep.find("macro", "cc")), cell(rep.find("macro", "cq")));
  }
  fmt::print(out, "\n{:<20}{:>16}{:>16}{:>16}{:>16}\n", "encoder", "CC (M)", "CC (I)", "CQ (M)",
             "CQ (I)");
  for (const auto& rep : reports) {
    fmt::print(out, "{:<20}{:>16}{:>16}{:>16}{:>16}\n", rep.encoder_id,
               cell(rep.find("per_role", "cc", "major")),
               cell(rep.find("per_role", "cc", "intermediate")),
               cell(rep.find("per_role", "cq", "major")),
               cell(rep.find("per_role", "cq", "intermediate")));
  }
  if (!per_novel) return;
  for (const auto& rep : reports) {
    fmt::print(out, "\n{} per novel\n{:<32}{:>16}{:>16}{:>10}\n", rep.encoder_id, "novel", "CC",
               "CQ", "queries");
    for (const auto& r : rep.rows) {
      if (r.section != "per_novel" || r.evaluation != "cc") continue;
      fmt::print(out, "{:<32}{:>16}{:>16}{:>10}\n", r.label, cell(r),
                 cell(rep.find("per_novel", "cq", r.label)), r.n_queries);
    }
  }
}

}  // namespace charvoice
