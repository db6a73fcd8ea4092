#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "charvoice/evaluation.hpp"
#include "charvoice/experiment.hpp"

namespace charvoice {

// Single CSV with a `section` column (per_query, per_novel, per_role, macro,
// excluded) so one header covers every row. Byte-identical for identical
// results.
void write_report_csv(std::ostream& out, const ExperimentResult& result);

// Tab-separated n, cc_auc, cq_auc, n_queries; "NA" for rows without queries.
void write_curve_tsv(std::ostream& out, std::span<const CurveRow> rows);

// Tab-separated log of skipped and dropped queries with reason codes.
void write_skipped_tsv(std::ostream& out, const ExperimentResult& result);

// Summary rows read back from a report CSV.
struct ReportTable {
  std::string encoder_id;
  std::string experiment;
  struct Row {
    std::string section;
    std::string evaluation;
    std::string label;  // novel id or role; empty for macro
    double mean = 0.0;
    double std = 0.0;
    std::size_t n_queries = 0;
  };
  std::vector<Row> rows;

  std::optional<Row> find(std::string_view section, std::string_view evaluation,
                          std::string_view label = {}) const;
};

ReportTable read_report_csv(const std::filesystem::path& path);

// Encoder-by-evaluation table of macro AUCs (x100) with std, followed by the
// per-role breakdown; per-novel rows on request.
void print_report_tables(std::ostream& out, std::span<const ReportTable> reports, bool per_novel);

}  // namespace charvoice
