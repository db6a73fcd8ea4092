#include "charvoice/stats.hpp"

#include <cmath>
#include <set>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace charvoice {

namespace {

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd out;
  out.n = values.size();
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(sq / static_cast<double>(values.size()));
  return out;
}

double pct(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

}  // namespace

QueryStatsSummary compute_query_stats(const Corpus& corpus, const ExperimentSpec& spec,
                                      Role min_role) {
  QueryStatsSummary summary;
  summary.strategy = spec.strategy;
  std::size_t explicit_total = 0;
  std::size_t retained_total = 0;
  std::size_t retained_explicit_total = 0;

  std::vector<double> speakers_retained, speakers_all, activity, queries, length, char_targets,
      quote_targets;

  for (const auto& novel : corpus.novels) {
    const NovelView view(novel, min_role);
    NovelQueryStats s;
    s.novel_id = novel.novel_id;
    s.title = novel.title;
    s.chapters = novel.chapter_count;
    s.quotes = novel.quotes.size();
    for (const auto& q : novel.quotes) {
      if (q.referent_type == ReferentType::Explicit) ++s.explicit_quotes;
    }
    s.retained_quotes = view.quotes().size();
    for (const Quote* q : view.quotes()) {
      if (q->referent_type == ReferentType::Explicit) ++s.retained_explicit_quotes;
    }
    for (const auto& c : novel.characters) {
      if (c.quote_count > 0) ++s.speakers_all;
    }
    s.speakers_retained = view.characters().size();

    std::set<std::string> active;
    std::size_t support = 0, targets = 0, heldout = 0;
    for (const auto& subset : spec.subsets(view)) {
      const BundlePlan plan = plan_bundle(view, subset);
      s.dropped_queries += plan.dropped_queries.size();
      for (const auto& q : plan.queries) {
        ++s.queries;
        active.insert(q.character_id);
        support += q.quotes.size();
        targets += plan.targets.size();
        heldout += plan.heldout_quotes.size();
      }
    }
    s.active_characters = active.size();
    if (s.queries > 0) {
      const auto n = static_cast<double>(s.queries);
      s.mean_query_length = static_cast<double>(support) / n;
      s.mean_character_targets = static_cast<double>(targets) / n;
      s.mean_quote_targets = static_cast<double>(heldout) / n;
    }

    summary.total_queries += s.queries;
    summary.total_quotes += s.quotes;
    explicit_total += s.explicit_quotes;
    retained_total += s.retained_quotes;
    retained_explicit_total += s.retained_explicit_quotes;
    speakers_retained.push_back(static_cast<double>(s.speakers_retained));
    speakers_all.push_back(static_cast<double>(s.speakers_all));
    if (s.queries == 0) {
      summary.novels_without_queries.push_back(novel.novel_id);
    } else {
      activity.push_back(pct(s.active_characters, s.speakers_retained));
      queries.push_back(static_cast<double>(s.queries));
      length.push_back(s.mean_query_length);
      char_targets.push_back(s.mean_character_targets);
      quote_targets.push_back(s.mean_quote_targets);
    }
    summary.per_novel.push_back(std::move(s));
  }

  summary.speakers_retained = mean_std(speakers_retained);
  summary.speakers_all = mean_std(speakers_all);
  summary.activity_pct = mean_std(activity);
  summary.queries = mean_std(queries);
  summary.query_length = mean_std(length);
  summary.character_targets = mean_std(char_targets);
  summary.quote_targets = mean_std(quote_targets);
  summary.explicit_share_pct = pct(explicit_total, summary.total_quotes);
  summary.retained_explicit_share_pct = pct(retained_explicit_total, retained_total);
  return summary;
}

void print_query_stats(std::ostream& out, const QueryStatsSummary& stats, bool per_novel) {
  const auto row = [&](std::string_view label, const MeanStd& m, int precision) {
    fmt::print(out, "{:<28}{:>10.{}f} ({:.{}f})\n", label, m.mean, precision, m.std, precision);
  };
  fmt::print(out, "experiment: {}\n", to_string(stats.strategy));
  fmt::print(out, "{:<28}{:>10}\n", "total queries", stats.total_queries);
  row("speakers (retained)", stats.speakers_retained, 1);
  row("speakers (all annotated)", stats.speakers_all, 1);
  row("activity (%)", stats.activity_pct, 0);
  row("queries", stats.queries, 1);
  row("query length", stats.query_length, 1);
  row("targets/query character", stats.character_targets, 1);
  row("targets/query quote", stats.quote_targets, 0);
  fmt::print(out, "{:<28}{:>10.1f}\n", "explicit share (%)", stats.explicit_share_pct);
  fmt::print(out, "{:<28}{:>10.1f}\n", "explicit share retained (%)",
             stats.retained_explicit_share_pct);
  fmt::print(out, "{:<28}{:>10}\n", "novels without queries",
             stats.novels_without_queries.size());
  for (const auto& id : stats.novels_without_queries) fmt::print(out, "  {}\n", id);

  if (!per_novel) return;
  fmt::print(out, "\n{:<32}{:>6}{:>8}{:>8}{:>8}{:>8}{:>8}{:>9}{:>9}{:>10}\n", "novel", "chap",
             "quotes", "expl%", "spk", "active", "queries", "qlen", "ctgt", "qtgt");
  for (const auto& s : stats.per_novel) {
    fmt::print(out, "{:<32}{:>6}{:>8}{:>8.1f}{:>8}{:>8}{:>8}{:>9.1f}{:>9.1f}{:>10.1f}\n",
               s.novel_id, s.chapters, s.quotes, pct(s.explicit_quotes, s.quotes),
               s.speakers_retained, s.active_characters, s.queries, s.mean_query_length,
               s.mean_character_targets, s.mean_quote_targets);
  }
}

}  // namespace charvoice
