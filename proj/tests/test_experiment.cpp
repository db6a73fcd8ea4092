#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "charvoice/experiment.hpp"
#include "charvoice/report.hpp"
#include "charvoice/stats.hpp"
#include "fixture.hpp"
#include "oracles.hpp"
#include "record_counts.hpp"
#include "synthetic.hpp"

using namespace charvoice;
using charvoice::testing::brute_force_auc;
using charvoice::testing::count_from_records;
using charvoice::testing::OracleCounts;

namespace {

ExperimentOptions minor_options() {
  ExperimentOptions options;
  options.min_role = Role::Minor;
  return options;
}

ExperimentSpec chapterwise(std::size_t min_q) {
  ExperimentSpec spec;
  spec.min_query_quotes = min_q;
  return spec;
}


}  // namespace

TEST(RunExperiment, FixtureMatchesIndependentRecomputation) {
  const Corpus corpus = charvoice::testing::load_fixture();
  const auto spec = EncoderSpec::char_ngram(3, 1024, 3);
  const BuiltinEncoderSource source(spec);
  const auto result = run_experiment(corpus, source, chapterwise(2), minor_options());
  EXPECT_EQ(result.n_queries, 3u);

  // Pool, score and rank by hand from the raw per-quote vectors.
  const Novel& novel = corpus.novels[0];
  std::map<std::string, Embedding> vec;
  for (const auto& q : novel.quotes) vec[q.quote_id] = encode(spec, q.clean_text);
  const auto pool = [&](const std::string& who, auto keep) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(1024);
    int n = 0;
    for (const auto& q : novel.quotes) {
      if (q.speaker_id == who && keep(q)) {
        sum += vec[q.quote_id].cast<double>();
        ++n;
      }
    }
    return Eigen::VectorXd(sum / n);
  };
  const auto cos = [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.dot(b) / (a.norm() * b.norm());
  };

  std::vector<double> cc, cq;
  const std::vector<std::pair<std::string, std::size_t>> queries = {{"c1", 0}, {"c2", 0}, {"c1", 1}};
  for (const auto& [who, t] : queries) {
    const auto in_t = [t = t](const Quote& q) { return q.chapter_index == t; };
    const auto not_t = [t = t](const Quote& q) { return q.chapter_index != t; };
    const Eigen::VectorXd query = pool(who, in_t);
    std::vector<double> pos, neg;
    for (const char* other : {"c1", "c2", "c3"}) {
      (other == who ? pos : neg).push_back(cos(query, pool(other, not_t)));
    }
    cc.push_back(brute_force_auc(pos, neg));
    pos.clear();
    neg.clear();
    for (const auto& q : novel.quotes) {
      if (q.chapter_index == t) continue;
      (q.speaker_id == who ? pos : neg).push_back(cos(query, vec[q.quote_id].cast<double>()));
    }
    cq.push_back(brute_force_auc(pos, neg));
  }
  EXPECT_NEAR(result.cc.macro.mean, charvoice::testing::mean_of(cc), 1e-12);
  EXPECT_NEAR(result.cq.macro.mean, charvoice::testing::mean_of(cq), 1e-12);
  ASSERT_EQ(result.cc.per_novel.size(), 1u);
  EXPECT_NEAR(result.cc.per_novel[0].std, charvoice::testing::population_std(cc), 1e-12);
  EXPECT_EQ(result.cc.per_novel[0].n_queries, 3u);
}

TEST(RunExperiment, ScalingQueryVectorsLeavesAucUnchanged) {
  const Corpus corpus = charvoice::testing::load_fixture();
  const NovelView view(corpus.novels[0], Role::Minor);
  const auto table = encode_quotes(view.quotes(), EncoderSpec::char_ngram(3, 1024, 3));
  auto bundle = build_chapterwise(view, table, 0, 2, "x");
  for (const auto& q : bundle.queries) {
    const double cc = auc_cc(q, bundle.character_targets).auc;
    const double cqv = auc_cq(q, bundle.quote_targets).scored->auc;
    for (float scale : {1e-3f, 0.5f, 7.0f, 1e4f}) {
      CharacterEmbedding scaled = q;
      scaled.vector *= scale;
      EXPECT_EQ(auc_cc(scaled, bundle.character_targets).auc, cc);
      EXPECT_EQ(auc_cq(scaled, bundle.quote_targets).scored->auc, cqv);
    }
  }
}

TEST(RunExperiment, ImportedEmbeddingsWithSetVectors) {
  const Corpus corpus = charvoice::testing::load_fixture();
  const auto expected = EncoderSpec::external("ext4", 4);
  const auto quotes = import_embeddings(charvoice::testing::fixture_dir() / "external_quotes.emb",
                                        expected);
  const auto sets = import_embeddings(charvoice::testing::fixture_dir() / "external_sets.emb",
                                      expected);
  const ImportedEmbeddingSource source("ext4", quotes.quote_table(), sets.sets);
  const auto result = run_experiment(corpus, source, chapterwise(2), minor_options());
  EXPECT_EQ(result.n_queries, 3u);
  EXPECT_EQ(result.encoder_id, "ext4");
  for (const auto& q : result.cc.per_query) {
    EXPECT_GE(q.auc, 0.0);
    EXPECT_LE(q.auc, 1.0);
  }
}

TEST(RunExperiment, ImportedEmbeddingsMissingQuotesAreListed) {
  const Corpus corpus = charvoice::testing::load_fixture();
  auto table = import_embeddings(charvoice::testing::fixture_dir() / "external_quotes.emb",
                                 EncoderSpec::external("ext4", 4))
                   .quote_table();
  table.erase("tiny_novel/q5");
  const ImportedEmbeddingSource source("ext4", std::move(table));
  try {
    run_experiment(corpus, source, chapterwise(2), minor_options());
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.details(), std::vector<std::string>{"tiny_novel/q5"});
  }
}

TEST(RunExperiment, ThreadCountDoesNotChangeReports) {
  charvoice::testing::SynthOptions options;
  options.novels = 3;
  charvoice::testing::TempDir dir("cv-threads");
  charvoice::testing::write_synthetic_corpus(charvoice::testing::make_synthetic_corpus(options),
                                             dir.path());
  const Corpus corpus =
      load_corpus(dir.path(), IngestSchema::from_file(charvoice::testing::pdnc_schema_path()));
  const auto render = [&](std::size_t threads) {
    ExperimentOptions opts;
    opts.threads = threads;
    const BuiltinEncoderSource source(EncoderSpec::char_ngram(), threads);
    std::ostringstream out;
    write_report_csv(out, run_experiment(corpus, source, ExperimentSpec{}, opts));
    return out.str();
  };
  const std::string one = render(1);
  EXPECT_EQ(one, render(1));
  EXPECT_EQ(one, render(4));
}

TEST(ReadingOrderCurve, RowsAndMonotoneQueryCounts) {
  const Corpus corpus = charvoice::testing::load_fixture();
  const BuiltinEncoderSource source(EncoderSpec::char_ngram());
  const std::vector<std::size_t> grid = {1, 5, 10, 20, 50};
  const auto rows = reading_order_curve(corpus, source, grid, minor_options());
  ASSERT_EQ(rows.size(), 5u);
  ASSERT_TRUE(rows[0].cc_macro.has_value());
  EXPECT_GE(*rows[0].cc_macro, 0.0);
  EXPECT_LE(*rows[0].cc_macro, 1.0);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_LE(rows[k].n_queries, rows[k - 1].n_queries);
  }
  EXPECT_FALSE(rows[4].cc_macro.has_value());

  const std::vector<std::size_t> bad = {5, 1};
  EXPECT_THROW(reading_order_curve(corpus, source, bad, minor_options()), ConfigError);
}

TEST(QueryStats, FixtureChapterwise) {
  const Corpus corpus = charvoice::testing::load_fixture();
  const auto stats = compute_query_stats(corpus, chapterwise(2), Role::Minor);
  EXPECT_EQ(stats.total_queries, 3u);
  ASSERT_EQ(stats.per_novel.size(), 1u);
  const auto& s = stats.per_novel[0];
  EXPECT_EQ(s.queries, 3u);
  EXPECT_EQ(s.active_characters, 2u);
  EXPECT_EQ(s.speakers_retained, 3u);
  EXPECT_DOUBLE_EQ(s.mean_query_length, 3.0);
  EXPECT_DOUBLE_EQ(s.mean_character_targets, 3.0);
  EXPECT_DOUBLE_EQ(s.mean_quote_targets, (5.0 + 5.0 + 7.0) / 3.0);
  EXPECT_NEAR(stats.activity_pct.mean, 200.0 / 3.0, 1e-9);
  EXPECT_NEAR(stats.explicit_share_pct, 500.0 / 12.0, 1e-9);
}

TEST(QueryStats, SyntheticCorpusMatchesRecordCounts) {
  charvoice::testing::SynthOptions options;
  options.novels = 5;
  options.no_explicit_novels = 2;
  const auto synth = charvoice::testing::make_synthetic_corpus(options);
  charvoice::testing::TempDir dir("cv-stats");
  charvoice::testing::write_synthetic_corpus(synth, dir.path());
  const Corpus corpus =
      load_corpus(dir.path(), IngestSchema::from_file(charvoice::testing::pdnc_schema_path()));

  const OracleCounts oracle = count_from_records(synth, 5);
  ExperimentSpec spec;
  const auto cw = compute_query_stats(corpus, spec);
  spec.strategy = Strategy::Explicit;
  const auto ex = compute_query_stats(corpus, spec);
  EXPECT_EQ(cw.total_queries, oracle.chapterwise);
  EXPECT_EQ(ex.total_queries, oracle.explicit_queries);
  EXPECT_NEAR(cw.explicit_share_pct, 100.0 * oracle.explicit_quotes / oracle.quotes, 1e-9);

  std::vector<double> speakers(oracle.speakers_per_novel.begin(), oracle.speakers_per_novel.end());
  EXPECT_NEAR(cw.speakers_retained.mean, charvoice::testing::mean_of(speakers), 1e-12);

  std::vector<std::string> expected_empty;
  for (std::size_t n : oracle.novels_without_explicit) {
    expected_empty.push_back(corpus.novels[n].novel_id);
  }
  EXPECT_EQ(ex.novels_without_queries, expected_empty);
  EXPECT_EQ(expected_empty.size(), 2u);
}

TEST(Report, CsvRoundTripsThroughReader) {
  const Corpus corpus = charvoice::testing::load_fixture();
  const BuiltinEncoderSource source(EncoderSpec::char_ngram());
  const auto result = run_experiment(corpus, source, chapterwise(2), minor_options());
  charvoice::testing::TempDir dir("cv-report");
  const auto path = dir.path() / "report.csv";
  {
    std::ofstream out(path);
    write_report_csv(out, result);
  }
  const auto table = read_report_csv(path);
  EXPECT_EQ(table.encoder_id, "char3gram");
  EXPECT_EQ(table.experiment, "chapterwise:min_q=2");
  const auto macro = table.find("macro", "cc");
  ASSERT_TRUE(macro.has_value());
  EXPECT_NEAR(macro->mean, result.cc.macro.mean, 5e-7);
  const auto novel = table.find("per_novel", "cq", "tiny_novel");
  ASSERT_TRUE(novel.has_value());
  EXPECT_EQ(novel->n_queries, 3u);

  std::ostringstream printed;
  const std::vector<ReportTable> tables = {table};
  print_report_tables(printed, tables, true);
  EXPECT_NE(printed.str().find("tiny_novel"), std::string::npos);
}

TEST(Report, CurveFileHasOneRowPerN) {
  const std::vector<CurveRow> rows = {{1, 0.5, 0.25, 4}, {5, std::nullopt, std::nullopt, 0}};
  std::ostringstream out;
  write_curve_tsv(out, rows);
  EXPECT_EQ(out.str(), "n\tcc_auc\tcq_auc\tn_queries\n1\t0.500000\t0.250000\t4\n5\tNA\tNA\t0\n");
}
