// Acceptance checks, one line per criterion.
//
//   charvoice_acceptance --offline   synthetic data only
//   charvoice_acceptance --pdnc      the real corpus under CHARVOICE_PDNC_ROOT
//
// Exit status: 0 when nothing failed, 1 on any failure, 77 when --pdnc has
// no corpus to read.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>
#include <spdlog/spdlog.h>

#include "charvoice/experiment.hpp"
#include "charvoice/stats.hpp"
#include "oracles.hpp"
#include "record_counts.hpp"
#include "synthetic.hpp"

using namespace charvoice;
namespace fs = std::filesystem;

namespace {

constexpr double kAucTolerance = 1e-12;
constexpr std::size_t kAucInstances = 1200;
constexpr double kPropertySeconds = 10.0;
constexpr double kStatsSeconds = 120.0;

constexpr std::size_t kChapterwiseQueries = 1606;
constexpr std::size_t kExplicitQueries = 562;
constexpr double kCountTolerance = 0.03;
constexpr double kExplicitSharePct = 31.0;
constexpr double kExplicitShareTolerancePct = 2.0;
constexpr double kSpeakers = 11.1;
constexpr double kSpeakersTolerance = 0.5;
const std::set<std::string> kZeroExplicitTitles = {"thegambler", "thesportofthegods"};

constexpr double kPoolTolerance = 1e-6;
constexpr double kCosineSlack = 1e-12;
constexpr std::uint64_t kShuffleSeed = 20240611;

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status = Status::Pass;
  std::string detail;
};

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

struct Tally {
  int failed = 0;

  void report(const std::string& id, const std::string& name, const Outcome& outcome) {
    const char* label = outcome.status == Status::Pass   ? "PASS"
                        : outcome.status == Status::Fail ? "FAIL"
                                                         : "SKIP";
    if (outcome.status == Status::Fail) ++failed;
    std::cout << fmt::format("{:<4}  {}  {:<40} {}", label, id, name, outcome.detail) << std::endl;
  }

  void run(const std::string& id, const std::string& name, const std::function<Outcome()>& check) {
    try {
      report(id, name, check());
    } catch (const std::exception& e) {
      report(id, name, {Status::Fail, fmt::format("error: {}", e.what())});
    }
  }
};

Outcome verdict(bool ok, std::string detail) {
  return {ok ? Status::Pass : Status::Fail, std::move(detail)};
}

std::size_t hardware_threads() {
  return std::max(1u, std::thread::hardware_concurrency());
}

CharacterEmbedding character(const std::string& id, Embedding v) {
  CharacterEmbedding e;
  e.novel_id = "n";
  e.character_id = id;
  e.subset_descriptor = "d";
  e.vector = std::move(v);
  return e;
}

Embedding random_vector(std::mt19937_64& rng, int dim) {
  std::normal_distribution<float> normal;
  Embedding v(dim);
  for (auto& x : v) x = normal(rng);
  return v;
}

// ---------------------------------------------------------------- C1

Outcome check_auc_oracle() {
  const Timer timer;
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> n_targets(2, 50);
  double worst = 0.0;
  std::size_t mismatched_counts = 0, instances = 0, tied_instances = 0;

  for (std::size_t trial = 0; trial < kAucInstances; ++trial) {
    const int dim = 8;
    const Embedding query = random_vector(rng, dim);
    // A small pool of distinct vectors, drawn with replacement, gives exact ties.
    std::vector<Embedding> pool;
    const int pool_size = 2 + static_cast<int>(trial % 6);
    for (int i = 0; i < pool_size; ++i) pool.push_back(random_vector(rng, dim));
    std::uniform_int_distribution<int> pick(0, pool_size - 1);
    const int n = n_targets(rng);

    // Character-character: the first target belongs to the query character.
    std::vector<CharacterEmbedding> targets;
    for (int i = 0; i < n; ++i) {
      targets.push_back(character(i == 0 ? "q" : fmt::format("o{}", i), pool[pick(rng)]));
    }
    std::shuffle(targets.begin(), targets.end(), rng);
    const auto cc = auc_cc(character("q", query), targets);
    std::vector<double> pos, neg;
    for (const auto& t : targets) {
      (t.character_id == "q" ? pos : neg).push_back(cosine(query, t.vector));
    }
    const double cc_oracle = testing::brute_force_auc(pos, neg);
    worst = std::max(worst, std::abs(cc.auc - cc_oracle));
    if (cc.counts.pairs != pos.size() * neg.size()) ++mismatched_counts;
    const std::set<double> distinct_cc(neg.begin(), neg.end());
    if (distinct_cc.size() < neg.size() || distinct_cc.count(pos[0]) > 0) ++tied_instances;

    // Character-quote: several own quotes among the targets.
    std::vector<Embedding> storage;
    storage.reserve(static_cast<std::size_t>(n));
    std::vector<QuoteTarget> quotes;
    std::bernoulli_distribution own(0.3);
    for (int i = 0; i < n; ++i) {
      storage.push_back(pool[pick(rng)]);
      const bool mine = i == 0 || (i != 1 && own(rng));
      quotes.push_back({fmt::format("n/{}", i), mine ? "q" : "o", &storage.back()});
    }
    const auto cq = auc_cq(character("q", query), quotes);
    if (!cq.scored) return {Status::Fail, fmt::format("instance {} skipped by auc_cq", trial)};
    pos.clear();
    neg.clear();
    for (const auto& t : quotes) {
      (t.speaker_id == "q" ? pos : neg).push_back(cosine(query, *t.vector));
    }
    worst = std::max(worst, std::abs(cq.scored->auc - testing::brute_force_auc(pos, neg)));
    if (cq.scored->counts.pairs != pos.size() * neg.size()) ++mismatched_counts;
    instances += 2;
  }
  const double elapsed = timer.seconds();
  return verdict(worst <= kAucTolerance && mismatched_counts == 0 && elapsed < kPropertySeconds,
                 fmt::format("{} instances ({} cc with ties), max |diff| {:.1e} (tol {:.0e}), "
                             "{:.2f} s (limit {:.0f} s)",
                             instances, tied_instances, worst, kAucTolerance, elapsed,
                             kPropertySeconds));
}

// ---------------------------------------------------------------- C2

Outcome check_pool_and_cosine_properties() {
  const Timer timer;
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> dims(8, 4096);
  std::uniform_int_distribution<int> counts(1, 20);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  std::vector<std::string> failures;
  const std::size_t trials = 300;

  for (std::size_t trial = 0; trial < trials && failures.size() < 5; ++trial) {
    const int dim = dims(rng);
    std::vector<Embedding> vectors;
    const int count = counts(rng);
    for (int i = 0; i < count; ++i) vectors.push_back(random_vector(rng, dim));

    const Embedding pooled = pool_mean(vectors);
    std::vector<Embedding> shuffled(vectors);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    if ((pool_mean(shuffled) - pooled).cwiseAbs().maxCoeff() > kPoolTolerance) {
      failures.push_back(fmt::format("permutation, dim {}", dim));
    }
    if (pool_mean(std::vector<Embedding>{vectors[0]}) != vectors[0]) {
      failures.push_back(fmt::format("singleton, dim {}", dim));
    }

    const Embedding other = random_vector(rng, dim);
    const double ab = cosine(pooled, other), ba = cosine(other, pooled);
    if (ab != ba) failures.push_back(fmt::format("symmetry, dim {}", dim));
    if (ab < -1.0 - kCosineSlack || ab > 1.0 + kCosineSlack) {
      failures.push_back(fmt::format("bounds, dim {}: {}", dim, ab));
    }
    if (std::abs(cosine(other, other) - 1.0) > kCosineSlack) {
      failures.push_back(fmt::format("self-similarity, dim {}", dim));
    }

    // Positive scaling of the query and of every target leaves the AUC alone.
    std::vector<CharacterEmbedding> targets, scaled_targets;
    for (int i = 0; i < count + 1; ++i) {
      const std::string id = i == 0 ? "q" : fmt::format("o{}", i);
      Embedding v = random_vector(rng, dim);
      targets.push_back(character(id, v));
      scaled_targets.push_back(character(id, (v * static_cast<float>(scale(rng))).eval()));
    }
    if (targets.size() < 2) continue;
    const Embedding query = random_vector(rng, dim);
    const Embedding scaled_query = query * static_cast<float>(scale(rng));
    const double base = auc_cc(character("q", query), targets).auc;
    const double scaled = auc_cc(character("q", scaled_query), scaled_targets).auc;
    if (base != scaled) failures.push_back(fmt::format("scaling, dim {}: {} vs {}", dim, base, scaled));
  }
  const double elapsed = timer.seconds();
  if (!failures.empty()) {
    return {Status::Fail, fmt::format("violations: {}", fmt::join(failures, "; "))};
  }
  return verdict(elapsed < kPropertySeconds,
                 fmt::format("{} randomized cases, dims 8-4096, {:.2f} s (limit {:.0f} s)", trials,
                             elapsed, kPropertySeconds));
}

// ---------------------------------------------------------------- shared

ExperimentSpec spec_for(Strategy strategy) {
  ExperimentSpec spec;
  spec.strategy = strategy;
  spec.min_query_quotes = 5;
  return spec;
}

std::string squash(std::string_view text) {
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

// (novel, character, chapter) of every query the strategy produces.
std::set<std::tuple<std::string, std::string, std::size_t>> query_keys(const Corpus& corpus,
                                                                       Strategy strategy) {
  std::set<std::tuple<std::string, std::string, std::size_t>> keys;
  const ExperimentSpec spec = spec_for(strategy);
  for (const auto& novel : corpus.novels) {
    const NovelView view(novel, Role::Intermediate);
    for (const auto& subset : spec.subsets(view)) {
      for (const auto& query : plan_bundle(view, subset).queries) {
        keys.emplace(novel.novel_id, query.character_id, subset.chapter_index);
      }
    }
  }
  return keys;
}

Outcome check_inclusion(const Corpus& corpus) {
  const auto chapterwise = query_keys(corpus, Strategy::Chapterwise);
  const auto explicit_keys = query_keys(corpus, Strategy::Explicit);
  std::vector<std::string> violations;
  for (const auto& [novel, who, chapter] : explicit_keys) {
    if (!chapterwise.count({novel, who, chapter})) {
      violations.push_back(fmt::format("{}/{}@{}", novel, who, chapter));
    }
  }
  if (violations.size() > 5) violations.resize(5);
  return verdict(violations.empty(),
                 fmt::format("{} explicit keys, {} chapterwise keys, violations: {}",
                             explicit_keys.size(), chapterwise.size(),
                             violations.empty() ? "0" : fmt::format("{}", fmt::join(violations, ", "))));
}

// Permutes speaker labels across the quotes of each novel. Per-character
// quote counts, and so roles, are unchanged.
Corpus shuffle_speakers(Corpus corpus, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (auto& novel : corpus.novels) {
    std::vector<std::string> labels;
    for (const auto& q : novel.quotes) labels.push_back(q.speaker_id);
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < labels.size(); ++i) novel.quotes[i].speaker_id = labels[i];
  }
  return corpus;
}

Outcome check_char3gram_sanity(const Corpus& corpus) {
  ExperimentOptions options;
  options.threads = hardware_threads();
  const auto spec = spec_for(Strategy::Chapterwise);
  const auto real = run_experiment(corpus, BuiltinEncoderSource(EncoderSpec::char_ngram(), options.threads),
                                   spec, options);
  const auto control =
      run_experiment(shuffle_speakers(corpus, kShuffleSeed),
                     BuiltinEncoderSource(EncoderSpec::token_unigram(), options.threads), spec, options);
  const double cc = real.cc.macro.mean;
  const double null_cc = control.cc.macro.mean;
  return verdict(cc > 0.5 && cc > null_cc,
                 fmt::format("char3gram CC macro {:.4f} over {} queries; token-unigram on shuffled "
                             "speakers {:.4f} over {} queries",
                             cc, real.n_queries, null_cc, control.n_queries));
}

// ---------------------------------------------------------------- modes

int run_offline() {
  Tally tally;
  tally.run("C1", "auc-oracle-equivalence", check_auc_oracle);
  tally.run("C2", "pooling-similarity-properties", check_pool_and_cosine_properties);

  testing::SynthOptions options;
  options.novels = 8;
  options.no_explicit_novels = 2;
  const auto synth = testing::make_synthetic_corpus(options);
  testing::TempDir dir("cv-accept");
  testing::write_synthetic_corpus(synth, dir.path());

  tally.run("C3", "query-statistics [synthetic]", [&] {
    const Timer timer;
    const Corpus corpus = load_corpus(dir.path(), IngestSchema::from_file(testing::pdnc_schema_path()));
    const auto oracle = testing::count_from_records(synth, 5);
    const auto cw = compute_query_stats(corpus, spec_for(Strategy::Chapterwise));
    const auto ex = compute_query_stats(corpus, spec_for(Strategy::Explicit));
    std::vector<std::string> expected_empty;
    for (std::size_t n : oracle.novels_without_explicit) expected_empty.push_back(corpus.novels[n].novel_id);
    const double share = 100.0 * static_cast<double>(oracle.explicit_quotes) / static_cast<double>(oracle.quotes);
    std::vector<double> speakers(oracle.speakers_per_novel.begin(), oracle.speakers_per_novel.end());
    const bool ok = cw.total_queries == oracle.chapterwise && ex.total_queries == oracle.explicit_queries &&
                    std::abs(cw.explicit_share_pct - share) < 1e-9 &&
                    std::abs(cw.speakers_retained.mean - testing::mean_of(speakers)) < 1e-12 &&
                    ex.novels_without_queries == expected_empty && expected_empty.size() == 2;
    return verdict(ok, fmt::format("generator records vs pipeline: chapterwise {}/{}, explicit {}/{}, "
                                   "share {:.2f}%, zero-explicit novels {}, {:.2f} s; real corpus: --pdnc",
                                   cw.total_queries, oracle.chapterwise, ex.total_queries,
                                   oracle.explicit_queries, cw.explicit_share_pct,
                                   ex.novels_without_queries.size(), timer.seconds()));
  });

  const Corpus corpus = load_corpus(dir.path(), IngestSchema::from_file(testing::pdnc_schema_path()));
  tally.run("C4", "explicit-subset-of-chapterwise [synth]", [&] { return check_inclusion(corpus); });
  tally.run("C5", "char3gram-sanity [synthetic]", [&] { return check_char3gram_sanity(corpus); });
  return tally.failed == 0 ? 0 : 1;
}

int run_pdnc(const std::string& root_flag, const fs::path& schema_path) {
  std::string root = root_flag;
  if (root.empty()) {
    if (const char* env = std::getenv("CHARVOICE_PDNC_ROOT")) root = env;
  }
  Tally tally;
  if (root.empty()) {
    const Outcome skipped{Status::Skip, "CHARVOICE_PDNC_ROOT is not set"};
    tally.report("C3", "pdnc-query-statistics", skipped);
    tally.report("C4", "explicit-subset-of-chapterwise", skipped);
    tally.report("C5", "char3gram-sanity", skipped);
    return 77;
  }

  const Timer timer;
  Corpus corpus;
  try {
    corpus = load_corpus(root, IngestSchema::from_file(schema_path), {RoleThresholds{}, hardware_threads()});
  } catch (const std::exception& e) {
    const Outcome failed{Status::Fail, fmt::format("cannot load {}: {}", root, e.what())};
    tally.report("C3", "pdnc-query-statistics", failed);
    tally.report("C4", "explicit-subset-of-chapterwise", failed);
    tally.report("C5", "char3gram-sanity", failed);
    return 1;
  }

  tally.run("C3", "pdnc-query-statistics", [&] {
    const auto cw = compute_query_stats(corpus, spec_for(Strategy::Chapterwise));
    const auto ex = compute_query_stats(corpus, spec_for(Strategy::Explicit));
    const double elapsed = timer.seconds();

    const auto within = [](std::size_t got, std::size_t want) {
      return std::abs(static_cast<double>(got) - static_cast<double>(want)) <=
             kCountTolerance * static_cast<double>(want);
    };
    std::set<std::string> empty_titles;
    std::vector<std::string> empty_names;
    for (const auto& id : ex.novels_without_queries) {
      const Novel* novel = corpus.find_novel(id);
      const std::string name = novel && !novel->title.empty() ? novel->title : id;
      empty_names.push_back(name);
      empty_titles.insert(squash(name));
    }
    std::vector<std::string> problems;
    if (!within(cw.total_queries, kChapterwiseQueries)) problems.push_back("chapterwise count");
    if (!within(ex.total_queries, kExplicitQueries)) problems.push_back("explicit count");
    if (std::abs(cw.explicit_share_pct - kExplicitSharePct) > kExplicitShareTolerancePct) {
      problems.push_back("explicit share");
    }
    if (empty_titles != kZeroExplicitTitles) problems.push_back("zero-explicit novels");
    if (std::abs(cw.speakers_retained.mean - kSpeakers) > kSpeakersTolerance) problems.push_back("speakers");
    if (elapsed >= kStatsSeconds) problems.push_back("runtime");

    return verdict(problems.empty(),
                   fmt::format("{} novels; chapterwise {} (want {}±3%), explicit {} (want {}±3%), "
                               "explicit share {:.1f}% (want {}±{}), zero-explicit [{}], speakers "
                               "{:.2f} retained / {:.2f} all (want {}±{}), {:.1f} s{}",
                               corpus.novels.size(), cw.total_queries, kChapterwiseQueries,
                               ex.total_queries, kExplicitQueries, cw.explicit_share_pct,
                               kExplicitSharePct, kExplicitShareTolerancePct,
                               fmt::join(empty_names, ", "), cw.speakers_retained.mean,
                               cw.speakers_all.mean, kSpeakers, kSpeakersTolerance, elapsed,
                               problems.empty() ? "" : fmt::format("; off: {}", fmt::join(problems, ", "))));
  });
  tally.run("C4", "explicit-subset-of-chapterwise", [&] { return check_inclusion(corpus); });
  tally.run("C5", "char3gram-sanity", [&] { return check_char3gram_sanity(corpus); });
  return tally.failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"charvoice acceptance checks"};
  bool offline = false, pdnc = false;
  std::string root;
  std::string schema = testing::pdnc_schema_path().string();
  app.add_flag("--offline", offline, "Property checks plus synthetic-corpus variants");
  app.add_flag("--pdnc", pdnc, "Corpus checks on the real PDNC release");
  app.add_option("--root", root, "PDNC root (default: $CHARVOICE_PDNC_ROOT)");
  app.add_option("--schema", schema, "Ingestion schema for --pdnc");
  CLI11_PARSE(app, argc, argv);
  if (offline == pdnc) {
    std::cerr << "choose exactly one of --offline or --pdnc\n";
    return 2;
  }
  spdlog::set_level(spdlog::level::warn);
  return offline ? run_offline() : run_pdnc(root, schema);
}
