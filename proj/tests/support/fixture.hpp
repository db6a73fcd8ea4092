#pragma once

#include <filesystem>

#include "charvoice/corpus.hpp"

namespace charvoice::testing {

inline std::filesystem::path fixture_dir() {
  return std::filesystem::path(CHARVOICE_SOURCE_DIR) / "tests" / "data" / "fixture";
}

inline std::filesystem::path fixture_corpus() { return fixture_dir() / "corpus"; }
inline std::filesystem::path fixture_schema() { return fixture_dir() / "fixture.schema"; }

// Tiny novel: 12 single-speaker quotes over two chapters plus one choral
// quote; speakers c1 (7 quotes), c2 (3), c3 (2).
inline Corpus load_fixture(const RoleThresholds& thresholds = {}) {
  LoadOptions options;
  options.thresholds = thresholds;
  return load_corpus(fixture_corpus(), IngestSchema::from_file(fixture_schema()), options);
}

}  // namespace charvoice::testing
