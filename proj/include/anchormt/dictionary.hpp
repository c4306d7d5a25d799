#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "anchormt/lang.hpp"

namespace anchormt {

// MUSE-format entries in file order. A source word may repeat with different
// targets (multi-sense).
struct RawDictionary {
  std::vector<std::pair<std::string, std::string>> entries;
  Lang from = Lang::Src;
  Lang to = Lang::Tgt;
  int64_t dropped_multiword = 0;  // >2-field lines (multi-word targets), dropped
};

// One target per source word after frequency-based sense resolution.
// std::map keeps iteration deterministic.
struct BilingualDictionary {
  std::map<std::string, std::string> map;
  Lang from = Lang::Src;
  Lang to = Lang::Tgt;
  bool lowercase = false;  // fold case on lookup

  int64_t entry_count() const { return static_cast<int64_t>(map.size()); }
  // Returns nullptr when the word is not covered.
  const std::string* lookup(const std::string& word) const;
};

struct CoverageReport {
  int64_t entry_count = 0;
  double covered_token_fraction = 0.0;
};

RawDictionary load_raw_dictionary(const std::string& path, Lang from = Lang::Src,
                                  Lang to = Lang::Tgt);

// For each source word picks the target with the highest corpus frequency;
// ties go to the lexicographically smallest target.
BilingualDictionary resolve_senses(const RawDictionary& raw, const FreqTable& target_freq,
                                   bool lowercase = false);

// Replaces every covered token with its translation and flags the position.
// Length-preserving.
SentenceTokens anchor_sentence(const SentenceTokens& s, const BilingualDictionary& dict);

CoverageReport coverage_stats(const std::vector<SentenceTokens>& corpus,
                              const BilingualDictionary& dict);

// Disjoint source-word split, deterministic under seed.
std::pair<BilingualDictionary, BilingualDictionary> split_dictionary(
    const BilingualDictionary& dict, double train_fraction, uint64_t seed);

void save_dictionary(const BilingualDictionary& dict, const std::string& path);

// Swaps direction. When several sources share a target, the
// lexicographically smallest source wins.
BilingualDictionary invert_dictionary(const BilingualDictionary& dict);

}  // namespace anchormt
