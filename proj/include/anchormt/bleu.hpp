#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "anchormt/lang.hpp"

namespace anchormt {

struct BleuReport {
  double bleu = 0.0;  // percentage, 0..100
  std::array<double, 4> ngram_precisions{};  // fractions in [0,1]
  double brevity_penalty = 1.0;
  int64_t hyp_length = 0;
  int64_t ref_length = 0;
};

// Corpus-level 4-gram BLEU with clipping and brevity penalty, matching the
// multi-bleu script conventions (single reference, no smoothing; any zero
// n-gram match gives 0).
BleuReport bleu(const std::vector<SentenceTokens>& hypotheses,
                const std::vector<SentenceTokens>& references);

}  // namespace anchormt
