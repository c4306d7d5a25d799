#pragma once

#include "anchormt/bpe.hpp"
#include "anchormt/errors.hpp"
#include "anchormt/rng.hpp"

namespace anchormt {

struct NoiseConfig {
  double drop_prob = 0.1;
  int shuffle_window = 3;

  void validate() const {
    if (drop_prob < 0.0 || drop_prob >= 1.0)
      throw UsageError("noise.drop_prob must be in [0,1)");
    if (shuffle_window < 0) throw UsageError("noise.shuffle_window must be >= 0");
  }
};

// Deletion then bounded local permutation. Non-special tokens are dropped
// independently with drop_prob (at least one always survives); each survivor
// then moves at most shuffle_window positions via the key i + U(0, window+1)
// stable sort. Anchor flags travel with their tokens.
IdSequence corrupt(const IdSequence& ids, const NoiseConfig& cfg, const BpeSpecials& sp,
                   Rng& rng);

}  // namespace anchormt
