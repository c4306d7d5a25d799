#pragma once

#include <cstdint>
#include <vector>

#include "anchormt/dictionary.hpp"
#include "anchormt/lang.hpp"

namespace anchormt {

// Deterministic synthetic language pair: a Markov "latent" language with a
// Zipfian (s = 1.1) word distribution, rendered into two disjoint surface
// alphabets through a vocabulary cipher, with bounded local reordering on the
// target side. The full dictionary is the exact cipher.
struct SynthSpec {
  int vocab_size = 500;
  int sentence_count = 20000;  // per side
  int min_len = 5;
  int max_len = 15;
  int reorder_window = 2;
  double dict_coverage = 0.5;  // fraction of word types; token coverage is
                               // repaired to match within tolerance
  int heldout_valid = 500;
  int heldout_test = 1000;
  uint64_t seed = 1;

  void validate() const;
};

struct SynthPair {
  std::vector<SentenceTokens> src_corpus;  // latent half A
  std::vector<SentenceTokens> tgt_corpus;  // latent half B, ciphered + reordered
  BilingualDictionary full_dict;           // every type, the exact cipher
  BilingualDictionary sampled_dict;        // coverage-limited sample of full_dict
  std::vector<SentenceTokens> valid_src, valid_tgt;  // parallel, never trained on
  std::vector<SentenceTokens> test_src, test_tgt;
};

SynthPair generate_pair(const SynthSpec& spec);

// Surface forms, exposed for tests.
std::string synth_src_word(int rank);
std::string synth_tgt_word(int rank);

}  // namespace anchormt
