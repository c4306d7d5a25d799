#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "anchormt/lang.hpp"

namespace anchormt {

// Subword-level sentence. anchor_mask is the word-level anchor flag
// propagated to every subword of the word.
struct IdSequence {
  std::vector<int> ids;
  std::vector<bool> anchor_mask;
  Lang lang = Lang::Src;

  IdSequence() = default;
  IdSequence(std::vector<int> i, Lang l)
      : ids(std::move(i)), anchor_mask(ids.size(), false), lang(l) {}
  size_t size() const { return ids.size(); }
};

struct BpeSpecials {
  int pad = 0, bos = 1, eos = 2, unk = 3, mask = 4;
};

// Joint BPE codec. Merges are stored as marker-free symbol pairs in learning
// order; a merge applies in both word-final and word-internal contexts.
// Vocabulary entries are the rendered piece forms: continuation pieces carry
// the "@@" suffix, word-final pieces do not.
struct BpeCodec {
  std::vector<std::pair<std::string, std::string>> merges;
  std::vector<std::string> id_to_piece;
  std::unordered_map<std::string, int> piece_to_id;
  std::vector<int64_t> piece_freq;  // occurrences over the training corpus
  BpeSpecials specials;
  int initial_inventory = 0;  // rendered symbol forms before any merge
  int max_len = 100;          // sentence truncation length in BPE tokens

  int vocab_size() const { return static_cast<int>(id_to_piece.size()); }
  bool is_special(int id) const { return id >= 0 && id < 5; }
  int piece_id(const std::string& piece) const {
    auto it = piece_to_id.find(piece);
    return it == piece_to_id.end() ? specials.unk : it->second;
  }
};

// Greedy highest-frequency pair merging over the concatenation of both
// corpora; ties break by lexicographic pair order. extra_words are added with
// count 1 when absent so dictionary targets stay encodable.
BpeCodec learn_bpe(const std::vector<SentenceTokens>& corpus_a,
                   const std::vector<SentenceTokens>& corpus_b, int num_merges,
                   const std::vector<std::string>& extra_words = {});

IdSequence apply_bpe(const BpeCodec& codec, const SentenceTokens& s);

SentenceTokens detokenize(const BpeCodec& codec, const IdSequence& ids);

// Caching encoder for corpus-scale segmentation. Not thread-safe; one per
// worker.
class BpeEncoder {
 public:
  explicit BpeEncoder(const BpeCodec& codec) : codec_(codec) {}
  IdSequence encode(const SentenceTokens& s);
  const BpeCodec& codec() const { return codec_; }

 private:
  const BpeCodec& codec_;
  std::unordered_map<std::string, std::vector<int>> cache_;
};

void save_codec(const BpeCodec& codec, const std::string& path);
BpeCodec load_codec(const std::string& path);
void dump_vocab_tsv(const BpeCodec& codec, const std::string& path);

}  // namespace anchormt
