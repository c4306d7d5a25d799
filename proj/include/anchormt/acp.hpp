#pragma once

#include <vector>

#include "anchormt/at.hpp"

namespace anchormt {

struct AcpConfig {
  double mask_prob = 0.15;
  double split_mask = 0.8;    // replaced by <mask>
  double split_random = 0.1;  // replaced by a random vocab id
  double split_keep = 0.1;    // left unchanged
  int64_t steps = 2000;
  int batch_size = 32;
  ViewSpec view;
  double lr = 3e-4;
  int64_t warmup_steps = 500;
  double clip_norm = 5.0;
  uint64_t seed = 1;
  bool quiet = false;

  void validate() const {
    if (!(mask_prob > 0.0 && mask_prob < 1.0)) throw UsageError("acp: mask_prob in (0,1)");
    if (std::abs(split_mask + split_random + split_keep - 1.0) > 1e-9)
      throw UsageError("acp: mask split must sum to 1");
    if (steps < 0 || batch_size < 1) throw UsageError("acp: bad steps/batch");
  }
};

// Anchored non-pivot corpus plus the genuine pivot corpus, concatenated and
// shuffled deterministically.
std::vector<IdSequence> build_acp_corpus(const std::vector<SentenceTokens>& src_corpus,
                                         const std::vector<SentenceTokens>& tgt_corpus,
                                         const BilingualDictionary& dict,
                                         const ViewSpec& view, const BpeCodec& codec,
                                         uint64_t seed);

struct AcpResult {
  SeqModelT<float> model;  // full model; only encoder + embeddings trained
  std::vector<double> losses;
};

AcpResult pretrain_mlm(const ModelConfig& mcfg, const std::vector<IdSequence>& corpus,
                       const AcpConfig& cfg, const BpeSpecials& sp);

// Copies embeddings and the whole encoder stack (shared and both private
// layers) from the pretrained model. The decoder keeps its fresh init except
// for the tied embedding table.
void init_at_from_acp(SeqModelT<float>& at_model, const SeqModelT<float>& acp_model);

}  // namespace anchormt
