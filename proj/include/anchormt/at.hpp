#pragma once

#include <optional>
#include <string>
#include <vector>

#include "anchormt/bpe.hpp"
#include "anchormt/dictionary.hpp"
#include "anchormt/model.hpp"
#include "anchormt/noise.hpp"

namespace anchormt {

// The language whose surface forms anchors take. The target-language view
// anchors source sentences with target words and models both corpora in
// target-language space; the source-language view mirrors it.
struct ViewSpec {
  Lang pivot = Lang::Tgt;
};

struct ATConfig {
  int batch_size = 32;
  double denoise_weight = 1.0;
  int64_t max_steps = 2000;   // anchored-training rounds
  int64_t eval_every = 500;   // rounds between validation BLEU evaluations
  int patience = 5;           // evaluations without improvement before stopping
  double min_delta = 0.2;     // BLEU improvement threshold
  int biview_gen_batch_multiplier = 4;
  int64_t biview_max_rounds = 400;
  bool biview_denoise = true;
  int max_decode_len = 24;  // generation cap for pseudo sentences
  NoiseConfig noise;
  double lr = 3e-4;
  int64_t warmup_steps = 500;
  double clip_norm = 5.0;
  uint64_t seed = 1;
  bool quiet = false;

  void validate() const {
    if (batch_size < 1 || eval_every < 1 || patience < 1 || max_steps < 0 ||
        biview_gen_batch_multiplier < 1 || biview_max_rounds < 0 || max_decode_len < 1 ||
        denoise_weight < 0.0 || min_delta < 0.0)
      throw UsageError("invalid ATConfig");
    noise.validate();
  }
};

struct TrainLogEntry {
  int64_t step = 0;
  double bt_fwd = 0.0;
  double bt_bwd = 0.0;
  std::optional<double> denoise;
  std::optional<double> val_bleu;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  void append_jsonl(const std::string& path) const;
  std::string to_jsonl() const;
};

// Pre-encoded corpora of one view: anchored non-pivot side aligned 1:1 with
// its raw form, plus the raw pivot side.
struct ViewData {
  std::vector<IdSequence> anchored;      // non-pivot corpus, anchored
  std::vector<SentenceTokens> anchored_raw_text;  // same sentences, unanchored
  std::vector<IdSequence> raw;           // pivot corpus
  std::vector<SentenceTokens> raw_text;
  Lang anchored_lang = Lang::Src;
  Lang pivot_lang = Lang::Tgt;
};

ViewData build_view_data(const std::vector<SentenceTokens>& src_corpus,
                         const std::vector<SentenceTokens>& tgt_corpus,
                         const BilingualDictionary& dict, const ViewSpec& view,
                         const BpeCodec& codec);

// Heldout parallel sentences used only as a validation metric.
struct EvalSet {
  std::vector<SentenceTokens> input;  // sentences in the anchored language
  std::vector<SentenceTokens> reference;
};

struct RoundLosses {
  double bt_fwd = 0.0;  // training the anchored->pivot direction
  double bt_bwd = 0.0;  // training the pivot->anchored direction
  std::optional<double> denoise;
};

// One Fig. 1(a) round: generate pseudo pairs with the parameters frozen at
// round start, then the two back-translation steps and one denoising step
// per language.
RoundLosses at_round(SeqModelT<float>& model, const std::vector<IdSequence>& anchored_batch,
                     const std::vector<IdSequence>& raw_batch, const ATConfig& cfg,
                     const BpeSpecials& sp, num::AdamStateT<float>& opt, Rng& rng);

struct ATResult {
  SeqModelT<float> model;
  TrainLog log;
  double best_val_bleu = -1.0;
};

ATResult train_at(const ViewSpec& view, const std::vector<SentenceTokens>& src_corpus,
                  const std::vector<SentenceTokens>& tgt_corpus,
                  const BilingualDictionary& dict, const BpeCodec& codec,
                  const ATConfig& cfg, const ModelConfig& mcfg,
                  const EvalSet* validation = nullptr,
                  const SeqModelT<float>* init = nullptr);

struct BiviewResult {
  SeqModelT<float> model_src2tgt;  // target-language view model
  SeqModelT<float> model_tgt2src;  // source-language view model
  TrainLog log_fwd, log_bwd, log_combine;
};

BiviewResult train_biview(const std::vector<SentenceTokens>& src_corpus,
                          const std::vector<SentenceTokens>& tgt_corpus,
                          const BilingualDictionary& dict_fwd,
                          const BilingualDictionary& dict_bwd, const BpeCodec& codec,
                          const ATConfig& cfg, const ModelConfig& mcfg,
                          const EvalSet* val_fwd = nullptr, const EvalSet* val_bwd = nullptr,
                          const SeqModelT<float>* init_fwd = nullptr,
                          const SeqModelT<float>* init_bwd = nullptr);

// Test-time pipeline: anchor -> BPE -> greedy decode -> detokenize.
SentenceTokens translate(const SeqModelT<float>& model, const SentenceTokens& sentence,
                         const BilingualDictionary& dict, const BpeCodec& codec,
                         int max_out = 0);

std::vector<SentenceTokens> translate_batch(const SeqModelT<float>& model,
                                            const std::vector<SentenceTokens>& sentences,
                                            const BilingualDictionary& dict,
                                            const BpeCodec& codec, int max_out = 0,
                                            int batch_size = 64);

// Validation BLEU of the anchored->pivot direction on an EvalSet.
double eval_bleu_on(const SeqModelT<float>& model, const EvalSet& eval,
                    const BilingualDictionary& dict, const BpeCodec& codec);

}  // namespace anchormt
