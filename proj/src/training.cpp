#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "anchormt/acp.hpp"
#include "anchormt/at.hpp"
#include "anchormt/bleu.hpp"
#include "anchormt/decode.hpp"
#include "anchormt/errors.hpp"

namespace anchormt {

// ---------- log ----------

std::string TrainLog::to_jsonl() const {
  std::ostringstream out;
  out.precision(6);
  for (const auto& e : entries) {
    out << "{\"step\":" << e.step << ",\"bt_fwd\":" << e.bt_fwd << ",\"bt_bwd\":" << e.bt_bwd;
    if (e.denoise) out << ",\"denoise\":" << *e.denoise;
    if (e.val_bleu) out << ",\"val_bleu\":" << *e.val_bleu;
    out << "}\n";
  }
  return out.str();
}

void TrainLog::append_jsonl(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) throw DataError("cannot open log for write: " + path);
  out << to_jsonl();
}

// ---------- data plumbing ----------

ViewData build_view_data(const std::vector<SentenceTokens>& src_corpus,
                         const std::vector<SentenceTokens>& tgt_corpus,
                         const BilingualDictionary& dict, const ViewSpec& view,
                         const BpeCodec& codec) {
  if (src_corpus.empty() || tgt_corpus.empty())
    throw DataError("build_view_data: empty corpora");
  if (dict.to != view.pivot || dict.from != other_lang(view.pivot))
    throw UsageError("dictionary direction does not match the view pivot");

  ViewData data;
  data.pivot_lang = view.pivot;
  data.anchored_lang = other_lang(view.pivot);
  const auto& non_pivot = view.pivot == Lang::Tgt ? src_corpus : tgt_corpus;
  const auto& pivot = view.pivot == Lang::Tgt ? tgt_corpus : src_corpus;

  BpeEncoder enc(codec);
  int64_t hits = 0, total = 0;
  for (const auto& s : non_pivot) {
    SentenceTokens anchored = anchor_sentence(s, dict);
    for (bool f : anchored.anchor_mask) hits += f ? 1 : 0;
    total += static_cast<int64_t>(anchored.tokens.size());
    IdSequence ids = enc.encode(anchored);
    ids.lang = data.anchored_lang;
    data.anchored.push_back(std::move(ids));
    data.anchored_raw_text.push_back(s);
  }
  for (const auto& s : pivot) {
    IdSequence ids = enc.encode(s);
    ids.lang = data.pivot_lang;
    data.raw.push_back(std::move(ids));
    data.raw_text.push_back(s);
  }
  if (hits == 0)
    std::cerr << "[at] warning: dictionary covers 0 tokens; training degenerates toward "
                 "plain unsupervised MT\n";
  return data;
}

namespace {

struct BatchStream {
  std::vector<size_t> order;
  size_t pos = 0;
  Rng rng;

  BatchStream(size_t n, uint64_t seed, const char* name) : rng(make_stream(seed, name)) {
    order.resize(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::vector<size_t> next(size_t n) {
    std::vector<size_t> out;
    out.reserve(n);
    while (out.size() < n) {
      if (pos >= order.size()) {
        std::shuffle(order.begin(), order.end(), rng);
        pos = 0;
      }
      out.push_back(order[pos++]);
    }
    return out;
  }
};

std::vector<IdSequence> gather(const std::vector<IdSequence>& pool,
                               const std::vector<size_t>& idx) {
  std::vector<IdSequence> out;
  out.reserve(idx.size());
  for (size_t i : idx) out.push_back(pool[i]);
  return out;
}

// Wraps raw decoder output as IdSequences; an empty generation becomes a
// single unk so batches stay rectangular.
std::vector<IdSequence> as_sequences(std::vector<std::vector<int>> ids, Lang lang,
                                     const BpeSpecials& sp) {
  std::vector<IdSequence> out;
  out.reserve(ids.size());
  for (auto& row : ids) {
    if (row.empty()) row.push_back(sp.unk);
    out.emplace_back(std::move(row), lang);
  }
  return out;
}

double train_pair_step(SeqModelT<float>& model, const std::vector<IdSequence>& inputs,
                       const std::vector<IdSequence>& outputs, const BpeSpecials& sp,
                       num::AdamStateT<float>& opt, Rng& rng, double weight = 1.0) {
  PaddedBatch batch = make_padded_batch(inputs, outputs, sp, model.cfg.max_len);
  StepResult r = train_step(model, batch, sp, opt, &rng, weight);
  return r.loss;
}

double denoise_step(SeqModelT<float>& model, const std::vector<IdSequence>& batch,
                    const ATConfig& cfg, const BpeSpecials& sp,
                    num::AdamStateT<float>& opt, Rng& rng) {
  std::vector<IdSequence> corrupted;
  corrupted.reserve(batch.size());
  for (const auto& s : batch) corrupted.push_back(corrupt(s, cfg.noise, sp, rng));
  return train_pair_step(model, corrupted, batch, sp, opt, rng, cfg.denoise_weight);
}

num::AdamStateT<float> make_opt(const ATConfig& cfg) {
  num::AdamStateT<float> opt;
  opt.lr = cfg.lr;
  opt.warmup_steps = cfg.warmup_steps;
  opt.clip_norm = cfg.clip_norm;
  return opt;
}

}  // namespace

RoundLosses at_round(SeqModelT<float>& model, const std::vector<IdSequence>& anchored_batch,
                     const std::vector<IdSequence>& raw_batch, const ATConfig& cfg,
                     const BpeSpecials& sp, num::AdamStateT<float>& opt, Rng& rng) {
  if (anchored_batch.empty() || raw_batch.empty())
    throw UsageError("at_round: empty batch");
  Lang al = anchored_batch[0].lang, pl = raw_batch[0].lang;

  // Generation happens before any update, so both pseudo batches come from
  // the parameters frozen at round start.
  auto pseudo_pivot = as_sequences(
      decode_greedy(model, sp, anchored_batch, al, pl, cfg.max_decode_len), pl, sp);
  auto pseudo_anchored = as_sequences(
      decode_greedy(model, sp, raw_batch, pl, al, cfg.max_decode_len), al, sp);

  RoundLosses losses;
  losses.bt_bwd = train_pair_step(model, pseudo_pivot, anchored_batch, sp, opt, rng);
  losses.bt_fwd = train_pair_step(model, pseudo_anchored, raw_batch, sp, opt, rng);
  if (cfg.denoise_weight > 0.0) {
    double d1 = denoise_step(model, anchored_batch, cfg, sp, opt, rng);
    double d2 = denoise_step(model, raw_batch, cfg, sp, opt, rng);
    losses.denoise = 0.5 * (d1 + d2);
  }
  return losses;
}

double eval_bleu_on(const SeqModelT<float>& model, const EvalSet& eval,
                    const BilingualDictionary& dict, const BpeCodec& codec) {
  auto hyp = translate_batch(model, eval.input, dict, codec);
  return bleu(hyp, eval.reference).bleu;
}

ATResult train_at(const ViewSpec& view, const std::vector<SentenceTokens>& src_corpus,
                  const std::vector<SentenceTokens>& tgt_corpus,
                  const BilingualDictionary& dict, const BpeCodec& codec,
                  const ATConfig& cfg, const ModelConfig& mcfg_in,
                  const EvalSet* validation, const SeqModelT<float>* init) {
  cfg.validate();
  ViewData data = build_view_data(src_corpus, tgt_corpus, dict, view, codec);

  ModelConfig mcfg = mcfg_in;
  mcfg.vocab_size = codec.vocab_size();
  ATResult res{init ? init->clone() : init_model<float>(mcfg, cfg.seed), {}, -1.0};
  if (cfg.max_steps == 0) return res;

  auto& model = res.model;
  num::AdamStateT<float> opt = make_opt(cfg);
  Rng rng = make_stream(cfg.seed, "at/train");
  BatchStream anchored_stream(data.anchored.size(), cfg.seed, "at/shuffle/anchored");
  BatchStream raw_stream(data.raw.size(), cfg.seed, "at/shuffle/raw");

  SeqModelT<float> best_model = model.clone();
  double best = -1.0;
  int evals_since_improve = 0;
  for (int64_t round = 1; round <= cfg.max_steps; ++round) {
    auto anchored_batch = gather(data.anchored, anchored_stream.next(cfg.batch_size));
    auto raw_batch = gather(data.raw, raw_stream.next(cfg.batch_size));
    RoundLosses losses = at_round(model, anchored_batch, raw_batch, cfg, codec.specials, opt, rng);
    TrainLogEntry entry;
    entry.step = round;
    entry.bt_fwd = losses.bt_fwd;
    entry.bt_bwd = losses.bt_bwd;
    entry.denoise = losses.denoise;
    bool stop = false;
    if (validation && (round % cfg.eval_every == 0 || round == cfg.max_steps)) {
      double b = eval_bleu_on(model, *validation, dict, codec);
      entry.val_bleu = b;
      if (!cfg.quiet)
        std::cerr << "[at] round " << round << " val_bleu " << b << " (best " << best << ")\n";
      if (b > best + cfg.min_delta) {
        best = b;
        best_model = model.clone();
        evals_since_improve = 0;
      } else {
        if (b > best) {
          best = b;
          best_model = model.clone();
        }
        ++evals_since_improve;
        if (evals_since_improve >= cfg.patience) stop = true;
      }
    }
    res.log.entries.push_back(entry);
    if (stop) break;
  }
  if (validation && best >= 0.0) {
    res.model = std::move(best_model);
    res.best_val_bleu = best;
  }
  return res;
}

namespace {

// Re-anchors machine-generated sentences through the dictionary, as the
// dashed arrows of the bi-view combination do.
std::vector<IdSequence> reanchor(const std::vector<IdSequence>& pseudo,
                                 const BilingualDictionary& dict, const BpeCodec& codec,
                                 BpeEncoder& enc) {
  std::vector<IdSequence> out;
  out.reserve(pseudo.size());
  for (const auto& p : pseudo) {
    SentenceTokens text = detokenize(codec, p);
    text.lang = p.lang;
    SentenceTokens anchored = anchor_sentence(text, dict);
    IdSequence ids = enc.encode(anchored);
    ids.lang = p.lang;
    if (ids.ids.empty()) ids.ids.push_back(codec.specials.unk);
    if (ids.anchor_mask.size() != ids.ids.size())
      ids.anchor_mask.resize(ids.ids.size(), false);
    out.push_back(std::move(ids));
  }
  return out;
}

double train_chunked(SeqModelT<float>& model, const std::vector<IdSequence>& inputs,
                     const std::vector<IdSequence>& outputs, int chunk,
                     const BpeSpecials& sp, num::AdamStateT<float>& opt, Rng& rng) {
  double total = 0.0;
  int n = 0;
  for (size_t base = 0; base < inputs.size(); base += static_cast<size_t>(chunk)) {
    size_t end = std::min(inputs.size(), base + static_cast<size_t>(chunk));
    std::vector<IdSequence> in(inputs.begin() + static_cast<int64_t>(base),
                               inputs.begin() + static_cast<int64_t>(end));
    std::vector<IdSequence> out(outputs.begin() + static_cast<int64_t>(base),
                                outputs.begin() + static_cast<int64_t>(end));
    total += train_pair_step(model, in, out, sp, opt, rng);
    ++n;
  }
  return n ? total / n : 0.0;
}

}  // namespace

BiviewResult train_biview(const std::vector<SentenceTokens>& src_corpus,
                          const std::vector<SentenceTokens>& tgt_corpus,
                          const BilingualDictionary& dict_fwd,
                          const BilingualDictionary& dict_bwd, const BpeCodec& codec,
                          const ATConfig& cfg, const ModelConfig& mcfg,
                          const EvalSet* val_fwd, const EvalSet* val_bwd,
                          const SeqModelT<float>* init_fwd,
                          const SeqModelT<float>* init_bwd) {
  cfg.validate();
  // Phase 1: both mono views, independently.
  ATResult at_t = train_at(ViewSpec{Lang::Tgt}, src_corpus, tgt_corpus, dict_fwd, codec,
                           cfg, mcfg, val_fwd, init_fwd);
  ATResult at_s = train_at(ViewSpec{Lang::Src}, src_corpus, tgt_corpus, dict_bwd, codec,
                           cfg, mcfg, val_bwd, init_bwd);

  BiviewResult res{std::move(at_t.model), std::move(at_s.model), std::move(at_t.log),
                   std::move(at_s.log), {}};
  if (cfg.biview_max_rounds == 0) return res;

  ViewData data_t = build_view_data(src_corpus, tgt_corpus, dict_fwd, ViewSpec{Lang::Tgt},
                                    codec);
  ViewData data_s = build_view_data(src_corpus, tgt_corpus, dict_bwd, ViewSpec{Lang::Src},
                                    codec);
  const BpeSpecials sp = codec.specials;
  BpeEncoder enc(codec);

  auto& m_t = res.model_src2tgt;  // trains anchored-src -> tgt (solid box)
  auto& m_s = res.model_tgt2src;  // trains anchored-tgt -> src (dashed box)
  num::AdamStateT<float> opt_t = make_opt(cfg), opt_s = make_opt(cfg);
  Rng rng = make_stream(cfg.seed, "biview/train");
  const size_t gen_n = static_cast<size_t>(cfg.batch_size) * cfg.biview_gen_batch_multiplier;
  BatchStream tgt_raw_stream(data_t.raw.size(), cfg.seed, "biview/tgt_raw");
  BatchStream tgt_anch_stream(data_s.anchored.size(), cfg.seed, "biview/tgt_anch");
  BatchStream src_raw_stream(data_s.raw.size(), cfg.seed, "biview/src_raw");
  BatchStream src_anch_stream(data_t.anchored.size(), cfg.seed, "biview/src_anch");

  double best = -1.0;
  SeqModelT<float> best_t = m_t.clone(), best_s = m_s.clone();
  int evals_since_improve = 0;
  const int64_t eval_every = std::max<int64_t>(1, cfg.eval_every / 10);

  for (int64_t round = 1; round <= cfg.biview_max_rounds; ++round) {
    // Solid box: anchored-src -> tgt, pseudo pairs from both views.
    auto idx_t = tgt_raw_stream.next(gen_n);
    auto tgt_batch = gather(data_t.raw, idx_t);
    auto pseudo_anch_src = as_sequences(
        decode_greedy(m_t, sp, tgt_batch, Lang::Tgt, Lang::Src, cfg.max_decode_len),
        Lang::Src, sp);
    auto idx_ta = tgt_anch_stream.next(gen_n);
    auto tgt_anch_batch = gather(data_s.anchored, idx_ta);
    auto pseudo_src = as_sequences(
        decode_greedy(m_s, sp, tgt_anch_batch, Lang::Tgt, Lang::Src, cfg.max_decode_len),
        Lang::Src, sp);
    auto pseudo_src_anch = reanchor(pseudo_src, dict_fwd, codec, enc);
    std::vector<IdSequence> tgt_out_for_anch;
    for (size_t i : idx_ta) tgt_out_for_anch.push_back(data_t.raw[i]);

    double fwd1 = train_chunked(m_t, pseudo_anch_src, tgt_batch, cfg.batch_size, sp, opt_t, rng);
    double fwd2 =
        train_chunked(m_t, pseudo_src_anch, tgt_out_for_anch, cfg.batch_size, sp, opt_t, rng);

    // Dashed box: anchored-tgt -> src, pseudo pairs from both views.
    auto idx_s = src_raw_stream.next(gen_n);
    auto src_batch = gather(data_s.raw, idx_s);
    auto pseudo_anch_tgt = as_sequences(
        decode_greedy(m_s, sp, src_batch, Lang::Src, Lang::Tgt, cfg.max_decode_len),
        Lang::Tgt, sp);
    auto idx_sa = src_anch_stream.next(gen_n);
    auto src_anch_batch = gather(data_t.anchored, idx_sa);
    auto pseudo_tgt = as_sequences(
        decode_greedy(m_t, sp, src_anch_batch, Lang::Src, Lang::Tgt, cfg.max_decode_len),
        Lang::Tgt, sp);
    auto pseudo_tgt_anch = reanchor(pseudo_tgt, dict_bwd, codec, enc);
    std::vector<IdSequence> src_out_for_anch;
    for (size_t i : idx_sa) src_out_for_anch.push_back(data_s.raw[i]);

    double bwd1 = train_chunked(m_s, pseudo_anch_tgt, src_batch, cfg.batch_size, sp, opt_s, rng);
    double bwd2 =
        train_chunked(m_s, pseudo_tgt_anch, src_out_for_anch, cfg.batch_size, sp, opt_s, rng);

    TrainLogEntry entry;
    entry.step = round;
    entry.bt_fwd = 0.5 * (fwd1 + fwd2);
    entry.bt_bwd = 0.5 * (bwd1 + bwd2);

    if (cfg.biview_denoise && cfg.denoise_weight > 0.0) {
      auto da = gather(data_t.anchored, src_anch_stream.next(cfg.batch_size));
      auto dt = gather(data_t.raw, tgt_raw_stream.next(cfg.batch_size));
      double d1 = denoise_step(m_t, da, cfg, sp, opt_t, rng);
      double d2 = denoise_step(m_t, dt, cfg, sp, opt_t, rng);
      auto da2 = gather(data_s.anchored, tgt_anch_stream.next(cfg.batch_size));
      auto ds = gather(data_s.raw, src_raw_stream.next(cfg.batch_size));
      double d3 = denoise_step(m_s, da2, cfg, sp, opt_s, rng);
      double d4 = denoise_step(m_s, ds, cfg, sp, opt_s, rng);
      entry.denoise = 0.25 * (d1 + d2 + d3 + d4);
    }

    bool stop = false;
    if (val_fwd && (round % eval_every == 0 || round == cfg.biview_max_rounds)) {
      double b = eval_bleu_on(m_t, *val_fwd, dict_fwd, codec);
      entry.val_bleu = b;
      if (!cfg.quiet)
        std::cerr << "[biview] round " << round << " val_bleu " << b << " (best " << best
                  << ")\n";
      if (b > best + cfg.min_delta) {
        best = b;
        best_t = m_t.clone();
        best_s = m_s.clone();
        evals_since_improve = 0;
      } else {
        if (b > best) {
          best = b;
          best_t = m_t.clone();
          best_s = m_s.clone();
        }
        ++evals_since_improve;
        if (evals_since_improve >= cfg.patience) stop = true;
      }
    }
    res.log_combine.entries.push_back(entry);
    if (stop) break;
  }
  if (val_fwd && best >= 0.0) {
    res.model_src2tgt = std::move(best_t);
    res.model_tgt2src = std::move(best_s);
  }
  return res;
}

// ---------- test-time pipeline ----------

std::vector<SentenceTokens> translate_batch(const SeqModelT<float>& model,
                                            const std::vector<SentenceTokens>& sentences,
                                            const BilingualDictionary& dict,
                                            const BpeCodec& codec, int max_out,
                                            int batch_size) {
  std::vector<SentenceTokens> out(sentences.size());
  BpeEncoder enc(codec);
  std::vector<IdSequence> batch;
  std::vector<size_t> slots;
  auto flush = [&]() {
    if (batch.empty()) return;
    int cap = max_out;
    if (cap <= 0) {
      size_t longest = 0;
      for (const auto& b : batch) longest = std::max(longest, b.ids.size());
      cap = static_cast<int>(longest) + 8;
    }
    auto decoded = decode_greedy(model, codec.specials, batch, dict.from, dict.to, cap);
    for (size_t i = 0; i < decoded.size(); ++i) {
      IdSequence ids(std::move(decoded[i]), dict.to);
      out[slots[i]] = detokenize(codec, ids);
      out[slots[i]].lang = dict.to;
    }
    batch.clear();
    slots.clear();
  };
  for (size_t i = 0; i < sentences.size(); ++i) {
    if (sentences[i].tokens.empty()) {
      out[i].lang = dict.to;
      continue;
    }
    SentenceTokens anchored = anchor_sentence(sentences[i], dict);
    IdSequence ids = enc.encode(anchored);
    ids.lang = dict.from;
    if (ids.ids.empty()) ids.ids.assign(1, codec.specials.unk);
    if (ids.anchor_mask.size() != ids.ids.size()) ids.anchor_mask.resize(ids.ids.size());
    batch.push_back(std::move(ids));
    slots.push_back(i);
    if (static_cast<int>(batch.size()) >= batch_size) flush();
  }
  flush();
  return out;
}

SentenceTokens translate(const SeqModelT<float>& model, const SentenceTokens& sentence,
                         const BilingualDictionary& dict, const BpeCodec& codec,
                         int max_out) {
  return translate_batch(model, {sentence}, dict, codec, max_out, 1)[0];
}

// ---------- ACP ----------

std::vector<IdSequence> build_acp_corpus(const std::vector<SentenceTokens>& src_corpus,
                                         const std::vector<SentenceTokens>& tgt_corpus,
                                         const BilingualDictionary& dict,
                                         const ViewSpec& view, const BpeCodec& codec,
                                         uint64_t seed) {
  ViewData data = build_view_data(src_corpus, tgt_corpus, dict, view, codec);
  std::vector<IdSequence> corpus;
  corpus.reserve(data.anchored.size() + data.raw.size());
  for (auto& s : data.anchored) corpus.push_back(std::move(s));
  for (auto& s : data.raw) corpus.push_back(std::move(s));
  Rng rng = make_stream(seed, "acp/shuffle");
  std::shuffle(corpus.begin(), corpus.end(), rng);
  return corpus;
}

namespace {

struct MlmBatch {
  std::vector<int> inputs;   // B*T with masking applied
  std::vector<int> targets;  // B*T, -1 at unselected positions
  std::vector<int> lens;
  int B = 0, T = 0;
  Lang lang = Lang::Src;
};

MlmBatch make_mlm_batch(const std::vector<const IdSequence*>& seqs, const AcpConfig& cfg,
                        const BpeSpecials& sp, int vocab_size, int max_len, Rng& rng) {
  MlmBatch b;
  b.B = static_cast<int>(seqs.size());
  b.lang = seqs[0]->lang;
  for (const auto* s : seqs)
    b.T = std::max(b.T, std::min(static_cast<int>(s->ids.size()), max_len - 1) + 1);
  b.inputs.assign(static_cast<size_t>(b.B) * b.T, sp.pad);
  b.targets.assign(static_cast<size_t>(b.B) * b.T, -1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> random_id(5, vocab_size - 1);
  for (int i = 0; i < b.B; ++i) {
    const auto& ids = seqs[static_cast<size_t>(i)]->ids;
    int n = std::min(static_cast<int>(ids.size()), max_len - 1);
    b.lens.push_back(n + 1);
    std::vector<int> selected;
    for (int j = 0; j < n; ++j) {
      b.inputs[static_cast<size_t>(i) * b.T + j] = ids[static_cast<size_t>(j)];
      if (unit(rng) < cfg.mask_prob) selected.push_back(j);
    }
    b.inputs[static_cast<size_t>(i) * b.T + n] = sp.eos;
    if (selected.empty()) {
      // always mask at least one position
      std::uniform_int_distribution<int> pick(0, n - 1);
      selected.push_back(pick(rng));
    }
    for (int j : selected) {
      size_t at = static_cast<size_t>(i) * b.T + j;
      b.targets[at] = b.inputs[at];
      double r = unit(rng);
      if (r < cfg.split_mask)
        b.inputs[at] = sp.mask;
      else if (r < cfg.split_mask + cfg.split_random)
        b.inputs[at] = random_id(rng);
      // else keep
    }
  }
  return b;
}

}  // namespace

AcpResult pretrain_mlm(const ModelConfig& mcfg_in, const std::vector<IdSequence>& corpus,
                       const AcpConfig& cfg, const BpeSpecials& sp) {
  cfg.validate();
  if (corpus.empty()) throw DataError("pretrain_mlm: empty corpus");
  ModelConfig mcfg = mcfg_in;
  AcpResult res{init_model<float>(mcfg, cfg.seed), {}};
  auto& model = res.model;

  num::AdamStateT<float> opt;
  opt.lr = cfg.lr;
  opt.warmup_steps = cfg.warmup_steps;
  opt.clip_norm = cfg.clip_norm;
  auto params = model.parameters();
  Rng rng = make_stream(cfg.seed, "acp/train");
  BatchStream stream(corpus.size(), cfg.seed, "acp/batches");

  for (int64_t step = 1; step <= cfg.steps; ++step) {
    auto idx = stream.next(static_cast<size_t>(cfg.batch_size));
    std::array<std::vector<const IdSequence*>, 2> groups;
    for (size_t i : idx) {
      const IdSequence& s = corpus[i];
      if (!s.ids.empty()) groups[static_cast<size_t>(s.lang)].push_back(&s);
    }
    num::TapeT<float> tape;
    ForwardCtx<float> ctx{tape, &rng, model.cfg.dropout};
    num::NodeRefT<float> total;
    int64_t total_count = 0;
    std::vector<std::pair<num::NodeRefT<float>, int64_t>> parts;
    for (auto& g : groups) {
      if (g.empty()) continue;
      MlmBatch b = make_mlm_batch(g, cfg, sp, model.cfg.vocab_size, model.cfg.max_len, rng);
      auto mask = key_padding_mask<float>(b.lens, b.B, b.T, b.T);
      auto states = encoder_forward(ctx, model, b.inputs, b.B, b.T, b.lang, mask);
      auto logits = output_logits(ctx, model, states.back());
      int64_t count = 0;
      for (int t : b.targets) count += t >= 0 ? 1 : 0;
      parts.push_back({tape.cross_entropy(logits, b.targets, -1), count});
      total_count += count;
    }
    if (parts.empty()) continue;
    double value = 0.0;
    for (auto& [node, count] : parts) {
      value += node->value.data()[0] * static_cast<double>(count) / total_count;
      auto weighted = tape.scale(node, static_cast<float>(static_cast<double>(count) / total_count));
      total = total ? tape.add(total, weighted) : weighted;
    }
    try {
      tape.backward(total);
      adam_step(params, opt);
    } catch (const NumericError&) {
      for (auto& p : params) p->zero_grad();
    }
    tape.clear();
    res.losses.push_back(value);
    if (!cfg.quiet && step % 200 == 0)
      std::cerr << "[acp] step " << step << " mlm_loss " << value << "\n";
  }
  return res;
}

void init_at_from_acp(SeqModelT<float>& at_model, const SeqModelT<float>& acp_model) {
  std::unordered_map<std::string, num::NodeRefT<float>> pretrained;
  for (auto& [name, node] : acp_model.named_params()) pretrained.emplace(name, node);
  std::string problems;
  for (auto& [name, node] : at_model.named_params()) {
    bool wanted = name == "tok_emb" || name == "lang_emb" || name.rfind("enc.", 0) == 0;
    if (!wanted) continue;
    auto it = pretrained.find(name);
    if (it == pretrained.end()) {
      problems += (problems.empty() ? "" : ", ") + name + " (missing)";
      continue;
    }
    if (it->second->value.shape != node->value.shape) {
      problems += (problems.empty() ? "" : ", ") + name + " (shape " +
                  num::shape_str(it->second->value.shape) + " vs " +
                  num::shape_str(node->value.shape) + ")";
      continue;
    }
    std::copy(it->second->value.data(), it->second->value.data() + node->value.numel(),
              node->value.data());
  }
  if (!problems.empty())
    throw DataError("init_at_from_acp: incompatible tensors: " + problems);
}

}  // namespace anchormt
