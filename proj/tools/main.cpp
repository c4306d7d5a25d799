#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

#include "anchormt/acp.hpp"
#include "anchormt/at.hpp"
#include "anchormt/bleu.hpp"
#include "anchormt/config.hpp"
#include "anchormt/corpus.hpp"
#include "anchormt/decode.hpp"
#include "anchormt/errors.hpp"
#include "anchormt/evaluation.hpp"
#include "anchormt/model_io.hpp"
#include "anchormt/swet.hpp"
#include "anchormt/synth.hpp"

using namespace anchormt;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<uint64_t> seed;
  std::optional<int> jobs;
  std::string out_path;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file with flat dotted keys");
    cmd->add_option("--set", sets, "override config key, e.g. --set at.lr=0.0003");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--jobs", jobs, "worker threads for numeric kernels");
    cmd->add_option("--out", out_path, "write the JSON result here instead of stdout");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg.apply_json_file(config_path);
    for (const auto& kv : sets) {
      auto eq = kv.find('=');
      if (eq == std::string::npos) throw UsageError("--set expects key=value: " + kv);
      cfg.apply_kv(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    if (jobs) cfg.jobs = *jobs;
    cfg.finalize();
#ifdef _OPENMP
    omp_set_num_threads(std::max(1, cfg.jobs));
#endif
    return cfg;
  }

  void emit(const ExperimentConfig& cfg, const std::string& command, json result) const {
    json out;
    out["command"] = command;
    out["config"] = json::parse(cfg.to_json());
    out["result"] = std::move(result);
    if (out_path.empty()) {
      std::cout << out.dump(1, '\t') << std::endl;
    } else {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw DataError("cannot open --out file: " + out_path);
      f << out.dump(1, '\t') << '\n';
    }
  }
};

std::optional<int64_t> max_sentences_opt(const ExperimentConfig& cfg) {
  if (cfg.corpus_max_sentences <= 0) return std::nullopt;
  return cfg.corpus_max_sentences;
}

BilingualDictionary load_dict_resolved(const std::string& path, Lang from, Lang to,
                                       const std::string& freq_corpus_path, bool lowercase) {
  RawDictionary raw = load_raw_dictionary(path, from, to);
  if (raw.dropped_multiword > 0)
    std::cerr << "[dict] warning: dropped " << raw.dropped_multiword
              << " multi-word entries from " << path << "\n";
  FreqTable freq;
  if (!freq_corpus_path.empty()) freq = build_freq_table(load_corpus(freq_corpus_path, to));
  return resolve_senses(raw, freq, lowercase);
}

std::vector<std::pair<std::string, Lang>> load_word_list(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open word list: " + path);
  std::vector<std::pair<std::string, Lang>> out;
  std::string word, lang;
  while (in >> word >> lang) {
    if (lang != "src" && lang != "tgt")
      throw DataError("word list lang must be src or tgt, got: " + lang);
    out.push_back({word, lang == "src" ? Lang::Src : Lang::Tgt});
  }
  return out;
}

json bleu_json(const BleuReport& r) {
  return json{{"bleu", r.bleu},
              {"precisions", r.ngram_precisions},
              {"brevity_penalty", r.brevity_penalty},
              {"hyp_length", r.hyp_length},
              {"ref_length", r.ref_length}};
}

EvalSet load_eval_set(const std::string& src_path, const std::string& ref_path, Lang in_lang,
                      Lang ref_lang) {
  EvalSet eval;
  eval.input = load_corpus(src_path, in_lang);
  eval.reference = load_corpus(ref_path, ref_lang);
  if (eval.input.size() != eval.reference.size())
    throw DataError("validation corpora differ in sentence count");
  return eval;
}

Lang parse_lang(const std::string& s) {
  if (s == "src") return Lang::Src;
  if (s == "tgt") return Lang::Tgt;
  throw UsageError("language must be src or tgt, got: " + s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dictionary-anchored machine translation toolkit"};
  app.require_subcommand(1);

  auto* synth_cmd = app.add_subcommand("synth-gen", "generate a synthetic cipher language pair");
  Common synth_common;
  synth_common.attach(synth_cmd);
  std::string synth_dir;
  synth_cmd->add_option("--out-dir", synth_dir, "output directory")->required();

  auto* bpe_cmd = app.add_subcommand("learn-bpe", "learn a joint BPE codec on both corpora");
  Common bpe_common;
  bpe_common.attach(bpe_cmd);
  std::string bpe_src, bpe_tgt, bpe_dict, bpe_out, bpe_vocab_tsv;
  bpe_cmd->add_option("--src", bpe_src)->required();
  bpe_cmd->add_option("--tgt", bpe_tgt)->required();
  bpe_cmd->add_option("--dict", bpe_dict, "dictionary whose target words must stay encodable");
  bpe_cmd->add_option("--codec-out", bpe_out)->required();
  bpe_cmd->add_option("--vocab-tsv", bpe_vocab_tsv, "also dump the vocabulary as TSV");

  auto* apply_cmd = app.add_subcommand("apply-bpe", "segment a corpus with a learned codec");
  Common apply_common;
  apply_common.attach(apply_cmd);
  std::string apply_codec, apply_in, apply_out, apply_lang = "src";
  apply_cmd->add_option("--codec", apply_codec)->required();
  apply_cmd->add_option("--in", apply_in)->required();
  apply_cmd->add_option("--out-file", apply_out)->required();
  apply_cmd->add_option("--lang", apply_lang, "src|tgt");

  auto* stats_cmd = app.add_subcommand("dict-stats", "dictionary entry count and token coverage");
  Common stats_common;
  stats_common.attach(stats_cmd);
  std::string stats_dict, stats_corpus, stats_tgt_corpus;
  stats_cmd->add_option("--dict", stats_dict)->required();
  stats_cmd->add_option("--corpus", stats_corpus, "source-side corpus")->required();
  stats_cmd->add_option("--tgt-corpus", stats_tgt_corpus, "target corpus for sense resolution");

  auto* anchor_cmd = app.add_subcommand("anchor", "apply the anchoring transform to a corpus");
  Common anchor_common;
  anchor_common.attach(anchor_cmd);
  std::string anchor_dict, anchor_in, anchor_out, anchor_tgt_corpus;
  anchor_cmd->add_option("--dict", anchor_dict)->required();
  anchor_cmd->add_option("--in", anchor_in)->required();
  anchor_cmd->add_option("--out-file", anchor_out)->required();
  anchor_cmd->add_option("--tgt-corpus", anchor_tgt_corpus, "target corpus for sense resolution");

  auto* acp_cmd = app.add_subcommand("pretrain-acp", "anchored cross-lingual MLM pretraining");
  Common acp_common;
  acp_common.attach(acp_cmd);
  std::string acp_src, acp_tgt, acp_dict, acp_codec, acp_out, acp_view = "tgt";
  acp_cmd->add_option("--src", acp_src)->required();
  acp_cmd->add_option("--tgt", acp_tgt)->required();
  acp_cmd->add_option("--dict", acp_dict, "empty disables anchoring (plain XLM-style MLM)");
  acp_cmd->add_option("--codec", acp_codec)->required();
  acp_cmd->add_option("--model-out", acp_out)->required();
  acp_cmd->add_option("--view", acp_view, "pivot language: src|tgt");

  auto* at_cmd = app.add_subcommand("train-at", "anchored training, one view");
  Common at_common;
  at_common.attach(at_cmd);
  std::string at_src, at_tgt, at_dict, at_codec, at_out, at_view = "tgt";
  std::string at_valid_in, at_valid_ref, at_init, at_init_acp, at_log;
  bool at_no_anchor = false;
  at_cmd->add_option("--src", at_src)->required();
  at_cmd->add_option("--tgt", at_tgt)->required();
  at_cmd->add_option("--dict", at_dict);
  at_cmd->add_flag("--no-anchor", at_no_anchor, "empty dictionary ablation");
  at_cmd->add_option("--codec", at_codec)->required();
  at_cmd->add_option("--model-out", at_out)->required();
  at_cmd->add_option("--view", at_view, "pivot language: src|tgt");
  at_cmd->add_option("--valid-src", at_valid_in, "validation inputs (anchored language)");
  at_cmd->add_option("--valid-ref", at_valid_ref, "validation references (pivot language)");
  at_cmd->add_option("--init", at_init, "warm-start checkpoint");
  at_cmd->add_option("--init-acp", at_init_acp, "ACP encoder checkpoint");
  at_cmd->add_option("--log", at_log, "JSONL training log path");

  auto* bv_cmd = app.add_subcommand("train-biview", "bi-view anchored training");
  Common bv_common;
  bv_common.attach(bv_cmd);
  std::string bv_src, bv_tgt, bv_dict_fwd, bv_dict_bwd, bv_codec, bv_out_fwd, bv_out_bwd;
  std::string bv_valid_src, bv_valid_ref, bv_valid_src_bwd, bv_valid_ref_bwd;
  std::string bv_init_fwd, bv_init_bwd, bv_log;
  bv_cmd->add_option("--src", bv_src)->required();
  bv_cmd->add_option("--tgt", bv_tgt)->required();
  bv_cmd->add_option("--dict-fwd", bv_dict_fwd, "src->tgt dictionary")->required();
  bv_cmd->add_option("--dict-bwd", bv_dict_bwd, "tgt->src dictionary")->required();
  bv_cmd->add_option("--codec", bv_codec)->required();
  bv_cmd->add_option("--model-out-fwd", bv_out_fwd)->required();
  bv_cmd->add_option("--model-out-bwd", bv_out_bwd)->required();
  bv_cmd->add_option("--valid-src", bv_valid_src);
  bv_cmd->add_option("--valid-ref", bv_valid_ref);
  bv_cmd->add_option("--valid-src-bwd", bv_valid_src_bwd);
  bv_cmd->add_option("--valid-ref-bwd", bv_valid_ref_bwd);
  bv_cmd->add_option("--init-fwd", bv_init_fwd, "ACP checkpoint for the target-language view");
  bv_cmd->add_option("--init-bwd", bv_init_bwd, "ACP checkpoint for the source-language view");
  bv_cmd->add_option("--log", bv_log, "JSONL combination-phase log path");

  auto* tr_cmd = app.add_subcommand("translate", "anchored test-time decoding");
  Common tr_common;
  tr_common.attach(tr_cmd);
  std::string tr_model, tr_codec, tr_dict, tr_in, tr_out_file, tr_tgt_corpus;
  bool tr_no_anchor = false;
  tr_cmd->add_option("--model", tr_model)->required();
  tr_cmd->add_option("--codec", tr_codec)->required();
  tr_cmd->add_option("--dict", tr_dict);
  tr_cmd->add_flag("--no-anchor", tr_no_anchor, "skip the anchoring preprocessing");
  tr_cmd->add_option("--in", tr_in)->required();
  tr_cmd->add_option("--out-file", tr_out_file)->required();
  tr_cmd->add_option("--tgt-corpus", tr_tgt_corpus, "target corpus for sense resolution");

  auto* wbw_cmd = app.add_subcommand("baseline-wbw", "word-by-word dictionary translation");
  Common wbw_common;
  wbw_common.attach(wbw_cmd);
  std::string wbw_dict, wbw_in, wbw_out, wbw_tgt_corpus;
  wbw_cmd->add_option("--dict", wbw_dict)->required();
  wbw_cmd->add_option("--in", wbw_in)->required();
  wbw_cmd->add_option("--out-file", wbw_out)->required();
  wbw_cmd->add_option("--tgt-corpus", wbw_tgt_corpus, "target corpus for sense resolution");

  auto* swet_cmd = app.add_subcommand(
      "baseline-swet", "supervised embedding transformation (orthogonal Procrustes)");
  Common swet_common;
  swet_common.attach(swet_cmd);
  std::string swet_src_corpus, swet_tgt_corpus, swet_src_emb, swet_tgt_emb, swet_dict;
  std::string swet_out_map, swet_out_src_emb, swet_out_tgt_emb, swet_eval_dict;
  swet_cmd->add_option("--src-corpus", swet_src_corpus, "train source embeddings here");
  swet_cmd->add_option("--tgt-corpus", swet_tgt_corpus, "train target embeddings here");
  swet_cmd->add_option("--src-emb", swet_src_emb, "or load pre-trained source embeddings");
  swet_cmd->add_option("--tgt-emb", swet_tgt_emb, "or load pre-trained target embeddings");
  swet_cmd->add_option("--dict", swet_dict, "supervision dictionary")->required();
  swet_cmd->add_option("--map-out", swet_out_map, "write the d x d map as JSON");
  swet_cmd->add_option("--mapped-src-out", swet_out_src_emb, "write mapped source embeddings");
  swet_cmd->add_option("--tgt-emb-out", swet_out_tgt_emb, "write target embeddings");
  swet_cmd->add_option("--eval-dict", swet_eval_dict, "test dictionary for precision@k");

  auto* bleu_cmd = app.add_subcommand("eval-bleu", "corpus BLEU (multi-bleu conventions)");
  Common bleu_common;
  bleu_common.attach(bleu_cmd);
  std::string bleu_hyp, bleu_ref;
  bleu_cmd->add_option("--hyp", bleu_hyp)->required();
  bleu_cmd->add_option("--ref", bleu_ref)->required();

  auto* bli_cmd = app.add_subcommand("eval-bli", "bilingual lexicon induction precision@k");
  Common bli_common;
  bli_common.attach(bli_cmd);
  std::string bli_test_dict, bli_src_emb, bli_tgt_emb, bli_model, bli_codec;
  std::string bli_src_corpus, bli_tgt_corpus;
  bli_cmd->add_option("--test-dict", bli_test_dict)->required();
  bli_cmd->add_option("--src-emb", bli_src_emb);
  bli_cmd->add_option("--tgt-emb", bli_tgt_emb);
  bli_cmd->add_option("--model", bli_model, "evaluate a model's shared embedding table");
  bli_cmd->add_option("--codec", bli_codec);
  bli_cmd->add_option("--src-corpus", bli_src_corpus, "restricts source vocab (model mode)");
  bli_cmd->add_option("--tgt-corpus", bli_tgt_corpus, "restricts target vocab (model mode)");

  auto* cos_cmd = app.add_subcommand("eval-cosine", "per-layer parallel-sentence cosine");
  Common cos_common;
  cos_common.attach(cos_cmd);
  std::string cos_model, cos_codec, cos_src, cos_tgt, cos_dict, cos_tgt_corpus;
  cos_cmd->add_option("--model", cos_model)->required();
  cos_cmd->add_option("--codec", cos_codec)->required();
  cos_cmd->add_option("--src", cos_src, "parallel source sentences")->required();
  cos_cmd->add_option("--tgt", cos_tgt, "parallel target sentences")->required();
  cos_cmd->add_option("--anchor-dict", cos_dict, "anchor the source side first");
  cos_cmd->add_option("--tgt-corpus", cos_tgt_corpus, "target corpus for sense resolution");

  auto* exp_cmd = app.add_subcommand("export-emb", "export word embeddings as TSV");
  Common exp_common;
  exp_common.attach(exp_cmd);
  std::string exp_model, exp_codec, exp_words, exp_out;
  exp_cmd->add_option("--model", exp_model)->required();
  exp_cmd->add_option("--codec", exp_codec)->required();
  exp_cmd->add_option("--words", exp_words, "file of `word lang` rows")->required();
  exp_cmd->add_option("--out-file", exp_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*synth_cmd) {
      auto cfg = synth_common.resolve();
      cfg.synth.validate();
      SynthPair pair = generate_pair(cfg.synth);
      std::filesystem::create_directories(synth_dir);
      auto p = [&](const char* name) { return synth_dir + "/" + name; };
      save_corpus(pair.src_corpus, p("src_train.txt"));
      save_corpus(pair.tgt_corpus, p("tgt_train.txt"));
      save_corpus(pair.valid_src, p("valid.src.txt"));
      save_corpus(pair.valid_tgt, p("valid.tgt.txt"));
      save_corpus(pair.test_src, p("test.src.txt"));
      save_corpus(pair.test_tgt, p("test.tgt.txt"));
      save_dictionary(pair.full_dict, p("dict.full.txt"));
      save_dictionary(invert_dictionary(pair.full_dict), p("dict.full.bwd.txt"));
      save_dictionary(pair.sampled_dict, p("dict.txt"));
      save_dictionary(invert_dictionary(pair.sampled_dict), p("dict.bwd.txt"));
      CoverageReport cov = coverage_stats(pair.src_corpus, pair.sampled_dict);
      json result{{"out_dir", synth_dir},
                  {"sentences_per_side", cfg.synth.sentence_count},
                  {"full_dict_entries", pair.full_dict.entry_count()},
                  {"sampled_dict_entries", pair.sampled_dict.entry_count()},
                  {"sampled_token_coverage", cov.covered_token_fraction}};
      synth_common.emit(cfg, "synth-gen", result);
    } else if (*bpe_cmd) {
      auto cfg = bpe_common.resolve();
      auto src = load_corpus(bpe_src, Lang::Src, max_sentences_opt(cfg));
      auto tgt = load_corpus(bpe_tgt, Lang::Tgt, max_sentences_opt(cfg));
      std::vector<std::string> extra;
      if (!bpe_dict.empty()) {
        RawDictionary raw = load_raw_dictionary(bpe_dict);
        for (const auto& [s, t] : raw.entries) extra.push_back(t);
      }
      BpeCodec codec = learn_bpe(src, tgt, cfg.bpe_merges, extra);
      codec.max_len = cfg.bpe_max_len;
      save_codec(codec, bpe_out);
      if (!bpe_vocab_tsv.empty()) dump_vocab_tsv(codec, bpe_vocab_tsv);
      json result{{"vocab_size", codec.vocab_size()},
                  {"merges", codec.merges.size()},
                  {"initial_inventory", codec.initial_inventory},
                  {"codec", bpe_out}};
      bpe_common.emit(cfg, "learn-bpe", result);
    } else if (*apply_cmd) {
      auto cfg = apply_common.resolve();
      BpeCodec codec = load_codec(apply_codec);
      auto corpus = load_corpus(apply_in, parse_lang(apply_lang), max_sentences_opt(cfg));
      std::ofstream out(apply_out, std::ios::binary);
      if (!out) throw DataError("cannot open for write: " + apply_out);
      BpeEncoder enc(codec);
      int64_t tokens = 0;
      for (const auto& s : corpus) {
        IdSequence ids = enc.encode(s);
        tokens += static_cast<int64_t>(ids.ids.size());
        for (size_t i = 0; i < ids.ids.size(); ++i) {
          if (i) out << ' ';
          out << codec.id_to_piece[static_cast<size_t>(ids.ids[i])];
        }
        out << '\n';
      }
      json result{{"sentences", corpus.size()}, {"bpe_tokens", tokens}, {"out", apply_out}};
      apply_common.emit(cfg, "apply-bpe", result);
    } else if (*stats_cmd) {
      auto cfg = stats_common.resolve();
      auto dict = load_dict_resolved(stats_dict, Lang::Src, Lang::Tgt, stats_tgt_corpus,
                                     cfg.dict_lowercase);
      auto corpus = load_corpus(stats_corpus, Lang::Src, max_sentences_opt(cfg));
      CoverageReport cov = coverage_stats(corpus, dict);
      json result{{"entries", cov.entry_count}, {"coverage", cov.covered_token_fraction}};
      stats_common.emit(cfg, "dict-stats", result);
    } else if (*anchor_cmd) {
      auto cfg = anchor_common.resolve();
      auto dict = load_dict_resolved(anchor_dict, Lang::Src, Lang::Tgt, anchor_tgt_corpus,
                                     cfg.dict_lowercase);
      auto corpus = load_corpus(anchor_in, Lang::Src, max_sentences_opt(cfg));
      std::vector<SentenceTokens> anchored;
      int64_t flagged = 0;
      for (const auto& s : corpus) {
        anchored.push_back(anchor_sentence(s, dict));
        for (bool f : anchored.back().anchor_mask) flagged += f ? 1 : 0;
      }
      save_corpus(anchored, anchor_out);
      json result{{"sentences", anchored.size()},
                  {"anchored_tokens", flagged},
                  {"out", anchor_out}};
      anchor_common.emit(cfg, "anchor", result);
    } else if (*acp_cmd) {
      auto cfg = acp_common.resolve();
      BpeCodec codec = load_codec(acp_codec);
      auto src = load_corpus(acp_src, Lang::Src, max_sentences_opt(cfg));
      auto tgt = load_corpus(acp_tgt, Lang::Tgt, max_sentences_opt(cfg));
      ViewSpec view{parse_lang(acp_view)};
      BilingualDictionary dict;
      dict.from = other_lang(view.pivot);
      dict.to = view.pivot;
      if (!acp_dict.empty())
        dict = load_dict_resolved(acp_dict, dict.from, dict.to, "", cfg.dict_lowercase);
      cfg.acp.view = view;
      auto corpus = build_acp_corpus(src, tgt, dict, view, codec, cfg.seed);
      ModelConfig mcfg = cfg.model;
      mcfg.vocab_size = codec.vocab_size();
      AcpResult res = pretrain_mlm(mcfg, corpus, cfg.acp, codec.specials);
      save_model(res.model, acp_out, "acp_encoder");
      json result{{"steps", res.losses.size()},
                  {"final_loss", res.losses.empty() ? 0.0 : res.losses.back()},
                  {"model", acp_out}};
      acp_common.emit(cfg, "pretrain-acp", result);
    } else if (*at_cmd) {
      auto cfg = at_common.resolve();
      BpeCodec codec = load_codec(at_codec);
      auto src = load_corpus(at_src, Lang::Src, max_sentences_opt(cfg));
      auto tgt = load_corpus(at_tgt, Lang::Tgt, max_sentences_opt(cfg));
      ViewSpec view{parse_lang(at_view)};
      BilingualDictionary dict;
      dict.from = other_lang(view.pivot);
      dict.to = view.pivot;
      if (!at_no_anchor) {
        if (at_dict.empty()) throw UsageError("train-at needs --dict or --no-anchor");
        dict = load_dict_resolved(at_dict, dict.from, dict.to, "", cfg.dict_lowercase);
      }
      EvalSet eval;
      const EvalSet* eval_ptr = nullptr;
      if (!at_valid_in.empty()) {
        eval = load_eval_set(at_valid_in, at_valid_ref, dict.from, dict.to);
        eval_ptr = &eval;
      }
      std::optional<SeqModelT<float>> init;
      if (!at_init.empty()) {
        init = load_model(at_init);
      } else if (!at_init_acp.empty()) {
        SeqModelT<float> acp_model = load_model(at_init_acp);
        ModelConfig mcfg = cfg.model;
        mcfg.vocab_size = codec.vocab_size();
        init = init_model<float>(mcfg, cfg.seed);
        init_at_from_acp(*init, acp_model);
      }
      ATResult res = train_at(view, src, tgt, dict, codec, cfg.at, cfg.model, eval_ptr,
                              init ? &*init : nullptr);
      save_model(res.model, at_out);
      if (!at_log.empty()) res.log.append_jsonl(at_log);
      json result{{"rounds", res.log.entries.size()},
                  {"best_val_bleu", res.best_val_bleu},
                  {"model", at_out}};
      at_common.emit(cfg, "train-at", result);
    } else if (*bv_cmd) {
      auto cfg = bv_common.resolve();
      BpeCodec codec = load_codec(bv_codec);
      auto src = load_corpus(bv_src, Lang::Src, max_sentences_opt(cfg));
      auto tgt = load_corpus(bv_tgt, Lang::Tgt, max_sentences_opt(cfg));
      auto dict_fwd =
          load_dict_resolved(bv_dict_fwd, Lang::Src, Lang::Tgt, "", cfg.dict_lowercase);
      auto dict_bwd =
          load_dict_resolved(bv_dict_bwd, Lang::Tgt, Lang::Src, "", cfg.dict_lowercase);
      EvalSet eval_fwd, eval_bwd;
      const EvalSet *fwd_ptr = nullptr, *bwd_ptr = nullptr;
      if (!bv_valid_src.empty()) {
        eval_fwd = load_eval_set(bv_valid_src, bv_valid_ref, Lang::Src, Lang::Tgt);
        fwd_ptr = &eval_fwd;
      }
      if (!bv_valid_src_bwd.empty()) {
        eval_bwd = load_eval_set(bv_valid_src_bwd, bv_valid_ref_bwd, Lang::Tgt, Lang::Src);
        bwd_ptr = &eval_bwd;
      }
      std::optional<SeqModelT<float>> init_fwd, init_bwd;
      ModelConfig mcfg = cfg.model;
      mcfg.vocab_size = codec.vocab_size();
      if (!bv_init_fwd.empty()) {
        SeqModelT<float> acp_model = load_model(bv_init_fwd);
        init_fwd = init_model<float>(mcfg, cfg.seed);
        init_at_from_acp(*init_fwd, acp_model);
      }
      if (!bv_init_bwd.empty()) {
        SeqModelT<float> acp_model = load_model(bv_init_bwd);
        init_bwd = init_model<float>(mcfg, cfg.seed + 1);
        init_at_from_acp(*init_bwd, acp_model);
      }
      BiviewResult res = train_biview(src, tgt, dict_fwd, dict_bwd, codec, cfg.at, cfg.model,
                                      fwd_ptr, bwd_ptr, init_fwd ? &*init_fwd : nullptr,
                                      init_bwd ? &*init_bwd : nullptr);
      save_model(res.model_src2tgt, bv_out_fwd);
      save_model(res.model_tgt2src, bv_out_bwd);
      if (!bv_log.empty()) res.log_combine.append_jsonl(bv_log);
      json result{{"combine_rounds", res.log_combine.entries.size()},
                  {"model_fwd", bv_out_fwd},
                  {"model_bwd", bv_out_bwd}};
      bv_common.emit(cfg, "train-biview", result);
    } else if (*tr_cmd) {
      auto cfg = tr_common.resolve();
      BpeCodec codec = load_codec(tr_codec);
      SeqModelT<float> model = load_model(tr_model);
      BilingualDictionary dict;
      dict.from = Lang::Src;
      dict.to = Lang::Tgt;
      if (!tr_no_anchor) {
        if (tr_dict.empty()) throw UsageError("translate needs --dict or --no-anchor");
        dict = load_dict_resolved(tr_dict, Lang::Src, Lang::Tgt, tr_tgt_corpus,
                                  cfg.dict_lowercase);
      }
      auto corpus = load_corpus(tr_in, Lang::Src, max_sentences_opt(cfg));
      auto hyp = translate_batch(model, corpus, dict, codec, cfg.eval_max_out, cfg.eval_batch);
      save_corpus(hyp, tr_out_file);
      json result{{"sentences", hyp.size()}, {"out", tr_out_file}};
      tr_common.emit(cfg, "translate", result);
    } else if (*wbw_cmd) {
      auto cfg = wbw_common.resolve();
      auto dict = load_dict_resolved(wbw_dict, Lang::Src, Lang::Tgt, wbw_tgt_corpus,
                                     cfg.dict_lowercase);
      auto corpus = load_corpus(wbw_in, Lang::Src, max_sentences_opt(cfg));
      std::vector<SentenceTokens> out;
      out.reserve(corpus.size());
      for (const auto& s : corpus) out.push_back(word_by_word(s, dict));
      save_corpus(out, wbw_out);
      json result{{"sentences", out.size()}, {"out", wbw_out}};
      wbw_common.emit(cfg, "baseline-wbw", result);
    } else if (*swet_cmd) {
      auto cfg = swet_common.resolve();
      EmbeddingSpace src_space, tgt_space;
      if (!swet_src_emb.empty()) {
        src_space = load_embeddings(swet_src_emb);
      } else if (!swet_src_corpus.empty()) {
        src_space = train_embeddings(
            load_corpus(swet_src_corpus, Lang::Src, max_sentences_opt(cfg)), cfg.emb);
      } else {
        throw UsageError("baseline-swet needs --src-emb or --src-corpus");
      }
      if (!swet_tgt_emb.empty()) {
        tgt_space = load_embeddings(swet_tgt_emb);
      } else if (!swet_tgt_corpus.empty()) {
        tgt_space = train_embeddings(
            load_corpus(swet_tgt_corpus, Lang::Tgt, max_sentences_opt(cfg)), cfg.emb);
      } else {
        throw UsageError("baseline-swet needs --tgt-emb or --tgt-corpus");
      }
      auto dict = load_dict_resolved(swet_dict, Lang::Src, Lang::Tgt, "", cfg.dict_lowercase);
      LinearMap map = fit_swet(src_space, tgt_space, dict);
      if (!map.warning.empty()) std::cerr << "[swet] warning: " << map.warning << "\n";
      EmbeddingSpace mapped = map_space(src_space, map);
      if (!swet_out_src_emb.empty()) save_embeddings(mapped, swet_out_src_emb);
      if (!swet_out_tgt_emb.empty()) save_embeddings(tgt_space, swet_out_tgt_emb);
      if (!swet_out_map.empty()) {
        json mj{{"dim", map.dim}, {"orthogonal", map.orthogonal}, {"w", map.w}};
        std::ofstream f(swet_out_map, std::ios::binary);
        if (!f) throw DataError("cannot open for write: " + swet_out_map);
        f << mj.dump() << '\n';
      }
      json result{{"dim", map.dim},
                  {"src_vocab", src_space.rows()},
                  {"tgt_vocab", tgt_space.rows()}};
      if (!swet_eval_dict.empty()) {
        auto test_dict =
            load_dict_resolved(swet_eval_dict, Lang::Src, Lang::Tgt, "", cfg.dict_lowercase);
        PrecisionReport rep = bli_precision(test_dict, mapped, tgt_space);
        json pj;
        for (auto& [k, v] : rep.p_at) pj["p@" + std::to_string(k)] = v;
        result["precision"] = pj;
        result["queries"] = rep.num_queries;
        result["oov_skipped"] = rep.oov_skipped;
      }
      swet_common.emit(cfg, "baseline-swet", result);
    } else if (*bleu_cmd) {
      auto cfg = bleu_common.resolve();
      auto hyp = load_corpus(bleu_hyp, Lang::Tgt);
      auto ref = load_corpus(bleu_ref, Lang::Tgt);
      BleuReport r = bleu(hyp, ref);
      bleu_common.emit(cfg, "eval-bleu", bleu_json(r));
    } else if (*bli_cmd) {
      auto cfg = bli_common.resolve();
      auto test_dict =
          load_dict_resolved(bli_test_dict, Lang::Src, Lang::Tgt, "", cfg.dict_lowercase);
      EmbeddingSpace src_space, tgt_space;
      if (!bli_model.empty()) {
        if (bli_codec.empty() || bli_src_corpus.empty() || bli_tgt_corpus.empty())
          throw UsageError("eval-bli with --model needs --codec, --src-corpus, --tgt-corpus");
        SeqModelT<float> model = load_model(bli_model);
        BpeCodec codec = load_codec(bli_codec);
        auto src_vocab = build_freq_table(load_corpus(bli_src_corpus, Lang::Src));
        auto tgt_vocab = build_freq_table(load_corpus(bli_tgt_corpus, Lang::Tgt));
        std::vector<std::string> src_words, tgt_words;
        for (const auto& [w, c] : src_vocab.counts) src_words.push_back(w);
        for (const auto& [w, c] : tgt_vocab.counts) tgt_words.push_back(w);
        src_space = embedding_space_from_model(model, codec, src_words);
        tgt_space = embedding_space_from_model(model, codec, tgt_words);
      } else {
        if (bli_src_emb.empty() || bli_tgt_emb.empty())
          throw UsageError("eval-bli needs either --model or --src-emb/--tgt-emb");
        src_space = load_embeddings(bli_src_emb);
        tgt_space = load_embeddings(bli_tgt_emb);
      }
      PrecisionReport rep = bli_precision(test_dict, src_space, tgt_space);
      json pj;
      for (auto& [k, v] : rep.p_at) pj["p@" + std::to_string(k)] = v;
      json result{{"precision", pj},
                  {"queries", rep.num_queries},
                  {"oov_skipped", rep.oov_skipped}};
      bli_common.emit(cfg, "eval-bli", result);
    } else if (*cos_cmd) {
      auto cfg = cos_common.resolve();
      SeqModelT<float> model = load_model(cos_model);
      BpeCodec codec = load_codec(cos_codec);
      auto src = load_corpus(cos_src, Lang::Src, max_sentences_opt(cfg));
      auto tgt = load_corpus(cos_tgt, Lang::Tgt, max_sentences_opt(cfg));
      if (src.size() != tgt.size()) throw DataError("eval-cosine corpora must be parallel");
      BilingualDictionary dict;
      dict.from = Lang::Src;
      dict.to = Lang::Tgt;
      if (!cos_dict.empty())
        dict = load_dict_resolved(cos_dict, Lang::Src, Lang::Tgt, cos_tgt_corpus,
                                  cfg.dict_lowercase);
      BpeEncoder enc(codec);
      std::vector<std::pair<IdSequence, IdSequence>> pairs;
      for (size_t i = 0; i < src.size(); ++i) {
        SentenceTokens s = cos_dict.empty() ? src[i] : anchor_sentence(src[i], dict);
        IdSequence si = enc.encode(s);
        si.lang = Lang::Src;
        IdSequence ti = enc.encode(tgt[i]);
        ti.lang = Lang::Tgt;
        if (si.ids.empty() || ti.ids.empty()) continue;
        pairs.push_back({std::move(si), std::move(ti)});
      }
      std::vector<int> layers;
      for (int l = 0; l < model.cfg.num_layers; ++l) layers.push_back(l);
      auto cosines = layer_cosine(model, pairs, layers, codec.specials);
      json result{{"pairs", pairs.size()}, {"layer_cosine", cosines}};
      cos_common.emit(cfg, "eval-cosine", result);
    } else if (*exp_cmd) {
      auto cfg = exp_common.resolve();
      SeqModelT<float> model = load_model(exp_model);
      BpeCodec codec = load_codec(exp_codec);
      auto words = load_word_list(exp_words);
      export_embeddings(model, codec, words, exp_out);
      json result{{"words", words.size()}, {"out", exp_out}};
      exp_common.emit(cfg, "export-emb", result);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
