#include "anchormt/bpe.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>

#include "json.hpp"

#include "anchormt/errors.hpp"
#include "anchormt/utf8.hpp"

namespace anchormt {

namespace {

struct Sym {
  std::string text;
  bool final;  // last symbol of the word
};

std::string render(const Sym& s) { return s.final ? s.text : s.text + "@@"; }

std::vector<Sym> word_symbols(const std::string& word) {
  std::vector<std::string> cps;
  if (!utf8_codepoints(word, cps) || cps.empty())
    throw DataError("BPE: invalid UTF-8 in word: " + word);
  std::vector<Sym> syms;
  syms.reserve(cps.size());
  for (size_t i = 0; i < cps.size(); ++i)
    syms.push_back({cps[i], i + 1 == cps.size()});
  return syms;
}

using Pair = std::pair<std::string, std::string>;

const std::array<const char*, 5> kSpecialNames = {"<pad>", "<bos>", "<eos>", "<unk>",
                                                  "<mask>"};

void add_piece(BpeCodec& c, const std::string& piece) {
  if (c.piece_to_id.count(piece)) return;
  c.piece_to_id.emplace(piece, c.vocab_size());
  c.id_to_piece.push_back(piece);
}

}  // namespace

BpeCodec learn_bpe(const std::vector<SentenceTokens>& corpus_a,
                   const std::vector<SentenceTokens>& corpus_b, int num_merges,
                   const std::vector<std::string>& extra_words) {
  if (num_merges < 0) throw UsageError("learn_bpe: num_merges must be >= 0");
  if (corpus_a.empty() && corpus_b.empty()) throw DataError("learn_bpe: empty corpora");

  // Joint word frequency; std::map for deterministic iteration.
  std::map<std::string, int64_t> word_freq;
  for (const auto* corpus : {&corpus_a, &corpus_b})
    for (const auto& s : *corpus)
      for (const auto& w : s.tokens) ++word_freq[w];
  for (const auto& w : extra_words)
    if (!w.empty()) word_freq.emplace(w, 1);
  if (word_freq.empty()) throw DataError("learn_bpe: no tokens in corpora");

  std::vector<std::vector<Sym>> words;
  std::vector<int64_t> freqs;
  words.reserve(word_freq.size());
  for (const auto& [w, f] : word_freq) {
    words.push_back(word_symbols(w));
    freqs.push_back(f);
  }

  BpeCodec codec;
  for (const char* name : kSpecialNames) add_piece(codec, name);

  // Initial rendered inventory, lexicographic id order.
  std::set<std::string> initial;
  for (const auto& syms : words)
    for (const auto& s : syms) initial.insert(render(s));
  for (const auto& piece : initial) add_piece(codec, piece);
  codec.initial_inventory = static_cast<int>(initial.size());

  // Pair statistics with an inverted index so merges only touch affected
  // words.
  std::map<Pair, int64_t> pair_count;
  std::map<Pair, std::set<size_t>> pair_words;
  auto bump = [&](const Pair& p, int64_t delta, size_t word_idx) {
    auto it = pair_count.find(p);
    if (it == pair_count.end()) {
      if (delta <= 0) return;
      pair_count.emplace(p, delta);
      pair_words[p].insert(word_idx);
      return;
    }
    it->second += delta;
    if (it->second <= 0) {
      pair_count.erase(it);
      pair_words.erase(p);
    } else {
      pair_words[p].insert(word_idx);
    }
  };
  for (size_t wi = 0; wi < words.size(); ++wi) {
    const auto& syms = words[wi];
    for (size_t i = 0; i + 1 < syms.size(); ++i)
      bump({syms[i].text, syms[i + 1].text}, freqs[wi], wi);
  }

  for (int m = 0; m < num_merges; ++m) {
    if (pair_count.empty()) break;
    Pair best;
    int64_t best_count = -1;
    for (const auto& [p, c] : pair_count) {
      if (c > best_count || (c == best_count && p < best)) {
        best = p;
        best_count = c;
      }
    }

    codec.merges.push_back(best);
    const std::string merged_text = best.first + best.second;

    auto affected = pair_words[best];  // copy; the merge mutates the index
    bool produced_final = false, produced_cont = false;
    for (size_t wi : affected) {
      auto& syms = words[wi];
      int64_t f = freqs[wi];
      std::vector<Sym> out;
      out.reserve(syms.size());
      size_t i = 0;
      bool changed = false;
      while (i < syms.size()) {
        if (i + 1 < syms.size() && syms[i].text == best.first &&
            syms[i + 1].text == best.second) {
          // Retire the old neighbor pairs, install the new ones.
          if (!out.empty()) {
            bump({out.back().text, best.first}, -f, wi);
            bump({out.back().text, merged_text}, f, wi);
          }
          if (i + 2 < syms.size()) {
            bump({best.second, syms[i + 2].text}, -f, wi);
            bump({merged_text, syms[i + 2].text}, f, wi);
          }
          bump(best, -f, wi);
          Sym ns{merged_text, syms[i + 1].final};
          (ns.final ? produced_final : produced_cont) = true;
          out.push_back(ns);
          i += 2;
          changed = true;
        } else {
          out.push_back(syms[i]);
          ++i;
        }
      }
      if (changed) syms = std::move(out);
    }
    if (produced_final) add_piece(codec, merged_text);
    if (produced_cont) add_piece(codec, merged_text + "@@");
  }

  // Piece usage counts over the final segmentation, for the TSV dump.
  codec.piece_freq.assign(codec.vocab_size(), 0);
  for (size_t wi = 0; wi < words.size(); ++wi)
    for (const auto& s : words[wi]) {
      int id = codec.piece_id(render(s));
      codec.piece_freq[id] += freqs[wi];
    }
  return codec;
}

IdSequence apply_bpe(const BpeCodec& codec, const SentenceTokens& s) {
  BpeEncoder enc(codec);
  return enc.encode(s);
}

static std::vector<int> segment_word(const BpeCodec& codec, const std::string& word) {
  std::vector<Sym> syms = word_symbols(word);
  if (!codec.merges.empty() && syms.size() > 1) {
    std::map<Pair, int> rank;
    for (size_t r = 0; r < codec.merges.size(); ++r)
      rank.emplace(codec.merges[r], static_cast<int>(r));
    for (;;) {
      int best_rank = -1;
      for (size_t i = 0; i + 1 < syms.size(); ++i) {
        auto it = rank.find({syms[i].text, syms[i + 1].text});
        if (it != rank.end() && (best_rank < 0 || it->second < best_rank))
          best_rank = it->second;
      }
      if (best_rank < 0) break;
      const Pair& p = codec.merges[best_rank];
      std::vector<Sym> out;
      out.reserve(syms.size());
      size_t i = 0;
      while (i < syms.size()) {
        if (i + 1 < syms.size() && syms[i].text == p.first && syms[i + 1].text == p.second) {
          out.push_back({p.first + p.second, syms[i + 1].final});
          i += 2;
        } else {
          out.push_back(syms[i]);
          ++i;
        }
      }
      syms = std::move(out);
    }
  }
  std::vector<int> ids;
  ids.reserve(syms.size());
  for (const auto& sym : syms) ids.push_back(codec.piece_id(render(sym)));
  return ids;
}

IdSequence BpeEncoder::encode(const SentenceTokens& s) {
  IdSequence out;
  out.lang = s.lang;
  for (size_t w = 0; w < s.tokens.size(); ++w) {
    auto it = cache_.find(s.tokens[w]);
    if (it == cache_.end())
      it = cache_.emplace(s.tokens[w], segment_word(codec_, s.tokens[w])).first;
    bool anchored = w < s.anchor_mask.size() && s.anchor_mask[w];
    for (int id : it->second) {
      out.ids.push_back(id);
      out.anchor_mask.push_back(anchored);
    }
  }
  if (static_cast<int>(out.ids.size()) > codec_.max_len) {
    out.ids.resize(codec_.max_len);
    out.anchor_mask.resize(codec_.max_len);
  }
  return out;
}

SentenceTokens detokenize(const BpeCodec& codec, const IdSequence& ids) {
  SentenceTokens out;
  out.lang = ids.lang;
  std::string cur;
  for (int id : ids.ids) {
    if (id < 0 || id >= codec.vocab_size())
      throw DataError("detokenize: invalid id " + std::to_string(id));
    if (codec.is_special(id)) continue;
    const std::string& piece = codec.id_to_piece[id];
    if (piece.size() >= 2 && piece.compare(piece.size() - 2, 2, "@@") == 0) {
      cur += piece.substr(0, piece.size() - 2);
    } else {
      cur += piece;
      out.tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.tokens.push_back(std::move(cur));  // truncated tail
  out.anchor_mask.assign(out.tokens.size(), false);
  return out;
}

void save_codec(const BpeCodec& codec, const std::string& path) {
  nlohmann::json j;
  j["version"] = 1;
  j["max_len"] = codec.max_len;
  j["initial_inventory"] = codec.initial_inventory;
  j["merges"] = nlohmann::json::array();
  for (const auto& [l, r] : codec.merges) j["merges"].push_back({l, r});
  j["specials"] = {{"pad", codec.specials.pad},
                   {"bos", codec.specials.bos},
                   {"eos", codec.specials.eos},
                   {"unk", codec.specials.unk},
                   {"mask", codec.specials.mask}};
  j["pieces"] = codec.id_to_piece;
  j["piece_freq"] = codec.piece_freq;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for write: " + path);
  out << j.dump(1, '\t') << '\n';
  if (!out) throw DataError("I/O error writing " + path);
}

BpeCodec load_codec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open codec file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("codec parse error in " + path + ": " + e.what());
  }
  BpeCodec codec;
  codec.max_len = j.value("max_len", 100);
  codec.initial_inventory = j.value("initial_inventory", 0);
  for (const auto& m : j.at("merges"))
    codec.merges.emplace_back(m.at(0).get<std::string>(), m.at(1).get<std::string>());
  for (const auto& p : j.at("pieces")) add_piece(codec, p.get<std::string>());
  if (j.contains("piece_freq"))
    codec.piece_freq = j["piece_freq"].get<std::vector<int64_t>>();
  codec.piece_freq.resize(codec.vocab_size(), 0);
  return codec;
}

void dump_vocab_tsv(const BpeCodec& codec, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for write: " + path);
  for (int id = 0; id < codec.vocab_size(); ++id) {
    int64_t f = id < static_cast<int>(codec.piece_freq.size()) ? codec.piece_freq[id] : 0;
    out << codec.id_to_piece[id] << '\t' << id << '\t' << f << '\n';
  }
  if (!out) throw DataError("I/O error writing " + path);
}

}  // namespace anchormt
