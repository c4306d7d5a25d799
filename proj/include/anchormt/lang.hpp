#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace anchormt {

enum class Lang : uint8_t { Src = 0, Tgt = 1 };

inline const char* lang_name(Lang l) { return l == Lang::Src ? "src" : "tgt"; }
inline Lang other_lang(Lang l) { return l == Lang::Src ? Lang::Tgt : Lang::Src; }

// A tokenized sentence. anchor_mask[i] is true iff token i was substituted
// through the bilingual dictionary; raw corpus sentences carry an all-false
// mask.
struct SentenceTokens {
  std::vector<std::string> tokens;
  Lang lang = Lang::Src;
  std::vector<bool> anchor_mask;

  SentenceTokens() = default;
  SentenceTokens(std::vector<std::string> toks, Lang l)
      : tokens(std::move(toks)), lang(l), anchor_mask(tokens.size(), false) {}

  size_t size() const { return tokens.size(); }
  std::string joined() const;
};

struct FreqTable {
  std::unordered_map<std::string, int64_t> counts;
  int64_t total_tokens = 0;

  int64_t count(const std::string& word) const {
    auto it = counts.find(word);
    return it == counts.end() ? 0 : it->second;
  }
};

}  // namespace anchormt
