#include "anchormt/corpus.hpp"

#include <fstream>
#include <sstream>

#include "anchormt/errors.hpp"
#include "anchormt/utf8.hpp"

namespace anchormt {

std::string SentenceTokens::joined() const {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

SentenceTokens tokenize_line(const std::string& line, Lang lang) {
  std::vector<std::string> cps;
  cps.reserve(line.size());
  if (!utf8_codepoints(line, cps)) throw DataError("invalid UTF-8");
  std::vector<std::string> tokens;
  std::string cur;
  for (const auto& cp : cps) {
    if (is_unicode_space(cp)) {
      if (!cur.empty()) {
        tokens.push_back(std::move(cur));
        cur.clear();
      }
    } else {
      cur += cp;
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return SentenceTokens(std::move(tokens), lang);
}

std::vector<SentenceTokens> tokenize_lines(const std::vector<std::string>& lines, Lang lang) {
  std::vector<SentenceTokens> out;
  out.reserve(lines.size());
  for (const auto& line : lines) {
    SentenceTokens s = tokenize_line(line, lang);
    if (!s.tokens.empty()) out.push_back(std::move(s));
  }
  return out;
}

std::vector<SentenceTokens> load_corpus(const std::string& path, Lang lang,
                                        std::optional<int64_t> max_sentences) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);
  std::vector<SentenceTokens> out;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (max_sentences && static_cast<int64_t>(out.size()) >= *max_sentences) break;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!utf8_valid(line))
      throw DataError(path + ":" + std::to_string(line_no) + ": invalid UTF-8");
    SentenceTokens s = tokenize_line(line, lang);
    if (s.tokens.empty()) continue;
    out.push_back(std::move(s));
  }
  if (in.bad()) throw DataError("I/O error reading " + path);
  return out;
}

void save_corpus(const std::vector<SentenceTokens>& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for write: " + path);
  for (const auto& s : corpus) out << s.joined() << '\n';
  if (!out) throw DataError("I/O error writing " + path);
}

FreqTable build_freq_table(const std::vector<SentenceTokens>& corpus) {
  FreqTable t;
  for (const auto& s : corpus) {
    for (const auto& w : s.tokens) ++t.counts[w];
    t.total_tokens += static_cast<int64_t>(s.tokens.size());
  }
  return t;
}

}  // namespace anchormt
