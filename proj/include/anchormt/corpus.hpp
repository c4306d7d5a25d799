#pragma once

#include <optional>
#include <string>
#include <vector>

#include "anchormt/lang.hpp"

namespace anchormt {

// One sentence per line, tokens separated by whitespace. Blank lines are
// skipped. Throws DataError on I/O failure or invalid UTF-8 (with line
// number).
std::vector<SentenceTokens> load_corpus(const std::string& path, Lang lang,
                                        std::optional<int64_t> max_sentences = std::nullopt);

std::vector<SentenceTokens> tokenize_lines(const std::vector<std::string>& lines, Lang lang);

SentenceTokens tokenize_line(const std::string& line, Lang lang);

void save_corpus(const std::vector<SentenceTokens>& corpus, const std::string& path);

FreqTable build_freq_table(const std::vector<SentenceTokens>& corpus);

}  // namespace anchormt
