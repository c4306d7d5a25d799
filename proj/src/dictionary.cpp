#include "anchormt/dictionary.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "anchormt/errors.hpp"
#include "anchormt/rng.hpp"
#include "anchormt/utf8.hpp"

namespace anchormt {

static std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

const std::string* BilingualDictionary::lookup(const std::string& word) const {
  auto it = map.find(lowercase ? ascii_lower(word) : word);
  return it == map.end() ? nullptr : &it->second;
}

RawDictionary load_raw_dictionary(const std::string& path, Lang from, Lang to) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open dictionary file: " + path);
  RawDictionary raw;
  raw.from = from;
  raw.to = to;
  std::set<std::pair<std::string, std::string>> seen;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!utf8_valid(line))
      throw DataError(path + ":" + std::to_string(line_no) + ": invalid UTF-8");
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string f;
    while (ss >> f) fields.push_back(f);
    if (fields.empty()) continue;
    if (fields.size() == 1)
      throw DataError(path + ":" + std::to_string(line_no) + ": malformed entry (1 field)");
    if (fields.size() > 2) {
      ++raw.dropped_multiword;  // one-to-one replacement only
      continue;
    }
    auto pair = std::make_pair(fields[0], fields[1]);
    if (seen.insert(pair).second) raw.entries.push_back(std::move(pair));
  }
  if (in.bad()) throw DataError("I/O error reading " + path);
  return raw;
}

BilingualDictionary resolve_senses(const RawDictionary& raw, const FreqTable& target_freq,
                                   bool lowercase) {
  BilingualDictionary dict;
  dict.from = raw.from;
  dict.to = raw.to;
  dict.lowercase = lowercase;
  for (const auto& [src, tgt] : raw.entries) {
    std::string key = lowercase ? ascii_lower(src) : src;
    auto it = dict.map.find(key);
    if (it == dict.map.end()) {
      dict.map.emplace(std::move(key), tgt);
      continue;
    }
    int64_t cur = target_freq.count(it->second);
    int64_t cand = target_freq.count(tgt);
    if (cand > cur || (cand == cur && tgt < it->second)) it->second = tgt;
  }
  return dict;
}

SentenceTokens anchor_sentence(const SentenceTokens& s, const BilingualDictionary& dict) {
  SentenceTokens out = s;
  for (size_t i = 0; i < out.tokens.size(); ++i) {
    if (const std::string* t = dict.lookup(out.tokens[i])) {
      out.tokens[i] = *t;
      out.anchor_mask[i] = true;
    }
  }
  return out;
}

CoverageReport coverage_stats(const std::vector<SentenceTokens>& corpus,
                              const BilingualDictionary& dict) {
  if (corpus.empty()) throw DataError("coverage_stats: empty corpus");
  int64_t total = 0, hits = 0;
  for (const auto& s : corpus) {
    total += static_cast<int64_t>(s.tokens.size());
    for (const auto& w : s.tokens)
      if (dict.lookup(w)) ++hits;
  }
  CoverageReport r;
  r.entry_count = dict.entry_count();
  r.covered_token_fraction = total == 0 ? 0.0 : static_cast<double>(hits) / total;
  return r;
}

std::pair<BilingualDictionary, BilingualDictionary> split_dictionary(
    const BilingualDictionary& dict, double train_fraction, uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw UsageError("split_dictionary: train_fraction must be in (0,1)");
  if (dict.entry_count() < 2) throw DataError("split_dictionary: need at least 2 entries");

  std::vector<const std::pair<const std::string, std::string>*> items;
  items.reserve(dict.map.size());
  for (const auto& kv : dict.map) items.push_back(&kv);
  Rng rng = make_stream(seed, "dictionary/split");
  std::shuffle(items.begin(), items.end(), rng);

  auto n_train = static_cast<size_t>(std::llround(train_fraction * items.size()));
  n_train = std::clamp<size_t>(n_train, 1, items.size() - 1);

  BilingualDictionary train, test;
  train.from = test.from = dict.from;
  train.to = test.to = dict.to;
  train.lowercase = test.lowercase = dict.lowercase;
  for (size_t i = 0; i < items.size(); ++i)
    (i < n_train ? train : test).map.insert(*items[i]);
  return {train, test};
}

BilingualDictionary invert_dictionary(const BilingualDictionary& dict) {
  BilingualDictionary out;
  out.from = dict.to;
  out.to = dict.from;
  out.lowercase = dict.lowercase;
  for (const auto& [s, t] : dict.map) {
    auto it = out.map.find(t);
    if (it == out.map.end() || s < it->second) out.map[t] = s;
  }
  return out;
}

void save_dictionary(const BilingualDictionary& dict, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for write: " + path);
  for (const auto& [s, t] : dict.map) out << s << ' ' << t << '\n';
  if (!out) throw DataError("I/O error writing " + path);
}

}  // namespace anchormt
