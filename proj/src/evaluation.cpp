#include "anchormt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "anchormt/decode.hpp"
#include "anchormt/errors.hpp"
#include "anchormt/swet.hpp"

namespace anchormt {

PrecisionReport bli_precision(const BilingualDictionary& test_dict,
                              const EmbeddingSpace& src_space,
                              const EmbeddingSpace& tgt_space,
                              const std::vector<int>& ks) {
  PrecisionReport report;
  std::vector<std::string> gold;
  EmbeddingSpace queries;
  queries.dim = src_space.dim;
  for (const auto& [s, t] : test_dict.map) {
    int si = src_space.row_of(s);
    int ti = tgt_space.row_of(t);
    if (si < 0 || ti < 0) {
      ++report.oov_skipped;
      continue;
    }
    queries.add(s, std::vector<double>(src_space.row(si), src_space.row(si) + src_space.dim));
    gold.push_back(t);
  }
  if (queries.rows() == 0) throw DataError("bli_precision: zero usable queries");
  report.num_queries = queries.rows();

  int kmax = *std::max_element(ks.begin(), ks.end());
  auto neighbors = csls_neighbors(queries, tgt_space, std::min(kmax, tgt_space.rows()));
  for (int k : ks) {
    int64_t hits = 0;
    for (int q = 0; q < queries.rows(); ++q) {
      const auto& words = neighbors[static_cast<size_t>(q)].words;
      int limit = std::min<int>(k, static_cast<int>(words.size()));
      for (int j = 0; j < limit; ++j)
        if (words[static_cast<size_t>(j)] == gold[static_cast<size_t>(q)]) {
          ++hits;
          break;
        }
    }
    report.p_at[k] = 100.0 * static_cast<double>(hits) / static_cast<double>(report.num_queries);
  }
  return report;
}

namespace {

std::vector<double> maxpool_rows(const std::vector<float>& states, int b, int T, int d,
                                 int len) {
  std::vector<double> out(static_cast<size_t>(d), -std::numeric_limits<double>::infinity());
  for (int i = 0; i < len; ++i) {
    const float* row = states.data() + (static_cast<int64_t>(b) * T + i) * d;
    for (int j = 0; j < d; ++j)
      out[static_cast<size_t>(j)] = std::max(out[static_cast<size_t>(j)], static_cast<double>(row[j]));
  }
  return out;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  double denom = std::sqrt(na) * std::sqrt(nb);
  return denom > 0 ? dot / denom : 0.0;
}

}  // namespace

std::vector<double> layer_cosine(const SeqModelT<float>& model,
                                 const std::vector<std::pair<IdSequence, IdSequence>>& pairs,
                                 const std::vector<int>& layers, const BpeSpecials& sp) {
  if (pairs.empty()) throw DataError("layer_cosine: empty pair list");
  for (int l : layers)
    if (l < 0 || l >= model.cfg.num_layers) throw UsageError("layer_cosine: bad layer index");

  std::vector<double> sums(layers.size(), 0.0);
  const int d = model.cfg.model_dim;
  const size_t chunk = 64;
  for (size_t base = 0; base < pairs.size(); base += chunk) {
    size_t end = std::min(pairs.size(), base + chunk);
    std::vector<IdSequence> src_batch, tgt_batch;
    for (size_t i = base; i < end; ++i) {
      src_batch.push_back(pairs[i].first);
      tgt_batch.push_back(pairs[i].second);
    }
    auto src_run = encode(model, src_batch, src_batch[0].lang, sp);
    auto tgt_run = encode(model, tgt_batch, tgt_batch[0].lang, sp);
    for (size_t li = 0; li < layers.size(); ++li) {
      const auto& ss = src_run.layer_states[static_cast<size_t>(layers[li])];
      const auto& ts = tgt_run.layer_states[static_cast<size_t>(layers[li])];
      for (int b = 0; b < src_run.B; ++b) {
        auto u = maxpool_rows(ss, b, src_run.T, d, src_run.lens[static_cast<size_t>(b)]);
        auto v = maxpool_rows(ts, b, tgt_run.T, d, tgt_run.lens[static_cast<size_t>(b)]);
        sums[li] += cosine(u, v);
      }
    }
  }
  for (auto& s : sums) s /= static_cast<double>(pairs.size());
  return sums;
}

namespace {

std::vector<double> word_vector(const SeqModelT<float>& model, const BpeCodec& codec,
                                const std::string& word) {
  SentenceTokens s({word}, Lang::Src);
  IdSequence ids = apply_bpe(codec, s);
  const int d = model.cfg.model_dim;
  std::vector<double> v(static_cast<size_t>(d), 0.0);
  if (ids.ids.empty()) return v;
  const float* emb = model.tok_emb->value.data();
  for (int id : ids.ids) {
    const float* row = emb + static_cast<int64_t>(id) * d;
    for (int j = 0; j < d; ++j) v[static_cast<size_t>(j)] += row[j];
  }
  for (auto& x : v) x /= static_cast<double>(ids.ids.size());
  return v;
}

}  // namespace

EmbeddingSpace embedding_space_from_model(const SeqModelT<float>& model,
                                          const BpeCodec& codec,
                                          const std::vector<std::string>& words) {
  EmbeddingSpace space;
  space.dim = model.cfg.model_dim;
  for (const auto& w : words) {
    if (space.vocab.count(w)) continue;
    space.add(w, word_vector(model, codec, w));
  }
  return space;
}

void export_embeddings(const SeqModelT<float>& model, const BpeCodec& codec,
                       const std::vector<std::pair<std::string, Lang>>& words,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for write: " + path);
  out.precision(17);
  for (const auto& [word, lang] : words) {
    auto v = word_vector(model, codec, word);
    out << word << '\t' << lang_name(lang) << '\t';
    for (size_t j = 0; j < v.size(); ++j) {
      if (j) out << ',';
      out << v[j];
    }
    out << '\n';
  }
  if (!out) throw DataError("I/O error writing " + path);
}

std::vector<std::tuple<std::string, std::string, std::vector<double>>> load_embedding_tsv(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding tsv: " + path);
  std::vector<std::tuple<std::string, std::string, std::vector<double>>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word, lang, values;
    if (!std::getline(ss, word, '\t') || !std::getline(ss, lang, '\t') ||
        !std::getline(ss, values))
      throw DataError("bad embedding tsv row: " + line);
    std::vector<double> v;
    std::istringstream vs(values);
    std::string tok;
    while (std::getline(vs, tok, ',')) v.push_back(std::stod(tok));
    out.emplace_back(word, lang, std::move(v));
  }
  return out;
}

}  // namespace anchormt
