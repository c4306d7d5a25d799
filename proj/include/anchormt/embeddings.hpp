#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "anchormt/lang.hpp"

namespace anchormt {

struct EmbeddingSpace {
  std::unordered_map<std::string, int> vocab;  // word -> row
  std::vector<std::string> words;              // row -> word
  std::vector<double> matrix;                  // rows * dim, row-major
  int dim = 0;
  bool unit_normalized = false;

  int rows() const { return static_cast<int>(words.size()); }
  double* row(int i) { return matrix.data() + static_cast<int64_t>(i) * dim; }
  const double* row(int i) const { return matrix.data() + static_cast<int64_t>(i) * dim; }
  int row_of(const std::string& w) const {
    auto it = vocab.find(w);
    return it == vocab.end() ? -1 : it->second;
  }
  void add(const std::string& w, const std::vector<double>& v);
};

// Skip-gram with negative sampling, single-threaded and deterministic under
// the seed.
struct SgnsConfig {
  int dim = 64;
  int window = 5;
  int negatives = 5;
  int min_count = 2;
  int epochs = 5;
  double lr = 0.025;
  uint64_t seed = 1;
};

EmbeddingSpace train_embeddings(const std::vector<SentenceTokens>& corpus,
                                const SgnsConfig& cfg);

void unit_normalize(EmbeddingSpace& space);
void center_rows(EmbeddingSpace& space);

// word2vec text format: "V d" header then one "word v1 .. vd" row per line.
void save_embeddings(const EmbeddingSpace& space, const std::string& path);
EmbeddingSpace load_embeddings(const std::string& path);

}  // namespace anchormt
