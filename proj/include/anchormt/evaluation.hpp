#pragma once

#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "anchormt/bpe.hpp"
#include "anchormt/dictionary.hpp"
#include "anchormt/embeddings.hpp"
#include "anchormt/model.hpp"

namespace anchormt {

struct PrecisionReport {
  std::map<int, double> p_at;  // percent, keyed by k
  int64_t num_queries = 0;     // usable queries
  int64_t oov_skipped = 0;
};

// CSLS top-k retrieval accuracy of test-dictionary pairs. Queries whose
// source or gold target is outside the spaces are excluded and counted.
PrecisionReport bli_precision(const BilingualDictionary& test_dict,
                              const EmbeddingSpace& src_space,
                              const EmbeddingSpace& tgt_space,
                              const std::vector<int>& ks = {1, 5, 10});

// Mean cosine similarity of max-pooled sentence representations per encoder
// layer, over parallel (src, tgt) id sequences. layers are 0-based.
std::vector<double> layer_cosine(const SeqModelT<float>& model,
                                 const std::vector<std::pair<IdSequence, IdSequence>>& pairs,
                                 const std::vector<int>& layers, const BpeSpecials& sp);

// Word vector = mean of its BPE subword embedding rows from the shared table.
EmbeddingSpace embedding_space_from_model(const SeqModelT<float>& model,
                                          const BpeCodec& codec,
                                          const std::vector<std::string>& words);

// TSV rows "word<TAB>lang<TAB>v1,...,vd".
void export_embeddings(const SeqModelT<float>& model, const BpeCodec& codec,
                       const std::vector<std::pair<std::string, Lang>>& words,
                       const std::string& path);

std::vector<std::tuple<std::string, std::string, std::vector<double>>> load_embedding_tsv(
    const std::string& path);

}  // namespace anchormt
