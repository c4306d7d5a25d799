#pragma once

#include <string>
#include <vector>

#include "anchormt/dictionary.hpp"
#include "anchormt/embeddings.hpp"

namespace anchormt {

// Orthogonal map acting on row vectors: y ~= x * W.
struct LinearMap {
  std::vector<double> w;  // dim * dim, row-major
  int dim = 0;
  bool orthogonal = true;
  std::string warning;  // set on rank deficiency

  std::vector<double> apply(const double* x) const;
};

// Orthogonal Procrustes over the dictionary pairs found in both vocabularies:
// rows are unit-normalized and centered, then W = U V^T from the SVD of
// X^T Y. Minimizes sum ||xW - y||^2 over orthogonal W.
LinearMap fit_swet(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                   const BilingualDictionary& dict);

EmbeddingSpace map_space(const EmbeddingSpace& src, const LinearMap& map);

// CSLS(x, y) = 2 cos(x, y) - r(x) - r(y) with r(.) the mean cosine to the
// K = 10 nearest neighbors in the other space.
struct CslsNeighbors {
  std::vector<std::string> words;
  std::vector<double> scores;
};

std::vector<CslsNeighbors> csls_neighbors(const EmbeddingSpace& queries,
                                          const EmbeddingSpace& candidates, int k,
                                          int hub_k = 10);

SentenceTokens word_by_word(const SentenceTokens& sentence, const BilingualDictionary& dict);

}  // namespace anchormt
