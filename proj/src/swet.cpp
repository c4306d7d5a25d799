#include "anchormt/swet.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

#include "anchormt/errors.hpp"

namespace anchormt {

std::vector<double> LinearMap::apply(const double* x) const {
  std::vector<double> y(dim, 0.0);
  for (int i = 0; i < dim; ++i) {
    const double xi = x[i];
    const double* wrow = w.data() + static_cast<int64_t>(i) * dim;
    for (int j = 0; j < dim; ++j) y[j] += xi * wrow[j];
  }
  return y;
}

namespace {

void normalize_rows_inplace(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    double n = m.row(i).norm();
    if (n > 0) m.row(i) /= n;
  }
}

}  // namespace

LinearMap fit_swet(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                   const BilingualDictionary& dict) {
  if (src.dim != tgt.dim) throw UsageError("fit_swet: dimension mismatch");
  const int d = src.dim;

  std::vector<std::pair<int, int>> pairs;
  for (const auto& [s, t] : dict.map) {
    int si = src.row_of(s);
    int ti = tgt.row_of(t);
    if (si >= 0 && ti >= 0) pairs.push_back({si, ti});
  }
  if (static_cast<int>(pairs.size()) < d)
    throw DataError("fit_swet: need at least dim=" + std::to_string(d) +
                    " dictionary pairs in both vocabularies, have " +
                    std::to_string(pairs.size()));

  Eigen::MatrixXd X(pairs.size(), d), Y(pairs.size(), d);
  for (size_t i = 0; i < pairs.size(); ++i) {
    for (int j = 0; j < d; ++j) {
      X(static_cast<Eigen::Index>(i), j) = src.row(pairs[i].first)[j];
      Y(static_cast<Eigen::Index>(i), j) = tgt.row(pairs[i].second)[j];
    }
  }
  // Unit-normalize, center, normalize again; commutes with any planted
  // orthogonal map applied to both sides.
  normalize_rows_inplace(X);
  normalize_rows_inplace(Y);
  X.rowwise() -= X.colwise().mean();
  Y.rowwise() -= Y.colwise().mean();
  normalize_rows_inplace(X);
  normalize_rows_inplace(Y);

  Eigen::MatrixXd M = X.transpose() * Y;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::MatrixXd W = svd.matrixU() * svd.matrixV().transpose();

  LinearMap map;
  map.dim = d;
  map.orthogonal = true;
  map.w.resize(static_cast<size_t>(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) map.w[static_cast<size_t>(i) * d + j] = W(i, j);

  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) < 1e-10 * sv(0))
    map.warning = "rank-deficient cross-covariance; rotation underdetermined";
  return map;
}

EmbeddingSpace map_space(const EmbeddingSpace& src, const LinearMap& map) {
  if (src.dim != map.dim) throw UsageError("map_space: dimension mismatch");
  EmbeddingSpace out;
  out.dim = src.dim;
  out.vocab = src.vocab;
  out.words = src.words;
  out.matrix.resize(src.matrix.size());
  for (int i = 0; i < src.rows(); ++i) {
    auto y = map.apply(src.row(i));
    std::copy(y.begin(), y.end(), out.row(i));
  }
  return out;
}

namespace {

// Cosine similarity matrix between two row sets.
std::vector<double> cosine_matrix(const EmbeddingSpace& a, const EmbeddingSpace& b) {
  const int Q = a.rows(), C = b.rows(), d = a.dim;
  std::vector<double> na(Q), nb(C);
  for (int i = 0; i < Q; ++i) {
    double s = 0;
    for (int j = 0; j < d; ++j) s += a.row(i)[j] * a.row(i)[j];
    na[i] = std::sqrt(s);
  }
  for (int i = 0; i < C; ++i) {
    double s = 0;
    for (int j = 0; j < d; ++j) s += b.row(i)[j] * b.row(i)[j];
    nb[i] = std::sqrt(s);
  }
  std::vector<double> cos(static_cast<size_t>(Q) * C);
  for (int i = 0; i < Q; ++i)
    for (int j = 0; j < C; ++j) {
      double dot = 0;
      for (int k = 0; k < d; ++k) dot += a.row(i)[k] * b.row(j)[k];
      double denom = na[i] * nb[j];
      cos[static_cast<size_t>(i) * C + j] = denom > 0 ? dot / denom : 0.0;
    }
  return cos;
}

double mean_top_k(std::vector<double> v, int k) {
  k = std::min<int>(k, static_cast<int>(v.size()));
  if (k <= 0) return 0.0;
  std::partial_sort(v.begin(), v.begin() + k, v.end(), std::greater<double>());
  double s = 0;
  for (int i = 0; i < k; ++i) s += v[static_cast<size_t>(i)];
  return s / k;
}

}  // namespace

std::vector<CslsNeighbors> csls_neighbors(const EmbeddingSpace& queries,
                                          const EmbeddingSpace& candidates, int k,
                                          int hub_k) {
  if (queries.dim != candidates.dim) throw UsageError("csls: dimension mismatch");
  if (k < 1) throw UsageError("csls: k must be >= 1");
  if (k > candidates.rows()) throw UsageError("csls: k larger than candidate vocabulary");

  const int Q = queries.rows(), C = candidates.rows();
  std::vector<double> cos = cosine_matrix(queries, candidates);

  std::vector<double> r_q(Q), r_c(C);
  for (int i = 0; i < Q; ++i) {
    std::vector<double> row(cos.begin() + static_cast<size_t>(i) * C,
                            cos.begin() + static_cast<size_t>(i + 1) * C);
    r_q[i] = mean_top_k(std::move(row), hub_k);
  }
  for (int j = 0; j < C; ++j) {
    std::vector<double> col(Q);
    for (int i = 0; i < Q; ++i) col[static_cast<size_t>(i)] = cos[static_cast<size_t>(i) * C + j];
    r_c[j] = mean_top_k(std::move(col), hub_k);
  }

  std::vector<CslsNeighbors> out(Q);
  std::vector<int> idx(C);
  for (int i = 0; i < Q; ++i) {
    for (int j = 0; j < C; ++j) idx[static_cast<size_t>(j)] = j;
    auto score = [&](int j) { return 2.0 * cos[static_cast<size_t>(i) * C + j] - r_q[i] - r_c[j]; };
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](int a, int b) {
      double sa = score(a), sb = score(b);
      if (sa != sb) return sa > sb;
      return candidates.words[static_cast<size_t>(a)] < candidates.words[static_cast<size_t>(b)];
    });
    out[static_cast<size_t>(i)].words.reserve(static_cast<size_t>(k));
    out[static_cast<size_t>(i)].scores.reserve(static_cast<size_t>(k));
    for (int j = 0; j < k; ++j) {
      out[static_cast<size_t>(i)].words.push_back(candidates.words[static_cast<size_t>(idx[static_cast<size_t>(j)])]);
      out[static_cast<size_t>(i)].scores.push_back(score(idx[static_cast<size_t>(j)]));
    }
  }
  return out;
}

SentenceTokens word_by_word(const SentenceTokens& sentence, const BilingualDictionary& dict) {
  SentenceTokens out = anchor_sentence(sentence, dict);
  out.anchor_mask.assign(out.tokens.size(), false);
  out.lang = dict.to;
  return out;
}

}  // namespace anchormt
