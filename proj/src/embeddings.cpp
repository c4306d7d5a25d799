#include "anchormt/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "anchormt/errors.hpp"
#include "anchormt/rng.hpp"

namespace anchormt {

void EmbeddingSpace::add(const std::string& w, const std::vector<double>& v) {
  if (dim == 0) dim = static_cast<int>(v.size());
  if (static_cast<int>(v.size()) != dim) throw UsageError("embedding dim mismatch");
  if (vocab.count(w)) throw UsageError("duplicate word in embedding space: " + w);
  vocab.emplace(w, rows());
  words.push_back(w);
  matrix.insert(matrix.end(), v.begin(), v.end());
}

EmbeddingSpace train_embeddings(const std::vector<SentenceTokens>& corpus,
                                const SgnsConfig& cfg) {
  if (corpus.empty()) throw DataError("train_embeddings: empty corpus");
  if (cfg.dim <= 0) throw UsageError("train_embeddings: dim must be positive");

  // Vocabulary above min_count, ordered by (count desc, word) for stable ids.
  std::map<std::string, int64_t> counts;
  int64_t total = 0;
  for (const auto& s : corpus)
    for (const auto& w : s.tokens) {
      ++counts[w];
      ++total;
    }
  std::vector<std::pair<std::string, int64_t>> kept;
  for (const auto& [w, c] : counts)
    if (c >= cfg.min_count) kept.push_back({w, c});
  if (kept.empty()) throw DataError("train_embeddings: no words above min_count");
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  EmbeddingSpace space;
  space.dim = cfg.dim;
  std::vector<int64_t> freq;
  for (const auto& [w, c] : kept) {
    space.vocab.emplace(w, space.rows());
    space.words.push_back(w);
    freq.push_back(c);
  }
  const int V = space.rows();
  const int d = cfg.dim;

  Rng rng = make_stream(cfg.seed, "sgns/train");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> syn0(static_cast<int64_t>(V) * d);
  std::vector<double> syn1(static_cast<int64_t>(V) * d, 0.0);
  for (auto& x : syn0) x = (unit(rng) - 0.5) / d;

  // Unigram^0.75 negative-sampling table.
  const int table_size = 1 << 20;
  std::vector<int> table(table_size);
  {
    double z = 0.0;
    for (int64_t c : freq) z += std::pow(static_cast<double>(c), 0.75);
    double acc = std::pow(static_cast<double>(freq[0]), 0.75) / z;
    int w = 0;
    for (int i = 0; i < table_size; ++i) {
      table[i] = w;
      if (static_cast<double>(i) / table_size > acc && w < V - 1) {
        ++w;
        acc += std::pow(static_cast<double>(freq[w]), 0.75) / z;
      }
    }
  }

  std::vector<std::vector<int>> encoded;
  encoded.reserve(corpus.size());
  for (const auto& s : corpus) {
    std::vector<int> ids;
    for (const auto& w : s.tokens) {
      int r = space.row_of(w);
      if (r >= 0) ids.push_back(r);
    }
    if (ids.size() > 1) encoded.push_back(std::move(ids));
  }

  const int64_t train_words = total * cfg.epochs;
  int64_t processed = 0;
  std::uniform_int_distribution<int> win_dist(1, cfg.window);
  std::uniform_int_distribution<int> tab_dist(0, table_size - 1);
  std::vector<double> grad_in(d);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& sent : encoded) {
      for (size_t pos = 0; pos < sent.size(); ++pos) {
        double alpha = cfg.lr * (1.0 - static_cast<double>(processed) / (train_words + 1));
        alpha = std::max(alpha, cfg.lr * 1e-4);
        ++processed;
        int center = sent[pos];
        int win = win_dist(rng);
        for (int off = -win; off <= win; ++off) {
          if (off == 0) continue;
          int64_t cpos = static_cast<int64_t>(pos) + off;
          if (cpos < 0 || cpos >= static_cast<int64_t>(sent.size())) continue;
          int context = sent[static_cast<size_t>(cpos)];
          double* vin = syn0.data() + static_cast<int64_t>(center) * d;
          std::fill(grad_in.begin(), grad_in.end(), 0.0);
          for (int n = 0; n <= cfg.negatives; ++n) {
            int target;
            double label;
            if (n == 0) {
              target = context;
              label = 1.0;
            } else {
              target = table[tab_dist(rng)];
              if (target == context) continue;
              label = 0.0;
            }
            double* vout = syn1.data() + static_cast<int64_t>(target) * d;
            double dot = 0.0;
            for (int j = 0; j < d; ++j) dot += vin[j] * vout[j];
            double pred = 1.0 / (1.0 + std::exp(-dot));
            double g = (label - pred) * alpha;
            for (int j = 0; j < d; ++j) {
              grad_in[j] += g * vout[j];
              vout[j] += g * vin[j];
            }
          }
          for (int j = 0; j < d; ++j) vin[j] += grad_in[j];
        }
      }
    }
  }

  space.matrix = std::move(syn0);
  return space;
}

void unit_normalize(EmbeddingSpace& space) {
  for (int i = 0; i < space.rows(); ++i) {
    double* r = space.row(i);
    double norm = 0.0;
    for (int j = 0; j < space.dim; ++j) norm += r[j] * r[j];
    norm = std::sqrt(norm);
    if (norm > 0)
      for (int j = 0; j < space.dim; ++j) r[j] /= norm;
  }
  space.unit_normalized = true;
}

void center_rows(EmbeddingSpace& space) {
  if (space.rows() == 0) return;
  std::vector<double> mean(space.dim, 0.0);
  for (int i = 0; i < space.rows(); ++i) {
    const double* r = space.row(i);
    for (int j = 0; j < space.dim; ++j) mean[j] += r[j];
  }
  for (auto& m : mean) m /= space.rows();
  for (int i = 0; i < space.rows(); ++i) {
    double* r = space.row(i);
    for (int j = 0; j < space.dim; ++j) r[j] -= mean[j];
  }
  space.unit_normalized = false;
}

void save_embeddings(const EmbeddingSpace& space, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for write: " + path);
  out << space.rows() << ' ' << space.dim << '\n';
  out.precision(17);
  for (int i = 0; i < space.rows(); ++i) {
    out << space.words[i];
    const double* r = space.row(i);
    for (int j = 0; j < space.dim; ++j) out << ' ' << r[j];
    out << '\n';
  }
  if (!out) throw DataError("I/O error writing " + path);
}

EmbeddingSpace load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embeddings: " + path);
  int v = 0, d = 0;
  in >> v >> d;
  if (!in || v <= 0 || d <= 0) throw DataError("bad embedding header in " + path);
  EmbeddingSpace space;
  space.dim = d;
  std::vector<double> row(d);
  for (int i = 0; i < v; ++i) {
    std::string w;
    in >> w;
    for (int j = 0; j < d; ++j) in >> row[static_cast<size_t>(j)];
    if (!in) throw DataError("truncated embedding file: " + path);
    space.add(w, row);
  }
  return space;
}

}  // namespace anchormt
