#include "anchormt/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "anchormt/errors.hpp"
#include "anchormt/rng.hpp"

namespace anchormt {

void SynthSpec::validate() const {
  if (vocab_size < 10) throw UsageError("synth: vocab_size too small");
  if (sentence_count < 1 || heldout_valid < 0 || heldout_test < 0)
    throw UsageError("synth: bad sentence counts");
  if (min_len < 1 || max_len < min_len) throw UsageError("synth: bad length range");
  if (reorder_window < 0) throw UsageError("synth: reorder_window must be >= 0");
  if (!(dict_coverage > 0.0 && dict_coverage <= 1.0))
    throw UsageError("synth: dict_coverage must be in (0,1]");
  if (static_cast<int>(std::llround(dict_coverage * vocab_size)) < 1)
    throw DataError("synth: vocab too small for requested coverage");
}

namespace {

std::string spell(int rank, const char* digits) {
  std::string out;
  do {
    out.insert(out.begin(), digits[rank % 10]);
    rank /= 10;
  } while (rank > 0);
  while (out.size() < 2) out.insert(out.begin(), digits[0]);
  return out;
}

struct Grammar {
  std::vector<double> start_cdf;
  std::vector<std::vector<int>> successors;      // candidate next words
  std::vector<std::vector<double>> succ_cdf;

  int sample(const std::vector<double>& cdf, Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, cdf.back());
    double u = unit(rng);
    return static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  }
};

Grammar build_grammar(int vocab, uint64_t seed) {
  Grammar g;
  std::vector<double> zipf(vocab);
  for (int k = 0; k < vocab; ++k) zipf[k] = 1.0 / std::pow(k + 1, 1.1);
  g.start_cdf.resize(vocab);
  std::partial_sum(zipf.begin(), zipf.end(), g.start_cdf.begin());

  Rng rng = make_stream(seed, "synth/grammar");
  const int fanout = std::min(24, vocab - 1);
  g.successors.resize(vocab);
  g.succ_cdf.resize(vocab);
  std::vector<double> full_cdf = g.start_cdf;
  std::uniform_real_distribution<double> unit(0.0, full_cdf.back());
  for (int w = 0; w < vocab; ++w) {
    std::set<int> cand;
    while (static_cast<int>(cand.size()) < fanout) {
      double u = unit(rng);
      int k = static_cast<int>(std::lower_bound(full_cdf.begin(), full_cdf.end(), u) -
                               full_cdf.begin());
      if (k != w) cand.insert(k);
    }
    g.successors[w].assign(cand.begin(), cand.end());
    double acc = 0.0;
    for (int k : g.successors[w]) {
      acc += zipf[k];
      g.succ_cdf[w].push_back(acc);
    }
  }
  return g;
}

std::vector<int> sample_latent(const Grammar& g, int min_len, int max_len, Rng& rng) {
  std::uniform_int_distribution<int> len_dist(min_len, max_len);
  int len = len_dist(rng);
  std::vector<int> s;
  s.reserve(len);
  int w = g.sample(g.start_cdf, rng);
  s.push_back(w);
  for (int i = 1; i < len; ++i) {
    int idx = g.sample(g.succ_cdf[w], rng);
    w = g.successors[w][idx];
    s.push_back(w);
  }
  return s;
}

std::vector<int> window_reorder(const std::vector<int>& s, int window, Rng& rng) {
  if (window == 0 || s.size() < 2) return s;
  std::uniform_real_distribution<double> jitter(0.0, window + 1.0);
  std::vector<double> key(s.size());
  for (size_t i = 0; i < s.size(); ++i) key[i] = static_cast<double>(i) + jitter(rng);
  std::vector<size_t> perm(s.size());
  std::iota(perm.begin(), perm.end(), size_t{0});
  std::stable_sort(perm.begin(), perm.end(),
                   [&](size_t a, size_t b) { return key[a] < key[b]; });
  std::vector<int> out(s.size());
  for (size_t i = 0; i < s.size(); ++i) out[i] = s[perm[i]];
  return out;
}

// Uniform type sample of round(c*V) words, then greedy swap repair until the
// sampled types cover ~c of the source-side corpus tokens.
std::vector<int> sample_dict_types(const std::vector<int64_t>& freq, double coverage,
                                   Rng& rng) {
  const int vocab = static_cast<int>(freq.size());
  const int want = static_cast<int>(std::llround(coverage * vocab));
  std::vector<int> order(vocab);
  std::iota(order.begin(), order.end(), 0);
  if (want >= vocab) return order;
  std::shuffle(order.begin(), order.end(), rng);

  std::vector<char> chosen(vocab, 0);
  for (int i = 0; i < want; ++i) chosen[order[i]] = 1;
  int64_t total = std::accumulate(freq.begin(), freq.end(), int64_t{0});
  int64_t covered = 0;
  for (int w = 0; w < vocab; ++w)
    if (chosen[w]) covered += freq[w];

  const double tol = 0.01;
  for (int iter = 0; iter < 2000; ++iter) {
    double need = coverage * total - static_cast<double>(covered);
    if (std::abs(need) <= tol * total) break;
    // Best single swap: out one chosen type, in one unchosen type.
    int best_out = -1, best_in = -1;
    double best_err = std::abs(need);
    for (int u = 0; u < vocab; ++u) {
      if (!chosen[u]) continue;
      for (int v = 0; v < vocab; ++v) {
        if (chosen[v]) continue;
        double err = std::abs(need - static_cast<double>(freq[v] - freq[u]));
        if (err < best_err) {
          best_err = err;
          best_out = u;
          best_in = v;
        }
      }
    }
    if (best_out < 0) break;
    chosen[best_out] = 0;
    chosen[best_in] = 1;
    covered += freq[best_in] - freq[best_out];
  }

  std::vector<int> out;
  for (int w = 0; w < vocab; ++w)
    if (chosen[w]) out.push_back(w);
  return out;
}

}  // namespace

std::string synth_src_word(int rank) { return spell(rank, "bcdfghjklm"); }
std::string synth_tgt_word(int rank) { return spell(rank, "npqrtvwxyz"); }

SynthPair generate_pair(const SynthSpec& spec) {
  spec.validate();
  SynthPair out;

  Grammar grammar = build_grammar(spec.vocab_size, spec.seed);

  Rng cipher_rng = make_stream(spec.seed, "synth/cipher");
  std::vector<int> cipher(spec.vocab_size);
  std::iota(cipher.begin(), cipher.end(), 0);
  std::shuffle(cipher.begin(), cipher.end(), cipher_rng);

  auto render_src = [&](const std::vector<int>& latent) {
    std::vector<std::string> toks;
    toks.reserve(latent.size());
    for (int w : latent) toks.push_back(synth_src_word(w));
    return SentenceTokens(std::move(toks), Lang::Src);
  };
  Rng reorder_rng = make_stream(spec.seed, "synth/reorder");
  auto render_tgt = [&](const std::vector<int>& latent) {
    std::vector<int> ciphered;
    ciphered.reserve(latent.size());
    for (int w : latent) ciphered.push_back(cipher[w]);
    std::vector<int> shuffled = window_reorder(ciphered, spec.reorder_window, reorder_rng);
    std::vector<std::string> toks;
    toks.reserve(shuffled.size());
    for (int w : shuffled) toks.push_back(synth_tgt_word(w));
    return SentenceTokens(std::move(toks), Lang::Tgt);
  };

  Rng sent_rng = make_stream(spec.seed, "synth/sentences");
  const int total =
      2 * spec.sentence_count + spec.heldout_valid + spec.heldout_test;
  std::vector<std::vector<int>> latent(total);
  for (auto& s : latent) s = sample_latent(grammar, spec.min_len, spec.max_len, sent_rng);

  // Training halves come from disjoint latent sentences: genuinely
  // non-parallel corpora. Heldout pairs are parallel and never trained on.
  for (int i = 0; i < spec.sentence_count; ++i) out.src_corpus.push_back(render_src(latent[i]));
  for (int i = spec.sentence_count; i < 2 * spec.sentence_count; ++i)
    out.tgt_corpus.push_back(render_tgt(latent[i]));
  int base = 2 * spec.sentence_count;
  for (int i = 0; i < spec.heldout_valid; ++i) {
    out.valid_src.push_back(render_src(latent[base + i]));
    out.valid_tgt.push_back(render_tgt(latent[base + i]));
  }
  base += spec.heldout_valid;
  for (int i = 0; i < spec.heldout_test; ++i) {
    out.test_src.push_back(render_src(latent[base + i]));
    out.test_tgt.push_back(render_tgt(latent[base + i]));
  }

  out.full_dict.from = Lang::Src;
  out.full_dict.to = Lang::Tgt;
  for (int w = 0; w < spec.vocab_size; ++w)
    out.full_dict.map.emplace(synth_src_word(w), synth_tgt_word(cipher[w]));

  std::vector<int64_t> freq(spec.vocab_size, 0);
  for (int i = 0; i < spec.sentence_count; ++i)
    for (int w : latent[i]) ++freq[w];
  Rng dict_rng = make_stream(spec.seed, "synth/dict");
  std::vector<int> chosen = sample_dict_types(freq, spec.dict_coverage, dict_rng);
  out.sampled_dict.from = Lang::Src;
  out.sampled_dict.to = Lang::Tgt;
  for (int w : chosen)
    out.sampled_dict.map.emplace(synth_src_word(w), synth_tgt_word(cipher[w]));

  return out;
}

}  // namespace anchormt
