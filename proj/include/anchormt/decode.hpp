#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "anchormt/model.hpp"

namespace anchormt {

// Inference path: plain tensor math on the same kernels as the tape, no
// graph, no dropout. Used for pseudo-sentence generation, test-time decoding
// and the per-layer analyses.

namespace infer {

template <class S>
void ln_rows(S* x, const S* g, const S* b, int64_t rows, int d) {
  for (int64_t r = 0; r < rows; ++r) {
    S* xi = x + r * d;
    S mu = S(0);
    for (int j = 0; j < d; ++j) mu += xi[j];
    mu /= S(d);
    S var = S(0);
    for (int j = 0; j < d; ++j) {
      S t = xi[j] - mu;
      var += t * t;
    }
    var /= S(d);
    S inv = S(1) / std::sqrt(var + S(1e-5));
    for (int j = 0; j < d; ++j) xi[j] = (xi[j] - mu) * inv * g[j] + b[j];
  }
}

// y (rows, d) = x * W + b
template <class S>
void linear(const S* x, const num::NodeRefT<S>& W, const num::NodeRefT<S>& b, S* y,
            int64_t rows, int din, int dout) {
  num::gemm_nn(x, W->value.data(), y, static_cast<int>(rows), din, dout);
  const S* bp = b->value.data();
  for (int64_t r = 0; r < rows; ++r)
    for (int j = 0; j < dout; ++j) y[r * dout + j] += bp[j];
}

template <class S>
void add_embeddings(const SeqModelT<S>& m, const std::vector<int>& ids, int B, int T,
                    Lang lang, int pos_offset, S* out) {
  const int d = m.cfg.model_dim;
  const S scale = static_cast<S>(std::sqrt(double(d)));
  const S* emb = m.tok_emb->value.data();
  const S* lemb = m.lang_emb->value.data() + static_cast<int64_t>(lang) * d;
  for (int64_t r = 0; r < static_cast<int64_t>(B) * T; ++r) {
    int id = ids[static_cast<size_t>(r)];
    if (id < 0 || id >= m.cfg.vocab_size) throw DataError("encode: id out of vocab range");
    const S* e = emb + static_cast<int64_t>(id) * d;
    int pos = static_cast<int>(r % T) + pos_offset;
    const S* pe = m.pos_enc.data() + static_cast<int64_t>(pos) * d;
    S* o = out + r * d;
    for (int j = 0; j < d; ++j) o[j] = e[j] * scale + pe[j] + lemb[j];
  }
}

// Multi-head attention over explicit buffers. q (B*Tq, d), kv keys/values
// (B*Tk, d). klen limits valid keys per batch row; causal additionally caps
// key index at query index + causal_offset.
template <class S>
void attention(const S* q, const S* k, const S* v, S* out, int B, int Tq, int Tk, int H,
               int d, const std::vector<int>& klen, bool causal, int causal_offset = 0) {
  const int dh = d / H;
  const S inv_sqrt = static_cast<S>(1.0 / std::sqrt(double(dh)));
  std::vector<S> scores(static_cast<size_t>(Tk));
#ifdef _OPENMP
#pragma omp parallel for schedule(static) firstprivate(scores) collapse(2) if (B * H > 4)
#endif
  for (int b = 0; b < B; ++b)
    for (int h = 0; h < H; ++h) {
      for (int i = 0; i < Tq; ++i) {
        const S* qi = q + (static_cast<int64_t>(b) * Tq + i) * d + h * dh;
        int kmax = std::min(klen[b], causal ? i + causal_offset + 1 : Tk);
        for (int j = 0; j < kmax; ++j) {
          const S* kj = k + (static_cast<int64_t>(b) * Tk + j) * d + h * dh;
          S dot = S(0);
          for (int c = 0; c < dh; ++c) dot += qi[c] * kj[c];
          scores[j] = dot * inv_sqrt;
        }
        num::softmax_row(scores.data(), kmax);
        S* oi = out + (static_cast<int64_t>(b) * Tq + i) * d + h * dh;
        for (int c = 0; c < dh; ++c) oi[c] = S(0);
        for (int j = 0; j < kmax; ++j) {
          const S* vj = v + (static_cast<int64_t>(b) * Tk + j) * d + h * dh;
          const S p = scores[j];
          for (int c = 0; c < dh; ++c) oi[c] += p * vj[c];
        }
      }
    }
}

template <class S>
void self_attn_block(const detail::LayerParamsT<S>& p, std::vector<S>& x, int B, int T,
                     int H, int d, const std::vector<int>& lens, bool causal) {
  const int64_t rows = static_cast<int64_t>(B) * T;
  std::vector<S> q(rows * d), k(rows * d), v(rows * d), a(rows * d), o(rows * d);
  linear(x.data(), p.self_attn.wq, p.self_attn.bq, q.data(), rows, d, d);
  linear(x.data(), p.self_attn.wk, p.self_attn.bk, k.data(), rows, d, d);
  linear(x.data(), p.self_attn.wv, p.self_attn.bv, v.data(), rows, d, d);
  attention(q.data(), k.data(), v.data(), a.data(), B, T, T, H, d, lens, causal);
  linear(a.data(), p.self_attn.wo, p.self_attn.bo, o.data(), rows, d, d);
  for (int64_t i = 0; i < rows * d; ++i) x[static_cast<size_t>(i)] += o[static_cast<size_t>(i)];
  ln_rows(x.data(), p.ln1_g->value.data(), p.ln1_b->value.data(), rows, d);
}

template <class S>
void ff_block(const detail::LayerParamsT<S>& p, std::vector<S>& x, int64_t rows, int d,
              int ff) {
  std::vector<S> h(rows * ff), o(rows * d);
  linear(x.data(), p.w1, p.b1, h.data(), rows, d, ff);
  for (auto& t : h)
    if (t < S(0)) t = S(0);
  linear(h.data(), p.w2, p.b2, o.data(), rows, ff, d);
  for (int64_t i = 0; i < rows * d; ++i) x[static_cast<size_t>(i)] += o[static_cast<size_t>(i)];
  ln_rows(x.data(), p.ln2_g->value.data(), p.ln2_b->value.data(), rows, d);
}

}  // namespace infer

// Per-layer encoder states for a batch, shape (B*T, d) each. Needed by the
// sentence-level cosine analysis as well as decoding.
template <class S>
struct EncRun {
  std::vector<std::vector<S>> layer_states;
  std::vector<int> lens;  // content + eos per row
  int B = 0, T = 0;
  Lang lang = Lang::Src;
};

template <class S>
EncRun<S> encode(const SeqModelT<S>& m, const std::vector<IdSequence>& batch, Lang lang,
                 const BpeSpecials& sp) {
  if (batch.empty()) throw UsageError("encode: empty batch");
  EncRun<S> run;
  run.B = static_cast<int>(batch.size());
  run.lang = lang;
  for (const auto& s : batch) {
    int n = 0;
    for (int id : s.ids)
      if (id != sp.pad && id != sp.bos && id != sp.eos) ++n;
    if (n == 0) throw DataError("encode: empty input after specials");
    int len = std::min(static_cast<int>(s.ids.size()), m.cfg.max_len - 1) + 1;
    run.lens.push_back(len);
    run.T = std::max(run.T, len);
  }
  const int d = m.cfg.model_dim;
  std::vector<int> ids(static_cast<size_t>(run.B) * run.T, sp.pad);
  for (int b = 0; b < run.B; ++b) {
    int n = run.lens[b] - 1;
    for (int j = 0; j < n; ++j) ids[static_cast<size_t>(b) * run.T + j] = batch[b].ids[j];
    ids[static_cast<size_t>(b) * run.T + n] = sp.eos;
  }
  std::vector<S> x(static_cast<size_t>(run.B) * run.T * d);
  infer::add_embeddings(m, ids, run.B, run.T, lang, 0, x.data());
  for (int l = 0; l < m.cfg.num_layers; ++l) {
    const auto& p = m.enc_layer(l, lang);
    infer::self_attn_block(p, x, run.B, run.T, m.cfg.num_heads, d, run.lens, false);
    infer::ff_block(p, x, static_cast<int64_t>(run.B) * run.T, d, m.cfg.ff_dim);
    run.layer_states.push_back(x);
  }
  return run;
}

// Greedy argmax decoding with per-layer KV caches. Stops per row at eos or
// after max_out tokens. Output never contains pad/bos/mask ids; eos is
// stripped. cfg.length_penalty is recorded in the config but has no effect
// on argmax token choice.
template <class S>
std::vector<std::vector<int>> decode_greedy(const SeqModelT<S>& m, const BpeSpecials& sp,
                                            const std::vector<IdSequence>& src,
                                            Lang src_lang, Lang tgt_lang, int max_out) {
  const int d = m.cfg.model_dim, H = m.cfg.num_heads, L = m.cfg.num_layers;
  max_out = std::min(max_out, m.cfg.max_len - 1);
  EncRun<S> enc = encode(m, src, src_lang, sp);
  const int B = enc.B, Ts = enc.T;
  const std::vector<S>& enc_out = enc.layer_states.back();

  // Cross-attention keys/values are fixed per layer; compute once.
  std::vector<std::vector<S>> cross_k(L), cross_v(L);
  const int64_t enc_rows = static_cast<int64_t>(B) * Ts;
  for (int l = 0; l < L; ++l) {
    const auto& p = m.dec_layer(l, tgt_lang);
    cross_k[l].resize(enc_rows * d);
    cross_v[l].resize(enc_rows * d);
    infer::linear(enc_out.data(), p.cross_attn.wk, p.cross_attn.bk, cross_k[l].data(),
                  enc_rows, d, d);
    infer::linear(enc_out.data(), p.cross_attn.wv, p.cross_attn.bv, cross_v[l].data(),
                  enc_rows, d, d);
  }

  std::vector<std::vector<S>> self_k(L), self_v(L);
  for (int l = 0; l < L; ++l) {
    self_k[l].assign(static_cast<size_t>(B) * max_out * d, S(0));
    self_v[l].assign(static_cast<size_t>(B) * max_out * d, S(0));
  }

  std::vector<std::vector<int>> out(B);
  std::vector<int> prev(B, sp.bos);
  std::vector<bool> done(B, false);
  std::vector<S> x(static_cast<size_t>(B) * d), q(static_cast<size_t>(B) * d),
      kt(static_cast<size_t>(B) * d), vt(static_cast<size_t>(B) * d),
      a(static_cast<size_t>(B) * d), o(static_cast<size_t>(B) * d);
  std::vector<int> step_lens(B);

  for (int t = 0; t < max_out; ++t) {
    infer::add_embeddings(m, prev, B, 1, tgt_lang, t, x.data());
    for (int l = 0; l < L; ++l) {
      const auto& p = m.dec_layer(l, tgt_lang);
      infer::linear(x.data(), p.self_attn.wq, p.self_attn.bq, q.data(), B, d, d);
      infer::linear(x.data(), p.self_attn.wk, p.self_attn.bk, kt.data(), B, d, d);
      infer::linear(x.data(), p.self_attn.wv, p.self_attn.bv, vt.data(), B, d, d);
      for (int b = 0; b < B; ++b) {
        std::copy(kt.begin() + static_cast<int64_t>(b) * d,
                  kt.begin() + static_cast<int64_t>(b + 1) * d,
                  self_k[l].begin() + (static_cast<int64_t>(b) * max_out + t) * d);
        std::copy(vt.begin() + static_cast<int64_t>(b) * d,
                  vt.begin() + static_cast<int64_t>(b + 1) * d,
                  self_v[l].begin() + (static_cast<int64_t>(b) * max_out + t) * d);
      }
      std::fill(step_lens.begin(), step_lens.end(), t + 1);
      infer::attention(q.data(), self_k[l].data(), self_v[l].data(), a.data(), B, 1,
                       max_out, H, d, step_lens, false);
      infer::linear(a.data(), p.self_attn.wo, p.self_attn.bo, o.data(), B, d, d);
      for (size_t i = 0; i < x.size(); ++i) x[i] += o[i];
      infer::ln_rows(x.data(), p.ln1_g->value.data(), p.ln1_b->value.data(), B, d);

      infer::linear(x.data(), p.cross_attn.wq, p.cross_attn.bq, q.data(), B, d, d);
      infer::attention(q.data(), cross_k[l].data(), cross_v[l].data(), a.data(), B, 1, Ts,
                       H, d, enc.lens, false);
      infer::linear(a.data(), p.cross_attn.wo, p.cross_attn.bo, o.data(), B, d, d);
      for (size_t i = 0; i < x.size(); ++i) x[i] += o[i];
      infer::ln_rows(x.data(), p.ln3_g->value.data(), p.ln3_b->value.data(), B, d);

      std::vector<S>& xv = x;
      infer::ff_block(p, xv, B, d, m.cfg.ff_dim);
    }
    // Tied projection + argmax; specials other than eos/unk are never chosen.
    const int V = m.cfg.vocab_size;
    std::vector<S> logits(static_cast<size_t>(B) * V);
    num::gemm_nt(x.data(), m.tok_emb->value.data(), logits.data(), B, d, V);
    bool all_done = true;
    for (int b = 0; b < B; ++b) {
      if (done[b]) continue;
      const S* row = logits.data() + static_cast<int64_t>(b) * V;
      int best = -1;
      for (int j = 0; j < V; ++j) {
        if (j == sp.pad || j == sp.bos || j == sp.mask) continue;
        if (best < 0 || row[j] > row[best]) best = j;
      }
      if (best == sp.eos) {
        done[b] = true;
        prev[b] = sp.eos;
      } else {
        out[b].push_back(best);
        prev[b] = best;
        all_done = false;
      }
    }
    if (all_done) break;
  }
  return out;
}

}  // namespace anchormt
