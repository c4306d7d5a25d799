#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "anchormt/adam.hpp"
#include "anchormt/bpe.hpp"
#include "anchormt/tape.hpp"

namespace anchormt {

// Which layers stay language-private. The remaining encoder layers (top) and
// decoder layers (bottom) are shared by both languages. Setting both counts
// to num_layers disables sharing entirely.
struct ShareSpec {
  int encoder_private_bottom = 1;
  int decoder_private_top = 1;
};

struct ModelConfig {
  int num_layers = 4;
  int model_dim = 64;
  int ff_dim = 256;
  int num_heads = 4;
  int max_len = 64;
  int vocab_size = 0;
  double dropout = 0.1;
  double length_penalty = 1.0;  // recorded; a no-op under greedy argmax
  ShareSpec share;

  void validate() const {
    if (model_dim % num_heads != 0) throw UsageError("model_dim must divide by num_heads");
    if (num_layers < 1 || vocab_size < 6) throw UsageError("bad model config");
    if (share.encoder_private_bottom < 0 || share.encoder_private_bottom > num_layers ||
        share.decoder_private_top < 0 || share.decoder_private_top > num_layers)
      throw UsageError("share spec inconsistent with num_layers");
  }
};

namespace detail {

template <class S>
struct AttnParamsT {
  num::NodeRefT<S> wq, wk, wv, wo;  // (d, d)
  num::NodeRefT<S> bq, bk, bv, bo;  // (d)
};

template <class S>
struct LayerParamsT {
  AttnParamsT<S> self_attn;
  AttnParamsT<S> cross_attn;  // decoder layers only
  bool has_cross = false;
  num::NodeRefT<S> ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
  num::NodeRefT<S> w1, b1, w2, b2;  // feed-forward
};

}  // namespace detail

// Encoder-decoder transformer with one tied embedding table for the joint
// BPE vocabulary. Layer storages are shared between the two language paths
// per ShareSpec; a shared layer is one storage referenced from both paths.
template <class S>
struct SeqModelT {
  using Ref = num::NodeRefT<S>;
  using LayerPtr = std::shared_ptr<detail::LayerParamsT<S>>;

  ModelConfig cfg;
  Ref tok_emb;   // (V, d); also the output projection (tied)
  Ref lang_emb;  // (2, d)
  num::TensorT<S> pos_enc;  // (max_len, d), fixed sinusoidal
  std::vector<std::array<LayerPtr, 2>> enc_layers;  // [layer][lang]
  std::vector<std::array<LayerPtr, 2>> dec_layers;

  const detail::LayerParamsT<S>& enc_layer(int i, Lang l) const {
    return *enc_layers[i][static_cast<int>(l)];
  }
  const detail::LayerParamsT<S>& dec_layer(int i, Lang l) const {
    return *dec_layers[i][static_cast<int>(l)];
  }
  bool enc_layer_shared(int i) const { return enc_layers[i][0] == enc_layers[i][1]; }
  bool dec_layer_shared(int i) const { return dec_layers[i][0] == dec_layers[i][1]; }

  struct Named {
    std::string name;
    Ref node;
  };

  std::vector<Named> named_params() const {
    std::vector<Named> out;
    out.push_back({"tok_emb", tok_emb});
    out.push_back({"lang_emb", lang_emb});
    auto add_layer = [&](const std::string& prefix, const LayerPtr& lp) {
      auto& p = *lp;
      auto attn = [&](const std::string& ap, const detail::AttnParamsT<S>& a) {
        out.push_back({prefix + ap + ".wq", a.wq});
        out.push_back({prefix + ap + ".wk", a.wk});
        out.push_back({prefix + ap + ".wv", a.wv});
        out.push_back({prefix + ap + ".wo", a.wo});
        out.push_back({prefix + ap + ".bq", a.bq});
        out.push_back({prefix + ap + ".bk", a.bk});
        out.push_back({prefix + ap + ".bv", a.bv});
        out.push_back({prefix + ap + ".bo", a.bo});
      };
      attn("self", p.self_attn);
      if (p.has_cross) attn("cross", p.cross_attn);
      out.push_back({prefix + "ln1.g", p.ln1_g});
      out.push_back({prefix + "ln1.b", p.ln1_b});
      out.push_back({prefix + "ln2.g", p.ln2_g});
      out.push_back({prefix + "ln2.b", p.ln2_b});
      if (p.has_cross) {
        out.push_back({prefix + "ln3.g", p.ln3_g});
        out.push_back({prefix + "ln3.b", p.ln3_b});
      }
      out.push_back({prefix + "ff.w1", p.w1});
      out.push_back({prefix + "ff.b1", p.b1});
      out.push_back({prefix + "ff.w2", p.w2});
      out.push_back({prefix + "ff.b2", p.b2});
    };
    auto stack = [&](const char* tag, const std::vector<std::array<LayerPtr, 2>>& layers) {
      for (size_t i = 0; i < layers.size(); ++i) {
        bool shared = layers[i][0] == layers[i][1];
        if (shared) {
          add_layer(std::string(tag) + "." + std::to_string(i) + ".shared.", layers[i][0]);
        } else {
          add_layer(std::string(tag) + "." + std::to_string(i) + ".src.", layers[i][0]);
          add_layer(std::string(tag) + "." + std::to_string(i) + ".tgt.", layers[i][1]);
        }
      }
    };
    stack("enc", enc_layers);
    stack("dec", dec_layers);
    return out;
  }

  std::vector<Ref> parameters() const {
    std::vector<Ref> out;
    for (auto& n : named_params()) out.push_back(n.node);
    return out;
  }

  int64_t num_params() const {
    int64_t n = 0;
    for (auto& p : parameters()) n += p->value.numel();
    return n;
  }

  SeqModelT clone() const {
    SeqModelT copy;
    copy.cfg = cfg;
    copy.tok_emb = num::make_param(tok_emb->value.clone());
    copy.lang_emb = num::make_param(lang_emb->value.clone());
    copy.pos_enc = pos_enc;
    auto clone_layer = [](const LayerPtr& lp) {
      auto out = std::make_shared<detail::LayerParamsT<S>>();
      auto cp = [](const num::NodeRefT<S>& n) { return num::make_param(n->value.clone()); };
      out->has_cross = lp->has_cross;
      out->self_attn = {cp(lp->self_attn.wq), cp(lp->self_attn.wk), cp(lp->self_attn.wv),
                        cp(lp->self_attn.wo), cp(lp->self_attn.bq), cp(lp->self_attn.bk),
                        cp(lp->self_attn.bv), cp(lp->self_attn.bo)};
      if (lp->has_cross)
        out->cross_attn = {cp(lp->cross_attn.wq), cp(lp->cross_attn.wk), cp(lp->cross_attn.wv),
                           cp(lp->cross_attn.wo), cp(lp->cross_attn.bq), cp(lp->cross_attn.bk),
                           cp(lp->cross_attn.bv), cp(lp->cross_attn.bo)};
      out->ln1_g = cp(lp->ln1_g);
      out->ln1_b = cp(lp->ln1_b);
      out->ln2_g = cp(lp->ln2_g);
      out->ln2_b = cp(lp->ln2_b);
      if (lp->has_cross) {
        out->ln3_g = cp(lp->ln3_g);
        out->ln3_b = cp(lp->ln3_b);
      }
      out->w1 = cp(lp->w1);
      out->b1 = cp(lp->b1);
      out->w2 = cp(lp->w2);
      out->b2 = cp(lp->b2);
      return out;
    };
    auto clone_stack = [&](const std::vector<std::array<LayerPtr, 2>>& in,
                           std::vector<std::array<LayerPtr, 2>>& out_stack) {
      for (const auto& pair : in) {
        LayerPtr a = clone_layer(pair[0]);
        LayerPtr b = pair[0] == pair[1] ? a : clone_layer(pair[1]);
        out_stack.push_back({a, b});
      }
    };
    clone_stack(enc_layers, copy.enc_layers);
    clone_stack(dec_layers, copy.dec_layers);
    return copy;
  }
};

namespace detail {

template <class S>
num::TensorT<S> sinusoidal_positions(int max_len, int d) {
  num::TensorT<S> pos({max_len, d});
  S* p = pos.data();
  for (int t = 0; t < max_len; ++t)
    for (int i = 0; i < d; ++i) {
      double angle = t / std::pow(10000.0, 2.0 * (i / 2) / d);
      p[static_cast<int64_t>(t) * d + i] =
          static_cast<S>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  return pos;
}

template <class S>
num::NodeRefT<S> init_weight(std::vector<int> shape, Rng& rng, double std_dev = 0.02) {
  num::TensorT<S> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, std_dev);
  S* p = t.data();
  for (int64_t i = 0, n = t.numel(); i < n; ++i) p[i] = static_cast<S>(dist(rng));
  return num::make_param(std::move(t));
}

template <class S>
num::NodeRefT<S> init_const(std::vector<int> shape, S v) {
  return num::make_param(num::TensorT<S>::full(std::move(shape), v));
}

template <class S>
std::shared_ptr<LayerParamsT<S>> init_layer(int d, int ff, bool cross, Rng& rng) {
  auto lp = std::make_shared<LayerParamsT<S>>();
  auto attn = [&](AttnParamsT<S>& a) {
    a.wq = init_weight<S>({d, d}, rng);
    a.wk = init_weight<S>({d, d}, rng);
    a.wv = init_weight<S>({d, d}, rng);
    a.wo = init_weight<S>({d, d}, rng);
    a.bq = init_const<S>({d}, S(0));
    a.bk = init_const<S>({d}, S(0));
    a.bv = init_const<S>({d}, S(0));
    a.bo = init_const<S>({d}, S(0));
  };
  attn(lp->self_attn);
  lp->has_cross = cross;
  if (cross) attn(lp->cross_attn);
  lp->ln1_g = init_const<S>({d}, S(1));
  lp->ln1_b = init_const<S>({d}, S(0));
  lp->ln2_g = init_const<S>({d}, S(1));
  lp->ln2_b = init_const<S>({d}, S(0));
  if (cross) {
    lp->ln3_g = init_const<S>({d}, S(1));
    lp->ln3_b = init_const<S>({d}, S(0));
  }
  lp->w1 = init_weight<S>({d, ff}, rng);
  lp->b1 = init_const<S>({ff}, S(0));
  lp->w2 = init_weight<S>({ff, d}, rng);
  lp->b2 = init_const<S>({d}, S(0));
  return lp;
}

}  // namespace detail

template <class S>
SeqModelT<S> init_model(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  SeqModelT<S> m;
  m.cfg = cfg;
  Rng rng = make_stream(seed, "model/init");
  m.tok_emb = detail::init_weight<S>({cfg.vocab_size, cfg.model_dim}, rng);
  m.lang_emb = detail::init_weight<S>({2, cfg.model_dim}, rng);
  m.pos_enc = detail::sinusoidal_positions<S>(cfg.max_len, cfg.model_dim);
  for (int i = 0; i < cfg.num_layers; ++i) {
    bool priv = i < cfg.share.encoder_private_bottom;
    auto l0 = detail::init_layer<S>(cfg.model_dim, cfg.ff_dim, false, rng);
    auto l1 = priv ? detail::init_layer<S>(cfg.model_dim, cfg.ff_dim, false, rng) : l0;
    m.enc_layers.push_back({l0, l1});
  }
  for (int i = 0; i < cfg.num_layers; ++i) {
    bool priv = i >= cfg.num_layers - cfg.share.decoder_private_top;
    auto l0 = detail::init_layer<S>(cfg.model_dim, cfg.ff_dim, true, rng);
    auto l1 = priv ? detail::init_layer<S>(cfg.model_dim, cfg.ff_dim, true, rng) : l0;
    m.dec_layers.push_back({l0, l1});
  }
  return m;
}

// -------- tape forward --------

// Dropout context: rng == nullptr disables dropout (inference / grad checks).
template <class S>
struct ForwardCtx {
  num::TapeT<S>& tape;
  Rng* rng = nullptr;
  double dropout = 0.0;

  num::NodeRefT<S> drop(num::NodeRefT<S> x) {
    if (!rng || dropout <= 0.0) return x;
    return tape.dropout(x, dropout, *rng);
  }
};

namespace detail {

template <class S>
num::NodeRefT<S> mha(ForwardCtx<S>& ctx, const AttnParamsT<S>& p, num::NodeRefT<S> q_in,
                     num::NodeRefT<S> kv_in, int B, int Tq, int Tk,
                     const num::TensorT<S>& mask, int H, int d) {
  auto& t = ctx.tape;
  const int dh = d / H;
  auto heads = [&](num::NodeRefT<S> x, num::NodeRefT<S> w, num::NodeRefT<S> b, int T) {
    auto y = t.bias_add(t.matmul(x, w), b);
    y = t.reshape(y, {B, T, H, dh});
    y = t.transpose_0213(y);  // (B,H,T,dh)
    return t.reshape(y, {B * H, T, dh});
  };
  auto q = heads(q_in, p.wq, p.bq, Tq);
  auto k = heads(kv_in, p.wk, p.bk, Tk);
  auto v = heads(kv_in, p.wv, p.bv, Tk);
  auto scores = t.scale(t.bmm_nt(q, k), static_cast<S>(1.0 / std::sqrt(double(dh))));
  scores = t.add_attn_mask(scores, mask, H);
  auto probs = ctx.drop(t.softmax_rows(scores));
  auto o = t.bmm(probs, v);  // (B*H, Tq, dh)
  o = t.reshape(o, {B, H, Tq, dh});
  o = t.transpose_0213(o);  // (B,Tq,H,dh)
  o = t.reshape(o, {B * Tq, d});
  return t.bias_add(t.matmul(o, p.wo), p.bo);
}

template <class S>
num::NodeRefT<S> feed_forward(ForwardCtx<S>& ctx, const LayerParamsT<S>& p,
                              num::NodeRefT<S> x) {
  auto& t = ctx.tape;
  auto h = t.relu(t.bias_add(t.matmul(x, p.w1), p.b1));
  return t.bias_add(t.matmul(h, p.w2), p.b2);
}

template <class S>
num::NodeRefT<S> sublayer(ForwardCtx<S>& ctx, num::NodeRefT<S> x, num::NodeRefT<S> y,
                          num::NodeRefT<S> g, num::NodeRefT<S> b) {
  auto& t = ctx.tape;
  return t.layer_norm(t.add(x, ctx.drop(y)), g, b);
}

}  // namespace detail

// Token + position + language embedding for a flattened (B*T) id batch.
template <class S>
num::NodeRefT<S> embed_tokens(ForwardCtx<S>& ctx, const SeqModelT<S>& m,
                              const std::vector<int>& flat_ids, int B, int T, Lang lang) {
  auto& t = ctx.tape;
  const int d = m.cfg.model_dim;
  if (T > m.cfg.max_len) throw UsageError("sequence longer than max_len");
  auto e = t.scale(t.embedding(m.tok_emb, flat_ids), static_cast<S>(std::sqrt(double(d))));
  num::TensorT<S> pos({B * T, d});
  for (int b = 0; b < B; ++b)
    for (int i = 0; i < T; ++i)
      std::copy(m.pos_enc.data() + static_cast<int64_t>(i) * d,
                m.pos_enc.data() + static_cast<int64_t>(i + 1) * d,
                pos.data() + (static_cast<int64_t>(b) * T + i) * d);
  auto lang_rows =
      t.embedding(m.lang_emb, std::vector<int>(static_cast<size_t>(B) * T,
                                               static_cast<int>(lang)));
  auto x = t.add(t.add(e, t.constant(std::move(pos))), lang_rows);
  return ctx.drop(x);
}

// Runs the encoder stack; layer routing picks private or shared storage per
// language. Returns the output of every layer, each (B*T, d).
template <class S>
std::vector<num::NodeRefT<S>> encoder_forward(ForwardCtx<S>& ctx, const SeqModelT<S>& m,
                                              const std::vector<int>& flat_ids, int B, int T,
                                              Lang lang, const num::TensorT<S>& self_mask) {
  auto x = embed_tokens(ctx, m, flat_ids, B, T, lang);
  std::vector<num::NodeRefT<S>> states;
  for (int i = 0; i < m.cfg.num_layers; ++i) {
    const auto& p = m.enc_layer(i, lang);
    auto a = detail::mha(ctx, p.self_attn, x, x, B, T, T, self_mask, m.cfg.num_heads,
                         m.cfg.model_dim);
    x = detail::sublayer(ctx, x, a, p.ln1_g, p.ln1_b);
    auto f = detail::feed_forward(ctx, p, x);
    x = detail::sublayer(ctx, x, f, p.ln2_g, p.ln2_b);
    states.push_back(x);
  }
  return states;
}

template <class S>
num::NodeRefT<S> decoder_forward(ForwardCtx<S>& ctx, const SeqModelT<S>& m,
                                 const std::vector<int>& flat_ids, int B, int T, Lang lang,
                                 num::NodeRefT<S> enc_out, int Ts,
                                 const num::TensorT<S>& self_mask,
                                 const num::TensorT<S>& cross_mask) {
  auto x = embed_tokens(ctx, m, flat_ids, B, T, lang);
  for (int i = 0; i < m.cfg.num_layers; ++i) {
    const auto& p = m.dec_layer(i, lang);
    auto a = detail::mha(ctx, p.self_attn, x, x, B, T, T, self_mask, m.cfg.num_heads,
                         m.cfg.model_dim);
    x = detail::sublayer(ctx, x, a, p.ln1_g, p.ln1_b);
    auto c = detail::mha(ctx, p.cross_attn, x, enc_out, B, T, Ts, cross_mask,
                         m.cfg.num_heads, m.cfg.model_dim);
    x = detail::sublayer(ctx, x, c, p.ln3_g, p.ln3_b);
    auto f = detail::feed_forward(ctx, p, x);
    x = detail::sublayer(ctx, x, f, p.ln2_g, p.ln2_b);
  }
  return x;
}

// Tied output projection: logits = h * tok_emb^T.
template <class S>
num::NodeRefT<S> output_logits(ForwardCtx<S>& ctx, const SeqModelT<S>& m,
                               num::NodeRefT<S> h) {
  return ctx.tape.matmul_nt(h, m.tok_emb);
}

// -------- batching --------

// A teacher-forcing batch: encoder side is content + eos; decoder input is
// bos + content, targets content + eos; pad everywhere else.
struct PaddedBatch {
  std::vector<int> enc_ids;      // B * Ts
  std::vector<int> dec_in;       // B * Tt
  std::vector<int> targets;      // B * Tt, pad at ignored positions
  std::vector<int> enc_lens;     // content + eos
  std::vector<int> dec_lens;     // content + eos
  int B = 0, Ts = 0, Tt = 0;
  Lang enc_lang = Lang::Src, dec_lang = Lang::Tgt;
};

inline PaddedBatch make_padded_batch(const std::vector<IdSequence>& src,
                                     const std::vector<IdSequence>& out,
                                     const BpeSpecials& sp, int max_len) {
  if (src.empty() || src.size() != out.size())
    throw UsageError("make_padded_batch: bad pair counts");
  PaddedBatch b;
  b.B = static_cast<int>(src.size());
  b.enc_lang = src[0].lang;
  b.dec_lang = out[0].lang;
  auto clamp_len = [&](size_t n) { return static_cast<int>(std::min<size_t>(n, max_len - 1)); };
  for (int i = 0; i < b.B; ++i) {
    if (src[i].ids.empty() || out[i].ids.empty())
      throw DataError("make_padded_batch: empty sequence in batch");
    b.Ts = std::max(b.Ts, clamp_len(src[i].ids.size()) + 1);
    b.Tt = std::max(b.Tt, clamp_len(out[i].ids.size()) + 1);
  }
  b.enc_ids.assign(static_cast<size_t>(b.B) * b.Ts, sp.pad);
  b.dec_in.assign(static_cast<size_t>(b.B) * b.Tt, sp.pad);
  b.targets.assign(static_cast<size_t>(b.B) * b.Tt, sp.pad);
  for (int i = 0; i < b.B; ++i) {
    int ns = clamp_len(src[i].ids.size());
    for (int j = 0; j < ns; ++j) b.enc_ids[static_cast<size_t>(i) * b.Ts + j] = src[i].ids[j];
    b.enc_ids[static_cast<size_t>(i) * b.Ts + ns] = sp.eos;
    b.enc_lens.push_back(ns + 1);
    int nt = clamp_len(out[i].ids.size());
    b.dec_in[static_cast<size_t>(i) * b.Tt + 0] = sp.bos;
    for (int j = 0; j < nt; ++j) {
      b.dec_in[static_cast<size_t>(i) * b.Tt + j + 1] = out[i].ids[j];
      b.targets[static_cast<size_t>(i) * b.Tt + j] = out[i].ids[j];
    }
    b.targets[static_cast<size_t>(i) * b.Tt + nt] = sp.eos;
    b.dec_lens.push_back(nt + 1);
  }
  return b;
}

template <class S>
num::TensorT<S> key_padding_mask(const std::vector<int>& lens, int B, int Tq, int Tk) {
  num::TensorT<S> mask({B, Tq, Tk});
  S* p = mask.data();
  const S neg = S(-1e9);
  for (int b = 0; b < B; ++b)
    for (int q = 0; q < Tq; ++q)
      for (int k = 0; k < Tk; ++k)
        p[(static_cast<int64_t>(b) * Tq + q) * Tk + k] = k < lens[b] ? S(0) : neg;
  return mask;
}

template <class S>
num::TensorT<S> causal_mask(int B, int T) {
  num::TensorT<S> mask({B, T, T});
  S* p = mask.data();
  const S neg = S(-1e9);
  for (int b = 0; b < B; ++b)
    for (int q = 0; q < T; ++q)
      for (int k = 0; k < T; ++k)
        p[(static_cast<int64_t>(b) * T + q) * T + k] = k <= q ? S(0) : neg;
  return mask;
}

// Teacher-forced cross entropy for one batch; pad positions are ignored.
template <class S>
num::NodeRefT<S> seq2seq_loss(ForwardCtx<S>& ctx, const SeqModelT<S>& m,
                              const PaddedBatch& b, const BpeSpecials& sp) {
  auto enc_mask = key_padding_mask<S>(b.enc_lens, b.B, b.Ts, b.Ts);
  auto states = encoder_forward(ctx, m, b.enc_ids, b.B, b.Ts, b.enc_lang, enc_mask);
  auto self_mask = causal_mask<S>(b.B, b.Tt);
  auto cross_mask = key_padding_mask<S>(b.enc_lens, b.B, b.Tt, b.Ts);
  auto h = decoder_forward(ctx, m, b.dec_in, b.B, b.Tt, b.dec_lang, states.back(), b.Ts,
                           self_mask, cross_mask);
  auto logits = output_logits(ctx, m, h);
  return ctx.tape.cross_entropy(logits, b.targets, sp.pad);
}

// -------- train step --------

struct StepResult {
  double loss = 0.0;
  bool applied = false;  // false when skipped on non-finite loss/gradients
};

template <class S>
StepResult train_step(SeqModelT<S>& m, const PaddedBatch& batch, const BpeSpecials& sp,
                      num::AdamStateT<S>& opt, Rng* dropout_rng, double loss_weight = 1.0) {
  num::TapeT<S> tape;
  ForwardCtx<S> ctx{tape, dropout_rng, m.cfg.dropout};
  auto params = m.parameters();
  StepResult res;
  try {
    auto loss = seq2seq_loss(ctx, m, batch, sp);
    res.loss = static_cast<double>(loss->value.data()[0]);
    if (loss_weight != 1.0) loss = tape.scale(loss, static_cast<S>(loss_weight));
    tape.backward(loss);
    res.applied = adam_step(params, opt);
  } catch (const NumericError&) {
    for (auto& p : params) p->zero_grad();
    res.applied = false;
    res.loss = std::numeric_limits<double>::quiet_NaN();
  }
  tape.clear();
  return res;
}

}  // namespace anchormt
