#include "anchormt/bleu.hpp"

#include <cmath>
#include <map>
#include <string>

#include "anchormt/errors.hpp"

namespace anchormt {

namespace {

std::map<std::string, int64_t> ngram_counts(const std::vector<std::string>& toks, int n) {
  std::map<std::string, int64_t> out;
  if (static_cast<int>(toks.size()) < n) return out;
  for (size_t i = 0; i + n <= toks.size(); ++i) {
    std::string key;
    for (int j = 0; j < n; ++j) {
      if (j) key += '\x1f';
      key += toks[i + j];
    }
    ++out[key];
  }
  return out;
}

}  // namespace

BleuReport bleu(const std::vector<SentenceTokens>& hypotheses,
                const std::vector<SentenceTokens>& references) {
  if (hypotheses.empty()) throw DataError("bleu: empty corpus");
  if (hypotheses.size() != references.size())
    throw UsageError("bleu: hypothesis/reference count mismatch");

  std::array<int64_t, 4> correct{}, total{};
  int64_t hyp_len = 0, ref_len = 0;
  for (size_t i = 0; i < hypotheses.size(); ++i) {
    const auto& hyp = hypotheses[i].tokens;
    const auto& ref = references[i].tokens;
    hyp_len += static_cast<int64_t>(hyp.size());
    ref_len += static_cast<int64_t>(ref.size());
    for (int n = 1; n <= 4; ++n) {
      auto hc = ngram_counts(hyp, n);
      auto rc = ngram_counts(ref, n);
      for (const auto& [g, c] : hc) {
        total[n - 1] += c;
        auto it = rc.find(g);
        if (it != rc.end()) correct[n - 1] += std::min(c, it->second);
      }
    }
  }

  BleuReport r;
  r.hyp_length = hyp_len;
  r.ref_length = ref_len;
  bool zero = hyp_len == 0;
  for (int n = 0; n < 4; ++n) {
    r.ngram_precisions[n] =
        total[n] > 0 ? static_cast<double>(correct[n]) / static_cast<double>(total[n]) : 0.0;
    if (correct[n] == 0) zero = true;
  }
  r.brevity_penalty =
      hyp_len >= ref_len || hyp_len == 0
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  if (zero) {
    r.bleu = 0.0;
    return r;
  }
  double log_sum = 0.0;
  for (int n = 0; n < 4; ++n) log_sum += std::log(r.ngram_precisions[n]);
  r.bleu = 100.0 * r.brevity_penalty * std::exp(log_sum / 4.0);
  return r;
}

}  // namespace anchormt
