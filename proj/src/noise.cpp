#include "anchormt/noise.hpp"

#include <algorithm>
#include <numeric>

#include "anchormt/errors.hpp"

namespace anchormt {

IdSequence corrupt(const IdSequence& ids, const NoiseConfig& cfg, const BpeSpecials& sp,
                   Rng& rng) {
  cfg.validate();
  const size_t n = ids.ids.size();
  if (n == 0) return ids;

  std::vector<char> keep(n, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  size_t survivors = 0;
  std::vector<size_t> content;
  for (size_t i = 0; i < n; ++i) {
    bool special = ids.ids[i] == sp.pad || ids.ids[i] == sp.bos || ids.ids[i] == sp.eos ||
                   ids.ids[i] == sp.mask;
    if (!special) {
      content.push_back(i);
      if (unit(rng) < cfg.drop_prob) keep[i] = 0;
    }
    if (keep[i]) ++survivors;
  }
  if (survivors == 0 && !content.empty()) {
    std::uniform_int_distribution<size_t> pick(0, content.size() - 1);
    keep[content[pick(rng)]] = 1;
  }

  std::vector<size_t> order;
  order.reserve(n);
  for (size_t i = 0; i < n; ++i)
    if (keep[i]) order.push_back(i);

  if (cfg.shuffle_window > 0 && order.size() > 1) {
    std::uniform_real_distribution<double> jitter(0.0, cfg.shuffle_window + 1.0);
    std::vector<double> key(order.size());
    for (size_t i = 0; i < order.size(); ++i) key[i] = static_cast<double>(i) + jitter(rng);
    std::vector<size_t> perm(order.size());
    std::iota(perm.begin(), perm.end(), size_t{0});
    std::stable_sort(perm.begin(), perm.end(),
                     [&](size_t a, size_t b) { return key[a] < key[b]; });
    std::vector<size_t> shuffled(order.size());
    for (size_t i = 0; i < perm.size(); ++i) shuffled[i] = order[perm[i]];
    order = std::move(shuffled);
  }

  IdSequence out;
  out.lang = ids.lang;
  out.ids.reserve(order.size());
  out.anchor_mask.reserve(order.size());
  for (size_t i : order) {
    out.ids.push_back(ids.ids[i]);
    out.anchor_mask.push_back(i < ids.anchor_mask.size() && ids.anchor_mask[i]);
  }
  return out;
}

}  // namespace anchormt
