#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "anchormt/acp.hpp"
#include "anchormt/at.hpp"
#include "anchormt/embeddings.hpp"
#include "anchormt/synth.hpp"

namespace anchormt {

// All module knobs under flat dotted keys ("at.batch_size"). Unknown keys
// are rejected; every run echoes the resolved config verbatim.
struct ExperimentConfig {
  uint64_t seed = 1;
  int jobs = 1;

  int64_t corpus_max_sentences = 0;  // 0 = unlimited
  bool dict_lowercase = false;

  int bpe_merges = 2000;
  int bpe_max_len = 100;

  ModelConfig model;
  NoiseConfig noise;
  ATConfig at;
  AcpConfig acp;
  SynthSpec synth;
  SgnsConfig emb;

  int eval_batch = 64;
  int eval_max_out = 0;  // 0 = auto from source length

  // Returns the list of unknown keys encountered (empty means all applied).
  void apply_json_file(const std::string& path);
  void apply_kv(const std::string& key, const std::string& value);
  std::string to_json() const;  // flat dotted keys, sorted

  void finalize();  // cross-field propagation (seeds, noise into at, ...)
};

}  // namespace anchormt
