#include "anchormt/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "json.hpp"

#include "anchormt/errors.hpp"

namespace anchormt {

namespace {

struct Entry {
  std::function<void(ExperimentConfig&, const nlohmann::json&)> set;
  std::function<nlohmann::json(const ExperimentConfig&)> get;
};

template <class T, class F>
Entry field(F accessor) {
  return Entry{
      [accessor](ExperimentConfig& c, const nlohmann::json& v) {
        try {
          accessor(c) = v.get<T>();
        } catch (const nlohmann::json::exception&) {
          throw UsageError("bad value type for config key");
        }
      },
      [accessor](const ExperimentConfig& c) {
        return nlohmann::json(accessor(const_cast<ExperimentConfig&>(c)));
      }};
}

const std::map<std::string, Entry>& registry() {
  static const std::map<std::string, Entry> reg = {
      {"seed", field<uint64_t>([](ExperimentConfig& c) -> uint64_t& { return c.seed; })},
      {"jobs", field<int>([](ExperimentConfig& c) -> int& { return c.jobs; })},
      {"corpus.max_sentences",
       field<int64_t>([](ExperimentConfig& c) -> int64_t& { return c.corpus_max_sentences; })},
      {"dict.lowercase",
       field<bool>([](ExperimentConfig& c) -> bool& { return c.dict_lowercase; })},
      {"bpe.merges", field<int>([](ExperimentConfig& c) -> int& { return c.bpe_merges; })},
      {"bpe.max_len", field<int>([](ExperimentConfig& c) -> int& { return c.bpe_max_len; })},
      {"model.num_layers",
       field<int>([](ExperimentConfig& c) -> int& { return c.model.num_layers; })},
      {"model.dim", field<int>([](ExperimentConfig& c) -> int& { return c.model.model_dim; })},
      {"model.ff_dim", field<int>([](ExperimentConfig& c) -> int& { return c.model.ff_dim; })},
      {"model.heads", field<int>([](ExperimentConfig& c) -> int& { return c.model.num_heads; })},
      {"model.max_len", field<int>([](ExperimentConfig& c) -> int& { return c.model.max_len; })},
      {"model.dropout",
       field<double>([](ExperimentConfig& c) -> double& { return c.model.dropout; })},
      {"model.length_penalty",
       field<double>([](ExperimentConfig& c) -> double& { return c.model.length_penalty; })},
      {"model.share.encoder_private_bottom",
       field<int>([](ExperimentConfig& c) -> int& { return c.model.share.encoder_private_bottom; })},
      {"model.share.decoder_private_top",
       field<int>([](ExperimentConfig& c) -> int& { return c.model.share.decoder_private_top; })},
      {"noise.drop_prob",
       field<double>([](ExperimentConfig& c) -> double& { return c.noise.drop_prob; })},
      {"noise.shuffle_window",
       field<int>([](ExperimentConfig& c) -> int& { return c.noise.shuffle_window; })},
      {"at.batch_size", field<int>([](ExperimentConfig& c) -> int& { return c.at.batch_size; })},
      {"at.denoise_weight",
       field<double>([](ExperimentConfig& c) -> double& { return c.at.denoise_weight; })},
      {"at.max_steps",
       field<int64_t>([](ExperimentConfig& c) -> int64_t& { return c.at.max_steps; })},
      {"at.eval_every",
       field<int64_t>([](ExperimentConfig& c) -> int64_t& { return c.at.eval_every; })},
      {"at.patience", field<int>([](ExperimentConfig& c) -> int& { return c.at.patience; })},
      {"at.min_delta",
       field<double>([](ExperimentConfig& c) -> double& { return c.at.min_delta; })},
      {"at.biview_gen_batch_multiplier",
       field<int>([](ExperimentConfig& c) -> int& { return c.at.biview_gen_batch_multiplier; })},
      {"at.biview_max_rounds",
       field<int64_t>([](ExperimentConfig& c) -> int64_t& { return c.at.biview_max_rounds; })},
      {"at.biview_denoise",
       field<bool>([](ExperimentConfig& c) -> bool& { return c.at.biview_denoise; })},
      {"at.max_decode_len",
       field<int>([](ExperimentConfig& c) -> int& { return c.at.max_decode_len; })},
      {"at.lr", field<double>([](ExperimentConfig& c) -> double& { return c.at.lr; })},
      {"at.warmup_steps",
       field<int64_t>([](ExperimentConfig& c) -> int64_t& { return c.at.warmup_steps; })},
      {"at.clip_norm",
       field<double>([](ExperimentConfig& c) -> double& { return c.at.clip_norm; })},
      {"acp.mask_prob",
       field<double>([](ExperimentConfig& c) -> double& { return c.acp.mask_prob; })},
      {"acp.split_mask",
       field<double>([](ExperimentConfig& c) -> double& { return c.acp.split_mask; })},
      {"acp.split_random",
       field<double>([](ExperimentConfig& c) -> double& { return c.acp.split_random; })},
      {"acp.split_keep",
       field<double>([](ExperimentConfig& c) -> double& { return c.acp.split_keep; })},
      {"acp.steps", field<int64_t>([](ExperimentConfig& c) -> int64_t& { return c.acp.steps; })},
      {"acp.batch_size",
       field<int>([](ExperimentConfig& c) -> int& { return c.acp.batch_size; })},
      {"acp.lr", field<double>([](ExperimentConfig& c) -> double& { return c.acp.lr; })},
      {"acp.warmup_steps",
       field<int64_t>([](ExperimentConfig& c) -> int64_t& { return c.acp.warmup_steps; })},
      {"synth.vocab_size",
       field<int>([](ExperimentConfig& c) -> int& { return c.synth.vocab_size; })},
      {"synth.sentence_count",
       field<int>([](ExperimentConfig& c) -> int& { return c.synth.sentence_count; })},
      {"synth.min_len", field<int>([](ExperimentConfig& c) -> int& { return c.synth.min_len; })},
      {"synth.max_len", field<int>([](ExperimentConfig& c) -> int& { return c.synth.max_len; })},
      {"synth.reorder_window",
       field<int>([](ExperimentConfig& c) -> int& { return c.synth.reorder_window; })},
      {"synth.dict_coverage",
       field<double>([](ExperimentConfig& c) -> double& { return c.synth.dict_coverage; })},
      {"synth.heldout_valid",
       field<int>([](ExperimentConfig& c) -> int& { return c.synth.heldout_valid; })},
      {"synth.heldout_test",
       field<int>([](ExperimentConfig& c) -> int& { return c.synth.heldout_test; })},
      {"emb.dim", field<int>([](ExperimentConfig& c) -> int& { return c.emb.dim; })},
      {"emb.window", field<int>([](ExperimentConfig& c) -> int& { return c.emb.window; })},
      {"emb.negatives", field<int>([](ExperimentConfig& c) -> int& { return c.emb.negatives; })},
      {"emb.min_count", field<int>([](ExperimentConfig& c) -> int& { return c.emb.min_count; })},
      {"emb.epochs", field<int>([](ExperimentConfig& c) -> int& { return c.emb.epochs; })},
      {"emb.lr", field<double>([](ExperimentConfig& c) -> double& { return c.emb.lr; })},
      {"eval.batch", field<int>([](ExperimentConfig& c) -> int& { return c.eval_batch; })},
      {"eval.max_out", field<int>([](ExperimentConfig& c) -> int& { return c.eval_max_out; })},
  };
  return reg;
}

}  // namespace

void ExperimentConfig::apply_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("config parse error in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw DataError("config must be a flat JSON object");
  const auto& reg = registry();
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto entry = reg.find(it.key());
    if (entry == reg.end()) throw UsageError("unknown config key: " + it.key());
    try {
      entry->second.set(*this, it.value());
    } catch (const UsageError&) {
      throw UsageError("bad value for config key " + it.key());
    }
  }
}

void ExperimentConfig::apply_kv(const std::string& key, const std::string& value) {
  const auto& reg = registry();
  auto entry = reg.find(key);
  if (entry == reg.end()) throw UsageError("unknown config key: " + key);
  nlohmann::json v;
  try {
    v = nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception&) {
    v = value;  // bare strings allowed
  }
  try {
    entry->second.set(*this, v);
  } catch (const UsageError&) {
    throw UsageError("bad value for config key " + key + ": " + value);
  }
}

std::string ExperimentConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, entry] : registry()) j[key] = entry.get(*this);
  return j.dump();
}

void ExperimentConfig::finalize() {
  at.noise = noise;
  at.seed = seed;
  acp.seed = seed;
  synth.seed = seed;
  emb.seed = seed;
}

}  // namespace anchormt
