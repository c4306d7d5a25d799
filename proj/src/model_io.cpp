#include "anchormt/model_io.hpp"

#include <fstream>

#include "json.hpp"

#include "anchormt/checkpoint.hpp"

namespace anchormt {

void save_model(const SeqModelT<float>& model, const std::string& path,
                const std::string& kind) {
  std::vector<num::NamedTensor> tensors;
  for (const auto& [name, node] : model.named_params())
    tensors.push_back(num::to_named(name, node->value));
  save_checkpoint(path, tensors, 4);

  nlohmann::json j;
  j["kind"] = kind;
  j["config"] = {{"num_layers", model.cfg.num_layers},
                 {"model_dim", model.cfg.model_dim},
                 {"ff_dim", model.cfg.ff_dim},
                 {"num_heads", model.cfg.num_heads},
                 {"max_len", model.cfg.max_len},
                 {"vocab_size", model.cfg.vocab_size},
                 {"dropout", model.cfg.dropout},
                 {"length_penalty", model.cfg.length_penalty}};
  j["share"] = {{"encoder_private_bottom", model.cfg.share.encoder_private_bottom},
                {"decoder_private_top", model.cfg.share.decoder_private_top}};
  std::ofstream out(path + ".json", std::ios::binary);
  if (!out) throw DataError("cannot write model sidecar: " + path + ".json");
  out << j.dump(1, '\t') << '\n';
}

namespace {

nlohmann::json load_sidecar(const std::string& path) {
  std::ifstream in(path + ".json", std::ios::binary);
  if (!in) throw DataError("cannot open model sidecar: " + path + ".json");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model sidecar parse error: " + std::string(e.what()));
  }
  return j;
}

}  // namespace

std::string load_model_kind(const std::string& path) {
  return load_sidecar(path).value("kind", "seq_model");
}

SeqModelT<float> load_model(const std::string& path) {
  nlohmann::json j = load_sidecar(path);
  ModelConfig cfg;
  const auto& c = j.at("config");
  cfg.num_layers = c.at("num_layers").get<int>();
  cfg.model_dim = c.at("model_dim").get<int>();
  cfg.ff_dim = c.at("ff_dim").get<int>();
  cfg.num_heads = c.at("num_heads").get<int>();
  cfg.max_len = c.at("max_len").get<int>();
  cfg.vocab_size = c.at("vocab_size").get<int>();
  cfg.dropout = c.value("dropout", 0.1);
  cfg.length_penalty = c.value("length_penalty", 1.0);
  const auto& s = j.at("share");
  cfg.share.encoder_private_bottom = s.at("encoder_private_bottom").get<int>();
  cfg.share.decoder_private_top = s.at("decoder_private_top").get<int>();

  SeqModelT<float> model = init_model<float>(cfg, 0);
  auto tensors = num::load_checkpoint(path);
  std::unordered_map<std::string, const num::NamedTensor*> by_name;
  for (const auto& t : tensors) by_name.emplace(t.name, &t);
  std::string missing;
  for (auto& [name, node] : model.named_params()) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      missing += missing.empty() ? name : ", " + name;
      continue;
    }
    num::copy_into(*it->second, node->value);
  }
  if (!missing.empty())
    throw DataError("model checkpoint " + path + " missing tensors: " + missing);
  return model;
}

}  // namespace anchormt
