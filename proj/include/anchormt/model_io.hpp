#pragma once

#include <string>

#include "anchormt/model.hpp"

namespace anchormt {

// Binary parameter file plus a "<path>.json" sidecar carrying the model
// config, share spec and a kind tag ("seq_model" or "acp_encoder").
void save_model(const SeqModelT<float>& model, const std::string& path,
                const std::string& kind = "seq_model");

SeqModelT<float> load_model(const std::string& path);

std::string load_model_kind(const std::string& path);

}  // namespace anchormt
