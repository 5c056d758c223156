#include "creditarf/config.hpp"

namespace creditarf::config {

StrictObject::StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw InputError("config " + (path_.empty() ? std::string("root") : path_) + ": expected an object");
}

const json* StrictObject::child(const std::string& key) {
  seen_.insert(key);
  auto it = j_.find(key);
  return it == j_.end() ? nullptr : &*it;
}

void StrictObject::finish() const {
  for (const auto& [key, value] : j_.items()) {
    if (!seen_.count(key)) throw InputError("config: unknown key '" + where(key) + "'");
  }
}

json to_json(const fnf::FnfConfig& c) {
  return {{"kind", std::string(fnf::to_string(c.kind))},
          {"output_dim", c.output_dim},
          {"image_side", c.image_side},
          {"conv1_channels", c.conv1_channels},
          {"conv2_channels", c.conv2_channels},
          {"kernel", c.kernel},
          {"node_dim", c.node_dim},
          {"gat_hidden", c.gat_hidden},
          {"gat_slope", c.gat_slope},
          {"lstm_hidden", c.lstm_hidden},
          {"step_dim", c.step_dim}};
}

json to_json(const arf::ArfConfig& c) {
  return {{"embed_dim", c.embed_dim},   {"att_dim", c.att_dim}, {"max_tokens", c.max_tokens},
          {"batch_size", c.batch_size}, {"min_tokens", c.min_tokens}, {"blocks", c.blocks},
          {"heads", c.heads},           {"output_dim", c.output_dim}, {"provider_seed", c.provider_seed}};
}

json to_json(const crp::CrpConfig& c) {
  return {{"hidden", c.hidden},
          {"dropout", c.dropout},
          {"adapter_dim", c.adapter_dim},
          {"mode", std::string(crp::to_string(c.mode))},
          {"financial_only", c.financial_only}};
}

json to_json(const crp::ModelSpec& s) {
  return {{"fnf", to_json(s.fnf)},
          {"arf", to_json(s.arf)},
          {"crp", to_json(s.crp)},
          {"n_features", s.n_features},
          {"arf_input_dim", s.arf_input_dim},
          {"init_seed", s.init_seed},
          {"projection_seed", s.projection_seed}};
}

void read(const json& j, const std::string& path, fnf::FnfConfig& c) {
  StrictObject o(j, path);
  std::string kind(fnf::to_string(c.kind));
  o.get("kind", kind);
  try {
    c.kind = fnf::encoder_kind_from_string(kind);
  } catch (const InputError& e) {
    throw InputError("config " + o.where("kind") + ": " + e.what());
  }
  o.get("output_dim", c.output_dim);
  o.get("image_side", c.image_side);
  o.get("conv1_channels", c.conv1_channels);
  o.get("conv2_channels", c.conv2_channels);
  o.get("kernel", c.kernel);
  o.get("node_dim", c.node_dim);
  o.get("gat_hidden", c.gat_hidden);
  o.get("gat_slope", c.gat_slope);
  o.get("lstm_hidden", c.lstm_hidden);
  o.get("step_dim", c.step_dim);
  o.finish();
}

void read(const json& j, const std::string& path, arf::ArfConfig& c) {
  StrictObject o(j, path);
  o.get("embed_dim", c.embed_dim);
  o.get("att_dim", c.att_dim);
  o.get("max_tokens", c.max_tokens);
  o.get("batch_size", c.batch_size);
  o.get("min_tokens", c.min_tokens);
  o.get("blocks", c.blocks);
  o.get("heads", c.heads);
  o.get("output_dim", c.output_dim);
  o.get("provider_seed", c.provider_seed);
  o.finish();
}

void read(const json& j, const std::string& path, crp::CrpConfig& c) {
  StrictObject o(j, path);
  o.get("hidden", c.hidden);
  o.get("dropout", c.dropout);
  o.get("adapter_dim", c.adapter_dim);
  std::string mode(crp::to_string(c.mode));
  o.get("mode", mode);
  try {
    c.mode = crp::pipeline_mode_from_string(mode);
  } catch (const InputError& e) {
    throw InputError("config " + o.where("mode") + ": " + e.what());
  }
  o.get("financial_only", c.financial_only);
  o.finish();
}

void read(const json& j, const std::string& path, crp::ModelSpec& s) {
  StrictObject o(j, path);
  if (const json* c = o.child("fnf")) read(*c, o.where("fnf"), s.fnf);
  if (const json* c = o.child("arf")) read(*c, o.where("arf"), s.arf);
  if (const json* c = o.child("crp")) read(*c, o.where("crp"), s.crp);
  o.get("n_features", s.n_features);
  o.get("arf_input_dim", s.arf_input_dim);
  o.get("init_seed", s.init_seed);
  o.get("projection_seed", s.projection_seed);
  o.finish();
}

}  // namespace creditarf::config
