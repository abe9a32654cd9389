#include "blochgame/nn_io.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace blochgame::nn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json spec_to_json(const LayerSpec& s) {
  json j{{"kind", s.kind}};
  if (s.kind == "dense") {
    j["in"] = s.in;
    j["out"] = s.out;
  } else if (s.kind == "conv2d") {
    j["in"] = s.in;
    j["out"] = s.out;
    j["kernel"] = s.kernel;
    j["stride"] = s.stride;
  } else if (s.kind == "tanh_scale") {
    j["lo"] = s.lo;
    j["hi"] = s.hi;
  }
  return j;
}

LayerSpec spec_from_json(const json& j) {
  LayerSpec s;
  s.kind = j.at("kind").get<std::string>();
  s.in = j.value("in", 0);
  s.out = j.value("out", 0);
  s.kernel = j.value("kernel", 0);
  s.stride = j.value("stride", 0);
  if (j.contains("lo")) s.lo = j.at("lo").get<std::vector<double>>();
  if (j.contains("hi")) s.hi = j.at("hi").get<std::vector<double>>();
  return s;
}

void write_blob(const fs::path& path, const float* data, Eigen::Index n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
}

void read_blob(const fs::path& path, float* data, Eigen::Index n) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path.string());
  if (in.tellg() != static_cast<std::streamoff>(n * sizeof(float)))
    throw std::runtime_error("checkpoint: blob size mismatch in " + path.string());
  in.seekg(0);
  in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(n * sizeof(float)));
}

}  // namespace

void save_checkpoint(const std::string& dir,
                     std::vector<std::pair<std::string, Sequential<float>*>> nets,
                     const std::string& meta_json) {
  const fs::path target(dir);
  const fs::path tmp(dir + ".tmp");
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  json manifest;
  manifest["format_version"] = kCheckpointFormatVersion;
  manifest["meta"] = json::parse(meta_json);
  json networks = json::object();

  for (auto& [name, net] : nets) {
    json net_j;
    json layers = json::array();
    for (const auto& s : net->specs()) layers.push_back(spec_to_json(s));
    net_j["layers"] = layers;

    json params = json::array();
    for (const auto& p : net->params()) {
      const std::string file = name + "." + p.name + ".bin";
      write_blob(tmp / file, p.value, p.size);
      params.push_back({{"name", p.name}, {"shape", p.blob_shape}, {"file", file}});
    }
    net_j["params"] = params;
    networks[name] = std::move(net_j);
  }
  manifest["networks"] = std::move(networks);

  std::ofstream out(tmp / "manifest.json");
  if (!out) throw std::runtime_error("checkpoint: cannot write manifest");
  out << manifest.dump(2) << "\n";
  out.close();

  fs::remove_all(target);
  fs::rename(tmp, target);
}

Checkpoint load_checkpoint(const std::string& dir) {
  const fs::path base(dir);
  std::ifstream in(base / "manifest.json");
  if (!in) throw std::runtime_error("checkpoint: no manifest in " + dir);
  json manifest = json::parse(in, nullptr, /*allow_exceptions=*/true);

  const int version = manifest.value("format_version", -1);
  if (version != kCheckpointFormatVersion)
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.meta_json = manifest.value("meta", json::object()).dump();

  for (const auto& [name, net_j] : manifest.at("networks").items()) {
    Sequential<float> net;
    for (const auto& layer_j : net_j.at("layers")) net.add_from_spec(spec_from_json(layer_j));

    std::map<std::string, ParamView<float>> by_name;
    for (auto p : net.params()) by_name.emplace(p.name, p);

    for (const auto& param_j : net_j.at("params")) {
      const auto pname = param_j.at("name").get<std::string>();
      auto it = by_name.find(pname);
      if (it == by_name.end())
        throw std::runtime_error("checkpoint: unknown parameter " + name + "." + pname);
      read_blob(base / param_j.at("file").get<std::string>(), it->second.value, it->second.size);
    }
    ckpt.networks.emplace(name, std::move(net));
  }
  return ckpt;
}

}  // namespace blochgame::nn
