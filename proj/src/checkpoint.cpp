// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmsr/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mmsr/serial.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

using json = nlohmann::json;

namespace mmsr {

uint64_t fnv1a64(const void* data, size_t n, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex16(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t params_checksum(const std::vector<NamedParam<float>>& params) {
  uint64_t h = 0xcbf29ce484222325ull;
  const unsigned char sep = 0;
  for (const auto& p : params) {
    h = fnv1a64(p.name.data(), p.name.size(), h);
    h = fnv1a64(&sep, 1, h);
    auto d = p.tensor.data();
    h = fnv1a64(d.data(), d.size() * sizeof(float), h);
  }
  return h;
}

namespace {

json params_manifest(const std::vector<NamedParam<float>>& params) {
  json list = json::array();
  for (const auto& p : params) {
    json shape = json::array();
    for (auto d : p.tensor.shape()) shape.push_back(d);
    list.push_back({{"name", p.name}, {"dtype", "f32"}, {"shape", shape}});
  }
  return list;
}

void write_checkpoint(const std::string& path, const json& header,
                      const std::vector<NamedParam<float>>& params) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("checkpoint: cannot open " + path + " for writing");

  const std::string head = header.dump();
  const auto head_len = static_cast<uint32_t>(head.size());
  os.write(kCheckpointMagic, 4);
  os.write(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof(kCheckpointVersion));
  os.write(reinterpret_cast<const char*>(&head_len), sizeof(head_len));
  os.write(head.data(), static_cast<std::streamsize>(head.size()));
  for (const auto& p : params) {
    auto d = p.tensor.data();
    os.write(reinterpret_cast<const char*>(d.data()),
             static_cast<std::streamsize>(d.size() * sizeof(float)));
  }
  if (!os) throw DataError("checkpoint: short write to " + path);
}

json read_header(std::ifstream& is, const std::string& path) {
  char magic[4];
  uint16_t version = 0;
  uint32_t head_len = 0;
  is.read(magic, 4);
  is.read(reinterpret_cast<char*>(&version), sizeof(version));
  is.read(reinterpret_cast<char*>(&head_len), sizeof(head_len));
  if (!is || std::memcmp(magic, kCheckpointMagic, 4) != 0)
    throw DataError("checkpoint: " + path + " is not an MMSR checkpoint");
  if (version != kCheckpointVersion)
    throw DataError("checkpoint: unsupported format version in " + path);

  std::string head(head_len, '\0');
  is.read(head.data(), head_len);
  if (!is) throw DataError("checkpoint: truncated header in " + path);
  try {
    return json::parse(head);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: bad header JSON: ") + e.what());
  }
}

void read_params(std::ifstream& is, const std::string& path, const json& manifest,
                 std::vector<NamedParam<float>>& params) {
  if (!manifest.is_array() || manifest.size() != params.size())
    throw DataError("checkpoint: parameter manifest does not match the model in " + path);
  for (size_t i = 0; i < params.size(); ++i) {
    const json& entry = manifest[i];
    if (entry.at("name").get<std::string>() != params[i].name)
      throw DataError("checkpoint: parameter name mismatch at index " + std::to_string(i));
    if (entry.at("dtype").get<std::string>() != "f32")
      throw DataError("checkpoint: unsupported dtype for " + params[i].name);
    Shape shape = entry.at("shape").get<Shape>();
    if (shape != params[i].tensor.shape())
      throw DataError("checkpoint: shape mismatch for " + params[i].name);
    auto d = params[i].tensor.data();
    is.read(reinterpret_cast<char*>(d.data()),
            static_cast<std::streamsize>(d.size() * sizeof(float)));
    if (!is) throw DataError("checkpoint: truncated parameter data in " + path);
  }
}

}  // namespace

void save_sr_checkpoint(const std::string& path, SRModel<float>& model) {
  json header;
  header["kind"] = "sr_model";
  header["class_label"] = model.class_label();
  header["config"] = model.config();
  header["params"] = params_manifest(model.parameters());
  write_checkpoint(path, header, model.parameters());
}

SRModel<float> load_sr_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open " + path);
  json header = read_header(is, path);
  try {
    if (header.at("kind").get<std::string>() != "sr_model")
      throw DataError("checkpoint: " + path + " does not hold an SR model");
    auto cfg = header.at("config").get<SRModelConfig>();
    SRModel<float> model(cfg, /*seed=*/0, header.at("class_label").get<std::string>());
    auto params = model.parameters();
    read_params(is, path, header.at("params"), params);
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: bad header fields: ") + e.what());
  }
}

void save_fusion_checkpoint(const std::string& path, FusionNet<float>& net) {
  json header;
  header["kind"] = "fusion_net";
  header["config"] = net.config();
  header["params"] = params_manifest(net.parameters());
  write_checkpoint(path, header, net.parameters());
}

FusionNet<float> load_fusion_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open " + path);
  json header = read_header(is, path);
  try {
    if (header.at("kind").get<std::string>() != "fusion_net")
      throw DataError("checkpoint: " + path + " does not hold a fusion net");
    auto cfg = header.at("config").get<FusionConfig>();
    FusionNet<float> net(cfg, /*seed=*/0);
    auto params = net.parameters();
    read_params(is, path, header.at("params"), params);
    return net;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: bad header fields: ") + e.what());
  }
}

std::string checkpoint_kind(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open " + path);
  json header = read_header(is, path);
  try {
    return header.at("kind").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: bad header fields: ") + e.what());
  }
}

}  // namespace mmsr
