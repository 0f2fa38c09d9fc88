// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint format shared by SR models and the fusion net:
//   "MMSR" magic, u16 format version, u32 header length, JSON header,
//   then raw little-endian float32 parameter buffers in header order.
// The header records kind, config, class label, and a (name, dtype, shape)
// manifest per parameter. Round trips are bit-exact.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmsr/fusion.hpp"
#include "mmsr/sr_model.hpp"

namespace mmsr {

inline constexpr char kCheckpointMagic[4] = {'M', 'M', 'S', 'R'};
inline constexpr uint16_t kCheckpointVersion = 1;

void save_sr_checkpoint(const std::string& path, SRModel<float>& model);
SRModel<float> load_sr_checkpoint(const std::string& path);

void save_fusion_checkpoint(const std::string& path, FusionNet<float>& net);
FusionNet<float> load_fusion_checkpoint(const std::string& path);

// Peeks at the header without reading parameter data: "sr_model" or
// "fusion_net".
std::string checkpoint_kind(const std::string& path);

// FNV-1a over a byte stream; used to fingerprint parameter states (the
// frozen-bank contract checks) and manifests.
uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull);
std::string hex16(uint64_t v);

// Digest over names and raw parameter bytes, in parameter order.
uint64_t params_checksum(const std::vector<NamedParam<float>>& params);

}  // namespace mmsr
