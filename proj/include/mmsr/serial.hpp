// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON (de)serialization for the small config structs, shared by the
// checkpoint format and the experiment manifest.

#pragma once

#include <nlohmann/json.hpp>

#include "mmsr/data.hpp"
#include "mmsr/degradation.hpp"
#include "mmsr/fusion.hpp"
#include "mmsr/sr_model.hpp"
#include "mmsr/trainer.hpp"

namespace mmsr {

inline void to_json(nlohmann::json& j, const SRModelConfig& c) {
  j = {{"n_res_blocks", c.n_res_blocks},
       {"n_features", c.n_features},
       {"scale", c.scale},
       {"res_scale", c.res_scale},
       {"in_channels", c.in_channels}};
}

inline void from_json(const nlohmann::json& j, SRModelConfig& c) {
  j.at("n_res_blocks").get_to(c.n_res_blocks);
  j.at("n_features").get_to(c.n_features);
  j.at("scale").get_to(c.scale);
  j.at("res_scale").get_to(c.res_scale);
  j.at("in_channels").get_to(c.in_channels);
}

inline void to_json(nlohmann::json& j, const FusionConfig& c) {
  j = {{"n_inputs", c.n_inputs},
       {"n_features", c.n_features},
       {"n_res_blocks", c.n_res_blocks},
       {"in_channels", c.in_channels},
       {"skip_mode", "mean_skip"}};
}

inline void from_json(const nlohmann::json& j, FusionConfig& c) {
  j.at("n_inputs").get_to(c.n_inputs);
  j.at("n_features").get_to(c.n_features);
  j.at("n_res_blocks").get_to(c.n_res_blocks);
  j.at("in_channels").get_to(c.in_channels);
}

inline void to_json(nlohmann::json& j, const TrainSchedule& s) {
  j = {{"lr0", s.lr0}, {"half_life", s.half_life}, {"total_iters", s.total_iters}};
}

inline void from_json(const nlohmann::json& j, TrainSchedule& s) {
  j.at("lr0").get_to(s.lr0);
  j.at("half_life").get_to(s.half_life);
  j.at("total_iters").get_to(s.total_iters);
}

inline void to_json(nlohmann::json& j, const PatchSpec& p) {
  j = {{"hr_patch", p.hr_patch}, {"scale", p.scale}, {"batch", p.batch}, {"seed", p.seed}};
}

inline void from_json(const nlohmann::json& j, PatchSpec& p) {
  j.at("hr_patch").get_to(p.hr_patch);
  j.at("scale").get_to(p.scale);
  j.at("batch").get_to(p.batch);
  j.at("seed").get_to(p.seed);
}

inline void to_json(nlohmann::json& j, const DegradationSpec& d) {
  j = {{"scale", d.scale}, {"noise_psnr_db", d.noise_psnr_db}, {"seed", d.seed}};
}

inline void from_json(const nlohmann::json& j, DegradationSpec& d) {
  j.at("scale").get_to(d.scale);
  j.at("noise_psnr_db").get_to(d.noise_psnr_db);
  j.at("seed").get_to(d.seed);
}

}  // namespace mmsr
