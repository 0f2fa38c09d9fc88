// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Declarative end-to-end experiments: a manifest fixes datasets, model and
// fusion configs, schedules, and seeds; each table run trains (or loads
// cached) models, evaluates, renders reports, and applies its directional
// checks. Reruns of the same manifest are byte-identical.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmsr/checkpoint.hpp"
#include "mmsr/data.hpp"
#include "mmsr/metrics.hpp"
#include "mmsr/trainer.hpp"

namespace mmsr {

struct CorpusSpec {
  int n_train = 40;
  int n_test = 10;
  int image_size = 192;

  bool operator==(const CorpusSpec&) const = default;
};

struct ExperimentManifest {
  std::string name = "desk";
  int scale = 4;
  double noise_psnr_db = 40.0;
  CorpusSpec corpus;
  SRModelConfig model = SRModelConfig::desk_preset();
  FusionConfig fusion;
  TrainSchedule sr_schedule = TrainSchedule::desk();
  TrainSchedule fusion_schedule;
  int hr_patch = 96;
  int batch = 8;
  int metric_border_crop = 4;
  int probe_batches = 16;
  uint64_t seed = 7;
  // Paths are not part of the manifest hash, so moving a run directory does
  // not invalidate cached checkpoints.
  std::string out_dir = "runs";
  std::string models_dir;  // defaults to <out_dir>/models

  static ExperimentManifest desk(uint64_t seed = 7);
  static ExperimentManifest paper(uint64_t seed = 7);

  void validate() const;
  std::string resolved_models_dir() const;
};

// Canonical-JSON FNV-1a digest of everything that affects results (paths
// excluded); names run directories and checkpoint cache entries.
uint64_t manifest_hash(const ExperimentManifest& m);

void save_manifest(const std::string& path, const ExperimentManifest& m);
ExperimentManifest load_manifest(const std::string& path);

struct ExperimentData {
  ClassDataset text_train, texture_train, generic_train;
  ClassDataset text_test, texture_test, mixed_test;
};

ExperimentData materialize_data(const ExperimentManifest& m);

struct TrainedModel {
  SRModel<float> model;
  LossCurve curve;
  bool from_cache = false;
  std::string ckpt_path;
};

// label is one of "text", "texture", "generic"; the generic model trains on
// the pooled class sets. Checkpoints are cached under models_dir keyed by
// (label, manifest hash).
TrainedModel get_or_train_sr(const ExperimentManifest& m, const ExperimentData& data,
                             const std::string& label);

struct TrainedFusion {
  FusionNet<float> net;
  LossCurve curve;
  bool from_cache = false;
  std::string ckpt_path;
};

TrainedFusion get_or_train_fusion(const ExperimentManifest& m, const ExperimentData& data,
                                  const ModelBank<float>& bank, FusionMode mode,
                                  const std::string& selected_label = "");

MetricsReport evaluate_sr_model(const SRModel<float>& model, const ClassDataset& test,
                                int border_crop);
MetricsReport evaluate_mmsr(const ModelBank<float>& bank, const FusionNet<float>& net,
                            const ClassDataset& test, int border_crop);
MetricsReport evaluate_bicubic(const ClassDataset& test, int border_crop);

// Mean L1 over a fixed probe stream; every candidate sees identical batches,
// so comparisons are paired.
double probe_stream_loss_sr(const SRModel<float>& model, const PairStream& stream,
                            const PatchSpec& spec, int n_batches);
double probe_stream_loss_fusion(const ModelBank<float>& bank, const FusionNet<float>& net,
                                const PairStream& stream, const PatchSpec& spec, int n_batches);

struct NamedReport {
  std::string label;
  MetricsReport report;
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct TableResult {
  std::string table;
  std::string run_name;  // directory name under out_dir
  std::string hash;
  std::vector<NamedReport> rows;
  std::vector<CheckResult> checks;

  bool all_passed() const;
  const CheckResult& check(const std::string& name) const;
  const NamedReport& row(const std::string& label) const;
};

TableResult run_table1(const ExperimentManifest& m);
TableResult run_table2(const ExperimentManifest& m);
TableResult run_table3(const ExperimentManifest& m);
TableResult run_table4(const ExperimentManifest& m);

// table name is "table1".."table4".
TableResult run_experiment(const std::string& table, const ExperimentManifest& m);

}  // namespace mmsr
