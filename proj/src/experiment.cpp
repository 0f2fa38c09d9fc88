// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmsr/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mmsr/serial.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mmsr {

namespace {

void to_json_corpus(json& j, const CorpusSpec& c) {
  j = {{"n_train", c.n_train}, {"n_test", c.n_test}, {"image_size", c.image_size}};
}

void from_json_corpus(const json& j, CorpusSpec& c) {
  j.at("n_train").get_to(c.n_train);
  j.at("n_test").get_to(c.n_test);
  j.at("image_size").get_to(c.image_size);
}

json hashed_fields(const ExperimentManifest& m) {
  json j;
  j["name"] = m.name;
  j["scale"] = m.scale;
  j["noise_psnr_db"] = m.noise_psnr_db;
  json corpus;
  to_json_corpus(corpus, m.corpus);
  j["corpus"] = corpus;
  j["model"] = m.model;
  j["fusion"] = m.fusion;
  j["sr_schedule"] = m.sr_schedule;
  j["fusion_schedule"] = m.fusion_schedule;
  j["hr_patch"] = m.hr_patch;
  j["batch"] = m.batch;
  j["metric_border_crop"] = m.metric_border_crop;
  j["probe_batches"] = m.probe_batches;
  j["seed"] = m.seed;
  return j;
}

uint64_t label_tag(const std::string& label) {
  return fnv1a64(label.data(), label.size());
}

std::string slug(const std::string& label) {
  std::string out;
  for (char c : label) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '-');
  return out;
}

Tensor<float> to_batch1(const Image& img) {
  Tensor<float> t = Tensor<float>::zeros({1, img.dim(0), img.dim(1), img.dim(2)});
  std::memcpy(t.data().data(), img.data().data(), img.data().size() * sizeof(float));
  return t;
}

Image from_batch1(const Tensor<float>& t) {
  if (t.ndim() != 4 || t.dim(0) != 1) throw ShapeError("from_batch1: expected [1,C,H,W]");
  Image img = Image::zeros({t.dim(1), t.dim(2), t.dim(3)});
  std::memcpy(img.data().data(), t.data().data(), img.data().size() * sizeof(float));
  return img;
}

}  // namespace

ExperimentManifest ExperimentManifest::desk(uint64_t seed) {
  ExperimentManifest m;
  m.name = "desk";
  m.model = SRModelConfig::desk_preset();
  m.fusion = FusionConfig{3, 16, 1, 3};
  m.sr_schedule = TrainSchedule::desk();
  m.fusion_schedule = TrainSchedule{1e-4, 600, 1500};
  m.seed = seed;
  return m;
}

ExperimentManifest ExperimentManifest::paper(uint64_t seed) {
  ExperimentManifest m;
  m.name = "paper";
  m.corpus = CorpusSpec{80, 20, 384};
  m.model = SRModelConfig::paper_preset();
  m.fusion = FusionConfig{3, 32, 2, 3};
  m.sr_schedule = TrainSchedule::paper();
  m.fusion_schedule = TrainSchedule::paper();
  m.seed = seed;
  return m;
}

void ExperimentManifest::validate() const {
  model.validate();
  fusion.validate();
  sr_schedule.validate();
  fusion_schedule.validate();
  if (model.scale != scale) throw UsageError("manifest: model scale must equal manifest scale");
  if (fusion.n_inputs != 3)
    throw UsageError("manifest: the bank holds text, texture, and generic; fusion n_inputs must be 3");
  if (hr_patch < scale || hr_patch % scale != 0)
    throw UsageError("manifest: hr_patch must be a positive multiple of scale");
  if (batch < 1) throw UsageError("manifest: batch must be >= 1");
  if (corpus.n_train < 1 || corpus.n_test < 2)
    throw UsageError("manifest: corpus needs >= 1 train and >= 2 test images per class");
  if (corpus.image_size < hr_patch || corpus.image_size % (2 * scale) != 0)
    throw UsageError("manifest: image_size must be >= hr_patch and divisible by 2*scale");
  if (metric_border_crop < 0) throw UsageError("manifest: negative border crop");
  if (probe_batches < 1) throw UsageError("manifest: probe_batches must be >= 1");
}

std::string ExperimentManifest::resolved_models_dir() const {
  if (!models_dir.empty()) return models_dir;
  return (fs::path(out_dir) / "models").string();
}

uint64_t manifest_hash(const ExperimentManifest& m) {
  const std::string dump = hashed_fields(m).dump();
  return fnv1a64(dump.data(), dump.size());
}

void save_manifest(const std::string& path, const ExperimentManifest& m) {
  json j = hashed_fields(m);
  j["out_dir"] = m.out_dir;
  j["models_dir"] = m.models_dir;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("save_manifest: cannot open " + path);
  os << j.dump(2) << "\n";
}

ExperimentManifest load_manifest(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("load_manifest: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw DataError(std::string("load_manifest: bad JSON: ") + e.what());
  }
  ExperimentManifest m;
  try {
    j.at("name").get_to(m.name);
    j.at("scale").get_to(m.scale);
    j.at("noise_psnr_db").get_to(m.noise_psnr_db);
    from_json_corpus(j.at("corpus"), m.corpus);
    j.at("model").get_to(m.model);
    j.at("fusion").get_to(m.fusion);
    j.at("sr_schedule").get_to(m.sr_schedule);
    j.at("fusion_schedule").get_to(m.fusion_schedule);
    j.at("hr_patch").get_to(m.hr_patch);
    j.at("batch").get_to(m.batch);
    j.at("metric_border_crop").get_to(m.metric_border_crop);
    j.at("probe_batches").get_to(m.probe_batches);
    j.at("seed").get_to(m.seed);
    if (j.contains("out_dir")) j.at("out_dir").get_to(m.out_dir);
    if (j.contains("models_dir")) j.at("models_dir").get_to(m.models_dir);
  } catch (const json::exception& e) {
    throw DataError(std::string("load_manifest: missing or bad field: ") + e.what());
  }
  m.validate();
  return m;
}

ExperimentData materialize_data(const ExperimentManifest& m) {
  m.validate();
  const uint64_t train_seed = mix_seed(m.seed, 0xDA7A1);
  const uint64_t test_seed = mix_seed(m.seed, 0xDA7A2);
  const uint64_t mixed_seed = mix_seed(m.seed, 0xDA7A3);
  const int size = m.corpus.image_size;

  ExperimentData d;
  d.text_train = synth_corpus(SynthClass::text, m.corpus.n_train, size, train_seed, m.scale,
                              Split::train, m.noise_psnr_db);
  d.texture_train = synth_corpus(SynthClass::texture, m.corpus.n_train, size, train_seed, m.scale,
                                 Split::train, m.noise_psnr_db);
  d.text_test = synth_corpus(SynthClass::text, m.corpus.n_test, size, test_seed, m.scale,
                             Split::test, m.noise_psnr_db);
  d.texture_test = synth_corpus(SynthClass::texture, m.corpus.n_test, size, test_seed, m.scale,
                                Split::test, m.noise_psnr_db);
  d.mixed_test = make_mixed_testset(m.corpus.n_test, size, mixed_seed, m.scale, m.noise_psnr_db);
  d.generic_train = make_union_dataset({&d.text_train, &d.texture_train}, "generic");
  return d;
}

TrainedModel get_or_train_sr(const ExperimentManifest& m, const ExperimentData& data,
                             const std::string& label) {
  m.validate();
  const ClassDataset* ds = nullptr;
  if (label == "text")
    ds = &data.text_train;
  else if (label == "texture")
    ds = &data.texture_train;
  else if (label == "generic")
    ds = &data.generic_train;
  else
    throw UsageError("get_or_train_sr: unknown model label '" + label + "'");

  const std::string models_dir = m.resolved_models_dir();
  fs::create_directories(models_dir);
  const std::string hash = hex16(manifest_hash(m));
  const std::string stem = "sr-" + label + "-" + hash;
  const std::string ckpt = (fs::path(models_dir) / (stem + ".ckpt")).string();

  TrainedModel out;
  out.ckpt_path = ckpt;
  if (fs::exists(ckpt)) {
    out.model = load_sr_checkpoint(ckpt);
    if (out.model.class_label() != label || !(out.model.config() == m.model))
      throw DataError("cached checkpoint " + ckpt + " does not match the manifest");
    out.from_cache = true;
    return out;
  }

  const uint64_t base = mix_seed(m.seed, label_tag(label));
  out.model = build_sr_model<float>(m.model, mix_seed(base, 1), label);
  PatchSpec spec{m.hr_patch, m.scale, m.batch, mix_seed(base, 2)};
  out.curve = train_sr(out.model, *ds, spec, m.sr_schedule);
  save_sr_checkpoint(ckpt, out.model);
  write_loss_log((fs::path(models_dir) / (stem + ".loss.tsv")).string(), out.curve,
                 {"manifest " + hash, "model " + stem});
  return out;
}

TrainedFusion get_or_train_fusion(const ExperimentManifest& m, const ExperimentData& data,
                                  const ModelBank<float>& bank, FusionMode mode,
                                  const std::string& selected_label) {
  m.validate();
  bank.validate();
  const std::string mode_tag =
      mode == FusionMode::class_specific ? "class-" + selected_label : "generic";

  const std::string models_dir = m.resolved_models_dir();
  fs::create_directories(models_dir);
  const std::string hash = hex16(manifest_hash(m));
  const std::string stem = "fusion-" + mode_tag + "-" + hash;
  const std::string ckpt = (fs::path(models_dir) / (stem + ".ckpt")).string();

  TrainedFusion out;
  out.ckpt_path = ckpt;
  if (fs::exists(ckpt)) {
    out.net = load_fusion_checkpoint(ckpt);
    if (!(out.net.config() == m.fusion))
      throw DataError("cached checkpoint " + ckpt + " does not match the manifest");
    out.from_cache = true;
    return out;
  }

  PairStream stream =
      make_fusion_dataset(mode, {&data.text_train, &data.texture_train}, selected_label);
  const uint64_t base = mix_seed(m.seed, label_tag("fusion-" + mode_tag));
  out.net = FusionNet<float>(m.fusion, mix_seed(base, 1));
  PatchSpec spec{m.hr_patch, m.scale, m.batch, mix_seed(base, 2)};
  out.curve = train_fusion(out.net, bank, stream, spec, m.fusion_schedule);
  save_fusion_checkpoint(ckpt, out.net);
  write_loss_log((fs::path(models_dir) / (stem + ".loss.tsv")).string(), out.curve,
                 {"manifest " + hash, "model " + stem});
  return out;
}

MetricsReport evaluate_sr_model(const SRModel<float>& model, const ClassDataset& test,
                                int border_crop) {
  validate_dataset(test);
  NoGradGuard guard;
  std::vector<PerImageMetric> per;
  for (const auto& item : test.items) {
    Tensor<float> sr = super_resolve(model, to_batch1(item.lr), /*clamp_output=*/true);
    Image out = from_batch1(sr);
    per.push_back({item.id, psnr(out, item.hr, border_crop), ssim(out, item.hr)});
  }
  return aggregate(std::move(per));
}

MetricsReport evaluate_mmsr(const ModelBank<float>& bank, const FusionNet<float>& net,
                            const ClassDataset& test, int border_crop) {
  validate_dataset(test);
  NoGradGuard guard;
  std::vector<PerImageMetric> per;
  for (const auto& item : test.items) {
    std::vector<Tensor<float>> srs = bank_forward(bank, to_batch1(item.lr));
    Image out = from_batch1(clamp01(net.fuse(srs)));
    per.push_back({item.id, psnr(out, item.hr, border_crop), ssim(out, item.hr)});
  }
  return aggregate(std::move(per));
}

MetricsReport evaluate_bicubic(const ClassDataset& test, int border_crop) {
  validate_dataset(test);
  std::vector<PerImageMetric> per;
  for (const auto& item : test.items) {
    Image up = bicubic_resize(item.lr, static_cast<int>(item.hr.dim(1)),
                              static_cast<int>(item.hr.dim(2)));
    for (float& v : up.data()) v = std::min(1.0f, std::max(0.0f, v));
    per.push_back({item.id, psnr(up, item.hr, border_crop), ssim(up, item.hr)});
  }
  return aggregate(std::move(per));
}

double probe_stream_loss_sr(const SRModel<float>& model, const PairStream& stream,
                            const PatchSpec& spec, int n_batches) {
  if (n_batches < 1) throw UsageError("probe: n_batches must be >= 1");
  NoGradGuard guard;
  double acc = 0.0;
  for (int k = 0; k < n_batches; ++k) {
    MiniBatch batch = sample_minibatch(stream, spec, k);
    Tensor<float> out = super_resolve(model, batch.lr);
    acc += static_cast<double>(l1_loss(out, batch.hr).data()[0]);
  }
  return acc / n_batches;
}

double probe_stream_loss_fusion(const ModelBank<float>& bank, const FusionNet<float>& net,
                                const PairStream& stream, const PatchSpec& spec, int n_batches) {
  if (n_batches < 1) throw UsageError("probe: n_batches must be >= 1");
  NoGradGuard guard;
  double acc = 0.0;
  for (int k = 0; k < n_batches; ++k) {
    MiniBatch batch = sample_minibatch(stream, spec, k);
    std::vector<Tensor<float>> srs = bank_forward(bank, batch.lr);
    acc += static_cast<double>(l1_loss(net.fuse(srs), batch.hr).data()[0]);
  }
  return acc / n_batches;
}

bool TableResult::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

const CheckResult& TableResult::check(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw UsageError("no check named '" + name + "' in " + table);
}

const NamedReport& TableResult::row(const std::string& label) const {
  for (const auto& r : rows)
    if (r.label == label) return r;
  throw UsageError("no row labeled '" + label + "' in " + table);
}

namespace {

struct RunContext {
  ExperimentManifest m;
  std::string table;
  std::string hash;
  fs::path run_dir;
  std::vector<std::string> header;
};

RunContext begin_run(const ExperimentManifest& m, const std::string& table) {
  m.validate();
  RunContext ctx;
  ctx.m = m;
  ctx.table = table;
  ctx.hash = hex16(manifest_hash(m));
  ctx.run_dir = fs::path(m.out_dir) / (table + "-" + m.name + "-" + ctx.hash);
  fs::create_directories(ctx.run_dir);
  save_manifest((ctx.run_dir / "manifest.json").string(), m);
  char crop[64];
  std::snprintf(crop, sizeof(crop), "psnr rgb, border crop %d px", m.metric_border_crop);
  ctx.header = {"table " + table, "manifest " + ctx.hash, crop,
                "ssim 11x11 gaussian sigma 1.5, C1=0.01^2 C2=0.03^2"};
  return ctx;
}

json result_json(const TableResult& result) {
  json rows = json::array();
  for (const auto& r : result.rows) {
    rows.push_back({{"label", r.label},
                    {"mean_psnr", r.report.mean_psnr},
                    {"var_psnr", r.report.var_psnr},
                    {"mean_ssim", r.report.mean_ssim},
                    {"n_infinite", r.report.n_infinite}});
  }
  json checks = json::array();
  for (const auto& c : result.checks) {
    checks.push_back({{"name", c.name},
                      {"passed", c.passed},
                      {"value", c.value},
                      {"threshold", c.threshold},
                      {"detail", c.detail}});
  }
  return {{"table", result.table},
          {"run", result.run_name},
          {"manifest_hash", result.hash},
          {"rows", rows},
          {"checks", checks},
          {"all_passed", result.all_passed()}};
}

void finish_run(const RunContext& ctx, TableResult& result) {
  result.table = ctx.table;
  result.run_name = ctx.run_dir.filename().string();
  result.hash = ctx.hash;

  for (const auto& r : result.rows) {
    auto header = ctx.header;
    header.push_back("row " + r.label);
    write_report_csv((ctx.run_dir / ("report-" + slug(r.label) + ".csv")).string(), r.report,
                     header);
  }

  std::ofstream table_txt(ctx.run_dir / "table.txt", std::ios::binary);
  if (!table_txt) throw DataError("cannot write table.txt in " + ctx.run_dir.string());
  for (const auto& line : ctx.header) table_txt << "# " << line << "\n";
  table_txt << "\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-28s %-20s %s\n", "row", "psnr mean (var)", "ssim");
  table_txt << buf;
  for (const auto& r : result.rows) {
    std::snprintf(buf, sizeof(buf), "%-28s %-20s %.6f\n", r.label.c_str(),
                  format_mean_var(r.report.mean_psnr, r.report.var_psnr).c_str(),
                  r.report.mean_ssim);
    table_txt << buf;
  }
  table_txt << "\n";
  for (const auto& c : result.checks) {
    std::snprintf(buf, sizeof(buf), "[%s] %s: value=%.6f threshold=%.6f %s\n",
                  c.passed ? "PASS" : "FAIL", c.name.c_str(), c.value, c.threshold,
                  c.detail.c_str());
    table_txt << buf;
  }
  table_txt << (result.all_passed() ? "\nall checks passed\n" : "\nsome checks FAILED\n");

  std::ofstream js(ctx.run_dir / "result.json", std::ios::binary);
  if (!js) throw DataError("cannot write result.json in " + ctx.run_dir.string());
  js << result_json(result).dump(2) << "\n";
}

CheckResult make_check(const std::string& name, double value, double threshold, bool passed,
                       const std::string& detail) {
  return CheckResult{name, passed, value, threshold, detail};
}

std::string dB(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.3f dB", v);
  return buf;
}

}  // namespace

TableResult run_table1(const ExperimentManifest& m) {
  RunContext ctx = begin_run(m, "table1");
  ExperimentData data = materialize_data(m);
  TrainedModel generic = get_or_train_sr(m, data, "generic");

  TableResult result;
  result.rows.push_back({"text", evaluate_sr_model(generic.model, data.text_test,
                                                   m.metric_border_crop)});
  result.rows.push_back({"texture", evaluate_sr_model(generic.model, data.texture_test,
                                                      m.metric_border_crop)});
  result.rows.push_back({"mixed", evaluate_sr_model(generic.model, data.mixed_test,
                                                    m.metric_border_crop)});

  const double var_text = result.row("text").report.var_psnr;
  const double var_mixed = result.row("mixed").report.var_psnr;
  result.checks.push_back(make_check(
      "mixed_var_gt_text_var", var_mixed - var_text, 0.0, var_mixed > var_text,
      "generic-model psnr variance: mixed " + std::to_string(var_mixed) + " vs text " +
          std::to_string(var_text)));

  finish_run(ctx, result);
  return result;
}

TableResult run_table2(const ExperimentManifest& m) {
  RunContext ctx = begin_run(m, "table2");
  ExperimentData data = materialize_data(m);
  TrainedModel generic = get_or_train_sr(m, data, "generic");
  TrainedModel text = get_or_train_sr(m, data, "text");
  TrainedModel texture = get_or_train_sr(m, data, "texture");

  TableResult result;
  result.rows.push_back({"generic-on-text", evaluate_sr_model(generic.model, data.text_test,
                                                              m.metric_border_crop)});
  result.rows.push_back({"text-on-text", evaluate_sr_model(text.model, data.text_test,
                                                           m.metric_border_crop)});
  result.rows.push_back({"generic-on-texture", evaluate_sr_model(generic.model, data.texture_test,
                                                                 m.metric_border_crop)});
  result.rows.push_back({"texture-on-texture", evaluate_sr_model(texture.model, data.texture_test,
                                                                 m.metric_border_crop)});

  const auto& gen_text = result.row("generic-on-text").report;
  const auto& spec_text = result.row("text-on-text").report;
  const auto& gen_tex = result.row("generic-on-texture").report;
  const auto& spec_tex = result.row("texture-on-texture").report;

  const double margin = spec_text.mean_psnr - gen_text.mean_psnr;
  result.checks.push_back(make_check("text_margin", margin, 0.2, margin >= 0.2,
                                     "text-specific " + dB(spec_text.mean_psnr) + " vs generic " +
                                         dB(gen_text.mean_psnr) + " on the text test set"));
  result.checks.push_back(make_check(
      "text_variance", gen_text.var_psnr - spec_text.var_psnr, 0.0,
      spec_text.var_psnr <= gen_text.var_psnr,
      "variance: text-specific " + std::to_string(spec_text.var_psnr) + " vs generic " +
          std::to_string(gen_text.var_psnr)));
  const double tex_margin = spec_tex.mean_psnr - gen_tex.mean_psnr;
  result.checks.push_back(make_check("texture_direction", tex_margin, 0.0, tex_margin >= 0.0,
                                     "texture-specific " + dB(spec_tex.mean_psnr) +
                                         " vs generic " + dB(gen_tex.mean_psnr) +
                                         " on the texture test set"));

  finish_run(ctx, result);
  return result;
}

namespace {

struct BankSetup {
  TrainedModel text, texture, generic;
  ModelBank<float> bank;
};

BankSetup build_bank(const ExperimentManifest& m, const ExperimentData& data) {
  BankSetup s;
  s.text = get_or_train_sr(m, data, "text");
  s.texture = get_or_train_sr(m, data, "texture");
  s.generic = get_or_train_sr(m, data, "generic");
  s.bank.models = {s.text.model, s.texture.model, s.generic.model};
  s.bank.frozen = true;
  return s;
}

}  // namespace

TableResult run_table3(const ExperimentManifest& m) {
  RunContext ctx = begin_run(m, "table3");
  ExperimentData data = materialize_data(m);
  BankSetup s = build_bank(m, data);
  TrainedFusion fusion =
      get_or_train_fusion(m, data, s.bank, FusionMode::class_specific, "text");

  TableResult result;
  result.rows.push_back({"text-specific", evaluate_sr_model(s.text.model, data.text_test,
                                                            m.metric_border_crop)});
  result.rows.push_back({"texture-specific", evaluate_sr_model(s.texture.model, data.text_test,
                                                               m.metric_border_crop)});
  result.rows.push_back({"generic", evaluate_sr_model(s.generic.model, data.text_test,
                                                      m.metric_border_crop)});
  result.rows.push_back({"mmsr", evaluate_mmsr(s.bank, fusion.net, data.text_test,
                                               m.metric_border_crop)});

  double best_single = -1e30;
  std::string best_label;
  for (const auto& label : {"text-specific", "texture-specific", "generic"}) {
    const double v = result.row(label).report.mean_psnr;
    if (v > best_single) {
      best_single = v;
      best_label = label;
    }
  }
  const double mmsr_mean = result.row("mmsr").report.mean_psnr;
  result.checks.push_back(make_check("mmsr_nonregression", mmsr_mean - best_single, -0.05,
                                     mmsr_mean - best_single >= -0.05,
                                     "mmsr " + dB(mmsr_mean) + " vs best single (" + best_label +
                                         ") " + dB(best_single)));
  const double text_mean = result.row("text-specific").report.mean_psnr;
  const double tex_mean = result.row("texture-specific").report.mean_psnr;
  result.checks.push_back(make_check("class_ordering", text_mean - tex_mean, 0.0,
                                     tex_mean < text_mean,
                                     "texture-specific must trail text-specific on text"));

  // Probe the training stream with batches disjoint from training steps.
  PairStream stream = make_fusion_dataset(FusionMode::class_specific,
                                          {&data.text_train, &data.texture_train}, "text");
  PatchSpec probe{m.hr_patch, m.scale, m.batch, mix_seed(m.seed, 0x9801)};
  const double loss_text = probe_stream_loss_sr(s.text.model, stream, probe, m.probe_batches);
  const double loss_tex = probe_stream_loss_sr(s.texture.model, stream, probe, m.probe_batches);
  const double loss_gen = probe_stream_loss_sr(s.generic.model, stream, probe, m.probe_batches);
  const double loss_fused =
      probe_stream_loss_fusion(s.bank, fusion.net, stream, probe, m.probe_batches);
  const double min_single = std::min({loss_text, loss_tex, loss_gen});
  result.checks.push_back(make_check(
      "fusion_probe_loss", loss_fused, min_single * 1.05, loss_fused <= min_single * 1.05,
      "stream L1: fused " + std::to_string(loss_fused) + ", singles text " +
          std::to_string(loss_text) + " / texture " + std::to_string(loss_tex) + " / generic " +
          std::to_string(loss_gen)));

  finish_run(ctx, result);
  return result;
}

TableResult run_table4(const ExperimentManifest& m) {
  RunContext ctx = begin_run(m, "table4");
  ExperimentData data = materialize_data(m);
  BankSetup s = build_bank(m, data);
  TrainedFusion fusion = get_or_train_fusion(m, data, s.bank, FusionMode::generic);

  TableResult result;
  result.rows.push_back({"text-specific", evaluate_sr_model(s.text.model, data.mixed_test,
                                                            m.metric_border_crop)});
  result.rows.push_back({"texture-specific", evaluate_sr_model(s.texture.model, data.mixed_test,
                                                               m.metric_border_crop)});
  result.rows.push_back({"generic", evaluate_sr_model(s.generic.model, data.mixed_test,
                                                      m.metric_border_crop)});
  result.rows.push_back({"mmsr", evaluate_mmsr(s.bank, fusion.net, data.mixed_test,
                                               m.metric_border_crop)});

  double best_single = -1e30;
  std::string best_label;
  for (const auto& label : {"text-specific", "texture-specific", "generic"}) {
    const double v = result.row(label).report.mean_psnr;
    if (v > best_single) {
      best_single = v;
      best_label = label;
    }
  }
  const double mmsr_mean = result.row("mmsr").report.mean_psnr;
  result.checks.push_back(make_check("mmsr_margin", mmsr_mean - best_single, 0.3,
                                     mmsr_mean - best_single >= 0.3,
                                     "mmsr " + dB(mmsr_mean) + " vs best single (" + best_label +
                                         ") " + dB(best_single) + " on the mixed test set"));

  // Sanity: each class model does worse on mixed content than on its own class.
  const double text_own =
      evaluate_sr_model(s.text.model, data.text_test, m.metric_border_crop).mean_psnr;
  const double tex_own =
      evaluate_sr_model(s.texture.model, data.texture_test, m.metric_border_crop).mean_psnr;
  const double text_mixed = result.row("text-specific").report.mean_psnr;
  const double tex_mixed = result.row("texture-specific").report.mean_psnr;
  result.checks.push_back(make_check("text_model_degrades_on_mixed", text_own - text_mixed, 0.0,
                                     text_mixed < text_own,
                                     "text model: own-class " + dB(text_own) + " vs mixed " +
                                         dB(text_mixed)));
  result.checks.push_back(make_check("texture_model_degrades_on_mixed", tex_own - tex_mixed, 0.0,
                                     tex_mixed < tex_own,
                                     "texture model: own-class " + dB(tex_own) + " vs mixed " +
                                         dB(tex_mixed)));

  PairStream stream = make_fusion_dataset(FusionMode::generic,
                                          {&data.text_train, &data.texture_train});
  PatchSpec probe{m.hr_patch, m.scale, m.batch, mix_seed(m.seed, 0x9802)};
  const double loss_text = probe_stream_loss_sr(s.text.model, stream, probe, m.probe_batches);
  const double loss_tex = probe_stream_loss_sr(s.texture.model, stream, probe, m.probe_batches);
  const double loss_gen = probe_stream_loss_sr(s.generic.model, stream, probe, m.probe_batches);
  const double loss_fused =
      probe_stream_loss_fusion(s.bank, fusion.net, stream, probe, m.probe_batches);
  const double min_single = std::min({loss_text, loss_tex, loss_gen});
  result.checks.push_back(make_check(
      "fusion_probe_loss", loss_fused, min_single * 1.05, loss_fused <= min_single * 1.05,
      "stream L1: fused " + std::to_string(loss_fused) + ", singles text " +
          std::to_string(loss_text) + " / texture " + std::to_string(loss_tex) + " / generic " +
          std::to_string(loss_gen)));

  finish_run(ctx, result);
  return result;
}

TableResult run_experiment(const std::string& table, const ExperimentManifest& m) {
  if (table == "table1") return run_table1(m);
  if (table == "table2") return run_table2(m);
  if (table == "table3") return run_table3(m);
  if (table == "table4") return run_table4(m);
  throw UsageError("unknown experiment '" + table + "' (expected table1..table4)");
}

}  // namespace mmsr
