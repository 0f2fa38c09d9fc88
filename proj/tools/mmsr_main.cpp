// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Exit codes: 0 success, 1 usage error, 2 data
// error, 3 numeric error. Results go to files under --out-dir; stdout only
// carries progress lines.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmsr/checkpoint.hpp"
#include "mmsr/data.hpp"
#include "mmsr/experiment.hpp"
#include "mmsr/metrics.hpp"
#include "mmsr/png_io.hpp"
#include "mmsr/trainer.hpp"

namespace fs = std::filesystem;
using namespace mmsr;

namespace {

struct Common {
  uint64_t seed = 7;
  std::string manifest;
  std::string out_dir = ".";
  bool seed_given = false;
  bool out_dir_given = false;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Master seed")
      ->default_val(7)
      ->each([&c](const std::string&) { c.seed_given = true; });
  sub->add_option("--manifest", c.manifest, "Experiment manifest (JSON) supplying defaults");
  sub->add_option("--out-dir", c.out_dir, "Directory all outputs are written under")
      ->default_val(".")
      ->each([&c](const std::string&) { c.out_dir_given = true; });
}

// The preset flag is spelled --scale per the external interface: it selects
// the desk or paper configuration bundle, not the SR factor.
void add_preset(CLI::App* sub, std::string& preset) {
  sub->add_option("--scale", preset, "Config preset: desk or paper")
      ->default_val("desk")
      ->check(CLI::IsMember({"desk", "paper"}));
}

ExperimentManifest manifest_for(const Common& c, const std::string& preset) {
  ExperimentManifest m;
  if (!c.manifest.empty()) {
    m = load_manifest(c.manifest);
    if (c.seed_given) m.seed = c.seed;
  } else {
    m = preset == "paper" ? ExperimentManifest::paper(c.seed) : ExperimentManifest::desk(c.seed);
  }
  return m;
}

std::string resolve_out(const std::string& out_dir, const std::string& name) {
  fs::path p(name);
  if (p.is_absolute()) return name;
  fs::create_directories(out_dir);
  return (fs::path(out_dir) / p).string();
}

void progress(const std::string& line) { std::cout << line << "\n"; }

TrainOptions log_to_stdout(int64_t every) {
  TrainOptions opts;
  opts.log_every = every;
  opts.on_log = [](const LossPoint& p) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "step %lld lr %.3g loss %.6f",
                  static_cast<long long>(p.step), p.lr, p.loss);
    progress(buf);
  };
  return opts;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"multiple-model super-resolution: degradation, training, fusion, evaluation"};
  app.require_subcommand(1);

  // synth -------------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "Generate a synthetic class corpus as PNG + manifest");
  Common synth_c;
  std::string synth_class = "text";
  int synth_n = 40, synth_size = 192, synth_factor = 4;
  double synth_noise = 40.0;
  std::string synth_split = "train";
  add_common(synth, synth_c);
  synth->add_option("--class", synth_class, "text, texture, or mixed")
      ->required()
      ->check(CLI::IsMember({"text", "texture", "mixed"}));
  synth->add_option("--n", synth_n, "Number of images")->default_val(40);
  synth->add_option("--size", synth_size, "Square image size in pixels")->default_val(192);
  synth->add_option("--factor", synth_factor, "SR downscale factor")->default_val(4);
  synth->add_option("--noise-db", synth_noise, "AWGN level in dB")->default_val(40.0);
  synth->add_option("--split", synth_split, "Dataset split label")
      ->default_val("train")
      ->check(CLI::IsMember({"train", "test"}));
  synth->callback([&] {
    ClassDataset ds;
    if (synth_class == "mixed") {
      ds = make_mixed_testset(synth_n, synth_size, synth_c.seed, synth_factor, synth_noise);
    } else {
      ds = synth_corpus(synth_class == "text" ? SynthClass::text : SynthClass::texture, synth_n,
                        synth_size, synth_c.seed, synth_factor,
                        split_from_name(synth_split), synth_noise);
    }
    save_dataset(ds, synth_c.out_dir);
    progress("wrote " + std::to_string(ds.items.size()) + " " + ds.class_label + " items to " +
             synth_c.out_dir);
  });

  // degrade -----------------------------------------------------------
  auto* degrade_cmd = app.add_subcommand("degrade", "Bicubic-downscale a PNG and add AWGN");
  Common degrade_c;
  std::string degrade_in, degrade_out = "lr.png";
  int degrade_factor = 4;
  double degrade_noise = 40.0;
  add_common(degrade_cmd, degrade_c);
  degrade_cmd->add_option("--in", degrade_in, "HR input PNG")->required();
  degrade_cmd->add_option("--out", degrade_out, "LR output PNG (relative to --out-dir)")
      ->default_val("lr.png");
  degrade_cmd->add_option("--factor", degrade_factor, "Downscale factor")->default_val(4);
  degrade_cmd->add_option("--noise-db", degrade_noise, "AWGN level in dB")->default_val(40.0);
  degrade_cmd->callback([&] {
    Image hr = load_png(degrade_in);
    DegradationSpec spec{degrade_factor, degrade_noise, degrade_c.seed};
    Image lr = degrade(hr, spec);
    const std::string out = resolve_out(degrade_c.out_dir, degrade_out);
    save_png(out, lr);
    progress("wrote " + out);
  });

  // train-model ---------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train-model", "Train one SR model on a dataset");
  Common train_c;
  std::string train_preset, train_data, train_label, train_out = "model.ckpt";
  int64_t train_iters = -1;
  add_common(train_cmd, train_c);
  add_preset(train_cmd, train_preset);
  train_cmd->add_option("--data", train_data, "Dataset manifest.json (split: train)")->required();
  train_cmd->add_option("--label", train_label, "Class label tag (default: dataset label)");
  train_cmd->add_option("--iters", train_iters, "Override total training iterations");
  train_cmd->add_option("--out", train_out, "Checkpoint file name (relative to --out-dir)")
      ->default_val("model.ckpt");
  train_cmd->callback([&] {
    ExperimentManifest m = manifest_for(train_c, train_preset);
    ClassDataset ds = load_dataset(train_data);
    const std::string label = train_label.empty() ? ds.class_label : train_label;
    TrainSchedule schedule = m.sr_schedule;
    if (train_iters >= 0) schedule.total_iters = train_iters;

    const uint64_t base = mix_seed(m.seed, fnv1a64(label.data(), label.size()));
    SRModel<float> model = build_sr_model<float>(m.model, mix_seed(base, 1), label);
    PatchSpec spec{m.hr_patch, m.model.scale, m.batch, mix_seed(base, 2)};
    progress("training '" + label + "' for " + std::to_string(schedule.total_iters) + " iters");
    LossCurve curve = train_sr(model, ds, spec, schedule, log_to_stdout(200));

    const std::string out = resolve_out(train_c.out_dir, train_out);
    save_sr_checkpoint(out, model);
    write_loss_log(out + ".loss.tsv", curve, {"model " + label});
    progress("wrote " + out);
  });

  // train-fusion -------------------------------------------------------
  auto* fusion_cmd = app.add_subcommand("train-fusion", "Train the fusion net over a frozen bank");
  Common fusion_c;
  std::string fusion_preset, fusion_mode = "generic", fusion_class, fusion_out = "fusion.ckpt";
  std::vector<std::string> fusion_data, fusion_bank;
  int64_t fusion_iters = -1;
  add_common(fusion_cmd, fusion_c);
  add_preset(fusion_cmd, fusion_preset);
  fusion_cmd->add_option("--mode", fusion_mode, "class-specific or generic")
      ->required()
      ->check(CLI::IsMember({"class-specific", "generic"}));
  fusion_cmd->add_option("--class", fusion_class, "Class label for class-specific mode");
  fusion_cmd->add_option("--data", fusion_data, "Dataset manifest.json (repeatable, one per class)")
      ->required();
  fusion_cmd->add_option("--bank", fusion_bank, "SR model checkpoint (repeatable, in bank order)")
      ->required();
  fusion_cmd->add_option("--iters", fusion_iters, "Override total training iterations");
  fusion_cmd->add_option("--out", fusion_out, "Checkpoint file name (relative to --out-dir)")
      ->default_val("fusion.ckpt");
  fusion_cmd->callback([&] {
    ExperimentManifest m = manifest_for(fusion_c, fusion_preset);
    std::vector<ClassDataset> sets;
    for (const auto& path : fusion_data) sets.push_back(load_dataset(path));
    std::vector<const ClassDataset*> set_ptrs;
    for (const auto& ds : sets) set_ptrs.push_back(&ds);
    PairStream stream =
        make_fusion_dataset(fusion_mode_from_name(fusion_mode), set_ptrs, fusion_class);

    ModelBank<float> bank;
    for (const auto& path : fusion_bank) bank.models.push_back(load_sr_checkpoint(path));
    bank.frozen = true;

    FusionConfig cfg = m.fusion;
    cfg.n_inputs = static_cast<int>(bank.models.size());
    TrainSchedule schedule = m.fusion_schedule;
    if (fusion_iters >= 0) schedule.total_iters = fusion_iters;

    const uint64_t base = mix_seed(m.seed, fnv1a64("fusion", 6));
    FusionNet<float> net(cfg, mix_seed(base, 1));
    PatchSpec spec{m.hr_patch, bank.models.front().config().scale, m.batch, mix_seed(base, 2)};
    progress("training " + fusion_mode + " fusion over a bank of " +
             std::to_string(bank.models.size()));
    LossCurve curve = train_fusion(net, bank, stream, spec, schedule, log_to_stdout(200));

    const std::string out = resolve_out(fusion_c.out_dir, fusion_out);
    save_fusion_checkpoint(out, net);
    write_loss_log(out + ".loss.tsv", curve, {"model fusion-" + fusion_mode});
    progress("wrote " + out);
  });

  // super-resolve --------------------------------------------------------
  auto* sr_cmd = app.add_subcommand("super-resolve", "Apply one SR model or the full MMSR stack");
  Common sr_c;
  std::string sr_model_path, sr_fusion_path, sr_in, sr_out = "sr.png";
  std::vector<std::string> sr_bank;
  add_common(sr_cmd, sr_c);
  sr_cmd->add_option("--model", sr_model_path, "Single SR model checkpoint");
  sr_cmd->add_option("--bank", sr_bank, "SR model checkpoint (repeatable, for MMSR)");
  sr_cmd->add_option("--fusion", sr_fusion_path, "Fusion checkpoint (for MMSR)");
  sr_cmd->add_option("--in", sr_in, "LR input PNG")->required();
  sr_cmd->add_option("--out", sr_out, "SR output PNG (relative to --out-dir)")
      ->default_val("sr.png");
  sr_cmd->callback([&] {
    Image lr = load_png(sr_in);
    Tensor<float> batch = Tensor<float>::zeros({1, lr.dim(0), lr.dim(1), lr.dim(2)});
    std::copy(lr.data().begin(), lr.data().end(), batch.data().begin());

    Tensor<float> out_batch;
    if (!sr_model_path.empty()) {
      if (!sr_fusion_path.empty() || !sr_bank.empty())
        throw UsageError("pass either --model or --bank/--fusion, not both");
      SRModel<float> model = load_sr_checkpoint(sr_model_path);
      NoGradGuard guard;
      out_batch = super_resolve(model, batch, /*clamp_output=*/true);
    } else {
      if (sr_fusion_path.empty() || sr_bank.empty())
        throw UsageError("MMSR mode needs --fusion and at least one --bank checkpoint");
      ModelBank<float> bank;
      for (const auto& path : sr_bank) bank.models.push_back(load_sr_checkpoint(path));
      bank.frozen = true;
      FusionNet<float> net = load_fusion_checkpoint(sr_fusion_path);
      if (net.config().n_inputs != static_cast<int>(bank.models.size()))
        throw UsageError("fusion n_inputs does not match the bank size");
      NoGradGuard guard;
      out_batch = clamp01(net.fuse(bank_forward(bank, batch)));
    }

    Image sr = Image::zeros({out_batch.dim(1), out_batch.dim(2), out_batch.dim(3)});
    std::copy(out_batch.data().begin(), out_batch.data().end(), sr.data().begin());
    const std::string out = resolve_out(sr_c.out_dir, sr_out);
    save_png(out, sr);
    progress("wrote " + out);
  });

  // evaluate -----------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("evaluate", "PSNR/SSIM report for a model on a dataset");
  Common eval_c;
  std::string eval_model_path, eval_fusion_path, eval_data, eval_out = "report.csv";
  std::vector<std::string> eval_bank;
  int eval_crop = 4;
  add_common(eval_cmd, eval_c);
  eval_cmd->add_option("--model", eval_model_path, "Single SR model checkpoint");
  eval_cmd->add_option("--bank", eval_bank, "SR model checkpoint (repeatable, for MMSR)");
  eval_cmd->add_option("--fusion", eval_fusion_path, "Fusion checkpoint (for MMSR)");
  eval_cmd->add_option("--data", eval_data, "Dataset manifest.json")->required();
  eval_cmd->add_option("--crop", eval_crop, "Border crop in pixels")->default_val(4);
  eval_cmd->add_option("--out", eval_out, "Report CSV name (relative to --out-dir)")
      ->default_val("report.csv");
  eval_cmd->callback([&] {
    ClassDataset ds = load_dataset(eval_data);
    MetricsReport report;
    std::string subject;
    if (!eval_model_path.empty()) {
      if (!eval_fusion_path.empty() || !eval_bank.empty())
        throw UsageError("pass either --model or --bank/--fusion, not both");
      SRModel<float> model = load_sr_checkpoint(eval_model_path);
      report = evaluate_sr_model(model, ds, eval_crop);
      subject = "model " + fs::path(eval_model_path).filename().string();
    } else {
      if (eval_fusion_path.empty() || eval_bank.empty())
        throw UsageError("MMSR mode needs --fusion and at least one --bank checkpoint");
      ModelBank<float> bank;
      for (const auto& path : eval_bank) bank.models.push_back(load_sr_checkpoint(path));
      bank.frozen = true;
      FusionNet<float> net = load_fusion_checkpoint(eval_fusion_path);
      if (net.config().n_inputs != static_cast<int>(bank.models.size()))
        throw UsageError("fusion n_inputs does not match the bank size");
      report = evaluate_mmsr(bank, net, ds, eval_crop);
      subject = "mmsr " + fs::path(eval_fusion_path).filename().string();
    }
    const std::string out = resolve_out(eval_c.out_dir, eval_out);
    char crop_line[64];
    std::snprintf(crop_line, sizeof(crop_line), "psnr rgb, border crop %d px", eval_crop);
    write_report_csv(out, report,
                     {subject, "dataset " + ds.class_label + " (" + split_name(ds.split) + ")",
                      crop_line, "ssim 11x11 gaussian sigma 1.5"});
    progress("psnr " + format_mean_var(report.mean_psnr, report.var_psnr) + " dB, ssim " +
             std::to_string(report.mean_ssim));
    progress("wrote " + out);
  });

  // experiment -----------------------------------------------------------
  auto* exp_cmd = app.add_subcommand("experiment", "Run a table1..table4 experiment end to end");
  Common exp_c;
  std::string exp_preset, exp_table, exp_models_dir;
  add_common(exp_cmd, exp_c);
  add_preset(exp_cmd, exp_preset);
  exp_cmd->add_option("table", exp_table, "One of table1, table2, table3, table4")
      ->required()
      ->check(CLI::IsMember({"table1", "table2", "table3", "table4"}));
  exp_cmd->add_option("--models-dir", exp_models_dir, "Checkpoint cache directory");
  exp_cmd->callback([&] {
    ExperimentManifest m = manifest_for(exp_c, exp_preset);
    if (exp_c.out_dir_given) m.out_dir = exp_c.out_dir;
    if (!exp_models_dir.empty()) m.models_dir = exp_models_dir;
    if (m.name == "paper")
      progress("note: the paper preset trains 130k-iteration models; expect multi-day runtime");
    progress("running " + exp_table + " (" + m.name + " preset, seed " + std::to_string(m.seed) +
             ")");
    TableResult result = run_experiment(exp_table, m);
    for (const auto& r : result.rows)
      progress("  " + r.label + ": " + format_mean_var(r.report.mean_psnr, r.report.var_psnr) +
               " dB");
    for (const auto& c : result.checks)
      progress(std::string("  [") + (c.passed ? "PASS" : "FAIL") + "] " + c.name);
    progress("wrote " + (fs::path(m.out_dir) / result.run_name).string());
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
