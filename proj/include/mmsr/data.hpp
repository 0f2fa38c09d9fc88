// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0
//
// Class-labeled datasets, HR/LR patch sampling, and the synthetic two-class
// corpus (text / texture) used for desk-scale runs. LR images are produced
// once, at dataset build time, so HR/LR pairs stay fixed across epochs.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmsr/degradation.hpp"
#include "mmsr/tensor.hpp"

namespace mmsr {

enum class Split { train, test };

std::string split_name(Split s);
Split split_from_name(const std::string& name);

struct ImageItem {
  Image hr;
  Image lr;
  std::string id;
};

struct ClassDataset {
  std::string class_label;
  std::vector<ImageItem> items;
  Split split = Split::train;
  int scale = 4;
};

// Checks the HR-divisibility / LR-dimension invariants and, when
// min_hr_size > 0, that every HR image can yield at least one crop.
void validate_dataset(const ClassDataset& ds, int min_hr_size = 0);

struct PatchSpec {
  int hr_patch = 96;
  int scale = 4;
  int batch = 8;
  uint64_t seed = 0;

  int lr_patch() const { return hr_patch / scale; }
  void validate() const;
};

struct MiniBatch {
  Tensor<float> lr;  // [batch, 3, hr_patch/scale, hr_patch/scale]
  Tensor<float> hr;  // [batch, 3, hr_patch, hr_patch]
};

enum class FusionMode { class_specific, generic };

std::string fusion_mode_name(FusionMode m);
FusionMode fusion_mode_from_name(const std::string& name);

// A (possibly mixed) source of training pairs. The stream does not own the
// datasets; callers keep them alive. class_specific holds exactly one set,
// generic interleaves two or more: a draw picks a class uniformly, then an
// image uniformly within it.
struct PairStream {
  FusionMode mode = FusionMode::class_specific;
  std::vector<const ClassDataset*> sets;
};

PairStream make_fusion_dataset(FusionMode mode,
                               const std::vector<const ClassDataset*>& class_sets,
                               const std::string& selected_label = "");

// Deterministic in (spec.seed, step): the same pair always yields the same
// batch. HR crop origins are uniform over valid positions and aligned to the
// scale grid; the LR crop is the matching region of the stored LR image.
MiniBatch sample_minibatch(const PairStream& stream, const PatchSpec& spec, int64_t step);
MiniBatch sample_minibatch(const ClassDataset& ds, const PatchSpec& spec, int64_t step);

enum class SynthClass { text, texture };

std::string synth_class_name(SynthClass c);

// Procedural corpus: "text" items are near-white pages with dark glyph-like
// strokes and rectangles; "texture" items are band-pass noise over smooth
// gradients with a tiny dither. LR images come from the degradation pipeline
// with per-item seeds. Bit-identical for identical arguments.
ClassDataset synth_corpus(SynthClass class_label, int n, int size, uint64_t seed,
                          int scale = 4, Split split = Split::train, double noise_db = 40.0);

// Non-homogeneous test images: each is half text, half texture, split
// horizontally or vertically at the image midline (which stays aligned to
// the scale grid).
ClassDataset make_mixed_testset(int n, int size, uint64_t seed, int scale = 4,
                                double noise_db = 40.0);

// Pools the items of several same-scale datasets under a new label.
ClassDataset make_union_dataset(const std::vector<const ClassDataset*>& sets,
                                const std::string& label);

// Directory layout: <dir>/manifest.json plus hr/<id>.png and lr/<id>.png.
// PNG export quantizes to 8 bits; loaded values are k/255.
void save_dataset(const ClassDataset& ds, const std::string& dir);
ClassDataset load_dataset(const std::string& manifest_path);

}  // namespace mmsr
