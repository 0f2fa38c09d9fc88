// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmsr/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mmsr/errors.hpp"
#include "mmsr/png_io.hpp"
#include "mmsr/rng.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace mmsr {

std::string split_name(Split s) { return s == Split::train ? "train" : "test"; }

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::train;
  if (name == "test") return Split::test;
  throw DataError("unknown split: " + name);
}

std::string fusion_mode_name(FusionMode m) {
  return m == FusionMode::class_specific ? "class-specific" : "generic";
}

FusionMode fusion_mode_from_name(const std::string& name) {
  if (name == "class-specific" || name == "class_specific") return FusionMode::class_specific;
  if (name == "generic") return FusionMode::generic;
  throw UsageError("unknown fusion mode: " + name);
}

std::string synth_class_name(SynthClass c) {
  return c == SynthClass::text ? "text" : "texture";
}

void PatchSpec::validate() const {
  if (scale < 1) throw UsageError("patch spec: scale must be >= 1");
  if (hr_patch < scale || hr_patch % scale != 0)
    throw UsageError("patch spec: hr_patch must be a positive multiple of scale");
  if (batch < 1) throw UsageError("patch spec: batch must be >= 1");
}

void validate_dataset(const ClassDataset& ds, int min_hr_size) {
  if (ds.scale < 1) throw DataError("dataset " + ds.class_label + ": invalid scale");
  for (const auto& item : ds.items) {
    const auto& hr = item.hr;
    const auto& lr = item.lr;
    if (hr.ndim() != 3 || hr.dim(0) != 3 || lr.ndim() != 3 || lr.dim(0) != 3)
      throw DataError("dataset item " + item.id + ": images must be [3,H,W]");
    if (hr.dim(1) % ds.scale != 0 || hr.dim(2) % ds.scale != 0)
      throw DataError("dataset item " + item.id + ": HR dims not divisible by scale");
    if (lr.dim(1) != hr.dim(1) / ds.scale || lr.dim(2) != hr.dim(2) / ds.scale)
      throw DataError("dataset item " + item.id + ": LR dims do not match HR/scale");
    if (min_hr_size > 0 && (hr.dim(1) < min_hr_size || hr.dim(2) < min_hr_size))
      throw DataError("dataset item " + item.id + ": HR image smaller than patch size");
  }
}

PairStream make_fusion_dataset(FusionMode mode,
                               const std::vector<const ClassDataset*>& class_sets,
                               const std::string& selected_label) {
  PairStream stream;
  stream.mode = mode;
  if (mode == FusionMode::class_specific) {
    const ClassDataset* chosen = nullptr;
    for (const auto* ds : class_sets) {
      if (ds->class_label == selected_label) {
        if (chosen) throw UsageError("fusion dataset: duplicate class " + selected_label);
        chosen = ds;
      }
    }
    if (!chosen)
      throw UsageError("fusion dataset: class-specific mode needs a class named '" +
                       selected_label + "'");
    stream.sets.push_back(chosen);
  } else {
    if (class_sets.size() < 2)
      throw UsageError("fusion dataset: generic mode requires at least 2 classes");
    stream.sets = class_sets;
  }
  for (const auto* ds : stream.sets)
    if (ds->items.empty()) throw DataError("fusion dataset: class " + ds->class_label + " is empty");
  return stream;
}

namespace {

void copy_patch(const Image& src, float* dst, int y0, int x0, int size) {
  const auto h = src.dim(1);
  const auto w = src.dim(2);
  auto s = src.data();
  for (int c = 0; c < 3; ++c) {
    const float* plane = s.data() + static_cast<size_t>(c) * h * w;
    for (int y = 0; y < size; ++y) {
      std::memcpy(dst + (static_cast<size_t>(c) * size + y) * size,
                  plane + static_cast<size_t>(y0 + y) * w + x0,
                  static_cast<size_t>(size) * sizeof(float));
    }
  }
}

}  // namespace

MiniBatch sample_minibatch(const PairStream& stream, const PatchSpec& spec, int64_t step) {
  spec.validate();
  if (stream.sets.empty()) throw UsageError("sample_minibatch: empty stream");

  const int hp = spec.hr_patch;
  const int lp = spec.lr_patch();
  MiniBatch batch;
  batch.hr = Tensor<float>::zeros({spec.batch, 3, hp, hp});
  batch.lr = Tensor<float>::zeros({spec.batch, 3, lp, lp});
  float* hr_out = batch.hr.data().data();
  float* lr_out = batch.lr.data().data();

  Rng rng(mix_seed(spec.seed, static_cast<uint64_t>(step)));
  for (int b = 0; b < spec.batch; ++b) {
    const ClassDataset* ds = stream.sets.size() == 1
                                 ? stream.sets[0]
                                 : stream.sets[rng.below(stream.sets.size())];
    if (ds->items.empty()) throw DataError("sample_minibatch: class " + ds->class_label + " is empty");
    const ImageItem& item = ds->items[rng.below(ds->items.size())];
    const auto h = item.hr.dim(1);
    const auto w = item.hr.dim(2);
    if (h < hp || w < hp)
      throw DataError("sample_minibatch: image " + item.id + " smaller than patch");

    const int64_t ny = (h - hp) / spec.scale + 1;
    const int64_t nx = (w - hp) / spec.scale + 1;
    const int y0 = spec.scale * static_cast<int>(rng.below(static_cast<uint64_t>(ny)));
    const int x0 = spec.scale * static_cast<int>(rng.below(static_cast<uint64_t>(nx)));

    copy_patch(item.hr, hr_out + static_cast<size_t>(b) * 3 * hp * hp, y0, x0, hp);
    copy_patch(item.lr, lr_out + static_cast<size_t>(b) * 3 * lp * lp, y0 / spec.scale,
               x0 / spec.scale, lp);
  }
  return batch;
}

MiniBatch sample_minibatch(const ClassDataset& ds, const PatchSpec& spec, int64_t step) {
  PairStream stream;
  stream.sets.push_back(&ds);
  return sample_minibatch(stream, spec, step);
}

namespace {

struct Color {
  float r, g, b;
};

void fill_rect(Image& img, int y0, int x0, int rh, int rw, const Color& col) {
  const auto h = img.dim(1);
  const auto w = img.dim(2);
  const int y1 = std::min<int64_t>(y0 + rh, h);
  const int x1 = std::min<int64_t>(x0 + rw, w);
  auto d = img.data();
  const float ch[3] = {col.r, col.g, col.b};
  for (int c = 0; c < 3; ++c) {
    float* plane = d.data() + static_cast<size_t>(c) * h * w;
    for (int y = std::max(0, y0); y < y1; ++y)
      for (int x = std::max(0, x0); x < x1; ++x) plane[static_cast<size_t>(y) * w + x] = ch[c];
  }
}

// Seven-segment style glyph: a random subset of bars inside a cell. Produces
// the long straight edges and two-level histogram typical of rendered text.
void draw_glyph(Image& img, Rng& rng, int y0, int x0, int gh, int gw, const Color& ink) {
  const int t = std::max(1, gh / 6);
  struct Seg {
    int y, x, h, w;
  };
  const Seg segs[7] = {
      {0, 0, t, gw},                             // top bar
      {(gh - t) / 2, 0, t, gw},                  // middle bar
      {gh - t, 0, t, gw},                        // bottom bar
      {0, 0, gh / 2, t},                         // upper left
      {gh / 2, 0, gh - gh / 2, t},               // lower left
      {0, gw - t, gh / 2, t},                    // upper right
      {gh / 2, gw - t, gh - gh / 2, t},          // lower right
  };
  int drawn = 0;
  uint64_t mask = rng.uniform_int(1, 127);
  for (int s = 0; s < 7; ++s) {
    if (mask & (1ull << s)) {
      fill_rect(img, y0 + segs[s].y, x0 + segs[s].x, segs[s].h, segs[s].w, ink);
      ++drawn;
    }
  }
  if (drawn == 0) fill_rect(img, y0, x0, gh, t, ink);
}

Image synth_text_image(int size, Rng& rng) {
  const float bg = 0.94f + 0.06f * static_cast<float>(rng.uniform());
  const Color paper{bg, bg, std::min(1.0f, bg + 0.01f * static_cast<float>(rng.uniform()))};
  Image img = Image::full({3, size, size}, 0.0f);
  fill_rect(img, 0, 0, size, size, paper);

  const float inkv = 0.07f * static_cast<float>(rng.uniform());
  const Color ink{inkv, inkv, inkv + 0.01f * static_cast<float>(rng.uniform())};

  const int margin = std::max(2, size / 32);
  const int gh = 8 + static_cast<int>(rng.below(9));
  const int gw = std::max(4, (gh * 2) / 3);
  const int line_gap = 2 + static_cast<int>(rng.below(5));

  int y = margin;
  while (y + gh <= size - margin) {
    int x = margin;
    while (x + gw <= size - margin) {
      if (rng.uniform() < 0.82) draw_glyph(img, rng, y, x, gh, gw, ink);
      x += gw + 1 + static_cast<int>(rng.below(3));
    }
    y += gh + line_gap;
  }

  // Occasional solid or outlined blocks, like figures on a page.
  const int n_blocks = static_cast<int>(rng.below(3));
  for (int i = 0; i < n_blocks; ++i) {
    const int bh = size / 8 + static_cast<int>(rng.below(static_cast<uint64_t>(size / 6)));
    const int bw = size / 8 + static_cast<int>(rng.below(static_cast<uint64_t>(size / 6)));
    const int by = static_cast<int>(rng.below(static_cast<uint64_t>(size - bh)));
    const int bx = static_cast<int>(rng.below(static_cast<uint64_t>(size - bw)));
    if (rng.bernoulli(0.5)) {
      fill_rect(img, by, bx, bh, bw, ink);
    } else {
      const int bt = 1 + static_cast<int>(rng.below(3));
      fill_rect(img, by, bx, bt, bw, ink);
      fill_rect(img, by + bh - bt, bx, bt, bw, ink);
      fill_rect(img, by, bx, bh, bt, ink);
      fill_rect(img, by, bx + bw - bt, bh, bt, ink);
    }
  }
  return img;
}

// Separable box blur with edge clamp, run twice to approximate a Gaussian.
void box_blur(std::vector<double>& plane, int size, int radius, std::vector<double>& tmp) {
  if (radius < 1) return;
  const double inv = 1.0 / (2 * radius + 1);
  tmp.resize(plane.size());
  for (int pass = 0; pass < 2; ++pass) {
    for (int y = 0; y < size; ++y) {
      const double* row = plane.data() + static_cast<size_t>(y) * size;
      double* out = tmp.data() + static_cast<size_t>(y) * size;
      for (int x = 0; x < size; ++x) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += row[std::clamp(x + k, 0, size - 1)];
        out[x] = acc * inv;
      }
    }
    for (int x = 0; x < size; ++x) {
      for (int y = 0; y < size; ++y) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += tmp[static_cast<size_t>(std::clamp(y + k, 0, size - 1)) * size + x];
        plane[static_cast<size_t>(y) * size + x] = acc * inv;
      }
    }
  }
}

Image synth_texture_image(int size, Rng& rng) {
  const size_t plane = static_cast<size_t>(size) * size;
  std::vector<double> lo(plane), hi(plane), tmp;
  for (size_t i = 0; i < plane; ++i) lo[i] = rng.gaussian();
  hi = lo;
  const int r_small = 1 + static_cast<int>(rng.below(2));
  const int r_large = 4 + static_cast<int>(rng.below(5));
  box_blur(hi, size, r_small, tmp);
  box_blur(lo, size, r_large, tmp);

  double mean = 0.0, sq = 0.0;
  for (size_t i = 0; i < plane; ++i) {
    hi[i] -= lo[i];
    mean += hi[i];
  }
  mean /= static_cast<double>(plane);
  for (size_t i = 0; i < plane; ++i) sq += (hi[i] - mean) * (hi[i] - mean);
  const double sd = std::sqrt(sq / static_cast<double>(plane));
  const double amp = 0.10 + 0.10 * rng.uniform();
  const double gain = sd > 1e-12 ? amp / sd : 0.0;

  const double theta = rng.uniform() * 2.0 * M_PI;
  const double gx = std::cos(theta), gy = std::sin(theta);
  const double g_amp = 0.15 + 0.15 * rng.uniform();
  const double base = 0.42 + 0.16 * rng.uniform();
  const double tint[3] = {0.05 * (rng.uniform() - 0.5), 0.05 * (rng.uniform() - 0.5),
                          0.05 * (rng.uniform() - 0.5)};

  Image img = Image::zeros({3, size, size});
  auto d = img.data();
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const size_t i = static_cast<size_t>(y) * size + x;
      const double u = (x + 0.5) / size - 0.5;
      const double v = (y + 0.5) / size - 0.5;
      const double value = base + g_amp * (gx * u + gy * v) + gain * (hi[i] - mean);
      for (int c = 0; c < 3; ++c) {
        double out = std::clamp(value + tint[c], 0.008, 0.992);
        out += (rng.uniform() - 0.5) * 0.006;  // dither: kills flat runs
        d[static_cast<size_t>(c) * plane + i] = static_cast<float>(out);
      }
    }
  }
  return img;
}

uint64_t class_tag(SynthClass c) { return c == SynthClass::text ? 1 : 2; }

ImageItem make_item(Image hr, const std::string& id, int scale, double noise_db,
                    uint64_t item_seed) {
  DegradationSpec spec;
  spec.scale = scale;
  spec.noise_psnr_db = noise_db;
  spec.seed = mix_seed(item_seed, 0xD);
  ImageItem item;
  item.lr = degrade(hr, spec);
  item.hr = std::move(hr);
  item.id = id;
  return item;
}

std::string item_id(const std::string& label, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s-%03d", label.c_str(), index);
  return buf;
}

}  // namespace

ClassDataset synth_corpus(SynthClass class_label, int n, int size, uint64_t seed, int scale,
                          Split split, double noise_db) {
  if (n < 1) throw UsageError("synth_corpus: n must be >= 1");
  if (size < 96 || size % scale != 0)
    throw UsageError("synth_corpus: size must be >= 96 and divisible by scale");

  ClassDataset ds;
  ds.class_label = synth_class_name(class_label);
  ds.split = split;
  ds.scale = scale;
  const uint64_t base = mix_seed(seed, class_tag(class_label));
  for (int i = 0; i < n; ++i) {
    const uint64_t item_seed = mix_seed(base, static_cast<uint64_t>(i));
    Rng rng(item_seed);
    Image hr = class_label == SynthClass::text ? synth_text_image(size, rng)
                                               : synth_texture_image(size, rng);
    ds.items.push_back(
        make_item(std::move(hr), item_id(ds.class_label, i), scale, noise_db, item_seed));
  }
  validate_dataset(ds);
  return ds;
}

ClassDataset make_mixed_testset(int n, int size, uint64_t seed, int scale, double noise_db) {
  if (n < 1) throw UsageError("make_mixed_testset: n must be >= 1");
  if (size < 96 || size % (2 * scale) != 0)
    throw UsageError("make_mixed_testset: size must be >= 96 and divisible by 2*scale");

  ClassDataset ds;
  ds.class_label = "mixed";
  ds.split = Split::test;
  ds.scale = scale;
  const uint64_t base = mix_seed(seed, 3);
  const size_t plane = static_cast<size_t>(size) * size;
  for (int i = 0; i < n; ++i) {
    const uint64_t item_seed = mix_seed(base, static_cast<uint64_t>(i));
    Rng rng(item_seed);
    const bool vertical_split = rng.bernoulli(0.5);
    const bool text_first = rng.bernoulli(0.5);
    Image text = synth_text_image(size, rng);
    Image texture = synth_texture_image(size, rng);
    const Image& first = text_first ? text : texture;
    const Image& second = text_first ? texture : text;

    Image hr = Image::zeros({3, size, size});
    auto d = hr.data();
    auto f = first.data();
    auto s = second.data();
    const int half = size / 2;
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const size_t at = static_cast<size_t>(c) * plane + static_cast<size_t>(y) * size + x;
          const bool in_first = vertical_split ? (x < half) : (y < half);
          d[at] = in_first ? f[at] : s[at];
        }
      }
    }
    ds.items.push_back(make_item(std::move(hr), item_id("mixed", i), scale, noise_db, item_seed));
  }
  validate_dataset(ds);
  return ds;
}

ClassDataset make_union_dataset(const std::vector<const ClassDataset*>& sets,
                                const std::string& label) {
  if (sets.empty()) throw UsageError("make_union_dataset: no input sets");
  ClassDataset out;
  out.class_label = label;
  out.split = sets[0]->split;
  out.scale = sets[0]->scale;
  for (const auto* ds : sets) {
    if (ds->scale != out.scale) throw DataError("make_union_dataset: mixed scales");
    for (const auto& item : ds->items) out.items.push_back(item);
  }
  return out;
}

void save_dataset(const ClassDataset& ds, const std::string& dir) {
  validate_dataset(ds);
  fs::create_directories(fs::path(dir) / "hr");
  fs::create_directories(fs::path(dir) / "lr");

  json manifest;
  manifest["class_label"] = ds.class_label;
  manifest["split"] = split_name(ds.split);
  manifest["scale"] = ds.scale;
  json items = json::array();
  for (const auto& item : ds.items) {
    const std::string hr_rel = "hr/" + item.id + ".png";
    const std::string lr_rel = "lr/" + item.id + ".png";
    save_png((fs::path(dir) / hr_rel).string(), item.hr);
    save_png((fs::path(dir) / lr_rel).string(), item.lr);
    items.push_back({{"id", item.id}, {"hr", hr_rel}, {"lr", lr_rel}});
  }
  manifest["items"] = items;

  std::ofstream os(fs::path(dir) / "manifest.json", std::ios::binary);
  if (!os) throw DataError("save_dataset: cannot write manifest in " + dir);
  os << manifest.dump(2) << "\n";
}

ClassDataset load_dataset(const std::string& manifest_path) {
  std::ifstream is(manifest_path, std::ios::binary);
  if (!is) throw DataError("load_dataset: cannot open " + manifest_path);
  json manifest;
  try {
    is >> manifest;
  } catch (const json::exception& e) {
    throw DataError(std::string("load_dataset: bad manifest: ") + e.what());
  }

  ClassDataset ds;
  try {
    ds.class_label = manifest.at("class_label").get<std::string>();
    ds.split = split_from_name(manifest.at("split").get<std::string>());
    ds.scale = manifest.at("scale").get<int>();
    const fs::path root = fs::path(manifest_path).parent_path();
    for (const auto& entry : manifest.at("items")) {
      ImageItem item;
      item.id = entry.at("id").get<std::string>();
      item.hr = load_png((root / entry.at("hr").get<std::string>()).string());
      item.lr = load_png((root / entry.at("lr").get<std::string>()).string());
      ds.items.push_back(std::move(item));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("load_dataset: bad manifest: ") + e.what());
  }
  validate_dataset(ds);
  return ds;
}

}  // namespace mmsr
