// Copyright 2026 The MMSR Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

#include "mmsr/degradation.hpp"

namespace mmsr {

// Loads an 8-bit RGB(A) PNG as a [3,H,W] float image in [0,1]. Grayscale and
// palette files are expanded to RGB; an alpha channel is dropped. 16-bit
// files are rejected rather than silently truncated.
Image load_png(const std::string& path);

// Writes a [3,H,W] float image as 8-bit RGB. Values are clamped to [0,1] and
// rounded half away from zero.
void save_png(const std::string& path, const Image& image);

}  // namespace mmsr
