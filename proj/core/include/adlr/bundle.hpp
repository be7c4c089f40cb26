// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0
//
// ModelBundle: the repo's portable checkpoint format. A bundle is a
// directory holding `manifest.json` (format version, model type, a
// model-specific config document, and the parameter table with names,
// shapes, dtype, and byte offsets) plus `params.bin`, the concatenation of
// all parameters as row-major little-endian 32-bit floats in manifest
// order. Round trips are bit-exact.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adlr/tensor.hpp"

namespace adlr {

struct BundleParamView {
  std::string name;
  Shape shape;
  std::span<const float> data;
};

struct LoadedBundleParam {
  std::string name;
  Shape shape;
  std::vector<float> data;
};

struct LoadedBundle {
  std::string model_type;
  std::string config_json;  // model-specific document, verbatim
  std::vector<LoadedBundleParam> params;

  const LoadedBundleParam& find(const std::string& name) const;
};

void save_bundle(const std::string& dir, const std::string& model_type,
                 const std::string& config_json,
                 const std::vector<BundleParamView>& params);

LoadedBundle load_bundle(const std::string& dir);

}  // namespace adlr
