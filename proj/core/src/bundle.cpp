// Copyright 2026 The adlr Authors
// SPDX-License-Identifier: Apache-2.0

#include "adlr/bundle.hpp"

#include <bit>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "adlr/errors.hpp"

namespace adlr {

namespace {

using nlohmann::json;

constexpr const char* kBundleFormat = "adlr-bundle";
constexpr int kBundleVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "params.bin is little-endian; big-endian hosts need a swap pass");

}  // namespace

const LoadedBundleParam& LoadedBundle::find(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return p;
  throw DataError("bundle is missing parameter '" + name + "'");
}

void save_bundle(const std::string& dir, const std::string& model_type,
                 const std::string& config_json,
                 const std::vector<BundleParamView>& params) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);

  json manifest;
  manifest["format"] = kBundleFormat;
  manifest["version"] = kBundleVersion;
  manifest["model_type"] = model_type;
  manifest["dtype"] = "f32";
  manifest["config"] = json::parse(config_json);

  json table = json::array();
  size_t offset = 0;
  for (const auto& p : params) {
    json entry;
    entry["name"] = p.name;
    entry["shape"] = p.shape;
    entry["offset"] = offset;
    entry["count"] = p.data.size();
    table.push_back(std::move(entry));
    offset += p.data.size() * sizeof(float);
  }
  manifest["params"] = std::move(table);

  {
    std::ofstream out(fs::path(dir) / "manifest.json");
    if (!out) throw DataError("cannot write bundle manifest in " + dir);
    out << manifest.dump(2) << '\n';
  }
  {
    std::ofstream out(fs::path(dir) / "params.bin", std::ios::binary);
    if (!out) throw DataError("cannot write bundle blob in " + dir);
    for (const auto& p : params)
      out.write(reinterpret_cast<const char*>(p.data.data()),
                static_cast<std::streamsize>(p.data.size() * sizeof(float)));
    if (!out) throw DataError("I/O failure writing params.bin in " + dir);
  }
}

LoadedBundle load_bundle(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream min(fs::path(dir) / "manifest.json");
  if (!min) throw DataError("cannot open bundle manifest in " + dir);
  json manifest = json::parse(min, nullptr, false);
  if (manifest.is_discarded() || manifest.value("format", "") != kBundleFormat)
    throw DataError("not a model bundle: " + dir);
  if (manifest.value("version", 0) != kBundleVersion)
    throw DataError("unsupported bundle version in " + dir);
  if (manifest.value("dtype", "") != "f32")
    throw DataError("unsupported bundle dtype in " + dir);

  LoadedBundle bundle;
  bundle.model_type = manifest.at("model_type").get<std::string>();
  bundle.config_json = manifest.at("config").dump();

  std::ifstream bin(fs::path(dir) / "params.bin", std::ios::binary);
  if (!bin) throw DataError("cannot open params.bin in " + dir);
  for (const auto& entry : manifest.at("params")) {
    LoadedBundleParam p;
    p.name = entry.at("name").get<std::string>();
    p.shape = entry.at("shape").get<Shape>();
    const size_t count = entry.at("count").get<size_t>();
    const size_t offset = entry.at("offset").get<size_t>();
    if (shape_size(p.shape) != count)
      throw DataError("bundle parameter '" + p.name + "' has inconsistent shape");
    p.data.resize(count);
    bin.seekg(static_cast<std::streamoff>(offset));
    bin.read(reinterpret_cast<char*>(p.data.data()),
             static_cast<std::streamsize>(count * sizeof(float)));
    if (!bin)
      throw DataError("params.bin truncated while reading '" + p.name + "'");
    bundle.params.push_back(std::move(p));
  }
  return bundle;
}

}  // namespace adlr
