// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "metacomm/model.hpp"

namespace metacomm {

// Checkpoint file layout (all integers little-endian):
//
//   bytes 0..7    magic "MCKPT\0\0\1"
//   bytes 8..15   u64 header length H
//   next H bytes  UTF-8 JSON header: {"format", "model", "layout", "stream", "count"}
//                 "layout" lists {name, offset, rows, cols} in storage order
//   remainder     count x IEEE-754 binary64, little-endian, flat parameter order
//
// Loading validates that the stored layout equals the layout derived from the
// stored model description.

struct Checkpoint {
  ModelSpec spec;
  ParamVector params;
  std::string stream_label;
};

nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

void save_checkpoint(const std::filesystem::path& path, const ParamVector& params, const ModelSpec& spec,
                     std::string_view stream_label);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace metacomm
