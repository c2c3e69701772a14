// Copyright 2026 The metacomm Authors.
// SPDX-License-Identifier: Apache-2.0

#include "metacomm/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace metacomm {
namespace {

constexpr std::array<char, 8> kMagic = {'M', 'C', 'K', 'P', 'T', '\0', '\0', '\1'};

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
  return v;
}

void write_u64(std::ostream& os, std::uint64_t v) {
  v = to_le(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("checkpoint: truncated file");
  return to_le(v);
}

}  // namespace

nlohmann::json spec_to_json(const ModelSpec& spec) {
  nlohmann::json j = {{"k", spec.k},
                      {"n", spec.n},
                      {"channel_taps", spec.channel_taps},
                      {"encoder_hidden", spec.encoder_hidden},
                      {"decoder_hidden", spec.decoder_hidden},
                      {"es", spec.es}};
  if (spec.rtn) {
    j["rtn"] = {{"taps", spec.rtn->taps}, {"hidden1", spec.rtn->hidden1}, {"hidden2", spec.rtn->hidden2}};
  } else {
    j["rtn"] = nullptr;
  }
  return j;
}

ModelSpec spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.k = j.at("k").get<int>();
  s.n = j.at("n").get<std::size_t>();
  s.channel_taps = j.at("channel_taps").get<std::size_t>();
  s.encoder_hidden = j.at("encoder_hidden").get<std::size_t>();
  s.decoder_hidden = j.at("decoder_hidden").get<std::size_t>();
  s.es = j.at("es").get<double>();
  if (j.contains("rtn") && !j["rtn"].is_null()) {
    const auto& r = j["rtn"];
    s.rtn = RtnSpec{r.at("taps").get<std::size_t>(), r.at("hidden1").get<std::size_t>(),
                    r.at("hidden2").get<std::size_t>()};
  }
  s.validate();
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const ParamVector& params, const ModelSpec& spec,
                     std::string_view stream_label) {
  nlohmann::json header = {{"format", "metacomm-checkpoint/1"},
                           {"model", spec_to_json(spec)},
                           {"stream", std::string(stream_label)},
                           {"count", params.size()}};
  auto& layout = header["layout"] = nlohmann::json::array();
  for (const auto& s : params.layout().segments()) {
    layout.push_back({{"name", s.name}, {"offset", s.offset}, {"rows", s.rows}, {"cols", s.cols}});
  }
  const std::string text = header.dump();

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "' for writing");
  os.write(kMagic.data(), kMagic.size());
  write_u64(os, text.size());
  os.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (double v : params.values()) write_u64(os, std::bit_cast<std::uint64_t>(v));
  if (!os) throw std::runtime_error("checkpoint: write failed for '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "'");
  std::array<char, 8> magic{};
  is.read(magic.data(), magic.size());
  if (!is || magic != kMagic) throw std::runtime_error("checkpoint: bad magic in '" + path.string() + "'");
  const std::uint64_t len = read_u64(is);
  std::string text(len, '\0');
  is.read(text.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("checkpoint: truncated header");
  const auto header = nlohmann::json::parse(text);

  const ModelSpec spec = spec_from_json(header.at("model"));
  const ParamLayout expected = ParamLayout::from(spec);
  const auto& stored = header.at("layout");
  if (stored.size() != expected.segments().size()) throw std::runtime_error("checkpoint: layout mismatch");
  for (std::size_t i = 0; i < stored.size(); ++i) {
    const auto& seg = expected.segments()[i];
    if (stored[i].at("name") != seg.name || stored[i].at("offset") != seg.offset ||
        stored[i].at("rows") != seg.rows || stored[i].at("cols") != seg.cols) {
      throw std::runtime_error("checkpoint: layout mismatch at segment '" + seg.name + "'");
    }
  }
  const auto count = header.at("count").get<std::size_t>();
  if (count != expected.size()) throw std::runtime_error("checkpoint: parameter count mismatch");
  std::vector<double> values(count);
  for (double& v : values) v = std::bit_cast<double>(read_u64(is));
  return {spec, ParamVector(spec, std::move(values)), header.at("stream").get<std::string>()};
}

}  // namespace metacomm
