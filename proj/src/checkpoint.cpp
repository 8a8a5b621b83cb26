// Copyright 2026 The Anchorcast Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "checkpoint.hpp"

#include "config.hpp"
#include "error.hpp"

#include "json.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace anchorcast
{

using nlohmann::json;

namespace
{

constexpr const char * kMagic = "anchorcast-checkpoint 1";

std::string hex64(std::uint64_t v)
{
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t to_little(std::uint64_t v)
{
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

}  // namespace

std::string model_config_to_json(const ModelConfig & cfg)
{
  RunConfig run;
  run.model = cfg;
  const json all = json::parse(config_to_json(run));
  return json{{"anchors", all["anchors"]}, {"dcm", all["dcm"]}, {"model", all["model"]}}.dump();
}

ModelConfig model_config_from_json(const std::string & json_text)
{
  return parse_config(json_text).model;
}

void save_checkpoint(const ModelParams & params, std::ostream & out)
{
  const auto & layout = params.layout();
  const BetaWeights beta = params.beta();
  json header = {
    {"config", json::parse(model_config_to_json(params.config()))},
    {"layout", layout.manifest()},
    {"layout_hash", hex64(layout.hash())},
    {"count", layout.total()},
    {"beta",
     {{"dir", beta[kDir]}, {"occ", beta[kOcc]}, {"col", beta[kCol]}, {"acc", beta[kAcc]}, {"dec", beta[kDec]}}},
  };
  out << kMagic << '\n' << header.dump() << '\n';
  for (double v : params.flat()) {
    std::uint64_t bits = to_little(std::bit_cast<std::uint64_t>(v));
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    out.write(bytes, 8);
  }
}

void save_checkpoint(const ModelParams & params, const std::string & path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write checkpoint " + path);
  save_checkpoint(params, out);
  if (!out) fail(ErrorCode::kIo, "write failed for " + path);
}

ModelParams load_checkpoint(std::istream & in, const std::string & source)
{
  std::string magic;
  std::string header_text;
  if (!std::getline(in, magic) || magic != kMagic) fail(ErrorCode::kValidation, source + ": not an anchorcast checkpoint");
  if (!std::getline(in, header_text)) fail(ErrorCode::kValidation, source + ": truncated checkpoint header");
  json header;
  try {
    header = json::parse(header_text);
  } catch (const json::parse_error & e) {
    fail(ErrorCode::kValidation, source + ": malformed checkpoint header: " + e.what());
  }
  const auto need = [&](const char * key) -> const json & {
    if (!header.contains(key)) fail(ErrorCode::kValidation, source + ": checkpoint header lacks '" + key + "'");
    return header[key];
  };

  ModelParams params(model_config_from_json(need("config").dump()));
  const auto & layout = params.layout();
  if (need("layout_hash").get<std::string>() != hex64(layout.hash()) || need("layout").get<std::string>() != layout.manifest()) {
    fail(ErrorCode::kValidation, source + ": parameter layout hash mismatch");
  }
  if (need("count").get<std::size_t>() != layout.total()) {
    fail(ErrorCode::kValidation, source + ": parameter count mismatch");
  }
  auto & flat = params.flat();
  for (double & v : flat) {
    char bytes[8];
    if (!in.read(bytes, 8)) fail(ErrorCode::kValidation, source + ": truncated parameter payload");
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    v = std::bit_cast<double>(to_little(bits));
    if (!std::isfinite(v)) fail(ErrorCode::kNumeric, source + ": non-finite parameter in checkpoint");
  }
  if (in.peek() != std::char_traits<char>::eof()) fail(ErrorCode::kValidation, source + ": trailing bytes after parameters");
  return params;
}

ModelParams load_checkpoint(const std::string & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open checkpoint " + path);
  return load_checkpoint(in, path);
}

}  // namespace anchorcast
