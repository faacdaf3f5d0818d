// Copyright 2026 The freqbias Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "freqbias/binary_io.hpp"
#include "freqbias/error.hpp"
#include "freqbias/masks.hpp"

namespace freqbias::masks {
namespace {

template <typename T>
std::vector<T> read_array(const nlohmann::json& trailer, const char* key, std::size_t n,
                          std::uint64_t offset) {
  if (!trailer.contains(key) || !trailer[key].is_array()) {
    throw FormatError(std::string("mask set trailer lacks '") + key + "'", offset);
  }
  auto values = trailer[key].get<std::vector<T>>();
  if (values.size() != n) {
    throw LengthMismatchError(std::string("mask set trailer '") + key + "' has " +
                                  std::to_string(values.size()) + " entries, header says " +
                                  std::to_string(n),
                              offset);
  }
  return values;
}

}  // namespace

void save_mask_set(const MaskSet& set, const std::filesystem::path& path) {
  set.validate();
  io::ByteWriter w;
  w.bytes("FMSK");
  w.u16(kMaskSetVersion);
  w.u8(static_cast<std::uint8_t>(set.kind));
  w.u32(static_cast<std::uint32_t>(set.size()));
  w.u32(static_cast<std::uint32_t>(set.shape.channels));
  w.u32(static_cast<std::uint32_t>(set.shape.height));
  w.u32(static_cast<std::uint32_t>(set.shape.width));
  for (float v : set.values) w.f32(v);
  const nlohmann::json trailer = {{"kind", kind_name(set.kind)},
                                  {"target_labels", set.target_labels},
                                  {"true_labels", set.true_labels},
                                  {"image_ids", set.image_ids},
                                  {"final_losses", set.final_losses},
                                  {"densities", set.densities},
                                  {"preserved", set.preserved},
                                  {"attack", set.attack},
                                  {"config", set.config}};
  w.bytes(trailer.dump());
  w.save(path);
}

MaskSet load_mask_set(const std::filesystem::path& path) {
  io::ByteReader r = io::ByteReader::from_file(path);
  r.require(4, "magic");
  if (r.bytes(4) != "FMSK") throw BadMagicError("not a mask set file", 0);
  const std::uint64_t version_at = r.offset();
  const std::uint16_t version = r.u16();
  if (version != kMaskSetVersion) {
    throw VersionError("unsupported mask set version " + std::to_string(version), version_at);
  }
  const std::uint64_t kind_at = r.offset();
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw FormatError("unknown mask kind " + std::to_string(kind), kind_at);

  MaskSet set;
  set.kind = static_cast<MaskKind>(kind);
  const std::uint32_t n = r.u32();
  set.shape.channels = r.u32();
  set.shape.height = r.u32();
  set.shape.width = r.u32();
  const std::uint64_t count = static_cast<std::uint64_t>(n) * set.shape.size();
  r.require(count * 4, "mask payload");
  set.values.resize(count);
  for (float& v : set.values) v = r.f32();

  const std::uint64_t trailer_at = r.offset();
  nlohmann::json trailer;
  try {
    trailer = nlohmann::json::parse(r.bytes(r.remaining()));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed mask set trailer: ") + e.what(), trailer_at);
  }
  set.target_labels = read_array<int>(trailer, "target_labels", n, trailer_at);
  set.true_labels = read_array<int>(trailer, "true_labels", n, trailer_at);
  set.image_ids = read_array<std::uint64_t>(trailer, "image_ids", n, trailer_at);
  set.final_losses = read_array<double>(trailer, "final_losses", n, trailer_at);
  set.densities = read_array<double>(trailer, "densities", n, trailer_at);
  set.preserved = read_array<std::uint8_t>(trailer, "preserved", n, trailer_at);
  set.attack = trailer.value("attack", nlohmann::json());
  set.config = trailer.value("config", nlohmann::json::object());
  try {
    set.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("invalid mask set: ") + e.what(), trailer_at);
  }
  return set;
}

}  // namespace freqbias::masks
