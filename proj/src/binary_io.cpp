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

#include <fstream>
#include <iterator>

namespace freqbias::io {

void ByteWriter::save(const std::filesystem::path& path) const {
  std::filesystem::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return ByteReader(std::move(data));
}

std::string ByteReader::bytes(std::size_t n) {
  require(n, "byte string");
  std::string out(data_.data() + pos_, n);
  pos_ += n;
  return out;
}

void ByteReader::require(std::uint64_t n, std::string_view what) const {
  if (remaining() < n) {
    throw LengthMismatchError("truncated input: need " + std::to_string(n) + " bytes for " +
                                  std::string(what) + ", " + std::to_string(remaining()) +
                                  " left",
                              pos_);
  }
}

}  // namespace freqbias::io
