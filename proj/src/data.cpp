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

#include "freqbias/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "freqbias/binary_io.hpp"
#include "freqbias/error.hpp"

namespace freqbias::data {
namespace {

constexpr std::size_t kCifarSide = 32;
constexpr std::size_t kCifarPixels = 3 * kCifarSide * kCifarSide;
constexpr std::size_t kCifarRecord = 1 + kCifarPixels;

FrequencyBin conjugate(const FrequencyBin& b, const Shape3& s) {
  return {b.channel, (s.height - b.u) % s.height, (s.width - b.v) % s.width};
}

// Low-frequency bins in order of increasing Chebyshev radius, one per
// conjugate pair, DC excluded.
std::vector<std::pair<std::size_t, std::size_t>> candidate_bins(const Shape3& s) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  const long h = static_cast<long>(s.height);
  const long w = static_cast<long>(s.width);
  const long max_radius = std::max(h, w) / 2;
  for (long r = 1; r <= max_radius; ++r) {
    for (long du = 0; du <= r; ++du) {
      for (long dv = -r; dv <= r; ++dv) {
        if (std::max(std::abs(du), std::abs(dv)) != r) continue;
        if (du == 0 && dv <= 0) continue;
        const auto u = static_cast<std::size_t>(((du % h) + h) % h);
        const auto v = static_cast<std::size_t>(((dv % w) + w) % w);
        const std::pair<std::size_t, std::size_t> bin{u, v};
        const std::pair<std::size_t, std::size_t> conj{(s.height - u) % s.height,
                                                      (s.width - v) % s.width};
        if (seen.count(bin) || seen.count(conj)) continue;
        if (bin == conj) continue;  // Nyquist self-conjugate bins carry no phase
        seen.insert(bin);
        out.push_back(bin);
      }
    }
  }
  return out;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

nlohmann::json SpiralConfig::to_json() const {
  return {{"n_points", n_points},
          {"turns", turns},
          {"radial_rate", radial_rate},
          {"noise_fraction", noise_fraction},
          {"seed", seed}};
}

Matrix spiral_at(std::span<const double> thetas, double radial_rate) {
  Matrix out(thetas.size(), 2);
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double r = radial_rate * thetas[i];
    out(i, 0) = r * std::cos(thetas[i]);
    out(i, 1) = r * std::sin(thetas[i]);
  }
  return out;
}

Matrix gen_spiral(const SpiralConfig& config) {
  if (config.n_points < 3) throw InvalidArgument("spiral needs at least 3 points");
  if (!(config.noise_fraction >= 0.0)) throw InvalidArgument("spiral noise must be >= 0");
  if (!(config.turns > 0.0) || !(config.radial_rate > 0.0)) {
    throw InvalidArgument("spiral turns and radial rate must be positive");
  }
  std::mt19937_64 rng(config.seed);
  const double theta_max = 2.0 * std::numbers::pi * config.turns;
  std::uniform_real_distribution<double> angle(0.0, theta_max);
  std::vector<double> thetas(config.n_points);
  for (double& t : thetas) t = angle(rng);
  Matrix points = spiral_at(thetas, config.radial_rate);
  const double sigma = config.noise_fraction * config.radial_rate * theta_max;
  if (sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, sigma);
    for (double& v : points.data) v += noise(rng);
  }
  return points;
}

Matrix gen_hypercube(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n < 3) throw InvalidArgument("hypercube sample needs at least 3 points");
  if (d < 1) throw InvalidArgument("hypercube dimension must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix out(n, d);
  for (double& v : out.data) v = unit(rng);
  return out;
}

std::vector<FrequencyBin> with_conjugates(std::span<const FrequencyBin> bins, const Shape3& shape) {
  std::set<FrequencyBin> all;
  for (const auto& b : bins) {
    all.insert(b);
    all.insert(conjugate(b, shape));
  }
  return {all.begin(), all.end()};
}

nlohmann::json SpectralDatasetConfig::to_json() const {
  nlohmann::json sig = nlohmann::json::array();
  for (const auto& cls : signatures) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : cls) bins.push_back({b.channel, b.u, b.v});
    sig.push_back(bins);
  }
  return {{"n_train", n_train},
          {"n_test", n_test},
          {"classes", classes},
          {"shape", {shape.channels, shape.height, shape.width}},
          {"signatures", sig},
          {"bins_per_class", bins_per_class},
          {"amplitude", amplitude},
          {"noise_std", noise_std},
          {"phase_jitter", phase_jitter},
          {"seed", seed}};
}

std::vector<std::vector<FrequencyBin>> default_signatures(std::size_t classes,
                                                          std::size_t bins_per_class,
                                                          const Shape3& shape) {
  const auto candidates = candidate_bins(shape);
  if (classes * bins_per_class > candidates.size()) {
    throw InvalidArgument("image too small for " + std::to_string(classes) + " classes with " +
                          std::to_string(bins_per_class) + " bins each");
  }
  std::vector<std::vector<FrequencyBin>> out(classes);
  for (std::size_t k = 0; k < classes; ++k) {
    for (std::size_t b = 0; b < bins_per_class; ++b) {
      const auto& [u, v] = candidates[b * classes + k];
      out[k].push_back({k % shape.channels, u, v});
    }
  }
  return out;
}

SpectralDataset gen_spectral_dataset(const SpectralDatasetConfig& config) {
  const Shape3& s = config.shape;
  if (s.size() == 0) throw InvalidArgument("spectral dataset shape is empty");
  if (config.classes < 2) throw InvalidArgument("spectral dataset needs at least two classes");
  if (!(config.amplitude > 0.0)) throw InvalidArgument("signal amplitude must be positive");
  if (!(config.noise_std >= 0.0)) throw InvalidArgument("noise std must be non-negative");
  if (!(config.phase_jitter >= 0.0 && config.phase_jitter <= 1.0)) {
    throw InvalidArgument("phase jitter must lie in [0, 1]");
  }
  auto signatures = config.signatures.empty()
                        ? default_signatures(config.classes, config.bins_per_class, s)
                        : config.signatures;
  if (signatures.size() != config.classes) {
    throw InvalidArgument("need one signature per class");
  }
  SpectralDataset out;
  std::set<FrequencyBin> used;
  for (const auto& cls : signatures) {
    if (cls.empty()) throw InvalidArgument("empty class signature");
    for (const auto& b : cls) {
      if (b.channel >= s.channels || b.u >= s.height || b.v >= s.width) {
        throw InvalidArgument("signature bin (" + std::to_string(b.channel) + ", " +
                              std::to_string(b.u) + ", " + std::to_string(b.v) +
                              ") outside image " + s.str());
      }
      if (b.u == 0 && b.v == 0) throw InvalidArgument("signature may not use the DC bin");
    }
    auto full = with_conjugates(cls, s);
    for (const auto& b : full) {
      if (!used.insert(b).second) throw InvalidArgument("class signatures overlap");
    }
    out.signatures.push_back(std::move(full));
  }

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> jitter_dist(-std::numbers::pi, std::numbers::pi);
  std::normal_distribution<double> noise(0.0, config.noise_std);
  std::vector<std::vector<double>> class_phase(config.classes);
  for (std::size_t k = 0; k < config.classes; ++k) {
    for (std::size_t b = 0; b < signatures[k].size(); ++b) class_phase[k].push_back(phase_dist(rng));
  }
  auto make = [&](std::size_t count) {
    ImageBatch batch(s);
    std::vector<double> img(s.size());
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t label = i % config.classes;
      std::fill(img.begin(), img.end(), 0.0);
      for (std::size_t j = 0; j < signatures[label].size(); ++j) {
        const FrequencyBin& b = signatures[label][j];
        double phase = class_phase[label][j];
        if (config.phase_jitter > 0.0) phase += config.phase_jitter * jitter_dist(rng);
        double* plane = img.data() + b.channel * s.plane();
        for (std::size_t x = 0; x < s.height; ++x) {
          for (std::size_t y = 0; y < s.width; ++y) {
            const double arg = 2.0 * std::numbers::pi *
                               (static_cast<double>(b.u * x) / static_cast<double>(s.height) +
                                static_cast<double>(b.v * y) / static_cast<double>(s.width));
            plane[x * s.width + y] += config.amplitude * std::cos(arg + phase);
          }
        }
      }
      if (config.noise_std > 0.0) {
        for (double& p : img) p += noise(rng);
      }
      const auto [lo, hi] = std::minmax_element(img.begin(), img.end());
      const double low = *lo;
      const double span = *hi - *lo;
      for (double& p : img) p = span > 0.0 ? (p - low) / span : 0.5;
      batch.push_back(img, static_cast<int>(label));
    }
    return batch;
  };
  out.train = make(config.n_train);
  out.test = make(config.n_test);
  return out;
}

ImageBatch parse_cifar10(std::span<const unsigned char> bytes) {
  if (bytes.empty()) throw FormatError("empty CIFAR-10 file", 0);
  if (bytes.size() % kCifarRecord != 0) {
    const std::size_t whole = bytes.size() / kCifarRecord;
    throw LengthMismatchError("CIFAR-10 file size " + std::to_string(bytes.size()) +
                                  " is not a multiple of the 3073-byte record",
                              whole * kCifarRecord);
  }
  const std::size_t n = bytes.size() / kCifarRecord;
  ImageBatch batch(Shape3{3, kCifarSide, kCifarSide}, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t base = i * kCifarRecord;
    if (bytes[base] > 9) {
      throw FormatError("CIFAR-10 label " + std::to_string(bytes[base]) + " outside [0,10)", base);
    }
    batch.labels[i] = bytes[base];
    auto img = batch.image(i);
    for (std::size_t p = 0; p < kCifarPixels; ++p) img[p] = bytes[base + 1 + p] / 255.0;
  }
  return batch;
}

ImageBatch load_cifar10(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return parse_cifar10(bytes);
}

void save_image_batch(const ImageBatch& batch, const std::filesystem::path& path,
                      const std::string& metadata_json) {
  batch.validate();
  io::ByteWriter w;
  w.bytes("FIMG");
  w.u16(kImageBatchVersion);
  w.u32(static_cast<std::uint32_t>(batch.size()));
  w.u32(static_cast<std::uint32_t>(batch.shape.channels));
  w.u32(static_cast<std::uint32_t>(batch.shape.height));
  w.u32(static_cast<std::uint32_t>(batch.shape.width));
  for (int y : batch.labels) w.u32(static_cast<std::uint32_t>(y));
  for (double p : batch.pixels) w.f64(p);
  w.u32(static_cast<std::uint32_t>(metadata_json.size()));
  w.bytes(metadata_json);
  w.save(path);
}

ImageBatch load_image_batch(const std::filesystem::path& path, std::string* metadata_json) {
  io::ByteReader r = io::ByteReader::from_file(path);
  r.require(4, "magic");
  if (r.bytes(4) != "FIMG") throw BadMagicError("not an image batch file", 0);
  const std::uint64_t version_at = r.offset();
  const std::uint16_t version = r.u16();
  if (version != kImageBatchVersion) {
    throw VersionError("unsupported image batch version " + std::to_string(version), version_at);
  }
  const std::uint32_t n = r.u32();
  Shape3 shape;
  shape.channels = r.u32();
  shape.height = r.u32();
  shape.width = r.u32();
  r.require(static_cast<std::uint64_t>(n) * 4 + static_cast<std::uint64_t>(n) * shape.size() * 8,
            "image payload");
  ImageBatch batch(shape, n);
  for (int& y : batch.labels) y = static_cast<int>(r.u32());
  for (double& p : batch.pixels) p = r.f64();
  const std::uint32_t meta_len = r.u32();
  std::string meta = r.bytes(meta_len);
  if (r.remaining() != 0) throw LengthMismatchError("trailing bytes after image batch", r.offset());
  if (metadata_json) *metadata_json = std::move(meta);
  return batch;
}

Matrix read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  Matrix m;
  std::string line;
  std::size_t line_no = 0;
  bool header_allowed = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      const auto first = cell.find_first_not_of(" \t");
      const auto last = cell.find_last_not_of(" \t");
      const std::string trimmed =
          first == std::string::npos ? std::string() : cell.substr(first, last - first + 1);
      double v = 0.0;
      const auto res = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), v);
      if (trimmed.empty() || res.ec != std::errc() || res.ptr != trimmed.data() + trimmed.size()) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (header_allowed) {
        header_allowed = false;
        continue;
      }
      throw FormatError(path.string() + ": non-numeric value on line " + std::to_string(line_no));
    }
    header_allowed = false;
    if (m.rows == 0) {
      m.cols = row.size();
    } else if (row.size() != m.cols) {
      throw FormatError(path.string() + ": line " + std::to_string(line_no) + " has " +
                        std::to_string(row.size()) + " columns, expected " +
                        std::to_string(m.cols));
    }
    m.data.insert(m.data.end(), row.begin(), row.end());
    ++m.rows;
  }
  return m;
}

void write_csv_matrix(const Matrix& m, const std::filesystem::path& path,
                      std::span<const std::string> header, const std::string& comment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  if (!comment.empty()) out << "# " << comment << '\n';
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  if (!header.empty()) out << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
}

}  // namespace freqbias::data
