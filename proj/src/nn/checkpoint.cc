// Copyright 2026 The lmloop Authors.
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

#include "lmloop/nn/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "lmloop/error.h"

namespace lmloop::nn {

namespace {

constexpr char kMagic[8] = {'L', 'M', 'L', 'C', 'K', 'P', 'T', '1'};

std::filesystem::path with_suffix(const std::filesystem::path& p,
                                  const char* suffix) {
  return std::filesystem::path(p.string() + suffix);
}

void put_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v),
                        static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error("checkpoint truncated");
  }
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const ParamStore& store) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream bin(with_suffix(path, ".bin"), std::ios::binary);
  if (!bin) throw Error("cannot write checkpoint " + path.string());
  bin.write(kMagic, sizeof(kMagic));
  put_u32(bin, static_cast<uint32_t>(store.size()));

  std::ostringstream manifest;
  manifest << "lmloop-checkpoint " << kCheckpointVersion << "\n";
  manifest << "tensors " << store.size() << "\n";
  for (size_t i = 0; i < store.size(); ++i) {
    const Param& p = store[i];
    put_u32(bin, static_cast<uint32_t>(p.name.size()));
    bin.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u32(bin, 2);
    put_u32(bin, static_cast<uint32_t>(p.rows()));
    put_u32(bin, static_cast<uint32_t>(p.cols()));
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) {
        const float f = static_cast<float>(p.value(r, c));
        put_u32(bin, std::bit_cast<uint32_t>(f));
      }
    }
    manifest << p.name << " " << p.rows() << " " << p.cols() << "\n";
  }
  if (!bin) throw Error("failed writing checkpoint " + path.string());
  std::ofstream man(with_suffix(path, ".manifest"));
  man << manifest.str();
}

void load_checkpoint(const std::filesystem::path& path, ParamStore& store) {
  std::ifstream bin(with_suffix(path, ".bin"), std::ios::binary);
  if (!bin) throw Error("cannot open checkpoint " + path.string());
  char magic[8];
  if (!bin.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw Error("bad checkpoint header in " + path.string());
  }
  const uint32_t count = get_u32(bin);
  if (count != store.size()) {
    throw Error("checkpoint has " + std::to_string(count) +
                " tensors, model has " + std::to_string(store.size()));
  }
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t name_len = get_u32(bin);
    std::string name(name_len, '\0');
    if (!bin.read(name.data(), name_len)) throw Error("checkpoint truncated");
    const uint32_t rank = get_u32(bin);
    if (rank != 2) throw Error("unsupported tensor rank in checkpoint");
    const uint32_t rows = get_u32(bin);
    const uint32_t cols = get_u32(bin);
    Param& p = store.at(name);
    if (p.rows() != rows || p.cols() != cols) {
      throw Error("shape mismatch for " + name);
    }
    for (uint32_t r = 0; r < rows; ++r) {
      for (uint32_t c = 0; c < cols; ++c) {
        p.value(r, c) = std::bit_cast<float>(get_u32(bin));
      }
    }
  }
}

bool checkpoint_exists(const std::filesystem::path& path) {
  auto with = [&path](const char* ext) {
    std::filesystem::path p = path;
    p += ext;
    return std::filesystem::exists(p);
  };
  return with(".bin") && with(".manifest");
}

}  // namespace lmloop::nn
