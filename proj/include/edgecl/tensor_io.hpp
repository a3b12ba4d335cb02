/* Copyright (c) 2026 The edgecl Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "edgecl/tensor.hpp"

// Little-endian binary primitives shared by tensor files and buffer dumps.
//
// Tensor file layout:
//   char[8]  magic "ECLTNSR1"
//   u32      rank
//   u32      dims[rank]
//   f32      values[product(dims)]     row-major
namespace edgecl::io {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_i32(std::ostream& os, std::int32_t v) { put_u32(os, static_cast<std::uint32_t>(v)); }

inline void put_f32(std::ostream& os, std::span<const float> values) {
  if constexpr (std::endian::native == std::endian::little) {
    os.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * 4));
  } else {
    for (float f : values) put_u32(os, std::bit_cast<std::uint32_t>(f));
  }
}

inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw IoError("unexpected end of file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline std::int32_t get_i32(std::istream& is) { return static_cast<std::int32_t>(get_u32(is)); }

inline void get_f32(std::istream& is, std::span<float> out) {
  if constexpr (std::endian::native == std::endian::little) {
    if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size() * 4))) {
      throw IoError("unexpected end of file");
    }
  } else {
    for (float& f : out) f = std::bit_cast<float>(get_u32(is));
  }
}

inline void put_magic(std::ostream& os, const char (&magic)[9]) { os.write(magic, 8); }

inline void expect_magic(std::istream& is, const char (&magic)[9]) {
  char got[8];
  if (!is.read(got, 8) || std::memcmp(got, magic, 8) != 0) {
    throw IoError(std::string("bad magic, expected ") + magic);
  }
}

inline void put_shape(std::ostream& os, const Shape& s) {
  put_u32(os, static_cast<std::uint32_t>(s.size()));
  for (std::size_t d : s) put_u32(os, static_cast<std::uint32_t>(d));
}

inline Shape get_shape(std::istream& is) {
  const std::uint32_t rank = get_u32(is);
  if (rank > 8) throw IoError("implausible tensor rank " + std::to_string(rank));
  Shape s(rank);
  for (auto& d : s) d = get_u32(is);
  return s;
}

inline constexpr char kTensorMagic[9] = "ECLTNSR1";

inline void write_tensor(std::ostream& os, const Tensor& t) {
  put_magic(os, kTensorMagic);
  put_shape(os, t.shape());
  put_f32(os, t.data());
}

inline Tensor read_tensor(std::istream& is) {
  expect_magic(is, kTensorMagic);
  Tensor t(get_shape(is));
  get_f32(is, t.data());
  return t;
}

inline void save_tensor(const std::string& path, const Tensor& t) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  write_tensor(os, t);
  if (!os) throw IoError("write failed: " + path);
}

inline Tensor load_tensor(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  return read_tensor(is);
}

}  // namespace edgecl::io
