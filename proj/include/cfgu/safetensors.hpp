// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reader and writer for the safetensors container: an 8-byte little-endian
// header length N, N bytes of JSON header, then the raw tensor buffer.
// Only F32, F16 and BF16 tensors are supported.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfgu {

enum class DType { kF32, kF16, kBF16 };

std::string_view to_string(DType dtype);
DType parse_dtype(std::string_view name);
std::size_t dtype_size(DType dtype);

using Metadata = std::map<std::string, std::string>;

struct TensorInfo {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::int64_t> shape;
  // Relative to the start of the tensor buffer.
  std::uint64_t begin = 0;
  std::uint64_t end = 0;

  std::uint64_t numel() const;
  std::uint64_t nbytes() const { return end - begin; }
};

// Random access to the tensors of one file. Only the header is held in
// memory; tensor bytes are read on demand.
class SafetensorsReader {
 public:
  explicit SafetensorsReader(const std::filesystem::path& path);

  const std::filesystem::path& path() const { return path_; }
  // Sorted by ascending data offset.
  const std::vector<TensorInfo>& tensors() const { return tensors_; }
  const TensorInfo* find(std::string_view name) const;
  const Metadata& metadata() const { return metadata_; }

  std::vector<std::byte> read_raw(const TensorInfo& info) const;
  // Decodes any supported dtype to f32.
  std::vector<float> read_f32(const TensorInfo& info) const;

 private:
  std::filesystem::path path_;
  std::uint64_t data_start_ = 0;
  std::vector<TensorInfo> tensors_;
  Metadata metadata_;
  mutable std::ifstream in_;
};

struct TensorLayout {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::int64_t> shape;
};

// Writes the header up front, then accepts tensor payloads strictly in
// layout order. The output goes to a temporary sibling file that replaces
// `path` on finish(); an unfinished writer leaves no output behind.
class SafetensorsWriter {
 public:
  SafetensorsWriter(std::filesystem::path path, std::vector<TensorLayout> layout, const Metadata& metadata = {});
  ~SafetensorsWriter();
  SafetensorsWriter(const SafetensorsWriter&) = delete;
  SafetensorsWriter& operator=(const SafetensorsWriter&) = delete;

  void write_raw(std::string_view name, std::span<const std::byte> bytes);
  // Encodes f32 values into the tensor's declared dtype (round to nearest even).
  void write_f32(std::string_view name, std::span<const float> values);
  void finish();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_path_;
  std::vector<TensorInfo> infos_;
  std::size_t next_ = 0;
  std::ofstream out_;
  bool finished_ = false;
};

// Canonical header bytes (JSON, space padded to a multiple of 8) for tensors
// laid out back to back in the given order.
std::string encode_header(std::span<const TensorInfo> infos, const Metadata& metadata);

std::vector<float> decode_f32(DType dtype, std::span<const std::byte> bytes);
std::vector<std::byte> encode_f32(DType dtype, std::span<const float> values);

}  // namespace cfgu
