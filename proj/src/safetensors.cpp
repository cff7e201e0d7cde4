// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgu/safetensors.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include <json.hpp>

#include "cfgu/error.hpp"
#include "cfgu/fp16.hpp"

static_assert(std::endian::native == std::endian::little, "safetensors I/O assumes a little-endian host");

namespace cfgu {

namespace {

// Guards against absurd header lengths in corrupt files.
constexpr std::uint64_t kMaxHeaderBytes = 100u * 1024u * 1024u;

std::uint64_t checked_numel(const std::vector<std::int64_t>& shape, const std::string& name) {
  std::uint64_t n = 1;
  for (std::int64_t d : shape) {
    if (d < 0) throw StructuralError("safetensors: negative dimension in tensor '" + name + "'");
    n *= static_cast<std::uint64_t>(d);
  }
  return n;
}

}  // namespace

std::string_view to_string(DType dtype) {
  switch (dtype) {
    case DType::kF32: return "F32";
    case DType::kF16: return "F16";
    case DType::kBF16: return "BF16";
  }
  return "?";
}

DType parse_dtype(std::string_view name) {
  if (name == "F32") return DType::kF32;
  if (name == "F16") return DType::kF16;
  if (name == "BF16") return DType::kBF16;
  throw StructuralError("safetensors: unsupported dtype '" + std::string(name) + "'");
}

std::size_t dtype_size(DType dtype) { return dtype == DType::kF32 ? 4 : 2; }

std::uint64_t TensorInfo::numel() const { return checked_numel(shape, name); }

std::vector<float> decode_f32(DType dtype, std::span<const std::byte> bytes) {
  const std::size_t width = dtype_size(dtype);
  if (bytes.size() % width != 0) throw StructuralError("safetensors: payload size not a multiple of dtype size");
  std::vector<float> out(bytes.size() / width);
  if (dtype == DType::kF32) {
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint16_t raw;
    std::memcpy(&raw, bytes.data() + 2 * i, 2);
    out[i] = dtype == DType::kF16 ? half_to_float(raw) : bf16_to_float(raw);
  }
  return out;
}

std::vector<std::byte> encode_f32(DType dtype, std::span<const float> values) {
  std::vector<std::byte> out(values.size() * dtype_size(dtype));
  if (dtype == DType::kF32) {
    std::memcpy(out.data(), values.data(), out.size());
    return out;
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::uint16_t raw = dtype == DType::kF16 ? float_to_half(values[i]) : float_to_bf16(values[i]);
    std::memcpy(out.data() + 2 * i, &raw, 2);
  }
  return out;
}

std::string encode_header(std::span<const TensorInfo> infos, const Metadata& metadata) {
  nlohmann::ordered_json header = nlohmann::ordered_json::object();
  if (!metadata.empty()) {
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : metadata) meta[k] = v;
    header["__metadata__"] = std::move(meta);
  }
  for (const TensorInfo& info : infos) {
    nlohmann::ordered_json entry;
    entry["dtype"] = to_string(info.dtype);
    entry["shape"] = info.shape;
    entry["data_offsets"] = {info.begin, info.end};
    header[info.name] = std::move(entry);
  }
  std::string text = header.dump();
  text.append((8 - text.size() % 8) % 8, ' ');
  return text;
}

SafetensorsReader::SafetensorsReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw StructuralError("safetensors: cannot open " + path.string());
  std::error_code ec;
  const std::uint64_t file_size = std::filesystem::file_size(path, ec);
  if (ec) throw StructuralError("safetensors: cannot stat " + path.string());

  unsigned char len_bytes[8];
  if (!in_.read(reinterpret_cast<char*>(len_bytes), 8)) throw StructuralError("safetensors: truncated length prefix in " + path.string());
  std::uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) header_len = (header_len << 8) | len_bytes[i];
  if (header_len > kMaxHeaderBytes || 8 + header_len > file_size) {
    throw StructuralError("safetensors: bad header length in " + path.string());
  }
  std::string header_text(header_len, '\0');
  in_.read(header_text.data(), static_cast<std::streamsize>(header_len));
  data_start_ = 8 + header_len;
  const std::uint64_t buffer_size = file_size - data_start_;

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("safetensors: bad JSON header in " + path.string() + ": " + e.what());
  }
  if (!header.is_object()) throw StructuralError("safetensors: header is not an object");

  try {
    for (const auto& [name, entry] : header.items()) {
      if (name == "__metadata__") {
        for (const auto& [k, v] : entry.items()) metadata_[k] = v.get<std::string>();
        continue;
      }
      TensorInfo info;
      info.name = name;
      info.dtype = parse_dtype(entry.at("dtype").get<std::string>());
      info.shape = entry.at("shape").get<std::vector<std::int64_t>>();
      const auto offsets = entry.at("data_offsets").get<std::vector<std::uint64_t>>();
      if (offsets.size() != 2) throw StructuralError("safetensors: tensor '" + name + "' needs two data offsets");
      info.begin = offsets[0];
      info.end = offsets[1];
      if (info.end < info.begin || info.end > buffer_size) {
        throw StructuralError("safetensors: tensor '" + name + "' offsets out of range");
      }
      if (info.nbytes() != info.numel() * dtype_size(info.dtype)) {
        throw StructuralError("safetensors: tensor '" + name + "' byte size does not match shape");
      }
      tensors_.push_back(std::move(info));
    }
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError("safetensors: malformed header entry: " + std::string(e.what()));
  }

  std::sort(tensors_.begin(), tensors_.end(), [](const TensorInfo& a, const TensorInfo& b) {
    return a.begin != b.begin ? a.begin < b.begin : a.end < b.end;
  });
  for (std::size_t i = 1; i < tensors_.size(); ++i) {
    if (tensors_[i].begin < tensors_[i - 1].end) {
      throw StructuralError("safetensors: tensors '" + tensors_[i - 1].name + "' and '" + tensors_[i].name + "' overlap");
    }
  }
}

const TensorInfo* SafetensorsReader::find(std::string_view name) const {
  for (const TensorInfo& info : tensors_) {
    if (info.name == name) return &info;
  }
  return nullptr;
}

std::vector<std::byte> SafetensorsReader::read_raw(const TensorInfo& info) const {
  std::vector<std::byte> bytes(info.nbytes());
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(data_start_ + info.begin));
  if (!in_.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
    throw StructuralError("safetensors: short read for tensor '" + info.name + "'");
  }
  return bytes;
}

std::vector<float> SafetensorsReader::read_f32(const TensorInfo& info) const {
  return decode_f32(info.dtype, read_raw(info));
}

SafetensorsWriter::SafetensorsWriter(std::filesystem::path path, std::vector<TensorLayout> layout,
                                     const Metadata& metadata)
    : path_(std::move(path)) {
  tmp_path_ = path_;
  tmp_path_ += ".partial";
  std::uint64_t offset = 0;
  for (TensorLayout& t : layout) {
    for (const TensorInfo& seen : infos_) {
      if (seen.name == t.name) throw StructuralError("safetensors: duplicate tensor name '" + t.name + "'");
    }
    if (t.name == "__metadata__") throw StructuralError("safetensors: reserved tensor name '__metadata__'");
    TensorInfo info{std::move(t.name), t.dtype, std::move(t.shape), offset, 0};
    info.end = offset + info.numel() * dtype_size(info.dtype);
    offset = info.end;
    infos_.push_back(std::move(info));
  }

  const std::string header = encode_header(infos_, metadata);
  out_.open(tmp_path_, std::ios::binary | std::ios::trunc);
  if (!out_) throw StructuralError("safetensors: cannot write " + tmp_path_.string());
  std::uint64_t len = header.size();
  unsigned char len_bytes[8];
  for (int i = 0; i < 8; ++i) len_bytes[i] = static_cast<unsigned char>((len >> (8 * i)) & 0xFFu);
  out_.write(reinterpret_cast<const char*>(len_bytes), 8);
  out_.write(header.data(), static_cast<std::streamsize>(header.size()));
}

SafetensorsWriter::~SafetensorsWriter() {
  if (!finished_) {
    out_.close();
    std::error_code ec;
    std::filesystem::remove(tmp_path_, ec);
  }
}

void SafetensorsWriter::write_raw(std::string_view name, std::span<const std::byte> bytes) {
  if (next_ >= infos_.size() || infos_[next_].name != name) {
    throw StructuralError("safetensors: tensor '" + std::string(name) + "' written out of layout order");
  }
  if (bytes.size() != infos_[next_].nbytes()) {
    throw StructuralError("safetensors: tensor '" + std::string(name) + "' has wrong payload size");
  }
  out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  ++next_;
}

void SafetensorsWriter::write_f32(std::string_view name, std::span<const float> values) {
  if (next_ >= infos_.size()) throw StructuralError("safetensors: too many tensors written");
  write_raw(name, encode_f32(infos_[next_].dtype, values));
}

void SafetensorsWriter::finish() {
  if (next_ != infos_.size()) {
    throw StructuralError("safetensors: " + std::to_string(infos_.size() - next_) + " tensors never written");
  }
  out_.close();
  if (!out_) throw StructuralError("safetensors: write failed for " + tmp_path_.string());
  std::filesystem::rename(tmp_path_, path_);
  finished_ = true;
}

}  // namespace cfgu
