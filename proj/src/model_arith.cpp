// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0

#include "cfgu/model_arith.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "cfgu/error.hpp"

namespace cfgu {

namespace {

std::vector<TensorInfo> infos_of(const Checkpoint& ckpt) {
  std::vector<TensorInfo> infos;
  for (const NamedTensor& t : ckpt.tensors) infos.push_back({t.name, t.dtype, t.shape, 0, 0});
  return infos;
}

std::string shape_str(const std::vector<std::int64_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

void check_alpha(double alpha) {
  if (!std::isfinite(alpha)) throw InvalidInput("negation: alpha must be finite");
}

}  // namespace

const NamedTensor* Checkpoint::find(std::string_view name) const {
  for (const NamedTensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  SafetensorsReader reader(path);
  Checkpoint ckpt;
  ckpt.metadata = reader.metadata();
  for (const TensorInfo& info : reader.tensors()) {
    ckpt.tensors.push_back({info.name, info.dtype, info.shape, reader.read_f32(info)});
  }
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::vector<TensorLayout> layout;
  for (const NamedTensor& t : checkpoint.tensors) {
    const TensorInfo probe{t.name, t.dtype, t.shape, 0, 0};
    if (probe.numel() != t.data.size()) {
      throw StructuralError("checkpoint: tensor '" + t.name + "' data length does not match shape " + shape_str(t.shape));
    }
    layout.push_back({t.name, t.dtype, t.shape});
  }
  SafetensorsWriter writer(path, std::move(layout), checkpoint.metadata);
  for (const NamedTensor& t : checkpoint.tensors) writer.write_f32(t.name, t.data);
  writer.finish();
}

void check_compatible(const std::vector<TensorInfo>& base, const std::vector<TensorInfo>& other) {
  std::map<std::string, const TensorInfo*> a, b;
  for (const TensorInfo& t : base) a[t.name] = &t;
  for (const TensorInfo& t : other) b[t.name] = &t;

  std::vector<std::string> only_base, only_other;
  for (const auto& [name, _] : a) {
    if (!b.contains(name)) only_base.push_back(name);
  }
  for (const auto& [name, _] : b) {
    if (!a.contains(name)) only_other.push_back(name);
  }
  if (!only_base.empty() || !only_other.empty()) {
    std::string msg = "tensor name sets differ;";
    if (!only_base.empty()) {
      msg += " only in base:";
      for (const auto& n : only_base) msg += " '" + n + "'";
      if (!only_other.empty()) msg += ";";
    }
    if (!only_other.empty()) {
      msg += " only in other:";
      for (const auto& n : only_other) msg += " '" + n + "'";
    }
    throw StructuralError(msg);
  }
  for (const auto& [name, info] : a) {
    if (info->shape != b[name]->shape) {
      throw StructuralError("tensor '" + name + "' shape mismatch: " + shape_str(info->shape) + " vs " +
                            shape_str(b[name]->shape));
    }
  }
}

void check_compatible(const Checkpoint& base, const Checkpoint& other) {
  check_compatible(infos_of(base), infos_of(other));
}

std::vector<float> tensor_delta(std::span<const float> base, std::span<const float> finetuned) {
  std::vector<float> delta(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) delta[i] = finetuned[i] - base[i];
  return delta;
}

void relu_in_place(std::vector<float>& delta, ReluSign sign) {
  for (float& d : delta) {
    if (sign == ReluSign::kPositive ? d < 0.0f : d > 0.0f) d = 0.0f;
  }
}

std::vector<float> negate_delta(std::span<const float> base, std::span<const float> delta, double alpha) {
  const auto a = static_cast<float>(alpha);
  std::vector<float> out(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] - a * delta[i];
  return out;
}

TaskVector extract_task_vector(const Checkpoint& base, const Checkpoint& finetuned) {
  check_compatible(base, finetuned);
  TaskVector tv;
  for (const NamedTensor& b : base.tensors) {
    const NamedTensor& f = *finetuned.find(b.name);
    tv.tensors[b.name] = {b.name, DType::kF32, b.shape, tensor_delta(b.data, f.data)};
  }
  return tv;
}

TaskVector relu_filter(TaskVector tv, ReluSign sign) {
  for (auto& [_, t] : tv.tensors) relu_in_place(t.data, sign);
  return tv;
}

Checkpoint apply_negation(const Checkpoint& base, const TaskVector& tv, double alpha) {
  check_alpha(alpha);
  std::vector<TensorInfo> deltas;
  for (const auto& [name, t] : tv.tensors) deltas.push_back({name, t.dtype, t.shape, 0, 0});
  check_compatible(infos_of(base), deltas);

  Checkpoint out;
  out.metadata = base.metadata;
  for (const NamedTensor& b : base.tensors) {
    NamedTensor result{b.name, b.dtype, b.shape, {}};
    if (alpha == 0.0) {
      result.data = b.data;
    } else {
      // Round through the storage dtype so the in-memory result matches what
      // a write/read cycle produces.
      result.data = decode_f32(b.dtype, encode_f32(b.dtype, negate_delta(b.data, tv.tensors.at(b.name).data, alpha)));
    }
    out.tensors.push_back(std::move(result));
  }
  return out;
}

void subtract_files(const std::filesystem::path& base_path, const std::filesystem::path& finetuned_path,
                    const std::filesystem::path& out_path, const SubtractOptions& options) {
  check_alpha(options.alpha);
  SafetensorsReader base(base_path);
  SafetensorsReader finetuned(finetuned_path);
  check_compatible(base.tensors(), finetuned.tensors());

  Metadata metadata = base.metadata();
  for (const auto& [k, v] : options.metadata) metadata[k] = v;

  std::vector<TensorLayout> layout;
  for (const TensorInfo& info : base.tensors()) layout.push_back({info.name, info.dtype, info.shape});
  SafetensorsWriter writer(out_path, std::move(layout), metadata);

  for (const TensorInfo& info : base.tensors()) {
    if (options.alpha == 0.0) {
      writer.write_raw(info.name, base.read_raw(info));
      continue;
    }
    const std::vector<float> b = base.read_f32(info);
    std::vector<float> delta = tensor_delta(b, finetuned.read_f32(*finetuned.find(info.name)));
    if (options.relu) relu_in_place(delta, options.relu_sign);
    writer.write_f32(info.name, negate_delta(b, delta, options.alpha));
  }
  writer.finish();
}

}  // namespace cfgu
