// Copyright 2026 The cfgu Authors
// SPDX-License-Identifier: Apache-2.0
//
// Task-vector extraction and forgetting via negation:
//
//   delta = finetuned - base
//   out   = base - alpha * delta
//
// Arithmetic is done in f32; results are rounded back to the base tensor's
// storage dtype.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cfgu/safetensors.hpp"

namespace cfgu {

struct NamedTensor {
  std::string name;
  DType dtype = DType::kF32;
  std::vector<std::int64_t> shape;
  // Row-major values decoded to f32.
  std::vector<float> data;
};

// In-memory checkpoint; tensors kept in file (offset) order.
struct Checkpoint {
  std::vector<NamedTensor> tensors;
  Metadata metadata;

  const NamedTensor* find(std::string_view name) const;
};

Checkpoint read_checkpoint(const std::filesystem::path& path);
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);

struct TaskVector {
  // Deltas are always f32.
  std::map<std::string, NamedTensor> tensors;
  std::string base_id;
  std::string finetuned_id;
};

// Which side of the delta the ReLU keeps. kPositive is max(0, delta);
// kNegative keeps min(0, delta) for the opposite reading of which sign
// carries the behaviour to remove.
enum class ReluSign { kPositive, kNegative };

// Throws StructuralError listing the symmetric difference of tensor names,
// or naming the first tensor whose shape differs.
void check_compatible(const std::vector<TensorInfo>& base, const std::vector<TensorInfo>& other);
void check_compatible(const Checkpoint& base, const Checkpoint& other);

TaskVector extract_task_vector(const Checkpoint& base, const Checkpoint& finetuned);
TaskVector relu_filter(TaskVector tv, ReluSign sign = ReluSign::kPositive);
Checkpoint apply_negation(const Checkpoint& base, const TaskVector& tv, double alpha);

// Per-tensor kernels shared by the in-memory and streaming paths.
std::vector<float> tensor_delta(std::span<const float> base, std::span<const float> finetuned);
void relu_in_place(std::vector<float>& delta, ReluSign sign);
std::vector<float> negate_delta(std::span<const float> base, std::span<const float> delta, double alpha);

struct SubtractOptions {
  double alpha = 0.5;
  bool relu = false;
  ReluSign relu_sign = ReluSign::kPositive;
  Metadata metadata;
};

// Streams base and finetuned files one tensor at a time and writes
// base - alpha * (finetuned - base). Structural checks run before anything
// is written. alpha == 0 copies base payloads bit for bit.
void subtract_files(const std::filesystem::path& base, const std::filesystem::path& finetuned,
                    const std::filesystem::path& out, const SubtractOptions& options);

}  // namespace cfgu
