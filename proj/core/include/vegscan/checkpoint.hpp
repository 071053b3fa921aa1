// Copyright 2026 The vegscan Authors.
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "vegscan/nn.hpp"
#include "vegscan/optim.hpp"

namespace vegscan {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary snapshot: "GSCK", u32 version, u64 architecture hash, the
/// parameters as little-endian float32 tensors, optional ADAM state, then
/// u32 epoch and f64 dev accuracy.
struct Checkpoint {
  std::uint64_t spec_hash = 0;
  nn::Parameters<float> params;
  std::optional<optim::AdamState<float>> optimizer;
  std::uint32_t epoch = 0;
  double dev_accuracy = 0.0;
};

/// Written through a temporary file and renamed into place.
void write_checkpoint(const std::filesystem::path& path, const nn::NetworkSpec& spec, const Checkpoint& ckpt);

/// Throws RuntimeError on a malformed file and InvalidArgument when the
/// stored architecture hash differs from \p spec.
Checkpoint read_checkpoint(const std::filesystem::path& path, const nn::NetworkSpec& spec);

/// Reads without checking against an architecture.
Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace vegscan
