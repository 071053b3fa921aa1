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
#include <span>
#include <vector>

#include "vegscan/tensor.hpp"

namespace vegscan {

enum class ImageFormat { unknown, png, jpeg };

/// Sniff the container format from the leading magic bytes.
ImageFormat detect_format(std::span<const std::uint8_t> bytes) noexcept;

/// Decode PNG or JPEG bytes into an RGB image. Gray inputs are replicated
/// across the three channels; alpha is dropped.
RgbImage decode_image(std::span<const std::uint8_t> bytes);
RgbImage read_image(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Encode as 8-bit PNG. Values are rounded and clamped to [0, 255].
std::vector<std::uint8_t> encode_png(const GrayImage& img);
std::vector<std::uint8_t> encode_png(const RgbImage& img);
void write_png(const std::filesystem::path& path, const GrayImage& img);
void write_png(const std::filesystem::path& path, const RgbImage& img);

/// Render a single-channel tensor (1 x H x W or H x W) with values in [0, 1]
/// as a gray PNG.
GrayImage unit_to_gray(const Tensor& channel);
std::vector<std::uint8_t> encode_unit_png(const Tensor& channel);
void write_unit_png(const std::filesystem::path& path, const Tensor& channel);

/// Write bytes via a temporary sibling file and rename, so readers never see
/// a partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace vegscan
