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

#include "vegscan/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <string>

#include <jpeglib.h>

namespace vegscan {

ImageFormat detect_format(std::span<const std::uint8_t> bytes) noexcept {
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::equal(std::begin(kPng), std::end(kPng), bytes.begin())) {
    return ImageFormat::png;
  }
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
    return ImageFormat::jpeg;
  }
  return ImageFormat::unknown;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RuntimeError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

namespace {

RgbImage from_interleaved(const std::uint8_t* data, std::size_t h, std::size_t w, std::size_t comps) {
  RgbImage img(h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::uint8_t* px = data + (y * w + x) * comps;
      for (std::size_t c = 0; c < 3; ++c) img.at(c, y, x) = px[comps == 1 ? 0 : c];
    }
  }
  return img;
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw RuntimeError(std::string("PNG decode failed: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw RuntimeError("PNG decode failed: " + msg);
  }
  return from_interleaved(buffer.data(), image.height, image.width, 3);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

RgbImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  std::vector<std::uint8_t> buffer;
  std::size_t h = 0;
  std::size_t w = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw RuntimeError(std::string("JPEG decode failed: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  h = cinfo.output_height;
  w = cinfo.output_width;
  const std::size_t row_bytes = w * static_cast<std::size_t>(cinfo.output_components);
  buffer.resize(h * row_bytes);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buffer.data() + cinfo.output_scanline * row_bytes;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  const auto comps = static_cast<std::size_t>(cinfo.output_components);
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_interleaved(buffer.data(), h, w, comps);
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

template <std::size_t C>
std::vector<std::uint8_t> encode_png_impl(const PlanarImage<C>& img) {
  if (img.empty()) throw InvalidArgument("encode_png: empty image");
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  std::vector<std::uint8_t> interleaved(h * w * C);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < C; ++c) interleaved[(y * w + x) * C + c] = to_byte(img.at(c, y, x));
    }
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(w);
  image.height = static_cast<png_uint_32>(h);
  image.format = C == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, interleaved.data(), 0, nullptr)) {
    throw RuntimeError(std::string("PNG encode failed: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, interleaved.data(), 0, nullptr)) {
    throw RuntimeError(std::string("PNG encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
  switch (detect_format(bytes)) {
    case ImageFormat::png:
      return decode_png(bytes);
    case ImageFormat::jpeg:
      return decode_jpeg(bytes);
    case ImageFormat::unknown:
      break;
  }
  throw RuntimeError("unsupported image format (expected PNG or JPEG)");
}

RgbImage read_image(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_image(bytes);
  } catch (const RuntimeError& e) {
    throw RuntimeError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) { return encode_png_impl(img); }
std::vector<std::uint8_t> encode_png(const RgbImage& img) { return encode_png_impl(img); }

void write_png(const std::filesystem::path& path, const GrayImage& img) {
  write_file_atomic(path, encode_png(img));
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  write_file_atomic(path, encode_png(img));
}

GrayImage unit_to_gray(const Tensor& channel) {
  if (channel.rank() != 2 && !(channel.rank() == 3 && channel.dim(0) == 1)) {
    throw InvalidArgument("expected a single-channel tensor, got " + shape_to_string(channel.shape()));
  }
  const std::size_t h = channel.rank() == 3 ? channel.dim(1) : channel.dim(0);
  const std::size_t w = channel.shape().back();
  GrayImage img(h, w);
  for (std::size_t i = 0; i < h * w; ++i) img.pixels()[i] = 255.0 * std::clamp<double>(channel[i], 0.0, 1.0);
  return img;
}

std::vector<std::uint8_t> encode_unit_png(const Tensor& channel) { return encode_png(unit_to_gray(channel)); }

void write_unit_png(const std::filesystem::path& path, const Tensor& channel) { write_png(path, unit_to_gray(channel)); }

}  // namespace vegscan
