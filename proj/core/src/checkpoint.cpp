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

#include "vegscan/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vegscan/image_io.hpp"

namespace vegscan {
namespace {

constexpr char kMagic[4] = {'G', 'S', 'C', 'K'};
constexpr std::uint32_t kMaxRank = 8;

class Writer {
 public:
  template <typename U>
  void put(U value) {
    static_assert(std::is_trivially_copyable_v<U>);
    unsigned char bytes[sizeof(U)];
    std::memcpy(bytes, &value, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
    buf_.insert(buf_.end(), bytes, bytes + sizeof(U));
  }

  void tensor(const Tensor& t) {
    put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (const std::size_t d : t.shape()) put<std::uint64_t>(d);
    for (const float v : t.data()) put<float>(v);
  }

  void params(const nn::Parameters<float>& p) {
    put<std::uint32_t>(static_cast<std::uint32_t>(p.layers.size()));
    for (const auto& l : p.layers) {
      const bool has = !l.weight.empty();
      put<std::uint8_t>(has ? 1 : 0);
      if (has) {
        tensor(l.weight);
        tensor(l.bias);
      }
    }
  }

  std::vector<unsigned char>& bytes() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(std::vector<unsigned char> bytes, std::string source) : buf_(std::move(bytes)), source_(std::move(source)) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    unsigned char bytes[sizeof(U)];
    std::memcpy(bytes, buf_.data() + pos_, sizeof(U));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(U));
    pos_ += sizeof(U);
    U value;
    std::memcpy(&value, bytes, sizeof(U));
    return value;
  }

  Tensor tensor() {
    const auto rank = get<std::uint32_t>();
    if (rank == 0 || rank > kMaxRank) fail("bad tensor rank " + std::to_string(rank));
    Shape shape(rank);
    std::size_t volume = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(get<std::uint64_t>());
      if (d == 0 || d > remaining()) fail("bad tensor dimension");
      volume *= d;
    }
    need(volume * sizeof(float));
    std::vector<float> data(volume);
    for (float& v : data) v = get<float>();
    return Tensor(std::move(shape), std::move(data));
  }

  nn::Parameters<float> params() {
    nn::Parameters<float> p;
    const auto n = get<std::uint32_t>();
    if (n > remaining()) fail("bad layer count");
    p.layers.resize(n);
    for (auto& l : p.layers) {
      const auto has = get<std::uint8_t>();
      if (has > 1) fail("bad layer flag");
      if (has) {
        l.weight = tensor();
        l.bias = tensor();
      }
    }
    return p;
  }

  void magic() {
    need(4);
    if (std::memcmp(buf_.data(), kMagic, 4) != 0) fail("not a checkpoint (bad magic)");
    pos_ = 4;
  }

  bool at_end() const { return pos_ == buf_.size(); }
  [[noreturn]] void fail(const std::string& why) const { throw RuntimeError(source_ + ": " + why); }

 private:
  std::size_t remaining() const { return buf_.size() - pos_; }
  void need(std::size_t n) const {
    if (n > remaining()) fail("truncated checkpoint");
  }

  std::vector<unsigned char> buf_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const nn::NetworkSpec& spec, const Checkpoint& ckpt) {
  if (ckpt.params.layers.size() != spec.layers.size()) {
    throw InvalidArgument("checkpoint: parameters do not match the network");
  }
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const nn::LayerSpec& l = spec.layers[i];
    Shape weight;
    Shape bias;
    if (l.kind == nn::LayerKind::conv) {
      weight = {l.out_channels, l.in_channels, l.kernel, l.kernel};
      bias = {l.out_channels};
    } else if (l.kind == nn::LayerKind::dense) {
      weight = {l.out_features, l.in_features};
      bias = {l.out_features};
    }
    if (ckpt.params.layers[i].weight.shape() != weight || ckpt.params.layers[i].bias.shape() != bias) {
      throw InvalidArgument("checkpoint: parameter shapes of layer " + std::to_string(i) +
                            " do not match the network");
    }
  }
  Writer w;
  for (const char c : kMagic) w.put<char>(c);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint64_t>(spec.hash());
  w.params(ckpt.params);
  w.put<std::uint8_t>(ckpt.optimizer ? 1 : 0);
  if (ckpt.optimizer) {
    w.put<std::uint64_t>(ckpt.optimizer->step);
    w.params(ckpt.optimizer->m);
    w.params(ckpt.optimizer->v);
  }
  w.put<std::uint32_t>(ckpt.epoch);
  w.put<double>(ckpt.dev_accuracy);
  write_file_atomic(path, w.bytes());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  Reader r(read_file_bytes(path), path.string());
  r.magic();
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
  Checkpoint c;
  c.spec_hash = r.get<std::uint64_t>();
  c.params = r.params();
  const auto has_opt = r.get<std::uint8_t>();
  if (has_opt > 1) r.fail("bad optimizer flag");
  if (has_opt) {
    optim::AdamState<float> s;
    s.step = r.get<std::uint64_t>();
    s.m = r.params();
    s.v = r.params();
    c.optimizer = std::move(s);
  }
  c.epoch = r.get<std::uint32_t>();
  c.dev_accuracy = r.get<double>();
  if (!r.at_end()) r.fail("trailing bytes after checkpoint");
  return c;
}

Checkpoint read_checkpoint(const std::filesystem::path& path, const nn::NetworkSpec& spec) {
  Checkpoint c = read_checkpoint(path);
  if (c.spec_hash != spec.hash()) {
    std::ostringstream os;
    os << path.string() << ": checkpoint was written for a different network (hash " << std::hex << c.spec_hash
       << ", expected " << spec.hash() << ")";
    throw InvalidArgument(os.str());
  }
  if (c.params.layers.size() != spec.layers.size()) throw RuntimeError(path.string() + ": layer count mismatch");
  return c;
}

}  // namespace vegscan
