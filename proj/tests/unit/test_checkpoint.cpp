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

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "vegscan/checkpoint.hpp"

namespace vegscan {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "vegscan_ckpt_tests";
  fs::create_directories(dir);
  return dir / name;
}

Checkpoint sample_checkpoint(const nn::NetworkSpec& spec, bool with_optimizer) {
  Checkpoint c;
  c.spec_hash = spec.hash();
  c.params = nn::init_params<float>(spec, 5);
  c.epoch = 17;
  c.dev_accuracy = 0.8125;
  if (with_optimizer) {
    optim::AdamState<float> st = optim::AdamState<float>::zeros_like(c.params);
    st.step = 1234;
    st.m.layers[0].weight.fill(0.25f);
    st.v.layers.back().bias.fill(3.5f);
    c.optimizer = st;
  }
  return c;
}

void expect_same(const nn::Parameters<float>& a, const nn::Parameters<float>& b) {
  ASSERT_EQ(a.layers.size(), b.layers.size());
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    EXPECT_EQ(a.layers[i].weight, b.layers[i].weight);
    EXPECT_EQ(a.layers[i].bias, b.layers[i].bias);
  }
}

TEST(Checkpoint, RoundTripWithoutOptimizer) {
  const auto spec = nn::NetworkSpec::small_net(5, 32);
  const Checkpoint c = sample_checkpoint(spec, false);
  const fs::path path = scratch("plain.gsck");
  write_checkpoint(path, spec, c);
  const Checkpoint back = read_checkpoint(path, spec);
  EXPECT_EQ(back.spec_hash, spec.hash());
  EXPECT_EQ(back.epoch, 17u);
  EXPECT_EQ(back.dev_accuracy, 0.8125);
  EXPECT_FALSE(back.optimizer.has_value());
  expect_same(back.params, c.params);
}

TEST(Checkpoint, RoundTripWithOptimizer) {
  const auto spec = nn::NetworkSpec::small_net(5, 32);
  const Checkpoint c = sample_checkpoint(spec, true);
  const fs::path path = scratch("opt.gsck");
  write_checkpoint(path, spec, c);
  const Checkpoint back = read_checkpoint(path);
  ASSERT_TRUE(back.optimizer.has_value());
  EXPECT_EQ(back.optimizer->step, 1234u);
  expect_same(back.optimizer->m, c.optimizer->m);
  expect_same(back.optimizer->v, c.optimizer->v);
}

TEST(Checkpoint, WrongArchitectureIsRejected) {
  const auto spec = nn::NetworkSpec::small_net(5, 32);
  const fs::path path = scratch("arch.gsck");
  write_checkpoint(path, spec, sample_checkpoint(spec, false));
  EXPECT_THROW(read_checkpoint(path, nn::NetworkSpec::small_net(5, 40)), InvalidArgument);
}

TEST(Checkpoint, MismatchedParametersAreNotWritten) {
  const auto spec = nn::NetworkSpec::small_net(5, 32);
  const auto other = nn::NetworkSpec::small_net(5, 40);
  EXPECT_THROW(write_checkpoint(scratch("bad.gsck"), other, sample_checkpoint(spec, false)), InvalidArgument);
}

TEST(Checkpoint, CorruptFilesAreRejected) {
  const auto spec = nn::NetworkSpec::small_net(5, 32);
  const fs::path path = scratch("corrupt.gsck");
  write_checkpoint(path, spec, sample_checkpoint(spec, false));
  const auto size = fs::file_size(path);

  fs::copy_file(path, scratch("trunc.gsck"), fs::copy_options::overwrite_existing);
  fs::resize_file(scratch("trunc.gsck"), size - 9);
  EXPECT_THROW(read_checkpoint(scratch("trunc.gsck")), RuntimeError);

  fs::copy_file(path, scratch("trail.gsck"), fs::copy_options::overwrite_existing);
  {
    std::ofstream out(scratch("trail.gsck"), std::ios::binary | std::ios::app);
    out << "x";
  }
  EXPECT_THROW(read_checkpoint(scratch("trail.gsck")), RuntimeError);

  fs::copy_file(path, scratch("magic.gsck"), fs::copy_options::overwrite_existing);
  {
    std::fstream f(scratch("magic.gsck"), std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(0);
    f.put('X');
  }
  EXPECT_THROW(read_checkpoint(scratch("magic.gsck")), RuntimeError);
  EXPECT_THROW(read_checkpoint(scratch("does_not_exist.gsck")), RuntimeError);
}

}  // namespace
}  // namespace vegscan
