// Copyright 2026 the Achelous authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "ach/core/checkpoint.hpp"
#include "ach/core/rng.hpp"

using namespace ach;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("checkpoint round-trips bit-exactly and preserves order") {
  Rng rng(11);
  std::vector<std::pair<std::string, TensorF>> params;
  params.emplace_back("encoder.stem.weight", TensorF::zeros({4, 3, 3, 3}));
  params.emplace_back("head.bias", TensorF::zeros({7}));
  params.emplace_back("scalar", TensorF::zeros({1}));
  for (auto& [name, t] : params)
    for (auto& v : t.data()) v = static_cast<float>(rng.normal(0.0, 10.0));
  // throw in values that expose any text-based lossiness
  params[1].second.ptr()[0] = 1.0f / 3.0f;
  params[1].second.ptr()[1] = -0.0f;
  params[1].second.ptr()[2] = 3.402823e38f;

  std::string path = temp_path("ach_ckpt_roundtrip.bin");
  save_checkpoint(path, params);
  auto loaded = load_checkpoint(path);
  REQUIRE(loaded.size() == params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    CHECK(loaded[i].first == params[i].first);
    REQUIRE(loaded[i].second.shape() == params[i].second.shape());
    REQUIRE(std::memcmp(loaded[i].second.ptr(), params[i].second.ptr(),
                        params[i].second.numel() * sizeof(float)) == 0);
  }
  auto by_name = load_checkpoint_map(path);
  CHECK(by_name.count("head.bias") == 1);
  std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects bad magic, bad version and truncation") {
  std::string path = temp_path("ach_ckpt_bad.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS(load_checkpoint(path));

  std::vector<std::pair<std::string, TensorF>> params;
  params.emplace_back("w", TensorF::full({4}, 2.0f));
  save_checkpoint(path, params);
  // corrupt the version field
  {
    std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(4);
    uint32_t bad = 999;
    f.write(reinterpret_cast<const char*>(&bad), 4);
  }
  CHECK_THROWS(load_checkpoint(path));

  save_checkpoint(path, params);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3);
  CHECK_THROWS(load_checkpoint(path));
  std::remove(path.c_str());
}

TEST_CASE("missing checkpoint file raises") {
  CHECK_THROWS(load_checkpoint(temp_path("ach_ckpt_does_not_exist.bin")));
}
