/*
 * Copyright 2026 The copg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "copg/checkpoint.hpp"

#include "copg/binio.hpp"
#include "copg/version.hpp"

namespace copg::ad {

namespace {

void write_mat(std::ostream& os, const Matf& m) {
  for (std::size_t i = 0; i < m.size(); ++i) binio::write_le<float>(os, m[i]);
}

Matf read_mat(std::istream& is, std::size_t rows, std::size_t cols) {
  Matf m(rows, cols);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = binio::read_le<float>(is, "matrix data");
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  auto os = binio::open_out(path);
  binio::write_magic(os, kCheckpointMagic);
  binio::write_le<uint32_t>(os, static_cast<uint32_t>(ckpt.params.size()));
  for (const auto& [name, mat] : ckpt.params) {
    binio::write_string(os, name);
    binio::write_le<uint32_t>(os, static_cast<uint32_t>(mat.rows()));
    binio::write_le<uint32_t>(os, static_cast<uint32_t>(mat.cols()));
    write_mat(os, mat);
  }
  binio::write_le<uint8_t>(os, ckpt.has_optimizer ? 1 : 0);
  if (ckpt.has_optimizer) {
    binio::write_le<uint64_t>(os, ckpt.step_count);
    for (const auto& m : ckpt.first_moments) write_mat(os, m);
    for (const auto& v : ckpt.second_moments) write_mat(os, v);
  }
  if (!os) throw ContractError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, kCheckpointMagic, path.c_str());
  Checkpoint out;
  const auto count = binio::read_le<uint32_t>(is, "param count");
  out.params.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = binio::read_string(is, "param name");
    const auto rows = binio::read_le<uint32_t>(is, "rows");
    const auto cols = binio::read_le<uint32_t>(is, "cols");
    out.params.emplace_back(std::move(name), read_mat(is, rows, cols));
  }
  out.has_optimizer = binio::read_le<uint8_t>(is, "optimizer flag") != 0;
  if (out.has_optimizer) {
    out.step_count = binio::read_le<uint64_t>(is, "step count");
    for (uint32_t i = 0; i < count; ++i) {
      out.first_moments.push_back(
          read_mat(is, out.params[i].second.rows(), out.params[i].second.cols()));
    }
    for (uint32_t i = 0; i < count; ++i) {
      out.second_moments.push_back(
          read_mat(is, out.params[i].second.rows(), out.params[i].second.cols()));
    }
  }
  return out;
}

}  // namespace copg::ad
