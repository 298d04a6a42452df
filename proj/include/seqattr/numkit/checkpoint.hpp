// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqattr/numkit/adam.hpp"
#include "seqattr/numkit/parameters.hpp"

namespace seqattr::nk {

// Binary layout, all integers little-endian:
//   "SEQATTR1"  u32 version  u32 count
//   per tensor: u16 name_len, name (UTF-8), u8 dtype (0 = float64), u8 rank,
//               rank x u32 dims, element data as little-endian float64
inline constexpr char kCheckpointMagic[8] = {'S', 'E', 'Q', 'A', 'T', 'T', 'R', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::string_view kAdamPrefix = "adam/";

struct StoredTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

class Checkpoint {
 public:
  void put(std::string name, Shape shape, std::vector<double> values);
  void put_scalar(std::string name, double value) { put(std::move(name), {1}, {value}); }
  const StoredTensor* find(const std::string& name) const;
  const StoredTensor& at(const std::string& name) const;
  double scalar(const std::string& name) const;
  const std::vector<StoredTensor>& tensors() const { return tensors_; }

  void write(std::ostream& out) const;
  static Checkpoint read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  static Checkpoint load(const std::filesystem::path& path);

 private:
  std::vector<StoredTensor> tensors_;
};

// Parameters under their own names, optimizer state under "adam/".
void store_parameters(Checkpoint& ckpt, const ParameterStore& params);
void store_optimizer(Checkpoint& ckpt, const ParameterStore& params, const AdamState& state);

// Copies values into an already-built store. Every parameter must be present
// with the same shape; otherwise VersionError.
void restore_parameters(const Checkpoint& ckpt, ParameterStore& params);
// Optimizer state is optional in a checkpoint; returns nullopt when absent.
std::optional<AdamState> restore_optimizer(const Checkpoint& ckpt,
                                           const ParameterStore& params);

}  // namespace seqattr::nk
