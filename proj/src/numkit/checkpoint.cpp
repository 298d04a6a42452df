// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/numkit/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "seqattr/errors.hpp"

namespace seqattr::nk {
namespace {

void put_le(std::ostream& out, std::uint64_t v, int bytes) {
  char buf[8];
  for (int i = 0; i < bytes; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  out.write(buf, bytes);
}

std::uint64_t get_le(std::istream& in, int bytes) {
  unsigned char buf[8] = {};
  in.read(reinterpret_cast<char*>(buf), bytes);
  if (!in) throw DataError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void Checkpoint::put(std::string name, Shape shape, std::vector<double> values) {
  if (element_count(shape) != values.size()) {
    throw DimensionError("checkpoint entry " + name + ": shape " + shape_string(shape) +
                         " does not match " + std::to_string(values.size()) + " values");
  }
  if (name.size() > 0xFFFF) throw DataError("checkpoint entry name too long");
  if (shape.size() > 0xFF) throw DataError("checkpoint entry rank too large");
  for (auto& t : tensors_) {
    if (t.name == name) {
      t.shape = std::move(shape);
      t.values = std::move(values);
      return;
    }
  }
  tensors_.push_back({std::move(name), std::move(shape), std::move(values)});
}

const StoredTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors_)
    if (t.name == name) return &t;
  return nullptr;
}

const StoredTensor& Checkpoint::at(const std::string& name) const {
  if (const StoredTensor* t = find(name)) return *t;
  throw VersionError("checkpoint has no entry " + name);
}

double Checkpoint::scalar(const std::string& name) const {
  const StoredTensor& t = at(name);
  if (t.values.size() != 1) throw VersionError("checkpoint entry " + name + " is not a scalar");
  return t.values[0];
}

void Checkpoint::write(std::ostream& out) const {
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_le(out, kCheckpointVersion, 4);
  put_le(out, tensors_.size(), 4);
  for (const auto& t : tensors_) {
    put_le(out, t.name.size(), 2);
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_le(out, 0, 1);  // float64
    put_le(out, t.shape.size(), 1);
    for (std::size_t d : t.shape) put_le(out, d, 4);
    for (double v : t.values) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  }
  if (!out) throw DataError("checkpoint write failed");
}

Checkpoint Checkpoint::read(std::istream& in) {
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw VersionError("not a checkpoint file (bad magic)");
  }
  const auto version = get_le(in, 4);
  if (version != kCheckpointVersion) {
    throw VersionError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get_le(in, 4);
  Checkpoint ckpt;
  for (std::uint64_t i = 0; i < count; ++i) {
    StoredTensor t;
    t.name.resize(get_le(in, 2));
    in.read(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    const auto dtype = get_le(in, 1);
    if (dtype != 0) throw VersionError("entry " + t.name + ": unsupported dtype tag " +
                                       std::to_string(dtype));
    const auto rank = get_le(in, 1);
    for (std::uint64_t r = 0; r < rank; ++r) t.shape.push_back(get_le(in, 4));
    t.values.resize(element_count(t.shape));
    for (double& v : t.values) v = std::bit_cast<double>(get_le(in, 8));
    ckpt.tensors_.push_back(std::move(t));
  }
  return ckpt;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write(out);
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read(in);
}

void store_parameters(Checkpoint& ckpt, const ParameterStore& params) {
  for (const auto& e : params.entries()) {
    ckpt.put(e.name, e.tensor.shape(),
             std::vector<double>(e.tensor.values().begin(), e.tensor.values().end()));
  }
}

void store_optimizer(Checkpoint& ckpt, const ParameterStore& params, const AdamState& state) {
  const std::string prefix(kAdamPrefix);
  ckpt.put_scalar(prefix + "step", static_cast<double>(state.step));
  ckpt.put_scalar(prefix + "learning_rate", state.learning_rate);
  ckpt.put_scalar(prefix + "beta1", state.beta1);
  ckpt.put_scalar(prefix + "beta2", state.beta2);
  ckpt.put_scalar(prefix + "epsilon", state.epsilon);
  const auto& entries = params.entries();
  for (std::size_t p = 0; p < entries.size(); ++p) {
    const Shape& shape = entries[p].tensor.shape();
    const std::size_t n = entries[p].tensor.size();
    const bool started = p < state.first_moment.size();
    ckpt.put(prefix + "m/" + entries[p].name, shape,
             started ? state.first_moment[p] : std::vector<double>(n, 0.0));
    ckpt.put(prefix + "v/" + entries[p].name, shape,
             started ? state.second_moment[p] : std::vector<double>(n, 0.0));
  }
}

void restore_parameters(const Checkpoint& ckpt, ParameterStore& params) {
  for (auto& e : params.entries()) {
    const StoredTensor* t = ckpt.find(e.name);
    if (t == nullptr) throw VersionError("checkpoint is missing parameter " + e.name);
    if (t->shape != e.tensor.shape()) {
      throw VersionError("parameter " + e.name + " has shape " + shape_string(t->shape) +
                         " in checkpoint but " + shape_string(e.tensor.shape()) +
                         " in the configured model");
    }
    std::copy(t->values.begin(), t->values.end(), e.tensor.mutable_values().begin());
  }
}

std::optional<AdamState> restore_optimizer(const Checkpoint& ckpt,
                                           const ParameterStore& params) {
  const std::string prefix(kAdamPrefix);
  if (ckpt.find(prefix + "step") == nullptr) return std::nullopt;
  AdamState state;
  state.step = static_cast<std::uint64_t>(ckpt.scalar(prefix + "step"));
  state.learning_rate = ckpt.scalar(prefix + "learning_rate");
  state.beta1 = ckpt.scalar(prefix + "beta1");
  state.beta2 = ckpt.scalar(prefix + "beta2");
  state.epsilon = ckpt.scalar(prefix + "epsilon");
  for (const auto& e : params.entries()) {
    state.first_moment.push_back(ckpt.at(prefix + "m/" + e.name).values);
    state.second_moment.push_back(ckpt.at(prefix + "v/" + e.name).values);
  }
  return state;
}

}  // namespace seqattr::nk
