// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/codec/codec.hpp"

#include "seqattr/errors.hpp"

namespace seqattr::codec {

LabelSequence encode_record(const AttributeRecord& record, const MappingTable& table) {
  if (record.values.empty()) throw CodecError("cannot encode an empty attribute record");
  for (const auto& [group, value] : record.values) table.label_of(group, value);
  LabelSequence y;
  for (const AttributeGroup& g : table.groups()) {
    const auto it = record.values.find(g.name);
    if (it != record.values.end()) y.push_back(table.label_of(g.name, it->second));
  }
  return y;
}

AttributeRecord decode_sequence(std::span<const int> labels, const MappingTable& table) {
  AttributeRecord out;
  std::vector<bool> seen(table.group_count(), false);
  for (int label : labels) {
    const auto ref = table.lookup(label);
    if (!ref || seen[ref->group]) continue;
    seen[ref->group] = true;
    const AttributeGroup& g = table.group(ref->group);
    out.values.emplace(g.name, g.values[ref->value]);
  }
  return out;
}

void validate_sequence(std::span<const int> y, const MappingTable& table) {
  if (y.empty()) throw CodecError("label sequence is empty");
  if (y.size() > table.group_count()) {
    throw CodecError("label sequence of length " + std::to_string(y.size()) + " exceeds " +
                     std::to_string(table.group_count()) + " groups");
  }
  std::vector<bool> seen(table.group_count(), false);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto ref = table.lookup(y[i]);
    if (!ref) {
      throw CodecError("label " + std::to_string(y[i]) + " at position " + std::to_string(i) +
                       " outside 1.." + std::to_string(table.label_count()));
    }
    if (seen[ref->group]) {
      throw CodecError("group '" + table.group(ref->group).name + "' repeated at position " +
                       std::to_string(i));
    }
    seen[ref->group] = true;
  }
}

std::vector<int> extend_with_blanks(std::span<const int> y) {
  std::vector<int> out(2 * y.size() + 1, kCtcBlank);
  for (std::size_t i = 0; i < y.size(); ++i) out[2 * i + 1] = y[i];
  return out;
}

DecoderIo prepare_decoder_io(std::span<const int> y, const MappingTable& table,
                             std::size_t max_len) {
  if (y.size() >= max_len) {
    throw LengthError("label sequence of length " + std::to_string(y.size()) +
                      " needs max_len > " + std::to_string(y.size()) + ", got " +
                      std::to_string(max_len));
  }
  DecoderIo io;
  io.target.assign(max_len, kDecoderPad);
  std::copy(y.begin(), y.end(), io.target.begin());
  io.input.assign(max_len, kDecoderPad);
  io.input[0] = table.start_symbol();
  std::copy(io.target.begin(), io.target.end() - 1, io.input.begin() + 1);
  return io;
}

}  // namespace seqattr::codec
