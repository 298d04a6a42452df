// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "seqattr/codec/mapping_table.hpp"

namespace seqattr::codec {

// Partial group -> value assignment. Keys are group names.
struct AttributeRecord {
  std::map<std::string, std::string> values;
  int identity = 0;

  bool operator==(const AttributeRecord&) const = default;
};

// Labels in 1..K, at most one per group, 0 < U <= group count.
using LabelSequence = std::vector<int>;

// Raises CodecError naming the offender when the record is empty or holds an
// unknown group or value. Output follows table group order.
LabelSequence encode_record(const AttributeRecord& record, const MappingTable& table);

// Total: out-of-range labels and later labels of an already-seen group are
// skipped. The identity field is left at 0.
AttributeRecord decode_sequence(std::span<const int> labels, const MappingTable& table);

// CodecError when `y` breaks the LabelSequence invariants.
void validate_sequence(std::span<const int> y, const MappingTable& table);

// (y1..yU) -> (0,y1,0,...,yU,0).
std::vector<int> extend_with_blanks(std::span<const int> y);

struct DecoderIo {
  std::vector<int> input;   // start, y1 .. y_U, 0 ...   (length max_len)
  std::vector<int> target;  // y1 .. y_U, 0 ...          (length max_len)
};

// LengthError when |y| >= max_len.
DecoderIo prepare_decoder_io(std::span<const int> y, const MappingTable& table,
                             std::size_t max_len);

}  // namespace seqattr::codec
