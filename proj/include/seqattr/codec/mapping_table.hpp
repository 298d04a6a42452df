// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace seqattr::codec {

// CTC blank and decoder pad/EOS share the integer 0 but index different
// spaces: alignment paths over {0..K} and decoder vocabulary {0..K+1}.
inline constexpr int kCtcBlank = 0;
inline constexpr int kDecoderPad = 0;
inline constexpr int kDefaultStartSymbol = 100;

struct AttributeGroup {
  std::string name;
  std::vector<std::string> values;
};

struct TableEntry {
  std::string group;
  std::string value;
  int label = 0;
};

struct LabelRef {
  std::size_t group = 0;
  std::size_t value = 0;
};

// Immutable bijection between labels 1..K and (group, value) pairs. Group
// order is the order groups first appear; it fixes encode order.
class MappingTable {
 public:
  MappingTable() = default;

  // Labels assigned contiguously 1..K in group-then-value order.
  static MappingTable contiguous(const std::vector<AttributeGroup>& groups);
  // Arbitrary label assignment; must cover 1..K exactly once.
  static MappingTable from_entries(const std::vector<TableEntry>& entries,
                                   std::optional<int> start_symbol = std::nullopt);
  static MappingTable parse(std::string_view text);
  static MappingTable load(const std::filesystem::path& path);
  // The six-group pedestrian table used by the synthetic data set, K = 17.
  static MappingTable pedestrian_default();

  std::string format() const;
  void save(const std::filesystem::path& path) const;

  std::size_t label_count() const { return refs_.size(); }
  std::size_t group_count() const { return groups_.size(); }
  const std::vector<AttributeGroup>& groups() const { return groups_; }
  const AttributeGroup& group(std::size_t g) const { return groups_.at(g); }
  std::optional<std::size_t> group_index(std::string_view name) const;

  // Throws CodecError naming the unknown group or value.
  int label_of(std::string_view group, std::string_view value) const;
  int label_of(std::size_t group, std::size_t value) const;
  // nullopt for labels outside 1..K.
  std::optional<LabelRef> lookup(int label) const;
  std::vector<TableEntry> entries() const;

  // Start symbol as written into decoder inputs: 100 unless K >= 100, in
  // which case K+1. It occupies decoder vocabulary row K+1.
  int start_symbol() const { return start_symbol_; }
  std::size_t vocab_size() const { return label_count() + 2; }
  std::size_t start_index() const { return label_count() + 1; }
  // Decoder vocabulary row for a decoder input symbol (pad, label or start).
  std::size_t vocab_index(int symbol) const;

  // Derived tables for the ablation harness. Both renumber contiguously.
  MappingTable without_group(std::string_view name) const;
  MappingTable with_group_order(const std::vector<std::size_t>& order) const;

  bool operator==(const MappingTable& other) const;

 private:
  std::vector<AttributeGroup> groups_;
  std::vector<std::vector<int>> labels_;  // [group][value] -> label
  std::vector<LabelRef> refs_;            // [label - 1] -> (group, value)
  int start_symbol_ = kDefaultStartSymbol;
};

}  // namespace seqattr::codec
