// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/codec/mapping_table.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "seqattr/errors.hpp"

namespace seqattr::codec {
namespace {

constexpr std::string_view kStartDirective = "# start_symbol";

int default_start(std::size_t k) {
  return k < static_cast<std::size_t>(kDefaultStartSymbol) ? kDefaultStartSymbol
                                                            : static_cast<int>(k) + 1;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

std::optional<int> parse_int(std::string_view s) {
  while (!s.empty() && (s.front() == ' ')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

MappingTable MappingTable::contiguous(const std::vector<AttributeGroup>& groups) {
  std::vector<TableEntry> entries;
  int label = 1;
  for (const auto& g : groups) {
    for (const auto& v : g.values) entries.push_back({g.name, v, label++});
  }
  return from_entries(entries);
}

MappingTable MappingTable::from_entries(const std::vector<TableEntry>& entries,
                                        std::optional<int> start_symbol) {
  if (entries.empty()) throw CodecError("mapping table has no entries");
  const std::size_t k = entries.size();
  MappingTable t;
  t.refs_.assign(k, LabelRef{});
  std::vector<bool> seen(k, false);
  std::set<std::pair<std::string, std::string>> pairs;
  for (const TableEntry& e : entries) {
    if (e.group.empty() || e.value.empty()) {
      throw CodecError("mapping table entry with empty group or value (label " +
                       std::to_string(e.label) + ")");
    }
    if (e.label < 1 || static_cast<std::size_t>(e.label) > k) {
      throw CodecError("label " + std::to_string(e.label) + " for " + e.group + "/" + e.value +
                       " outside 1.." + std::to_string(k));
    }
    if (seen[e.label - 1]) throw CodecError("label " + std::to_string(e.label) + " assigned twice");
    if (!pairs.emplace(e.group, e.value).second) {
      throw CodecError("pair " + e.group + "/" + e.value + " listed twice");
    }
    seen[e.label - 1] = true;
    auto g = t.group_index(e.group);
    if (!g) {
      t.groups_.push_back({e.group, {}});
      t.labels_.emplace_back();
      g = t.groups_.size() - 1;
    }
    t.groups_[*g].values.push_back(e.value);
    t.labels_[*g].push_back(e.label);
    t.refs_[e.label - 1] = {*g, t.groups_[*g].values.size() - 1};
  }
  const int start = start_symbol.value_or(default_start(k));
  if (start >= 0 && static_cast<std::size_t>(start) <= k) {
    throw CodecError("start symbol " + std::to_string(start) + " collides with label space 0.." +
                     std::to_string(k));
  }
  t.start_symbol_ = start;
  return t;
}

MappingTable MappingTable::parse(std::string_view text) {
  std::vector<TableEntry> entries;
  std::optional<int> start;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.starts_with(kStartDirective)) {
      start = parse_int(line.substr(kStartDirective.size()));
      if (!start) throw CodecError("line " + std::to_string(line_no) + ": bad start_symbol");
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw CodecError("line " + std::to_string(line_no) + ": expected group<TAB>value<TAB>label");
    }
    const auto label = parse_int(fields[2]);
    if (!label) {
      throw CodecError("line " + std::to_string(line_no) + ": bad label '" +
                       std::string(fields[2]) + "'");
    }
    entries.push_back({std::string(fields[0]), std::string(fields[1]), *label});
  }
  return from_entries(entries, start);
}

MappingTable MappingTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open mapping table " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse(buf.str());
  } catch (const CodecError& e) {
    throw CodecError(path.string() + ": " + e.what());
  }
}

MappingTable MappingTable::pedestrian_default() {
  // Group order and label numbering put male=1, hat yes=5, up red=8.
  std::vector<TableEntry> e = {
      {"gender", "male", 1},      {"gender", "female", 2},    {"sleeve", "short", 3},
      {"sleeve", "long", 4},      {"hat", "yes", 5},          {"hat", "no", 6},
      {"up_color", "black", 7},   {"up_color", "red", 8},     {"up_color", "white", 9},
      {"up_color", "blue", 10},   {"up_color", "green", 11},  {"low_color", "black", 12},
      {"low_color", "blue", 13},  {"low_color", "gray", 14},  {"low_color", "white", 15},
      {"backpack", "no", 16},     {"backpack", "yes", 17},
  };
  return from_entries(e);
}

std::string MappingTable::format() const {
  std::ostringstream out;
  out << "# group\tvalue\tlabel\n";
  out << kStartDirective << ' ' << start_symbol_ << '\n';
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    for (std::size_t v = 0; v < groups_[g].values.size(); ++v) {
      out << groups_[g].name << '\t' << groups_[g].values[v] << '\t' << labels_[g][v] << '\n';
    }
  }
  return out.str();
}

void MappingTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write mapping table " + path.string());
  out << format();
}

std::optional<std::size_t> MappingTable::group_index(std::string_view name) const {
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].name == name) return g;
  }
  return std::nullopt;
}

int MappingTable::label_of(std::string_view group, std::string_view value) const {
  const auto g = group_index(group);
  if (!g) throw CodecError("unknown attribute group '" + std::string(group) + "'");
  const auto& values = groups_[*g].values;
  for (std::size_t v = 0; v < values.size(); ++v) {
    if (values[v] == value) return labels_[*g][v];
  }
  throw CodecError("unknown value '" + std::string(value) + "' for group '" +
                   std::string(group) + "'");
}

int MappingTable::label_of(std::size_t group, std::size_t value) const {
  return labels_.at(group).at(value);
}

std::optional<LabelRef> MappingTable::lookup(int label) const {
  if (label < 1 || static_cast<std::size_t>(label) > refs_.size()) return std::nullopt;
  return refs_[label - 1];
}

std::vector<TableEntry> MappingTable::entries() const {
  std::vector<TableEntry> out;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    for (std::size_t v = 0; v < groups_[g].values.size(); ++v) {
      out.push_back({groups_[g].name, groups_[g].values[v], labels_[g][v]});
    }
  }
  return out;
}

std::size_t MappingTable::vocab_index(int symbol) const {
  if (symbol == start_symbol_) return start_index();
  if (symbol < 0 || static_cast<std::size_t>(symbol) > label_count()) {
    throw CodecError("symbol " + std::to_string(symbol) + " is not in the decoder vocabulary");
  }
  return static_cast<std::size_t>(symbol);
}

MappingTable MappingTable::without_group(std::string_view name) const {
  const auto drop = group_index(name);
  if (!drop) throw CodecError("unknown attribute group '" + std::string(name) + "'");
  if (groups_.size() == 1) throw CodecError("cannot drop the only attribute group");
  std::vector<AttributeGroup> kept;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (g != *drop) kept.push_back(groups_[g]);
  }
  return contiguous(kept);
}

MappingTable MappingTable::with_group_order(const std::vector<std::size_t>& order) const {
  if (order.size() != groups_.size()) throw CodecError("group order has wrong length");
  std::vector<bool> used(groups_.size(), false);
  std::vector<AttributeGroup> permuted;
  for (std::size_t g : order) {
    if (g >= groups_.size() || used[g]) throw CodecError("group order is not a permutation");
    used[g] = true;
    permuted.push_back(groups_[g]);
  }
  return contiguous(permuted);
}

bool MappingTable::operator==(const MappingTable& other) const {
  if (start_symbol_ != other.start_symbol_ || labels_ != other.labels_) return false;
  if (groups_.size() != other.groups_.size()) return false;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    if (groups_[g].name != other.groups_[g].name || groups_[g].values != other.groups_[g].values) {
      return false;
    }
  }
  return true;
}

}  // namespace seqattr::codec
