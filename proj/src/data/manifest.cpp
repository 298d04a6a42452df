// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/data/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "seqattr/errors.hpp"

namespace seqattr::data {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

int parse_int(const std::string& text, std::size_t row, const std::string& column) {
  int v = 0;
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw DataError("manifest row " + std::to_string(row) + ", column " + column +
                    ": not an integer: '" + text + "'");
  }
  return v;
}

}  // namespace

codec::AttributeRecord DatasetManifest::record(std::size_t row,
                                               const codec::MappingTable& table) const {
  const ManifestRow& r = rows.at(row);
  codec::AttributeRecord rec;
  rec.identity = r.pid;
  for (const codec::AttributeGroup& g : table.groups()) {
    const auto it = r.attributes.find(g.name);
    if (it != r.attributes.end()) rec.values.emplace(g.name, it->second);
  }
  return rec;
}

std::vector<int> DatasetManifest::identities() const {
  std::set<int> ids;
  for (const ManifestRow& r : rows) ids.insert(r.pid);
  return {ids.begin(), ids.end()};
}

bool DatasetManifest::has_cameras() const {
  std::set<int> cams;
  for (const ManifestRow& r : rows) cams.insert(r.camera);
  return cams.size() >= 2;
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::ostringstream out;
  out << "image,pid,camera";
  for (const std::string& g : manifest.groups) out << "," << g;
  out << "\n";
  for (const ManifestRow& r : manifest.rows) {
    out << r.image << "," << r.pid << "," << r.camera;
    for (const std::string& g : manifest.groups) {
      const auto it = r.attributes.find(g);
      out << "," << (it == r.attributes.end() ? "" : it->second);
    }
    out << "\n";
  }
  return out.str();
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << format_manifest(manifest);
  if (!out) throw DataError("write failed for " + path.string());
}

DatasetManifest load_manifest(const std::filesystem::path& path, const codec::MappingTable& table,
                              bool require_images) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open manifest " + path.string());
  DatasetManifest m;
  m.root = path.parent_path();
  m.split = path.stem().string();

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty manifest");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv(line);
  if (header.size() < 3 || header[0] != "image" || header[1] != "pid" || header[2] != "camera") {
    throw DataError(path.string() + ": header must start with image,pid,camera");
  }
  m.groups.assign(header.begin() + 3, header.end());
  for (const codec::AttributeGroup& g : table.groups()) {
    if (std::find(m.groups.begin(), m.groups.end(), g.name) == m.groups.end()) {
      throw DataError(path.string() + ": no column for attribute group " + g.name);
    }
  }
  std::set<std::string> seen;
  for (const std::string& g : m.groups) {
    if (g.empty() || !seen.insert(g).second) {
      throw DataError(path.string() + ": empty or duplicate column '" + g + "'");
    }
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    ManifestRow r;
    r.image = cells[0];
    r.pid = parse_int(cells[1], row, "pid");
    r.camera = parse_int(cells[2], row, "camera");
    for (std::size_t i = 0; i < m.groups.size(); ++i) {
      const std::string& group = m.groups[i];
      const std::string& value = cells[3 + i];
      if (table.group_index(group).has_value()) {
        try {
          (void)table.label_of(group, value);
        } catch (const CodecError&) {
          throw DataError(path.string() + ": row " + std::to_string(row) + ", column " + group +
                          ": unknown value '" + value + "'");
        }
      }
      r.attributes.emplace(group, value);
    }
    if (r.image.empty()) {
      throw DataError(path.string() + ": row " + std::to_string(row) + ", column image: empty");
    }
    if (require_images && !std::filesystem::exists(m.root / r.image)) {
      throw DataError(path.string() + ": row " + std::to_string(row) +
                      ", column image: missing file " + (m.root / r.image).string());
    }
    m.rows.push_back(std::move(r));
  }
  return m;
}

DatasetManifest select_identities(const DatasetManifest& manifest, const std::vector<int>& pids) {
  const std::set<int> keep(pids.begin(), pids.end());
  DatasetManifest out = manifest;
  out.rows.clear();
  for (const ManifestRow& r : manifest.rows) {
    if (keep.count(r.pid) != 0) out.rows.push_back(r);
  }
  return out;
}

DatasetManifest concat_manifests(const DatasetManifest& a, const DatasetManifest& b) {
  if (a.root != b.root || a.groups != b.groups) {
    throw DataError("manifests with different roots or columns cannot be concatenated");
  }
  int offset = 0;
  for (const ManifestRow& r : a.rows) offset = std::max(offset, r.pid);
  DatasetManifest out = a;
  for (ManifestRow r : b.rows) {
    r.pid += offset;
    out.rows.push_back(std::move(r));
  }
  return out;
}

}  // namespace seqattr::data
