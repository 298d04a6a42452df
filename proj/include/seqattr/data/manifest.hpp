// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "seqattr/codec/codec.hpp"
#include "seqattr/codec/mapping_table.hpp"

namespace seqattr::data {

struct ManifestRow {
  std::string image;  // relative to the manifest directory
  int pid = 0;
  int camera = 0;
  std::map<std::string, std::string> attributes;

  bool operator==(const ManifestRow&) const = default;
};

struct DatasetManifest {
  std::filesystem::path root;       // directory image paths resolve against
  std::string split;                // "train", "test", ...
  std::vector<std::string> groups;  // attribute columns in header order
  std::vector<ManifestRow> rows;

  std::filesystem::path image_path(std::size_t row) const { return root / rows.at(row).image; }
  // Record restricted to the groups of `table`; identity = pid.
  codec::AttributeRecord record(std::size_t row, const codec::MappingTable& table) const;
  std::vector<int> identities() const;  // distinct pids, ascending
  bool has_cameras() const;             // at least two distinct camera ids
};

// CSV with header `image,pid,camera,<group>...`.
std::string format_manifest(const DatasetManifest& manifest);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);

// Parses and validates against `table`: every table group must be a column
// and every value must exist in the table. Columns for groups outside the
// table are kept unvalidated. DataError names the row (1-based data line)
// and the column. The split tag is the file stem.
DatasetManifest load_manifest(const std::filesystem::path& path, const codec::MappingTable& table,
                              bool require_images = true);

// Rows with the given identities, in original order.
DatasetManifest select_identities(const DatasetManifest& manifest, const std::vector<int>& pids);
// Appends b to a (same root and groups). b's pids are shifted past a's.
DatasetManifest concat_manifests(const DatasetManifest& a, const DatasetManifest& b);

}  // namespace seqattr::data
