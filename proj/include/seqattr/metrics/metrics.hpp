// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "seqattr/codec/codec.hpp"
#include "seqattr/codec/mapping_table.hpp"

namespace seqattr::metrics {

struct GroupAccuracy {
  std::string group;
  std::size_t correct = 0;
  std::size_t missing = 0;  // predictions lacking this group, counted wrong
  std::size_t total = 0;
  double accuracy = 0.0;
};

struct AttributeEvalReport {
  std::vector<GroupAccuracy> groups;  // table order
  double mean_accuracy = 0.0;         // mA
  std::size_t missing = 0;
};

// ContractError when the lists differ in length or are empty. Truth records
// must carry every group of the table.
AttributeEvalReport attribute_accuracy(std::span<const codec::AttributeRecord> predictions,
                                       std::span<const codec::AttributeRecord> truths,
                                       const codec::MappingTable& table);

// Squared Euclidean distance; equals 2 - 2 cos for unit vectors.
double pairwise_distance(std::span<const double> q, std::span<const double> g);

struct RankingProtocol {
  // Drop gallery items sharing both identity and camera with the query.
  bool exclude_same_camera = false;
  std::size_t max_rank = 10;  // CMC is reported for ranks 1..max_rank
};

// Features with identity and optional camera tags (empty = untagged).
struct FeatureSet {
  std::vector<std::vector<double>> features;
  std::vector<int> identities;
  std::vector<int> cameras;
};

struct QueryResult {
  std::vector<std::size_t> ranking;  // valid gallery indices, nearest first
  double average_precision = 0.0;
  bool rank1_hit = false;
  bool valid = false;  // false when the identity has no valid gallery match
};

struct RankingResult {
  std::vector<QueryResult> queries;
  std::vector<double> cmc;  // cmc[k] = fraction of valid queries matched within rank k+1
  double rank1 = 0.0;
  double mean_ap = 0.0;
  std::size_t valid_queries = 0;
  std::size_t excluded_queries = 0;
};

RankingResult cmc_map(const FeatureSet& queries, const FeatureSet& gallery,
                      const RankingProtocol& protocol);

// Same evaluation from a precomputed [query][gallery] distance matrix.
RankingResult rank_by_distance(const std::vector<std::vector<double>>& distances,
                               std::span<const int> query_ids, std::span<const int> query_cams,
                               std::span<const int> gallery_ids,
                               std::span<const int> gallery_cams,
                               const RankingProtocol& protocol);

// Precision-recall staircase over a ranked relevance list; 0 if nothing is
// relevant.
double average_precision(std::span<const bool> relevant_in_rank_order);
// Reference AP: for every relevant item, count relevant items ranked at or
// before it by pairwise comparison, then average the precisions.
double average_precision_exhaustive(std::span<const double> distances,
                                    std::span<const bool> relevant);

std::string format_report(const AttributeEvalReport* attributes, const RankingResult* ranking);
// `group,accuracy` rows, then mA, rank1 and mAP summary rows when present.
std::string report_csv(const AttributeEvalReport* attributes, const RankingResult* ranking);

}  // namespace seqattr::metrics
