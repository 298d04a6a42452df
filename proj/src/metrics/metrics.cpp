// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/metrics/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <sstream>

#include "seqattr/errors.hpp"

namespace seqattr::metrics {

AttributeEvalReport attribute_accuracy(std::span<const codec::AttributeRecord> predictions,
                                       std::span<const codec::AttributeRecord> truths,
                                       const codec::MappingTable& table) {
  if (predictions.size() != truths.size()) {
    throw ContractError("attribute_accuracy: " + std::to_string(predictions.size()) +
                        " predictions for " + std::to_string(truths.size()) + " truths");
  }
  if (truths.empty()) throw ContractError("attribute_accuracy: no samples");
  AttributeEvalReport report;
  for (const codec::AttributeGroup& g : table.groups()) {
    GroupAccuracy acc;
    acc.group = g.name;
    acc.total = truths.size();
    for (std::size_t i = 0; i < truths.size(); ++i) {
      const auto truth = truths[i].values.find(g.name);
      if (truth == truths[i].values.end()) {
        throw ContractError("truth record " + std::to_string(i) + " lacks group " + g.name);
      }
      const auto pred = predictions[i].values.find(g.name);
      if (pred == predictions[i].values.end()) {
        ++acc.missing;
      } else if (pred->second == truth->second) {
        ++acc.correct;
      }
    }
    acc.accuracy = static_cast<double>(acc.correct) / static_cast<double>(acc.total);
    report.missing += acc.missing;
    report.groups.push_back(std::move(acc));
  }
  double total = 0.0;
  for (const GroupAccuracy& g : report.groups) total += g.accuracy;
  report.mean_accuracy = report.groups.empty() ? 0.0 : total / report.groups.size();
  return report;
}

double pairwise_distance(std::span<const double> q, std::span<const double> g) {
  if (q.size() != g.size()) {
    throw DimensionError("pairwise_distance: lengths " + std::to_string(q.size()) + " and " +
                         std::to_string(g.size()));
  }
  double d = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double diff = q[i] - g[i];
    d += diff * diff;
  }
  return d;
}

double average_precision(std::span<const bool> relevant_in_rank_order) {
  std::size_t hits = 0;
  double sum = 0.0;
  for (std::size_t k = 0; k < relevant_in_rank_order.size(); ++k) {
    if (!relevant_in_rank_order[k]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(k + 1);
  }
  return hits == 0 ? 0.0 : sum / static_cast<double>(hits);
}

double average_precision_exhaustive(std::span<const double> distances,
                                    std::span<const bool> relevant) {
  if (distances.size() != relevant.size()) {
    throw DimensionError("average_precision_exhaustive: size mismatch");
  }
  const std::size_t n = distances.size();
  // j precedes i when it is strictly nearer, or equally near with a smaller index.
  const auto precedes = [&](std::size_t j, std::size_t i) {
    return distances[j] < distances[i] || (distances[j] == distances[i] && j < i);
  };
  double sum = 0.0;
  std::size_t relevant_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!relevant[i]) continue;
    ++relevant_count;
    std::size_t rank = 1, hits = 1;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || !precedes(j, i)) continue;
      ++rank;
      if (relevant[j]) ++hits;
    }
    sum += static_cast<double>(hits) / static_cast<double>(rank);
  }
  return relevant_count == 0 ? 0.0 : sum / static_cast<double>(relevant_count);
}

RankingResult rank_by_distance(const std::vector<std::vector<double>>& distances,
                               std::span<const int> query_ids, std::span<const int> query_cams,
                               std::span<const int> gallery_ids,
                               std::span<const int> gallery_cams,
                               const RankingProtocol& protocol) {
  if (gallery_ids.empty()) throw ContractError("cmc_map: empty gallery");
  if (distances.size() != query_ids.size()) throw DimensionError("cmc_map: query count mismatch");
  const bool cameras = !query_cams.empty() && !gallery_cams.empty();
  if (cameras && (query_cams.size() != query_ids.size() ||
                  gallery_cams.size() != gallery_ids.size())) {
    throw DimensionError("cmc_map: camera tags do not match item counts");
  }
  if (protocol.max_rank == 0) throw ContractError("cmc_map: max_rank must be positive");

  RankingResult result;
  result.cmc.assign(protocol.max_rank, 0.0);
  double ap_sum = 0.0;
  for (std::size_t q = 0; q < query_ids.size(); ++q) {
    const std::vector<double>& row = distances[q];
    if (row.size() != gallery_ids.size()) throw DimensionError("cmc_map: gallery count mismatch");
    QueryResult qr;
    for (std::size_t g = 0; g < gallery_ids.size(); ++g) {
      const bool same_view = cameras && protocol.exclude_same_camera &&
                             gallery_ids[g] == query_ids[q] && gallery_cams[g] == query_cams[q];
      if (!same_view) qr.ranking.push_back(g);
    }
    std::stable_sort(qr.ranking.begin(), qr.ranking.end(),
                     [&](std::size_t a, std::size_t b) { return row[a] < row[b]; });
    const std::size_t n = qr.ranking.size();
    const auto hits = std::make_unique<bool[]>(n);
    for (std::size_t k = 0; k < n; ++k) hits[k] = gallery_ids[qr.ranking[k]] == query_ids[q];
    const bool* first = std::find(hits.get(), hits.get() + n, true);
    qr.valid = first != hits.get() + n;
    if (qr.valid) {
      qr.average_precision = average_precision(std::span<const bool>(hits.get(), n));
      qr.rank1_hit = hits[0];
      const auto first_rank = static_cast<std::size_t>(first - hits.get());
      for (std::size_t k = first_rank; k < protocol.max_rank; ++k) result.cmc[k] += 1.0;
      ap_sum += qr.average_precision;
      ++result.valid_queries;
    } else {
      ++result.excluded_queries;
    }
    result.queries.push_back(std::move(qr));
  }
  if (result.valid_queries > 0) {
    const double n = static_cast<double>(result.valid_queries);
    for (double& c : result.cmc) c /= n;
    result.rank1 = result.cmc.front();
    result.mean_ap = ap_sum / n;
  }
  return result;
}

RankingResult cmc_map(const FeatureSet& queries, const FeatureSet& gallery,
                      const RankingProtocol& protocol) {
  if (gallery.features.empty()) throw ContractError("cmc_map: empty gallery");
  if (queries.features.size() != queries.identities.size() ||
      gallery.features.size() != gallery.identities.size()) {
    throw DimensionError("cmc_map: features and identities differ in count");
  }
  std::vector<std::vector<double>> distances(queries.features.size());
  for (std::size_t q = 0; q < queries.features.size(); ++q) {
    distances[q].reserve(gallery.features.size());
    for (const auto& g : gallery.features) {
      distances[q].push_back(pairwise_distance(queries.features[q], g));
    }
  }
  return rank_by_distance(distances, queries.identities, queries.cameras, gallery.identities,
                          gallery.cameras, protocol);
}

namespace {

std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_report(const AttributeEvalReport* attributes, const RankingResult* ranking) {
  std::ostringstream out;
  if (attributes != nullptr) {
    std::size_t width = 5;
    for (const GroupAccuracy& g : attributes->groups) width = std::max(width, g.group.size());
    width = std::max<std::size_t>(width, 9);
    out << "attribute" << std::string(width + 2 - 9, ' ') << "accuracy  missing\n";
    for (const GroupAccuracy& g : attributes->groups) {
      out << g.group << std::string(width + 2 - g.group.size(), ' ') << fixed(100 * g.accuracy, 2)
          << "%   " << g.missing << "\n";
    }
    out << "mA" << std::string(width, ' ') << fixed(100 * attributes->mean_accuracy, 2) << "%\n";
  }
  if (ranking != nullptr) {
    out << "rank-1  " << fixed(100 * ranking->rank1, 2) << "%\n";
    if (ranking->cmc.size() >= 5) out << "rank-5  " << fixed(100 * ranking->cmc[4], 2) << "%\n";
    out << "mAP     " << fixed(100 * ranking->mean_ap, 2) << "%\n";
    out << "queries " << ranking->valid_queries << " scored, " << ranking->excluded_queries
        << " without a gallery match\n";
  }
  return out.str();
}

std::string report_csv(const AttributeEvalReport* attributes, const RankingResult* ranking) {
  std::ostringstream out;
  out << "group,accuracy\n";
  if (attributes != nullptr) {
    for (const GroupAccuracy& g : attributes->groups) {
      out << g.group << "," << fixed(g.accuracy, 6) << "\n";
    }
    out << "mA," << fixed(attributes->mean_accuracy, 6) << "\n";
  }
  if (ranking != nullptr) {
    out << "rank1," << fixed(ranking->rank1, 6) << "\n";
    out << "mAP," << fixed(ranking->mean_ap, 6) << "\n";
  }
  return out.str();
}

}  // namespace seqattr::metrics
