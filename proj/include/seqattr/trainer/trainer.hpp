// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "seqattr/codec/mapping_table.hpp"
#include "seqattr/data/manifest.hpp"
#include "seqattr/metrics/metrics.hpp"
#include "seqattr/trainer/config.hpp"
#include "seqattr/trainer/model.hpp"

namespace seqattr::trainer {

// One optimizer step. joint is recomputed from the logged components.
struct StepLog {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double l_id = 0.0;
  double l_ctc = 0.0;
  double l_at = 0.0;
  double joint = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::unique_ptr<JointModel> model;
  nk::AdamState optimizer;
  std::vector<StepLog> steps;
  std::vector<StepLog> epochs;  // per-epoch means, step = last step of the epoch
};

struct TrainOptions {
  std::filesystem::path out_dir;  // empty = keep everything in memory
  std::ostream* progress = nullptr;
  // Stop after this many optimizer steps (0 = full schedule). For smoke tests.
  std::size_t max_steps = 0;
};

// Fits a fresh model on every row of `manifest`. Identities are mapped to
// classes by ascending pid. With out_dir set, writes the checkpoint named in
// cfg.train.checkpoint, loss_log.csv and epoch_log.csv there.
TrainResult train(const ExperimentConfig& cfg, const data::DatasetManifest& manifest,
                  const codec::MappingTable& table, const TrainOptions& options = {});

std::string format_loss_log(const std::vector<StepLog>& log);

struct EvalResult {
  metrics::AttributeEvalReport attributes;
  metrics::RankingResult ranking;
  std::vector<codec::AttributeRecord> predictions;  // one per manifest row
  std::vector<std::size_t> query_rows;
  std::vector<std::size_t> gallery_rows;
};

// Attribute branch: beam search on every row. Re-ID branch: each identity's
// first image from its lowest camera id is a query; all other rows form the
// gallery. With eval.exclude_same_camera and camera tags, same-identity
// same-camera gallery rows are skipped per query. VersionError when `table`
// differs from the model's.
EvalResult evaluate(const JointModel& model, const data::DatasetManifest& manifest,
                    const codec::MappingTable& table, const EvalConfig& eval);

// Text report and CSV in out_dir (report.txt, report.csv).
void write_eval_reports(const EvalResult& result, const std::filesystem::path& out_dir);

enum class AblationKind {
  kLambdaSweep,
  kJointVsSeparate,
  kFeatureLayer,
  kDropAttribute,
  kOrderPermutation,
};

// UsageError for unknown names.
AblationKind parse_ablation_kind(std::string_view name);
std::string ablation_kind_name(AblationKind kind);

struct AblationTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::string csv() const;
};

// Lambda sweep trains on 90% of training identities (train.validation_fraction
// held out) and scores the held-out part; the other kinds score `test`.
// Writes ablation_<kind>.csv to out_dir when it is set.
AblationTable ablate(AblationKind kind, const ExperimentConfig& base,
                     const data::DatasetManifest& train_set, const data::DatasetManifest& test,
                     const codec::MappingTable& table, const TrainOptions& options = {});

}  // namespace seqattr::trainer
