// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/trainer/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "seqattr/ctc/ctc.hpp"
#include "seqattr/errors.hpp"
#include "seqattr/numkit/ops.hpp"
#include "seqattr/objective/objective.hpp"

namespace seqattr::trainer {
namespace {

namespace fs = std::filesystem;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string f6(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

std::string row_name(const data::DatasetManifest& m, std::size_t row) {
  return "row " + std::to_string(row + 1) + " (" + m.rows[row].image + ")";
}

std::vector<data::Image> load_images(const data::DatasetManifest& m,
                                     const encoder::EncoderConfig& enc) {
  std::vector<data::Image> images;
  images.reserve(m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    data::Image img = data::read_simg(m.image_path(i));
    if (img.height != enc.input_h || img.width != enc.input_w || img.channels != 3) {
      throw DataError(row_name(m, i) + ": image is " + std::to_string(img.height) + "x" +
                      std::to_string(img.width) + "x" + std::to_string(img.channels) +
                      ", encoder expects " + std::to_string(enc.input_h) + "x" +
                      std::to_string(enc.input_w) + "x3");
    }
    images.push_back(std::move(img));
  }
  return images;
}

// Evaluates `compute` and tags numeric failures with the loss stream.
template <typename F>
nk::Tensor stream(const char* name, const std::string& where, F&& compute) {
  try {
    return compute();
  } catch (const NumericError& e) {
    throw NumericError(where + ": " + name + " stream: " + e.what());
  }
}

}  // namespace

std::string format_loss_log(const std::vector<StepLog>& log) {
  std::string out = "step,epoch,l_id,l_ctc,l_at,joint,lr\n";
  for (const StepLog& s : log) {
    out += std::to_string(s.step) + "," + std::to_string(s.epoch) + "," + g17(s.l_id) + "," +
           g17(s.l_ctc) + "," + g17(s.l_at) + "," + g17(s.joint) + "," + g17(s.lr) + "\n";
  }
  return out;
}

TrainResult train(const ExperimentConfig& cfg, const data::DatasetManifest& manifest,
                  const codec::MappingTable& table, const TrainOptions& options) {
  cfg.validate();
  if (manifest.rows.empty()) throw DataError("training manifest has no rows");
  const std::vector<data::Image> images = load_images(manifest, cfg.encoder);
  const std::vector<int> pids = manifest.identities();
  std::map<int, std::size_t> class_of;
  for (std::size_t c = 0; c < pids.size(); ++c) class_of[pids[c]] = c;

  // Targets are fixed per row; check feasibility once up front.
  const std::size_t steps_available = cfg.encoder.sequence_length();
  std::vector<codec::LabelSequence> ctc_targets(manifest.rows.size());
  std::vector<codec::DecoderIo> decoder_io(manifest.rows.size());
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    ctc_targets[i] = codec::encode_record(manifest.record(i, table), table);
    const std::size_t need = ctc::required_steps(ctc_targets[i]);
    if (need > steps_available) {
      throw InfeasibleError(row_name(manifest, i) + ": label sequence needs " +
                            std::to_string(need) + " steps, encoder provides " +
                            std::to_string(steps_available));
    }
    try {
      decoder_io[i] = codec::prepare_decoder_io(ctc_targets[i], table, cfg.decoder.max_len);
    } catch (const LengthError& e) {
      throw LengthError(row_name(manifest, i) + ": " + e.what());
    }
  }

  TrainResult result;
  result.model = std::make_unique<JointModel>(cfg, table, pids.size(),
                                              data::compute_channel_stats(images));
  JointModel& model = *result.model;
  if (!cfg.train.warm_start.empty()) {
    nk::restore_parameters(nk::Checkpoint::load(cfg.train.warm_start), model.params());
  }
  const encoder::Encoder& enc = model.encoder();
  const decoder::Decoder& dec = model.decoder();

  const bool attributes_on = cfg.train.arm != TrainingArm::kNoAttributes;
  const objective::JointLossConfig loss_cfg{cfg.train.arm == TrainingArm::kNoReid ? 0.0
                                                                                  : cfg.train.lambda};
  nk::AdamState& adam = result.optimizer;
  nk::Rng order_rng(nk::Rng::derive(cfg.train.seed, 2));
  nk::Rng augment_rng(nk::Rng::derive(cfg.train.seed, 3));
  std::vector<std::size_t> order(manifest.rows.size());
  std::iota(order.begin(), order.end(), 0u);

  std::size_t step = 0;
  bool stop = false;
  for (std::size_t epoch = 0; epoch < cfg.train.epochs && !stop; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    order_rng.shuffle(order);
    StepLog epoch_sum;
    std::size_t epoch_samples = 0;
    for (std::size_t begin = 0; begin < order.size() && !stop; begin += cfg.train.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.train.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - begin);
      model.params().zero_grad();
      double sum_id = 0.0, sum_ctc = 0.0, sum_at = 0.0;
      // Per-sample backward of loss / B accumulates the batch-mean gradient.
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t row = order[k];
        const std::string where = "step " + std::to_string(step + 1) + ", " +
                                  row_name(manifest, row);
        const bool flip = cfg.train.flip && augment_rng.bernoulli(0.5);
        const nk::Tensor x = model.input(flip ? data::flip_augment(images[row]) : images[row]);
        nk::Tape tape;
        nk::Tape::Scope scope(tape);
        const encoder::Encoded e = enc.encode(x);
        const nk::Tensor l_id = stream("id", where, [&] {
          return nk::cross_entropy(enc.id_logits(e.conv_seq), class_of.at(manifest.rows[row].pid));
        });
        const nk::Tensor l_ctc =
            stream("ctc", where, [&] { return ctc::ctc_loss(enc.ctc_logits(e.x), ctc_targets[row]); });
        const nk::Tensor l_at = stream("attribute", where, [&] {
          return decoder::attribute_loss(dec.decode_teacher_forced(e.x, decoder_io[row].input),
                                         decoder_io[row].target);
        });
        const nk::Tensor total = attributes_on ? objective::joint_loss(l_id, l_ctc, l_at, loss_cfg)
                                               : l_id;
        nk::backward(nk::scale(total, inv_batch), tape);
        sum_id += l_id.item();
        sum_ctc += l_ctc.item();
        sum_at += l_at.item();
      }
      adam.learning_rate = cfg.train.learning_rate_at(epoch, step);
      nk::adam_step(model.params(), adam);
      ++step;

      StepLog s;
      s.step = step;
      s.epoch = epoch + 1;
      s.l_id = sum_id * inv_batch;
      s.l_ctc = sum_ctc * inv_batch;
      s.l_at = sum_at * inv_batch;
      s.joint = attributes_on ? loss_cfg.lambda * s.l_id + s.l_ctc + s.l_at : s.l_id;
      s.lr = adam.learning_rate;
      result.steps.push_back(s);
      const double w = static_cast<double>(end - begin);
      epoch_sum.l_id += s.l_id * w;
      epoch_sum.l_ctc += s.l_ctc * w;
      epoch_sum.l_at += s.l_at * w;
      epoch_samples += end - begin;
      epoch_sum.lr = s.lr;
      if (options.max_steps != 0 && step >= options.max_steps) stop = true;
    }
    StepLog e = epoch_sum;
    const double n = static_cast<double>(epoch_samples);
    e.step = step;
    e.epoch = epoch + 1;
    e.l_id /= n;
    e.l_ctc /= n;
    e.l_at /= n;
    e.joint = attributes_on ? loss_cfg.lambda * e.l_id + e.l_ctc + e.l_at : e.l_id;
    result.epochs.push_back(e);
    if (options.progress != nullptr) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      char line[200];
      std::snprintf(line, sizeof line,
                    "epoch %zu/%zu  joint %.4f  id %.4f  ctc %.4f  at %.4f  lr %.3g  (%.1fs)\n",
                    e.epoch, cfg.train.epochs, e.joint, e.l_id, e.l_ctc, e.l_at, e.lr, secs);
      *options.progress << line << std::flush;
    }
  }

  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    model.save(options.out_dir / cfg.train.checkpoint, &adam);
    write_text(options.out_dir / "loss_log.csv", format_loss_log(result.steps));
    write_text(options.out_dir / "epoch_log.csv", format_loss_log(result.epochs));
  }
  return result;
}

EvalResult evaluate(const JointModel& model, const data::DatasetManifest& manifest,
                    const codec::MappingTable& table, const EvalConfig& eval) {
  if (!(table == model.table())) {
    throw VersionError("mapping table differs from the one the checkpoint was trained with");
  }
  if (manifest.rows.empty()) throw DataError("evaluation manifest has no rows");
  const encoder::Encoder& enc = model.encoder();
  const decoder::Decoder& dec = model.decoder();
  const std::vector<data::Image> images = load_images(manifest, model.config().encoder);

  EvalResult result;
  std::vector<codec::AttributeRecord> truths;
  std::vector<std::vector<double>> features;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const encoder::Encoded e = enc.encode(model.input(images[i]));
    const decoder::Hypothesis h =
        dec.beam_search(dec.encode_memory(e.x), model.config().decoder.beam_width);
    result.predictions.push_back(codec::decode_sequence(h.labels, table));
    truths.push_back(manifest.record(i, table));
    features.push_back(enc.reid_features(e, eval.feature_layer));
  }
  result.attributes = metrics::attribute_accuracy(result.predictions, truths, table);

  // One query per identity: its first image from the lowest camera id.
  std::map<int, std::size_t> query_of;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto it = query_of.find(manifest.rows[i].pid);
    if (it == query_of.end() || manifest.rows[i].camera < manifest.rows[it->second].camera) {
      query_of[manifest.rows[i].pid] = i;
    }
  }
  std::vector<char> is_query(manifest.rows.size(), 0);
  for (const auto& [pid, row] : query_of) {
    result.query_rows.push_back(row);
    is_query[row] = 1;
  }
  std::sort(result.query_rows.begin(), result.query_rows.end());
  metrics::FeatureSet queries, gallery;
  const bool cameras = manifest.has_cameras();
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    if (is_query[i]) continue;
    result.gallery_rows.push_back(i);
    gallery.features.push_back(features[i]);
    gallery.identities.push_back(manifest.rows[i].pid);
    if (cameras) gallery.cameras.push_back(manifest.rows[i].camera);
  }
  for (std::size_t row : result.query_rows) {
    queries.features.push_back(features[row]);
    queries.identities.push_back(manifest.rows[row].pid);
    if (cameras) queries.cameras.push_back(manifest.rows[row].camera);
  }
  if (gallery.features.empty()) {
    throw DataError("evaluation needs at least two images of some identity for re-ID");
  }
  metrics::RankingProtocol protocol;
  protocol.exclude_same_camera = eval.exclude_same_camera;
  protocol.max_rank = eval.max_rank;
  result.ranking = metrics::cmc_map(queries, gallery, protocol);
  return result;
}

void write_eval_reports(const EvalResult& result, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_text(out_dir / "report.txt", metrics::format_report(&result.attributes, &result.ranking));
  write_text(out_dir / "report.csv", metrics::report_csv(&result.attributes, &result.ranking));
}

AblationKind parse_ablation_kind(std::string_view name) {
  for (AblationKind k : {AblationKind::kLambdaSweep, AblationKind::kJointVsSeparate,
                         AblationKind::kFeatureLayer, AblationKind::kDropAttribute,
                         AblationKind::kOrderPermutation}) {
    if (name == ablation_kind_name(k)) return k;
  }
  throw UsageError("unknown ablation kind '" + std::string(name) +
                   "' (lambda_sweep, joint_vs_separate, feature_layer, drop_attribute, "
                   "order_permutation)");
}

std::string ablation_kind_name(AblationKind kind) {
  switch (kind) {
    case AblationKind::kLambdaSweep: return "lambda_sweep";
    case AblationKind::kJointVsSeparate: return "joint_vs_separate";
    case AblationKind::kFeatureLayer: return "feature_layer";
    case AblationKind::kDropAttribute: return "drop_attribute";
    case AblationKind::kOrderPermutation: return "order_permutation";
  }
  return "";
}

std::string AblationTable::csv() const {
  std::string out;
  const auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\n";
  };
  line(columns);
  for (const auto& r : rows) line(r);
  return out;
}

namespace {

struct VariantScore {
  EvalResult eval;
  std::unique_ptr<JointModel> model;
};

VariantScore run_variant(const ExperimentConfig& cfg, const data::DatasetManifest& fit,
                         const data::DatasetManifest& score, const codec::MappingTable& table,
                         const TrainOptions& options, const std::string& name) {
  TrainOptions sub = options;
  if (!options.out_dir.empty()) sub.out_dir = options.out_dir / name;
  if (options.progress != nullptr) *options.progress << "variant " << name << "\n";
  TrainResult trained = train(cfg, fit, table, sub);
  VariantScore v;
  v.eval = evaluate(*trained.model, score, table, cfg.eval);
  if (!sub.out_dir.empty()) write_eval_reports(v.eval, sub.out_dir);
  v.model = std::move(trained.model);
  return v;
}

std::vector<std::string> summary(const EvalResult& e) {
  return {f6(e.attributes.mean_accuracy), f6(e.ranking.rank1), f6(e.ranking.mean_ap)};
}

}  // namespace

AblationTable ablate(AblationKind kind, const ExperimentConfig& base,
                     const data::DatasetManifest& train_set, const data::DatasetManifest& test,
                     const codec::MappingTable& table, const TrainOptions& options) {
  base.validate();
  AblationTable t;
  const TrainOptions sub = [&] {
    TrainOptions o = options;
    if (!o.out_dir.empty()) o.out_dir /= ablation_kind_name(kind);
    return o;
  }();
  switch (kind) {
    case AblationKind::kLambdaSweep: {
      std::vector<int> ids = train_set.identities();
      nk::Rng rng(nk::Rng::derive(base.train.seed, 4));
      rng.shuffle(ids);
      const auto held = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::lround(base.train.validation_fraction * ids.size())));
      if (held >= ids.size()) throw DataError("too few training identities for a validation split");
      const data::DatasetManifest val =
          data::select_identities(train_set, std::vector<int>(ids.begin(), ids.begin() + held));
      const data::DatasetManifest fit =
          data::select_identities(train_set, std::vector<int>(ids.begin() + held, ids.end()));
      t.columns = {"lambda", "mA", "rank1", "mAP"};
      for (double lambda : {0.0, 1.0, 2.0, 4.0, 8.0, 16.0}) {
        ExperimentConfig cfg = base;
        cfg.train.lambda = lambda;
        cfg.train.arm = TrainingArm::kJoint;
        const std::string name = "lambda_" + std::to_string(static_cast<int>(lambda));
        const VariantScore v = run_variant(cfg, fit, val, table, sub, name);
        std::vector<std::string> row{std::to_string(static_cast<int>(lambda))};
        for (auto& s : summary(v.eval)) row.push_back(s);
        t.rows.push_back(row);
      }
      break;
    }
    case AblationKind::kJointVsSeparate: {
      t.columns = {"variant", "mA", "rank1", "mAP"};
      for (TrainingArm arm :
           {TrainingArm::kJoint, TrainingArm::kNoReid, TrainingArm::kNoAttributes}) {
        ExperimentConfig cfg = base;
        cfg.train.arm = arm;
        const VariantScore v = run_variant(cfg, train_set, test, table, sub, training_arm_name(arm));
        std::vector<std::string> row{training_arm_name(arm)};
        for (auto& s : summary(v.eval)) row.push_back(s);
        t.rows.push_back(row);
      }
      break;
    }
    case AblationKind::kFeatureLayer: {
      t.columns = {"layer", "dim", "rank1", "mAP"};
      ExperimentConfig cfg = base;
      const VariantScore v = run_variant(cfg, train_set, test, table, sub, "model");
      for (encoder::FeatureLayer layer : {encoder::FeatureLayer::kConv, encoder::FeatureLayer::kFc0}) {
        EvalConfig e = cfg.eval;
        e.feature_layer = layer;
        const EvalResult r = evaluate(*v.model, test, table, e);
        const std::size_t dim = layer == encoder::FeatureLayer::kConv ? cfg.encoder.conv_feature_dim()
                                                                      : cfg.encoder.fc0_dim;
        t.rows.push_back({std::string(encoder::feature_layer_name(layer)), std::to_string(dim),
                          f6(r.ranking.rank1), f6(r.ranking.mean_ap)});
      }
      break;
    }
    case AblationKind::kDropAttribute: {
      t.columns = {"dropped", "mA", "rank1", "mAP"};
      for (const codec::AttributeGroup& g : table.groups()) {
        const codec::MappingTable reduced = table.without_group(g.name);
        const VariantScore v = run_variant(base, train_set, test, reduced, sub, "drop_" + g.name);
        std::vector<std::string> row{g.name};
        for (auto& s : summary(v.eval)) row.push_back(s);
        t.rows.push_back(row);
      }
      break;
    }
    case AblationKind::kOrderPermutation: {
      t.columns = {"order", "mA", "rank1", "mAP"};
      std::vector<std::size_t> order(table.group_count());
      std::iota(order.begin(), order.end(), 0u);
      nk::Rng rng(nk::Rng::derive(base.train.seed, 5));
      for (int variant = 0; variant < 4; ++variant) {
        if (variant > 0) rng.shuffle(order);
        const codec::MappingTable permuted = table.with_group_order(order);
        std::string label;
        for (std::size_t g : order) label += (label.empty() ? "" : "|") + table.group(g).name;
        const VariantScore v =
            run_variant(base, train_set, test, permuted, sub, "order_" + std::to_string(variant));
        std::vector<std::string> row{label};
        for (auto& s : summary(v.eval)) row.push_back(s);
        t.rows.push_back(row);
      }
      break;
    }
  }
  if (!options.out_dir.empty()) {
    fs::create_directories(options.out_dir);
    write_text(options.out_dir / ("ablation_" + ablation_kind_name(kind) + ".csv"), t.csv());
  }
  return t;
}

}  // namespace seqattr::trainer
