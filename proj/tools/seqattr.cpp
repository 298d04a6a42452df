// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver: gen-data, train, eval, decode, ablate, convert-image.
// Exit codes: 0 success, 1 usage, 2 data, 3 numeric failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "seqattr/data/image.hpp"
#include "seqattr/data/manifest.hpp"
#include "seqattr/data/synthetic.hpp"
#include "seqattr/errors.hpp"
#include "seqattr/simd/kernels.hpp"
#include "seqattr/trainer/trainer.hpp"

#ifndef SEQATTR_VERSION
#define SEQATTR_VERSION "0.0.0"
#endif

namespace {

namespace fs = std::filesystem;
using seqattr::trainer::ExperimentConfig;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string out;
};

ExperimentConfig load_config(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : ExperimentConfig::load(c.config);
  for (const std::string& o : c.overrides) cfg.apply_override(o);
  return cfg;
}

nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j = nlohmann::json::object();
  for (const std::string& key : ExperimentConfig::keys()) j[key] = cfg.get(key);
  return j;
}

// Provenance record: enough to rerun the command from scratch.
void write_run_json(const fs::path& dir, const std::string& command,
                    const std::vector<std::string>& argv, std::uint64_t seed,
                    const nlohmann::json& config, const nlohmann::json& extra) {
  fs::create_directories(dir);
  nlohmann::json j;
  j["command"] = command;
  j["argv"] = argv;
  j["seed"] = seed;
  j["config"] = config;
  j["versions"] = {{"seqattr", SEQATTR_VERSION},
                   {"cli11", CLI11_VERSION},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                   {"compiler", __VERSION__},
                   {"cplusplus", __cplusplus},
                   {"simd", std::string(seqattr::simd::isa_name(seqattr::simd::active().isa))}};
  j["details"] = extra;
  std::ofstream out(dir / "run.json");
  if (!out) throw seqattr::DataError("cannot write " + (dir / "run.json").string());
  out << j.dump(2) << "\n";
}

seqattr::codec::MappingTable table_for(const fs::path& data_dir, const std::string& table_path) {
  const fs::path p = table_path.empty() ? data_dir / "mapping.txt" : fs::path(table_path);
  return seqattr::codec::MappingTable::load(p);
}

void add_common(CLI::App* sub, Common& c, bool with_config) {
  if (with_config) {
    sub->add_option("-c,--config", c.config, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("-s,--set", c.overrides, "override as section.key=value (repeatable)");
  }
  sub->add_option("--seed", c.seed, "random seed");
  sub->add_option("-o,--out", c.out, "output directory");
}

int run(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Joint CTC-attention pedestrian attribute and re-ID toolkit"};
  app.set_version_flag("--version", SEQATTR_VERSION);
  app.require_subcommand(1);

  Common gen, tr, ev, dc, ab;
  std::string data_dir, table_path, ckpt, image, split = "test", kind, in_path, out_path;
  std::size_t beam = 0;

  CLI::App* gen_cmd = app.add_subcommand("gen-data", "render the synthetic dataset");
  add_common(gen_cmd, gen, true);
  gen_cmd->get_option("--out")->required();

  CLI::App* train_cmd = app.add_subcommand("train", "fit a model on <data>/train.csv");
  add_common(train_cmd, tr, true);
  train_cmd->add_option("-d,--data", data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--table", table_path, "mapping table (default <data>/mapping.txt)");
  train_cmd->get_option("--out")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a split");
  add_common(eval_cmd, ev, false);
  eval_cmd->add_option("-s,--set", ev.overrides, "override an eval.* key (repeatable)");
  eval_cmd->add_option("--ckpt", ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("-d,--data", data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--split", split, "manifest stem inside the dataset directory");
  eval_cmd->add_option("--table", table_path, "mapping table (default <data>/mapping.txt)");

  CLI::App* decode_cmd = app.add_subcommand("decode", "predict attributes for one image");
  add_common(decode_cmd, dc, false);
  decode_cmd->add_option("--ckpt", ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("--image", image, "SIMG1 image")->required()->check(CLI::ExistingFile);
  decode_cmd->add_option("--beam", beam, "beam width (default from the checkpoint config)");

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "run an ablation family");
  add_common(ablate_cmd, ab, true);
  ablate_cmd->add_option("-k,--kind", kind,
                         "lambda_sweep | joint_vs_separate | feature_layer | drop_attribute | "
                         "order_permutation")
      ->required();
  ablate_cmd->add_option("-d,--data", data_dir, "dataset directory")->required()->check(CLI::ExistingDirectory);
  ablate_cmd->add_option("--table", table_path, "mapping table (default <data>/mapping.txt)");
  ablate_cmd->get_option("--out")->required();

  CLI::App* convert_cmd =
      app.add_subcommand("convert-image", "convert between SIMG1 and binary PPM/PGM by extension");
  convert_cmd->add_option("--in", in_path, "input image")->required()->check(CLI::ExistingFile);
  convert_cmd->add_option("--out", out_path, "output image (.simg, .ppm or .pgm)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*gen_cmd) {
    ExperimentConfig cfg = load_config(gen);
    if (gen.seed) cfg.data.seed = *gen.seed;
    const seqattr::data::GeneratedDataset d = seqattr::data::generate_dataset(cfg.data, gen.out);
    write_run_json(gen.out, "gen-data", args, cfg.data.seed, config_json(cfg),
                   {{"train_rows", d.train.rows.size()}, {"test_rows", d.test.rows.size()}});
    std::cout << "wrote " << d.train.rows.size() << " train and " << d.test.rows.size()
              << " test images to " << gen.out << "\n";
  } else if (*train_cmd) {
    ExperimentConfig cfg = load_config(tr);
    if (tr.seed) cfg.train.seed = *tr.seed;
    const auto table = table_for(data_dir, table_path);
    const auto manifest = seqattr::data::load_manifest(fs::path(data_dir) / "train.csv", table);
    seqattr::trainer::TrainOptions options;
    options.out_dir = tr.out;
    options.progress = &std::cerr;
    const auto result = seqattr::trainer::train(cfg, manifest, table, options);
    cfg.save(fs::path(tr.out) / "config.cfg");
    const auto& last = result.epochs.back();
    write_run_json(tr.out, "train", args, cfg.train.seed, config_json(cfg),
                   {{"checkpoint", cfg.train.checkpoint},
                    {"steps", result.steps.size()},
                    {"final_joint", last.joint}});
  } else if (*eval_cmd) {
    const auto model = seqattr::trainer::JointModel::load(ckpt);
    ExperimentConfig cfg = model->config();
    for (const std::string& o : ev.overrides) {
      if (o.rfind("eval.", 0) != 0) throw seqattr::UsageError("eval accepts only eval.* overrides");
      cfg.apply_override(o);
    }
    const auto table = table_for(data_dir, table_path);
    const auto manifest = seqattr::data::load_manifest(fs::path(data_dir) / (split + ".csv"), table);
    const auto result = seqattr::trainer::evaluate(*model, manifest, table, cfg.eval);
    std::cout << seqattr::metrics::format_report(&result.attributes, &result.ranking);
    if (!ev.out.empty()) {
      seqattr::trainer::write_eval_reports(result, ev.out);
      write_run_json(ev.out, "eval", args, cfg.train.seed, config_json(cfg),
                     {{"checkpoint", ckpt},
                      {"split", split},
                      {"mA", result.attributes.mean_accuracy},
                      {"rank1", result.ranking.rank1},
                      {"mAP", result.ranking.mean_ap}});
    }
  } else if (*decode_cmd) {
    const auto model = seqattr::trainer::JointModel::load(ckpt);
    const std::size_t width = beam != 0 ? beam : model->config().decoder.beam_width;
    const auto p = model->predict(seqattr::data::read_simg(image), width);
    std::cout << "labels:";
    for (int l : p.hypothesis.labels) std::cout << " " << l;
    std::cout << "\nlog_prob: " << p.hypothesis.log_prob << "\n";
    for (const auto& g : model->table().groups()) {
      const auto it = p.record.values.find(g.name);
      std::cout << g.name << ": " << (it == p.record.values.end() ? "?" : it->second) << "\n";
    }
    if (!dc.out.empty()) {
      write_run_json(dc.out, "decode", args, model->config().train.seed,
                     config_json(model->config()),
                     {{"image", image}, {"labels", p.hypothesis.labels}});
    }
  } else if (*ablate_cmd) {
    ExperimentConfig cfg = load_config(ab);
    if (ab.seed) cfg.train.seed = *ab.seed;
    const auto k = seqattr::trainer::parse_ablation_kind(kind);
    const auto table = table_for(data_dir, table_path);
    const auto train_set = seqattr::data::load_manifest(fs::path(data_dir) / "train.csv", table);
    const auto test_set = seqattr::data::load_manifest(fs::path(data_dir) / "test.csv", table);
    seqattr::trainer::TrainOptions options;
    options.out_dir = ab.out;
    options.progress = &std::cerr;
    const auto t = seqattr::trainer::ablate(k, cfg, train_set, test_set, table, options);
    std::cout << t.csv();
    write_run_json(ab.out, "ablate", args, cfg.train.seed, config_json(cfg),
                   {{"kind", kind}, {"rows", t.rows.size()}});
  } else if (*convert_cmd) {
    const auto ext = [](const std::string& p) { return fs::path(p).extension().string(); };
    const seqattr::data::Image img = ext(in_path) == ".simg" ? seqattr::data::read_simg(in_path)
                                                             : seqattr::data::read_netpbm(in_path);
    const std::string out_ext = ext(out_path);
    if (out_ext == ".simg") {
      seqattr::data::write_simg(out_path, img);
    } else if (out_ext == ".ppm" || out_ext == ".pgm" || out_ext == ".pnm") {
      seqattr::data::write_netpbm(out_path, img);
    } else {
      throw seqattr::UsageError("output extension must be .simg, .ppm, .pgm or .pnm");
    }
  }
  return 0;
}

int exit_code(seqattr::ErrorCategory c) {
  switch (c) {
    case seqattr::ErrorCategory::kUsage: return 1;
    case seqattr::ErrorCategory::kData: return 2;
    case seqattr::ErrorCategory::kNumeric: return 3;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const seqattr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
