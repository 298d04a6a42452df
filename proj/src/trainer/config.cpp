// Copyright 2026 The SeqAttr Authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include "seqattr/trainer/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "seqattr/errors.hpp"

namespace seqattr::trainer {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view key, std::string_view raw) {
  const std::string text = trim(raw);
  T v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError(std::string(key) + ": cannot parse '" + text + "' as a number");
  }
  return v;
}

double parse_double(std::string_view key, std::string_view raw) {
  const double v = parse_number<double>(key, raw);
  if (!std::isfinite(v)) throw ConfigError(std::string(key) + ": value must be finite");
  return v;
}

std::size_t parse_size(std::string_view key, std::string_view raw) {
  return parse_number<std::size_t>(key, raw);
}

bool parse_bool(std::string_view key, std::string_view raw) {
  const std::string text = trim(raw);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + text + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string format_list(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += std::to_string(values[i]);
  }
  return out;
}

std::vector<std::size_t> parse_list(std::string_view key, std::string_view raw) {
  std::vector<std::size_t> out;
  std::stringstream in{std::string(raw)};
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_size(key, item));
  return out;
}

struct Field {
  const char* key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view key, std::string_view value)> set;
};

#define SIZE_FIELD(name, member)                                                    \
  Field {                                                                           \
    name, [](const ExperimentConfig& c) { return std::to_string(c.member); },       \
        [](ExperimentConfig& c, std::string_view k, std::string_view v) {           \
          c.member = parse_size(k, v);                                              \
        }                                                                           \
  }
#define DOUBLE_FIELD(name, member)                                                  \
  Field {                                                                           \
    name, [](const ExperimentConfig& c) { return format_double(c.member); },        \
        [](ExperimentConfig& c, std::string_view k, std::string_view v) {           \
          c.member = parse_double(k, v);                                             \
        }                                                                           \
  }
#define BOOL_FIELD(name, member)                                                    \
  Field {                                                                           \
    name, [](const ExperimentConfig& c) { return std::string(c.member ? "true" : "false"); }, \
        [](ExperimentConfig& c, std::string_view k, std::string_view v) {           \
          c.member = parse_bool(k, v);                                              \
        }                                                                           \
  }
#define STRING_FIELD(name, member)                                                  \
  Field {                                                                           \
    name, [](const ExperimentConfig& c) { return c.member; },                       \
        [](ExperimentConfig& c, std::string_view, std::string_view v) { c.member = trim(v); } \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      SIZE_FIELD("encoder.input_h", encoder.input_h),
      SIZE_FIELD("encoder.input_w", encoder.input_w),
      DOUBLE_FIELD("encoder.scale", encoder.scale),
      Field{"encoder.blocks",
            [](const ExperimentConfig& c) { return format_list(c.encoder.blocks_per_stage); },
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.encoder.blocks_per_stage = parse_list(k, v);
            }},
      SIZE_FIELD("encoder.rnn_hidden_1", encoder.rnn_hidden_1),
      SIZE_FIELD("encoder.rnn_hidden_2", encoder.rnn_hidden_2),
      Field{"encoder.rnn_cell",
            [](const ExperimentConfig& c) {
              return std::string(encoder::rnn_cell_name(c.encoder.rnn_cell));
            },
            [](ExperimentConfig& c, std::string_view, std::string_view v) {
              c.encoder.rnn_cell = encoder::parse_rnn_cell(trim(v));
            }},
      SIZE_FIELD("encoder.fc0_dim", encoder.fc0_dim),

      SIZE_FIELD("decoder.layers", decoder.layers),
      SIZE_FIELD("decoder.heads", decoder.heads),
      SIZE_FIELD("decoder.d_model", decoder.d_model),
      SIZE_FIELD("decoder.ffn_dim", decoder.ffn_dim),
      SIZE_FIELD("decoder.max_len", decoder.max_len),
      SIZE_FIELD("decoder.beam_width", decoder.beam_width),

      SIZE_FIELD("train.epochs", train.epochs),
      SIZE_FIELD("train.batch_size", train.batch_size),
      DOUBLE_FIELD("train.learning_rate", train.learning_rate),
      DOUBLE_FIELD("train.decay_rate", train.decay_rate),
      Field{"train.decay_unit",
            [](const ExperimentConfig& c) {
              return std::string(c.train.decay_unit == DecayUnit::kEpoch ? "epoch" : "step");
            },
            [](ExperimentConfig& c, std::string_view, std::string_view v) {
              c.train.decay_unit = parse_decay_unit(trim(v));
            }},
      DOUBLE_FIELD("train.lambda", train.lambda),
      SIZE_FIELD("train.seed", train.seed),
      Field{"train.arm",
            [](const ExperimentConfig& c) { return training_arm_name(c.train.arm); },
            [](ExperimentConfig& c, std::string_view, std::string_view v) {
              c.train.arm = parse_training_arm(trim(v));
            }},
      BOOL_FIELD("train.flip", train.flip),
      DOUBLE_FIELD("train.validation_fraction", train.validation_fraction),
      STRING_FIELD("train.checkpoint", train.checkpoint),
      STRING_FIELD("train.warm_start", train.warm_start),

      SIZE_FIELD("data.train_identities", data.train_identities),
      SIZE_FIELD("data.test_identities", data.test_identities),
      SIZE_FIELD("data.images_per_identity", data.images_per_identity),
      SIZE_FIELD("data.height", data.height),
      SIZE_FIELD("data.width", data.width),
      SIZE_FIELD("data.seed", data.seed),
      DOUBLE_FIELD("data.brightness", data.nuisance.brightness),
      Field{"data.shift", [](const ExperimentConfig& c) { return std::to_string(c.data.nuisance.shift); },
            [](ExperimentConfig& c, std::string_view k, std::string_view v) {
              c.data.nuisance.shift = parse_number<int>(k, v);
            }},
      DOUBLE_FIELD("data.noise", data.nuisance.noise),

      Field{"eval.feature_layer",
            [](const ExperimentConfig& c) {
              return std::string(encoder::feature_layer_name(c.eval.feature_layer));
            },
            [](ExperimentConfig& c, std::string_view, std::string_view v) {
              c.eval.feature_layer = encoder::parse_feature_layer(trim(v));
            }},
      BOOL_FIELD("eval.exclude_same_camera", eval.exclude_same_camera),
      SIZE_FIELD("eval.max_rank", eval.max_rank),
  };
  return f;
}

#undef SIZE_FIELD
#undef DOUBLE_FIELD
#undef BOOL_FIELD
#undef STRING_FIELD

const Field& field(std::string_view key) {
  for (const Field& f : fields()) {
    if (key == f.key) return f;
  }
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

}  // namespace

DecayUnit parse_decay_unit(std::string_view text) {
  if (text == "epoch") return DecayUnit::kEpoch;
  if (text == "step") return DecayUnit::kStep;
  throw ConfigError("decay_unit must be epoch or step, got '" + std::string(text) + "'");
}

TrainingArm parse_training_arm(std::string_view text) {
  if (text == "joint") return TrainingArm::kJoint;
  if (text == "no_reid") return TrainingArm::kNoReid;
  if (text == "no_attributes") return TrainingArm::kNoAttributes;
  throw ConfigError("arm must be joint, no_reid or no_attributes, got '" + std::string(text) +
                    "'");
}

std::string training_arm_name(TrainingArm arm) {
  switch (arm) {
    case TrainingArm::kJoint: return "joint";
    case TrainingArm::kNoReid: return "no_reid";
    case TrainingArm::kNoAttributes: return "no_attributes";
  }
  return "joint";
}

double TrainConfig::learning_rate_at(std::size_t epochs_done, std::size_t steps_done) const {
  const double n = static_cast<double>(decay_unit == DecayUnit::kEpoch ? epochs_done : steps_done);
  return learning_rate * std::pow(decay_rate, n);
}

void ExperimentConfig::validate() const {
  encoder.validate();
  decoder.validate();
  data.validate();
  if (train.epochs == 0 || train.batch_size == 0) {
    throw ConfigError("train.epochs and train.batch_size must be positive");
  }
  if (!(train.learning_rate > 0.0) || !std::isfinite(train.learning_rate)) {
    throw ConfigError("train.learning_rate must be positive");
  }
  if (!(train.decay_rate > 0.0 && train.decay_rate <= 1.0)) {
    throw ConfigError("train.decay_rate must lie in (0, 1]");
  }
  if (!(train.lambda >= 0.0) || !std::isfinite(train.lambda)) {
    throw ConfigError("train.lambda must be finite and non-negative");
  }
  if (!(train.validation_fraction > 0.0 && train.validation_fraction < 1.0)) {
    throw ConfigError("train.validation_fraction must lie in (0, 1)");
  }
  if (train.checkpoint.empty()) throw ConfigError("train.checkpoint must name a file");
  if (data.height != encoder.input_h || data.width != encoder.input_w) {
    throw ConfigError("data size " + std::to_string(data.height) + "x" +
                      std::to_string(data.width) + " differs from encoder input " +
                      std::to_string(encoder.input_h) + "x" + std::to_string(encoder.input_w));
  }
  if (eval.max_rank == 0) throw ConfigError("eval.max_rank must be positive");
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  field(key).set(*this, key, value);
}

std::string ExperimentConfig::get(std::string_view key) const { return field(key).get(*this); }

std::vector<std::string> ExperimentConfig::keys() {
  std::vector<std::string> out;
  for (const Field& f : fields()) out.emplace_back(f.key);
  return out;
}

void ExperimentConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw UsageError("override '" + std::string(assignment) + "' is not section.key=value");
  }
  const std::string key = trim(assignment.substr(0, eq));
  try {
    set(key, assignment.substr(eq + 1));
  } catch (const ConfigError& e) {
    throw UsageError(std::string("override rejected: ") + e.what());
  }
}

std::string ExperimentConfig::format() const {
  std::ostringstream out;
  std::string section;
  for (const Field& f : fields()) {
    const std::string_view key = f.key;
    const auto dot = key.find('.');
    const std::string sec(key.substr(0, dot));
    if (sec != section) {
      if (!section.empty()) out << "\n";
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << key.substr(dot + 1) << " = " << f.get(*this) << "\n";
  }
  return out.str();
}

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw ConfigError("config key '" + section + "' lies outside any section");
    }
    for (const auto& [key, value] : entries) cfg.set(section + "." + key, value.data());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write config " + path.string());
  out << format();
}

}  // namespace seqattr::trainer
