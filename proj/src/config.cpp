#include <json.hpp>

#include "veinseg/trainer.hpp"

namespace veinseg {

using nlohmann::json;

std::string to_string(Precision p) { return p == Precision::f64 ? "f64" : "f32"; }

Precision parse_precision(std::string_view text) {
  if (text == "f32" || text == "32") return Precision::f32;
  if (text == "f64" || text == "64") return Precision::f64;
  throw ArgumentError("unknown precision '" + std::string(text) + "' (expected f32 or f64)");
}

std::vector<Index> TrainConfig::resolved_widths() const {
  return widths.empty() ? default_widths(model) : widths;
}

ModelGraph TrainConfig::graph() const {
  return build_model(model, 1, resolved_widths(), bridge_dilation, post_activation);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ArgumentError("epochs must be >= 1");
  if (batch_size < 1) throw ArgumentError("batch_size must be >= 1");
  if (!(lr > 0)) throw ArgumentError("lr must be positive");
  if (!(smooth > 0)) throw ArgumentError("smooth must be positive");
  if (!(threshold > 0 && threshold < 1)) throw ArgumentError("threshold must lie in (0, 1)");
  if (target_h < 1 || target_w < 1) throw ArgumentError("target_h and target_w must be positive");
  if (!(train_fraction > 0 && train_fraction < 1)) {
    throw ArgumentError("train_fraction must lie in (0, 1)");
  }
  const ModelGraph g = graph();
  const Index f = g.downsampling_factor();
  if (target_h % f != 0 || target_w % f != 0) {
    throw ArgumentError("target_h/target_w must be divisible by " + std::to_string(f) + " for " +
                        to_string(model));
  }
}

std::string config_to_json(const TrainConfig& cfg) {
  json j;
  j["model"] = to_string(cfg.model);
  j["widths"] = cfg.resolved_widths();
  j["bridge_dilation"] = cfg.bridge_dilation;
  j["post_activation"] = to_string(cfg.post_activation);
  j["epochs"] = cfg.epochs;
  j["batch_size"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["smooth"] = cfg.smooth;
  j["threshold"] = cfg.threshold;
  j["dice_mode"] = cfg.dice_mode == DiceMode::global ? "global" : "per_sample";
  j["seed"] = cfg.seed;
  j["precision"] = to_string(cfg.precision);
  j["target_h"] = cfg.target_h;
  j["target_w"] = cfg.target_w;
  j["train_fraction"] = cfg.train_fraction;
  j["record_wall_clock"] = cfg.record_wall_clock;
  return j.dump(2);
}

TrainConfig config_from_json(std::string_view text, TrainConfig cfg) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("invalid configuration JSON: ") + e.what());
  }
  if (!j.is_object()) throw ArgumentError("configuration JSON must be an object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "model") cfg.model = parse_model_kind(value.get<std::string>());
      else if (key == "widths") cfg.widths = value.get<std::vector<Index>>();
      else if (key == "bridge_dilation") cfg.bridge_dilation = value.get<int>();
      else if (key == "post_activation")
        cfg.post_activation = parse_residual_activation(value.get<std::string>());
      else if (key == "epochs") cfg.epochs = value.get<int>();
      else if (key == "batch_size") cfg.batch_size = value.get<int>();
      else if (key == "lr") cfg.lr = value.get<double>();
      else if (key == "smooth") cfg.smooth = value.get<double>();
      else if (key == "threshold") cfg.threshold = value.get<double>();
      else if (key == "dice_mode") {
        const auto m = value.get<std::string>();
        if (m != "global" && m != "per_sample") throw ArgumentError("unknown dice_mode '" + m + "'");
        cfg.dice_mode = m == "global" ? DiceMode::global : DiceMode::per_sample;
      } else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
      else if (key == "precision") cfg.precision = parse_precision(value.get<std::string>());
      else if (key == "target_h") cfg.target_h = value.get<Index>();
      else if (key == "target_w") cfg.target_w = value.get<Index>();
      else if (key == "train_fraction") cfg.train_fraction = value.get<double>();
      else if (key == "record_wall_clock") cfg.record_wall_clock = value.get<bool>();
      else throw ArgumentError("unknown configuration key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("invalid configuration value: ") + e.what());
  }
  return cfg;
}

}  // namespace veinseg
