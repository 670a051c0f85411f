#include "veinseg/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "veinseg/data.hpp"
#include "veinseg/trainer.hpp"

namespace veinseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : Error {
  using Error::Error;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::pair<Index, Index> parse_size(const std::string& text) {
  const auto x = text.find('x');
  try {
    if (x == std::string::npos) {
      const Index s = std::stol(text);
      return {s, s};
    }
    return {std::stol(text.substr(0, x)), std::stol(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw UsageError("invalid --size '" + text + "' (expected N or HxW)");
  }
}

// Data directories hold images/ and masks/ plus an optional manifest.txt.
Dataset load_data_dir(const fs::path& dir, const TrainConfig& cfg) {
  Dataset d = load_dataset(dir / "images", dir / "masks", cfg.target_h, cfg.target_w,
                           dir / "manifest.txt");
  if (d.samples.empty()) throw IoError("no samples found under '" + dir.string() + "'");
  return split_dataset(std::move(d), cfg.train_fraction, cfg.seed);
}

void echo(std::ostream& out, const std::string& command, const json& resolved) {
  out << "effective configuration (" << command << "):\n" << resolved.dump(2) << '\n';
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"veinseg: residual U-Net segmentation of OCT vein scans", "veinseg"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic phantom corpus");
  std::size_t synth_count = 0;
  std::string synth_size;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  synth->add_option("--count", synth_count, "number of phantoms")->required();
  synth->add_option("--size", synth_size, "N or HxW")->required();
  synth->add_option("--seed", synth_seed, "base seed (phantom k uses seed + k)");
  synth->add_option("--out", synth_out, "output directory")->required();

  // train
  auto* train_cmd = app.add_subcommand("train", "train a model");
  std::string config_path, data_dir, train_out, resume_path;
  train_cmd->add_option("--config", config_path, "JSON configuration file");
  train_cmd->add_option("--data", data_dir, "dataset directory (images/, masks/)")->required();
  train_cmd->add_option("--out", train_out, "output directory")->required();
  train_cmd->add_option("--resume", resume_path, "checkpoint to resume from");
  std::string f_model, f_post, f_precision, f_dice;
  std::vector<Index> f_widths;
  std::optional<int> f_dilation, f_epochs, f_batch;
  std::optional<double> f_lr, f_smooth, f_threshold, f_fraction;
  std::optional<std::uint64_t> f_seed;
  std::optional<Index> f_height, f_width;
  bool f_no_clock = false;
  train_cmd->add_option("--model", f_model, "proposed | resunet | unet");
  train_cmd->add_option("--widths", f_widths, "comma-separated channel widths")->delimiter(',');
  train_cmd->add_option("--bridge-dilation", f_dilation);
  train_cmd->add_option("--post-activation", f_post, "identity | relu");
  train_cmd->add_option("--epochs", f_epochs);
  train_cmd->add_option("--batch-size", f_batch);
  train_cmd->add_option("--lr", f_lr);
  train_cmd->add_option("--smooth", f_smooth);
  train_cmd->add_option("--threshold", f_threshold);
  train_cmd->add_option("--seed", f_seed);
  train_cmd->add_option("--precision", f_precision, "f32 | f64");
  train_cmd->add_option("--height", f_height, "target height");
  train_cmd->add_option("--width", f_width, "target width");
  train_cmd->add_option("--train-fraction", f_fraction);
  train_cmd->add_option("--dice-mode", f_dice, "global | per_sample");
  train_cmd->add_flag("--no-wall-clock", f_no_clock, "write 0 to the seconds column");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
  std::string eval_ckpt, eval_data, eval_split = "heldout";
  eval_cmd->add_option("--ckpt", eval_ckpt)->required();
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--split", eval_split, "train | heldout");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "segment one image");
  std::string pred_ckpt, pred_image, pred_out;
  predict_cmd->add_option("--ckpt", pred_ckpt)->required();
  predict_cmd->add_option("--image", pred_image)->required();
  predict_cmd->add_option("--out", pred_out, "binary mask PNG; <stem>_prob.png gets the 16-bit map")
      ->required();

  // overlay
  auto* overlay_cmd = app.add_subcommand("overlay", "draw mask boundaries in red");
  std::string ov_image, ov_mask, ov_out;
  overlay_cmd->add_option("--image", ov_image)->required();
  overlay_cmd->add_option("--mask", ov_mask)->required();
  overlay_cmd->add_option("--out", ov_out)->required();

  // summary
  auto* summary_cmd = app.add_subcommand("summary", "print layer table and parameter count");
  std::string sum_model = "proposed";
  std::vector<Index> sum_widths;
  int sum_dilation = 2;
  summary_cmd->add_option("--model", sum_model, "proposed | resunet | unet");
  summary_cmd->add_option("--widths", sum_widths)->delimiter(',');
  summary_cmd->add_option("--bridge-dilation", sum_dilation);

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "render history CSV as SVG curves");
  std::string plot_history, plot_out;
  plot_cmd->add_option("--history", plot_history)->required();
  plot_cmd->add_option("--out", plot_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub != nullptr ? sub->help() : app.help());
    return 1;
  }

  try {
    if (synth->parsed()) {
      const auto [h, w] = parse_size(synth_size);
      echo(out, "synth", {{"count", synth_count}, {"height", h}, {"width", w},
                          {"seed", synth_seed}, {"out", synth_out}});
      write_phantom_corpus(synth_out, synth_count, h, w, synth_seed);
      out << "wrote " << synth_count << " phantoms to " << synth_out << '\n';
      return 0;
    }

    if (train_cmd->parsed()) {
      TrainConfig cfg;
      std::optional<Checkpoint> resume;
      try {
        if (!resume_path.empty()) {
          resume = load_checkpoint(resume_path);
          cfg = resume->config;
        }
        if (!config_path.empty()) cfg = config_from_json(read_file(config_path), cfg);
        if (!f_model.empty()) cfg.model = parse_model_kind(f_model);
        if (!f_widths.empty()) cfg.widths = f_widths;
        if (f_dilation) cfg.bridge_dilation = *f_dilation;
        if (!f_post.empty()) cfg.post_activation = parse_residual_activation(f_post);
        if (f_epochs) cfg.epochs = *f_epochs;
        if (f_batch) cfg.batch_size = *f_batch;
        if (f_lr) cfg.lr = *f_lr;
        if (f_smooth) cfg.smooth = *f_smooth;
        if (f_threshold) cfg.threshold = *f_threshold;
        if (f_seed) cfg.seed = *f_seed;
        if (!f_precision.empty()) cfg.precision = parse_precision(f_precision);
        if (f_height) cfg.target_h = *f_height;
        if (f_width) cfg.target_w = *f_width;
        if (f_fraction) cfg.train_fraction = *f_fraction;
        if (!f_dice.empty()) {
          cfg = config_from_json(json{{"dice_mode", f_dice}}.dump(), cfg);
        }
        if (f_no_clock) cfg.record_wall_clock = false;
        cfg.validate();
      } catch (const ArgumentError& e) {
        throw UsageError(e.what());
      }
      echo(out, "train", json::parse(config_to_json(cfg)));
      const Dataset data = load_data_dir(data_dir, cfg);
      out << "samples: " << data.samples.size() << " (train " << data.indices(Split::train).size()
          << ", heldout " << data.indices(Split::heldout).size() << ")\n";
      fs::create_directories(train_out);
      TrainOptions opts;
      opts.log = &out;
      opts.checkpoint_path = fs::path(train_out) / "checkpoint.vseg";
      if (resume) opts.resume = &*resume;
      const TrainResult result = train(cfg, data, opts);
      export_history(result.history, fs::path(train_out) / "history.csv");
      if (!result.history.empty()) render_curves(result.history, fs::path(train_out) / "curves.svg");
      out << "wrote " << (fs::path(train_out) / "checkpoint.vseg").string() << '\n';
      return 0;
    }

    if (eval_cmd->parsed()) {
      Split split;
      try {
        split = parse_split(eval_split);
      } catch (const ArgumentError& e) {
        throw UsageError(e.what());
      }
      const Checkpoint ckpt = load_checkpoint(eval_ckpt);
      echo(out, "eval", {{"ckpt", eval_ckpt}, {"data", eval_data}, {"split", eval_split},
                         {"train_config", json::parse(config_to_json(ckpt.config))}});
      const Dataset data = load_data_dir(eval_data, ckpt.config);
      out << format_report(evaluate(ckpt, data, split)) << '\n';
      return 0;
    }

    if (predict_cmd->parsed()) {
      const Checkpoint ckpt = load_checkpoint(pred_ckpt);
      echo(out, "predict", {{"ckpt", pred_ckpt}, {"image", pred_image}, {"out", pred_out},
                            {"threshold", ckpt.config.threshold}});
      const Image8 img = load_png(pred_image);
      if (img.channels != 1) throw IoError("expected a grayscale image: " + pred_image);
      const Tensor4<float> original = from_gray8(img);
      const auto input = resize_bilinear(original, ckpt.config.target_h, ckpt.config.target_w);
      const auto probs =
          resize_bilinear(predict_probabilities(ckpt, input), original.h(), original.w());
      Tensor4<float> mask = zeros_like(probs);
      Image16 prob_png{img.width, img.height, std::vector<std::uint16_t>(probs.size())};
      for (Index k = 0; k < probs.size(); ++k) {
        const float p = probs.data()[k];
        mask.data()[k] = p > static_cast<float>(ckpt.config.threshold) ? 1.0f : 0.0f;
        prob_png.pixels[static_cast<std::size_t>(k)] =
            static_cast<std::uint16_t>(std::lround(std::clamp(p, 0.0f, 1.0f) * 65535.0f));
      }
      const fs::path mask_path(pred_out);
      const fs::path prob_path =
          mask_path.parent_path() / (mask_path.stem().string() + "_prob.png");
      save_png(to_gray8(mask), mask_path);
      save_png16(prob_png, prob_path);
      out << "wrote " << mask_path.string() << " and " << prob_path.string() << '\n';
      return 0;
    }

    if (overlay_cmd->parsed()) {
      echo(out, "overlay", {{"image", ov_image}, {"mask", ov_mask}, {"out", ov_out}});
      const Image8 img = load_png(ov_image);
      const Image8 msk = load_png(ov_mask);
      if (img.channels != 1 || msk.channels != 1) throw IoError("overlay expects grayscale PNGs");
      Tensor4<float> mask = from_gray8(msk);
      for (Index k = 0; k < mask.size(); ++k) mask.data()[k] = mask.data()[k] > 0.5f ? 1.0f : 0.0f;
      save_png(boundary_overlay(from_gray8(img), mask), ov_out);
      out << "wrote " << ov_out << '\n';
      return 0;
    }

    if (summary_cmd->parsed()) {
      ModelGraph g;
      try {
        const ModelKind kind = parse_model_kind(sum_model);
        g = build_model(kind, 1, sum_widths.empty() ? default_widths(kind) : sum_widths,
                        kind == ModelKind::proposed ? sum_dilation : 1);
      } catch (const ArgumentError& e) {
        throw UsageError(e.what());
      }
      echo(out, "summary", {{"model", to_string(g.kind)}, {"widths", g.widths},
                            {"bridge_dilation", g.bridge_dilation}});
      out << summary_table(g);
      return 0;
    }

    if (plot_cmd->parsed()) {
      echo(out, "plot", {{"history", plot_history}, {"out", plot_out}});
      const auto history = read_history(plot_history);
      render_curves(history, plot_out);
      out << "wrote " << plot_out << " (" << history.size() << " epochs)\n";
      return 0;
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  err << app.help();
  return 1;
}

}  // namespace veinseg
