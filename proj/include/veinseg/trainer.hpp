#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "veinseg/data.hpp"
#include "veinseg/loss_metrics.hpp"
#include "veinseg/model.hpp"
#include "veinseg/optim.hpp"

namespace veinseg {

struct TrainConfig {
  ModelKind model = ModelKind::proposed;
  std::vector<Index> widths;  // empty selects default_widths(model)
  int bridge_dilation = 2;
  ResidualActivation post_activation = ResidualActivation::identity;
  int epochs = 100;
  int batch_size = 16;
  double lr = 1e-4;
  double smooth = 1.0;
  double threshold = 0.5;
  DiceMode dice_mode = DiceMode::global;
  std::uint64_t seed = 0;
  Precision precision = Precision::f32;
  Index target_h = 512;
  Index target_w = 256;
  double train_fraction = 0.75;
  // Off writes 0 to the seconds column so histories compare byte for byte.
  bool record_wall_clock = true;

  std::vector<Index> resolved_widths() const;
  ModelGraph graph() const;
  void validate() const;
};

// JSON object keyed by the field names above.
std::string config_to_json(const TrainConfig& cfg);

// Fields present in `json` override `base`; unknown keys are an error.
TrainConfig config_from_json(std::string_view json, TrainConfig base = {});

std::string to_string(Precision p);
Precision parse_precision(std::string_view text);

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  double val_loss = 0;
  double val_acc = 0;
  double val_tpr = 0;
  double val_tnr = 0;
  double seconds = 0;
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct CheckpointTensor {
  std::string name;
  std::vector<std::int64_t> dims;
  std::vector<double> values;  // exact copies of the model's scalars
  friend bool operator==(const CheckpointTensor&, const CheckpointTensor&) = default;
};

/// Everything needed to resume training or run inference. Tensors are named
/// param/<p>, buffer/<p> (batch-norm running statistics), adam.m/<p> and
/// adam.v/<p>.
struct Checkpoint {
  TrainConfig config;
  int epoch = 0;  // completed epochs
  AdamHyper adam;
  std::uint64_t adam_step = 0;
  std::vector<CheckpointTensor> tensors;

  const CheckpointTensor* find(std::string_view name) const;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout, all integers little-endian:
///   "VSEG" | u32 version | u32 n + n bytes UTF-8 JSON header | u32 tensor count |
///   per tensor: u32 name length, name, u32 rank, rank x u32 dims, values |
///   u32 CRC-32 (zlib polynomial) of every preceding byte.
/// Values are IEEE floats of the width named by the header's "scalar_bytes"
/// (4 for f32 runs, 8 for f64 runs).
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

struct TrainOptions {
  // Called after every epoch; returning false stops training early.
  std::function<bool(const EpochRecord&)> on_epoch;
  const Checkpoint* resume = nullptr;
  std::optional<std::filesystem::path> checkpoint_path;
  std::ostream* log = nullptr;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  Checkpoint checkpoint;
};

// `data` must already be split. Runs epochs [resume epoch, cfg.epochs).
TrainResult train(const TrainConfig& cfg, const Dataset& data, const TrainOptions& opts = {});

struct EvalReport {
  ConfusionCounts counts;
  Rates rates;
  double dice = 0;  // smoothed soft dice coefficient, 1 - dice loss
  std::int64_t n_pixels = 0;
};

EvalReport evaluate(const Checkpoint& ckpt, const Dataset& data, Split split);
std::string format_report(const EvalReport& r);

// Eval-mode probabilities for a (n, 1, h, w) batch.
Tensor4<float> predict_probabilities(const Checkpoint& ckpt, const Tensor4<float>& images);

// Fresh (untrained) checkpoint for cfg, initialized from cfg.seed.
Checkpoint initial_checkpoint(const TrainConfig& cfg);

void export_history(const std::vector<EpochRecord>& history, const std::filesystem::path& path);
std::vector<EpochRecord> read_history(const std::filesystem::path& path);

// Loss-vs-epoch and accuracy-vs-epoch charts side by side.
std::string curves_svg(const std::vector<EpochRecord>& history);
void render_curves(const std::vector<EpochRecord>& history, const std::filesystem::path& path);

}  // namespace veinseg
