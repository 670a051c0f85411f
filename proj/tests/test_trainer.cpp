#include <sstream>

#include "doctest.h"
#include "tempdir.hpp"
#include "veinseg/parallel.hpp"
#include "veinseg/trainer.hpp"

using namespace veinseg;
using veinseg::testing::read_bytes;
using veinseg::testing::TempDir;
using veinseg::testing::write_bytes;

namespace {

Dataset phantoms(std::size_t count, Index size, std::size_t heldout, std::uint64_t seed = 100) {
  Dataset d;
  for (std::size_t k = 0; k < count; ++k) {
    d.samples.push_back(synth_phantom(seed + k, size, size));
    d.tags.push_back(k + heldout < count ? Split::train : Split::heldout);
  }
  return d;
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.widths = {2, 4, 8, 16};
  cfg.epochs = 3;
  cfg.batch_size = 2;
  cfg.lr = 1e-3;
  cfg.seed = 5;
  cfg.precision = Precision::f64;
  cfg.target_h = 32;
  cfg.target_w = 32;
  cfg.record_wall_clock = false;
  return cfg;
}

std::vector<EpochRecord> sample_history(int n) {
  std::vector<EpochRecord> h;
  for (int e = 1; e <= n; ++e) h.push_back({e, 1.0 / e, 0.9 / e, 0.5 + 0.01 * e, 0.4, 0.7, 0.125 * e});
  return h;
}

}  // namespace

TEST_CASE("one-epoch smoke run") {
  TrainConfig cfg = tiny_config();
  cfg.epochs = 1;
  cfg.batch_size = 1;
  const auto r = train(cfg, phantoms(2, 32, 1));
  REQUIRE(r.history.size() == 1);
  const auto& e = r.history[0];
  for (double v : {e.train_loss, e.val_loss, e.val_acc, e.val_tpr, e.val_tnr}) CHECK(std::isfinite(v));
  CHECK(r.checkpoint.epoch == 1);
  CHECK(r.checkpoint.adam_step == 1);
}

TEST_CASE("training is deterministic and thread-count independent") {
  const TrainConfig cfg = tiny_config();
  const Dataset d = phantoms(6, 32, 2);
  const auto saved = thread_count();
  set_thread_count(1);
  const auto a = train(cfg, d);
  const auto b = train(cfg, d);
  set_thread_count(3);
  const auto c = train(cfg, d);
  set_thread_count(saved);
  CHECK(a.history == b.history);
  CHECK(a.history == c.history);
  CHECK(a.checkpoint.tensors == c.checkpoint.tensors);

  TempDir dir("det");
  export_history(a.history, dir / "a.csv");
  export_history(b.history, dir / "b.csv");
  CHECK(read_bytes(dir / "a.csv") == read_bytes(dir / "b.csv"));
}

TEST_CASE("resume reproduces uninterrupted training") {
  for (Precision p : {Precision::f64, Precision::f32}) {
    TrainConfig cfg = tiny_config();
    cfg.precision = p;
    cfg.epochs = 4;
    const Dataset d = phantoms(6, 32, 2);
    const auto full = train(cfg, d);

    TempDir dir("resume");
    TrainConfig half = cfg;
    half.epochs = 2;
    TrainOptions first;
    first.checkpoint_path = dir / "half.vseg";
    const auto part1 = train(half, d, first);
    const Checkpoint loaded = load_checkpoint(dir / "half.vseg");
    TrainOptions second;
    second.resume = &loaded;
    second.checkpoint_path = dir / "rest.vseg";
    const auto part2 = train(cfg, d, second);

    auto joined = part1.history;
    joined.insert(joined.end(), part2.history.begin(), part2.history.end());
    CHECK(joined == full.history);
    save_checkpoint(full.checkpoint, dir / "full.vseg");
    CHECK(read_bytes(dir / "full.vseg") == read_bytes(dir / "rest.vseg"));
  }
}

TEST_CASE("early stop through the epoch callback") {
  TrainConfig cfg = tiny_config();
  cfg.epochs = 10;
  TrainOptions opts;
  opts.on_epoch = [](const EpochRecord& r) { return r.epoch < 2; };
  const auto r = train(cfg, phantoms(4, 32, 1), opts);
  CHECK(r.history.size() == 2);
  CHECK(r.checkpoint.epoch == 2);
}

TEST_CASE("training argument errors") {
  TrainConfig cfg = tiny_config();
  Dataset d = phantoms(4, 32, 1);
  cfg.batch_size = 4;
  CHECK_THROWS_AS(train(cfg, d), ArgumentError);
  cfg.batch_size = 1;
  Dataset untagged = d;
  untagged.tags.clear();
  CHECK_THROWS_AS(train(cfg, untagged), ArgumentError);
  Dataset no_heldout = d;
  for (auto& t : no_heldout.tags) t = Split::train;
  CHECK_THROWS_AS(train(cfg, no_heldout), ArgumentError);
  CHECK_THROWS_AS(train(cfg, phantoms(4, 36, 1)), ShapeError);

  const auto ckpt = train(cfg, d).checkpoint;
  TrainConfig other = cfg;
  other.widths = {2, 4, 8, 8};
  TrainOptions opts;
  opts.resume = &ckpt;
  CHECK_THROWS_AS(train(other, d, opts), ArgumentError);
}

TEST_CASE("checkpoint files") {
  TempDir dir("ckpt");
  for (Precision p : {Precision::f32, Precision::f64}) {
    TrainConfig cfg = tiny_config();
    cfg.precision = p;
    cfg.epochs = 1;
    const auto r = train(cfg, phantoms(3, 32, 1));
    save_checkpoint(r.checkpoint, dir / "a.vseg");
    const Checkpoint back = load_checkpoint(dir / "a.vseg");
    CHECK(back.tensors == r.checkpoint.tensors);
    CHECK(back.epoch == 1);
    CHECK(config_to_json(back.config) == config_to_json(cfg));
    save_checkpoint(back, dir / "b.vseg");
    CHECK(read_bytes(dir / "a.vseg") == read_bytes(dir / "b.vseg"));
  }

  std::string bytes = read_bytes(dir / "a.vseg");
  std::string corrupt = bytes;
  corrupt[corrupt.size() - 9] ^= 0x40;
  write_bytes(dir / "c.vseg", corrupt);
  CHECK_THROWS_WITH_AS(load_checkpoint(dir / "c.vseg"), doctest::Contains("checksum"), FormatError);

  std::string v99 = bytes;
  v99[4] = 99;
  v99[5] = v99[6] = v99[7] = 0;
  write_bytes(dir / "v.vseg", v99);
  CHECK_THROWS_WITH_AS(load_checkpoint(dir / "v.vseg"), doctest::Contains("unsupported checkpoint version 99"),
                       FormatError);

  write_bytes(dir / "t.vseg", bytes.substr(0, bytes.size() / 2));
  CHECK_THROWS_AS(load_checkpoint(dir / "t.vseg"), FormatError);
  write_bytes(dir / "m.vseg", "NOPE" + bytes.substr(4));
  CHECK_THROWS_WITH_AS(load_checkpoint(dir / "m.vseg"), doctest::Contains("bad magic"), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir / "absent.vseg"), IoError);
}

TEST_CASE("evaluation with a constant half-probability head") {
  TrainConfig cfg = tiny_config();
  Checkpoint ckpt = initial_checkpoint(cfg);
  for (auto& t : ckpt.tensors)
    if (t.name == "param/head.weight" || t.name == "param/head.bias") std::fill(t.values.begin(), t.values.end(), 0.0);
  const Dataset d = phantoms(3, 32, 1);
  const auto r = evaluate(ckpt, d, Split::train);
  CHECK(*r.rates.tpr == 0.0);
  CHECK(*r.rates.tnr == 1.0);
  CHECK(r.n_pixels == 2 * 32 * 32);
  const double p = double(r.counts.tp + r.counts.fn), n = double(r.counts.tn + r.counts.fp);
  CHECK(r.rates.acc == doctest::Approx((p * *r.rates.tpr + n * *r.rates.tnr) / (p + n)));
  CHECK(format_report(r).find("tpr 0.000000") != std::string::npos);

  const auto probs = predict_probabilities(ckpt, d.samples[0].image);
  CHECK((probs.data().array() == 0.5f).all());
}

TEST_CASE("configuration json") {
  TrainConfig cfg = tiny_config();
  cfg.model = ModelKind::unet_baseline;
  cfg.widths = {2, 4, 8, 16, 32};
  cfg.dice_mode = DiceMode::per_sample;
  const TrainConfig back = config_from_json(config_to_json(cfg));
  CHECK(config_to_json(back) == config_to_json(cfg));
  CHECK(back.widths == cfg.widths);
  CHECK(config_from_json(R"({"epochs": 7})").epochs == 7);
  CHECK_THROWS_AS(config_from_json(R"({"epoch": 7})"), ArgumentError);
  CHECK_THROWS_AS(config_from_json("[1,2]"), ArgumentError);
  TrainConfig bad = tiny_config();
  bad.target_h = 36;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("history export") {
  TempDir dir("hist");
  export_history(sample_history(3), dir / "h.csv");
  const std::string text = read_bytes(dir / "h.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 4);
  CHECK(text.rfind("epoch,train_loss,val_loss,val_acc,val_tpr,val_tnr,seconds\n", 0) == 0);
  CHECK(read_history(dir / "h.csv") == sample_history(3));
  export_history(read_history(dir / "h.csv"), dir / "h2.csv");
  CHECK(read_bytes(dir / "h2.csv") == text);

  export_history({}, dir / "empty.csv");
  CHECK(read_bytes(dir / "empty.csv") == "epoch,train_loss,val_loss,val_acc,val_tpr,val_tnr,seconds\n");
}

TEST_CASE("curve rendering") {
  auto count = [](const std::string& s, const std::string& what) {
    std::size_t n = 0;
    for (auto p = s.find(what); p != std::string::npos; p = s.find(what, p + 1)) ++n;
    return n;
  };
  const std::string svg = curves_svg(sample_history(5));
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count(svg, "<polyline") == 2);
  CHECK(svg == curves_svg(sample_history(5)));

  const std::string one = curves_svg(sample_history(1));
  CHECK(count(one, "<polyline") == 2);
  CHECK(one.find("nan") == std::string::npos);

  TempDir dir("svg");
  render_curves(sample_history(4), dir / "c.svg");
  CHECK(read_bytes(dir / "c.svg") == curves_svg(sample_history(4)));
}
