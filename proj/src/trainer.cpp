#include "veinseg/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>

namespace veinseg {

namespace {

template <typename Scalar>
Tensor4<Scalar> stack(const Dataset& data, std::span<const std::size_t> rows, bool masks) {
  const auto& first = data.samples[rows[0]].image;
  Tensor4<Scalar> out;
  out.reset(Shape4{static_cast<Index>(rows.size()), 1, first.h(), first.w()});
  const Index plane = first.plane();
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& s = data.samples[rows[k]];
    const Tensor4<float>& src = masks ? s.mask : s.image;
    require_same_shape(src.shape(), first.shape(), "batch assembly");
    for (Index p = 0; p < plane; ++p) {
      out.sample_data(static_cast<Index>(k))[p] = static_cast<Scalar>(src.data()[p]);
    }
  }
  return out;
}

template <typename Scalar>
Checkpoint snapshot(const TrainConfig& cfg, int epoch, Model<Scalar>& model,
                    const AdamState<Scalar>& adam) {
  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.epoch = epoch;
  ckpt.adam = adam.hyper;
  ckpt.adam_step = adam.step;
  auto add = [&](const std::string& name, const std::vector<Index>& shape,
                 const Vector<Scalar>& values) {
    CheckpointTensor t;
    t.name = name;
    t.dims.assign(shape.begin(), shape.end());
    t.values.assign(values.data(), values.data() + values.size());
    ckpt.tensors.push_back(std::move(t));
  };
  std::vector<std::pair<std::string, std::vector<Index>>> names;
  for_each_parameter(model, [&](const std::string& name, const std::vector<Index>& shape,
                                Vector<Scalar>& values) {
    add("param/" + name, shape, values);
    names.emplace_back(name, shape);
  });
  for_each_buffer(model, [&](const std::string& name, const std::vector<Index>& shape,
                             Vector<Scalar>& values) { add("buffer/" + name, shape, values); });
  if (!adam.m.empty()) {
    for (std::size_t k = 0; k < names.size(); ++k) add("adam.m/" + names[k].first, names[k].second, adam.m[k]);
    for (std::size_t k = 0; k < names.size(); ++k) add("adam.v/" + names[k].first, names[k].second, adam.v[k]);
  }
  return ckpt;
}

template <typename Scalar>
void load_into(const Checkpoint& ckpt, const std::string& name, const std::vector<Index>& shape,
               Vector<Scalar>& values) {
  const CheckpointTensor* t = ckpt.find(name);
  if (t == nullptr) throw FormatError("checkpoint lacks tensor '" + name + "'");
  if (!std::equal(t->dims.begin(), t->dims.end(), shape.begin(), shape.end())) {
    throw FormatError("checkpoint tensor '" + name + "' has unexpected shape");
  }
  for (Index k = 0; k < values.size(); ++k) values[k] = static_cast<Scalar>(t->values[k]);
}

template <typename Scalar>
Model<Scalar> restore_model(const Checkpoint& ckpt, AdamState<Scalar>* adam = nullptr) {
  Model<Scalar> model = make_model<Scalar>(ckpt.config.graph());
  std::vector<std::pair<std::string, std::vector<Index>>> names;
  for_each_parameter(model, [&](const std::string& name, const std::vector<Index>& shape,
                                Vector<Scalar>& values) {
    load_into(ckpt, "param/" + name, shape, values);
    names.emplace_back(name, shape);
  });
  for_each_buffer(model, [&](const std::string& name, const std::vector<Index>& shape,
                             Vector<Scalar>& values) { load_into(ckpt, "buffer/" + name, shape, values); });
  if (adam != nullptr) {
    adam->hyper = ckpt.adam;
    adam->step = ckpt.adam_step;
    adam->m.clear();
    adam->v.clear();
    if (ckpt.adam_step > 0) {
      for (const auto& [name, shape] : names) {
        Vector<Scalar> m(ParameterInfo{name, shape}.size()), v(m.size());
        load_into(ckpt, "adam.m/" + name, shape, m);
        load_into(ckpt, "adam.v/" + name, shape, v);
        adam->m.push_back(std::move(m));
        adam->v.push_back(std::move(v));
      }
    }
  }
  return model;
}

template <typename Scalar>
struct HeldoutStats {
  ConfusionCounts counts;
  DiceTerms dice;
};

template <typename Scalar>
HeldoutStats<Scalar> run_eval(Model<Scalar>& model, const Dataset& data,
                              const std::vector<std::size_t>& rows, std::size_t batch,
                              double threshold) {
  HeldoutStats<Scalar> s;
  for (std::size_t start = 0; start < rows.size(); start += batch) {
    const std::span<const std::size_t> chunk(rows.data() + start,
                                             std::min(batch, rows.size() - start));
    const auto x = stack<Scalar>(data, chunk, false);
    const auto y = stack<Scalar>(data, chunk, true);
    const auto probs = model_forward(model, x, Mode::eval).first;
    s.counts += confusion(probs, y, threshold);
    s.dice.add(probs, y);
  }
  return s;
}

void check_dataset(const TrainConfig& cfg, const Dataset& data, const ModelGraph& g) {
  if (data.tags.size() != data.samples.size()) {
    throw ArgumentError("dataset has not been split into train/heldout");
  }
  const Index f = g.downsampling_factor();
  for (const auto& s : data.samples) {
    if (s.image.c() != g.in_channels || s.image.h() % f != 0 || s.image.w() % f != 0) {
      throw ShapeError("sample '" + s.id + "' of shape " + s.image.shape().str() +
                       " is incompatible with the model (spatial dims must be divisible by " +
                       std::to_string(f) + ")");
    }
  }
  (void)cfg;
}

template <typename Scalar>
TrainResult train_impl(const TrainConfig& cfg, const Dataset& data, const TrainOptions& opts) {
  cfg.validate();
  const ModelGraph graph = cfg.graph();
  check_dataset(cfg, data, graph);
  const auto train_rows = data.indices(Split::train);
  const auto heldout_rows = data.indices(Split::heldout);
  if (train_rows.empty()) throw ArgumentError("train split is empty");
  if (heldout_rows.empty()) throw ArgumentError("heldout split is empty");
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  if (batch > train_rows.size()) {
    throw ArgumentError("batch_size " + std::to_string(batch) + " exceeds train split size " +
                        std::to_string(train_rows.size()));
  }

  AdamState<Scalar> adam;
  Model<Scalar> model;
  int start_epoch = 0;
  if (opts.resume != nullptr) {
    const auto saved = parameter_layout(opts.resume->config.graph());
    const auto wanted = parameter_layout(graph);
    const bool same_layout = std::equal(
        saved.begin(), saved.end(), wanted.begin(), wanted.end(),
        [](const auto& a, const auto& b) { return a.name == b.name && a.shape == b.shape; });
    if (opts.resume->config.precision != cfg.precision || !same_layout) {
      throw ArgumentError("resume checkpoint does not match the configured model/precision");
    }
    model = restore_model<Scalar>(*opts.resume, &adam);
    start_epoch = opts.resume->epoch;
  } else {
    model = make_model<Scalar>(graph);
    initialize(model, cfg.seed);
  }

  std::vector<Vector<Scalar>*> params;
  for_each_parameter(model, [&](const std::string&, const std::vector<Index>&,
                                Vector<Scalar>& values) { params.push_back(&values); });
  std::vector<Vector<Scalar>> grads(params.size());

  const auto smooth = static_cast<Scalar>(cfg.smooth);
  TrainResult result;
  int epoch = start_epoch;
  for (; epoch < cfg.epochs; ++epoch) {
    const auto clock_start = std::chrono::steady_clock::now();
    const auto perm = epoch_permutation(cfg.seed, static_cast<std::size_t>(epoch), train_rows.size());
    const std::size_t batches = train_rows.size() / batch;
    double loss_sum = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<std::size_t> rows(batch);
      for (std::size_t k = 0; k < batch; ++k) rows[k] = train_rows[perm[b * batch + k]];
      const auto x = stack<Scalar>(data, rows, false);
      const auto y = stack<Scalar>(data, rows, true);
      auto [probs, ctx] = model_forward(model, x, Mode::train);
      const Scalar loss = dice_loss(probs, y, smooth, cfg.dice_mode);
      if (!std::isfinite(static_cast<double>(loss))) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                           std::to_string(b));
      }
      loss_sum += static_cast<double>(loss);
      auto named = model_backward(model, dice_loss_grad(probs, y, smooth, cfg.dice_mode), ctx);
      for (std::size_t k = 0; k < named.size(); ++k) grads[k] = std::move(named[k].values);
      adam_step<Scalar>(params, grads, adam, cfg.lr);
    }

    const auto held = run_eval(model, data, heldout_rows, batch, cfg.threshold);
    const Rates rates = metrics(held.counts);
    if (!rates.tpr || !rates.tnr) {
      throw ArgumentError("heldout split lacks positive or negative pixels; TPR/TNR undefined");
    }
    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.val_loss = held.dice.loss(cfg.smooth);
    rec.val_acc = rates.acc;
    rec.val_tpr = *rates.tpr;
    rec.val_tnr = *rates.tnr;
    if (cfg.record_wall_clock) {
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock_start).count();
    }
    result.history.push_back(rec);
    if (opts.log != nullptr) {
      *opts.log << "epoch " << rec.epoch << "/" << cfg.epochs << "  train_loss " << rec.train_loss
                << "  val_loss " << rec.val_loss << "  val_acc " << rec.val_acc << "  val_tpr "
                << rec.val_tpr << "  val_tnr " << rec.val_tnr << '\n';
    }
    if (opts.on_epoch && !opts.on_epoch(rec)) {
      ++epoch;
      break;
    }
  }

  result.checkpoint = snapshot(cfg, epoch, model, adam);
  if (opts.checkpoint_path) save_checkpoint(result.checkpoint, *opts.checkpoint_path);
  return result;
}

template <typename Scalar>
EvalReport evaluate_impl(const Checkpoint& ckpt, const Dataset& data, Split split) {
  const ModelGraph graph = ckpt.config.graph();
  check_dataset(ckpt.config, data, graph);
  const auto rows = data.indices(split);
  if (rows.empty()) throw ArgumentError(to_string(split) + " split is empty");
  Model<Scalar> model = restore_model<Scalar>(ckpt);
  const auto s = run_eval(model, data, rows, static_cast<std::size_t>(ckpt.config.batch_size),
                          ckpt.config.threshold);
  EvalReport r;
  r.counts = s.counts;
  r.rates = metrics(s.counts);
  r.dice = 1.0 - s.dice.loss(ckpt.config.smooth);
  r.n_pixels = s.counts.total();
  return r;
}

template <typename Scalar>
Tensor4<float> predict_impl(const Checkpoint& ckpt, const Tensor4<float>& images) {
  Model<Scalar> model = restore_model<Scalar>(ckpt);
  return model_forward(model, images.cast<Scalar>(), Mode::eval).first.template cast<float>();
}

template <typename Scalar>
Checkpoint initial_impl(const TrainConfig& cfg) {
  Model<Scalar> model = make_model<Scalar>(cfg.graph());
  initialize(model, cfg.seed);
  return snapshot(cfg, 0, model, AdamState<Scalar>{});
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& data, const TrainOptions& opts) {
  return cfg.precision == Precision::f64 ? train_impl<double>(cfg, data, opts)
                                         : train_impl<float>(cfg, data, opts);
}

EvalReport evaluate(const Checkpoint& ckpt, const Dataset& data, Split split) {
  return ckpt.config.precision == Precision::f64 ? evaluate_impl<double>(ckpt, data, split)
                                                 : evaluate_impl<float>(ckpt, data, split);
}

Tensor4<float> predict_probabilities(const Checkpoint& ckpt, const Tensor4<float>& images) {
  return ckpt.config.precision == Precision::f64 ? predict_impl<double>(ckpt, images)
                                                 : predict_impl<float>(ckpt, images);
}

Checkpoint initial_checkpoint(const TrainConfig& cfg) {
  cfg.validate();
  return cfg.precision == Precision::f64 ? initial_impl<double>(cfg) : initial_impl<float>(cfg);
}

std::string format_report(const EvalReport& r) {
  auto rate = [](const std::optional<double>& v) {
    return v ? std::to_string(*v) : std::string("undefined");
  };
  return "acc " + std::to_string(r.rates.acc) + "  tpr " + rate(r.rates.tpr) + "  tnr " +
         rate(r.rates.tnr) + "  dice " + std::to_string(r.dice) + "  pixels " +
         std::to_string(r.n_pixels) + "  (tp " + std::to_string(r.counts.tp) + ", fp " +
         std::to_string(r.counts.fp) + ", tn " + std::to_string(r.counts.tn) + ", fn " +
         std::to_string(r.counts.fn) + ")";
}

}  // namespace veinseg
