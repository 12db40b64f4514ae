#include "msolver/neural.hpp"

#include <algorithm>
#include <cmath>

#include "msolver/binary_io.hpp"
#include "msolver/rng.hpp"

namespace msolver::nn {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? z : 0.0;
    case Activation::Tanh: return std::tanh(z);
    case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-z));
    case Activation::Linear: return z;
  }
  return z;
}

namespace {

// Derivative expressed through the activation output y = f(z).
double derivative(Activation a, double z, double y) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::Linear: return 1.0;
  }
  return 1.0;
}

bool valid_activation(std::uint32_t id) { return id <= 3; }

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Linear: return "linear";
  }
  return "?";
}

MlpModel::MlpModel(int inputWidth, const std::vector<LayerSpec>& layers, TrainingMeta meta,
                   std::uint64_t seed)
    : inputWidth_(inputWidth), meta_(meta) {
  if (inputWidth < 1) throw std::invalid_argument("input width must be positive");
  if (layers.empty()) throw std::invalid_argument("model needs at least one layer");
  if (layers.back().neurons != 1) throw std::invalid_argument("output layer must have one neuron");
  Rng rng(seed);
  int in = inputWidth;
  for (const auto& spec : layers) {
    if (spec.neurons < 1) throw std::invalid_argument("layer width must be positive");
    DenseLayer layer{in, spec.neurons, spec.activation, {}, {}};
    // Uniform fan-in scaling: He-style for relu, LeCun-style otherwise.
    const double gain = spec.activation == Activation::Relu ? 6.0 : 3.0;
    const double limit = std::sqrt(gain / in);
    layer.weights.resize(static_cast<std::size_t>(in * spec.neurons));
    for (auto& w : layer.weights) w = rng.uniform(-limit, limit);
    layer.bias.assign(static_cast<std::size_t>(spec.neurons), 0.0);
    layers_.push_back(std::move(layer));
    in = spec.neurons;
  }
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
  return n;
}

std::vector<double> MlpModel::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& l : layers_) {
    p.insert(p.end(), l.weights.begin(), l.weights.end());
    p.insert(p.end(), l.bias.begin(), l.bias.end());
  }
  return p;
}

void MlpModel::set_parameters(std::span<const double> params) {
  if (params.size() != parameter_count()) throw std::invalid_argument("parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (auto& w : l.weights) w = params[k++];
    for (auto& b : l.bias) b = params[k++];
  }
}

double MlpModel::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != inputWidth_) {
    throw std::invalid_argument("input width " + std::to_string(x.size()) + ", model expects " +
                                std::to_string(inputWidth_));
  }
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> next;
  for (const auto& l : layers_) {
    next.assign(static_cast<std::size_t>(l.out), 0.0);
    for (int o = 0; o < l.out; ++o) {
      double z = l.bias[static_cast<std::size_t>(o)];
      const double* w = &l.weights[static_cast<std::size_t>(o * l.in)];
      for (int i = 0; i < l.in; ++i) z += w[i] * a[static_cast<std::size_t>(i)];
      next[static_cast<std::size_t>(o)] = activate(l.activation, z);
    }
    a.swap(next);
  }
  return a.front();
}

MlpModel build_classifier(int inputWidth, std::uint64_t seed) {
  return MlpModel(inputWidth,
                  {{inputWidth, Activation::Relu},
                   {inputWidth, Activation::Relu},
                   {5, Activation::Relu},
                   {5, Activation::Relu},
                   {1, Activation::Sigmoid}},
                  {Loss::BinaryCrossEntropy, Optimizer::Adam, 1e-3, 0}, seed);
}

MlpModel build_qnet(int sub, std::uint64_t seed) {
  if (sub < 1 || sub % 2 == 0) throw std::invalid_argument("sub-state size must be odd");
  const int w = sub * sub;
  return MlpModel(w,
                  {{w, Activation::Relu},
                   {w, Activation::Tanh},
                   {w, Activation::Linear},
                   {w, Activation::Linear},
                   {1, Activation::Tanh}},
                  {Loss::MeanSquaredError, Optimizer::RmsProp, 1e-3, 0}, seed);
}

namespace {

constexpr double kProbFloor = 1e-12;

double sample_loss(Loss loss, double y, double target) {
  if (loss == Loss::MeanSquaredError) return (y - target) * (y - target);
  const double p = std::clamp(y, kProbFloor, 1.0 - kProbFloor);
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

void check_batch(const MlpModel& model, const TrainBatch& batch) {
  if (batch.inputs.empty()) throw std::invalid_argument("empty training batch");
  if (batch.inputs.size() != batch.targets.size()) {
    throw std::invalid_argument("inputs and targets differ in length");
  }
}

}  // namespace

double batch_loss(const MlpModel& model, const TrainBatch& batch, Loss loss) {
  check_batch(model, batch);
  double total = 0.0;
  for (std::size_t s = 0; s < batch.inputs.size(); ++s) {
    total += sample_loss(loss, model.forward(batch.inputs[s]), batch.targets[s]);
  }
  return total / static_cast<double>(batch.inputs.size());
}

std::vector<double> gradients(const MlpModel& model, const TrainBatch& batch, Loss loss) {
  check_batch(model, batch);
  const auto& layers = model.layers();
  const std::size_t L = layers.size();
  std::vector<std::size_t> offset(L);
  {
    std::size_t k = 0;
    for (std::size_t l = 0; l < L; ++l) {
      offset[l] = k;
      k += layers[l].weights.size() + layers[l].bias.size();
    }
  }
  std::vector<double> grad(model.parameter_count(), 0.0);
  const double scale = 1.0 / static_cast<double>(batch.inputs.size());

  std::vector<std::vector<double>> acts(L + 1), pre(L);
  for (std::size_t s = 0; s < batch.inputs.size(); ++s) {
    const auto& x = batch.inputs[s];
    if (static_cast<int>(x.size()) != model.input_width()) {
      throw std::invalid_argument("batch input has the wrong width");
    }
    acts[0] = x;
    for (std::size_t l = 0; l < L; ++l) {
      const auto& ly = layers[l];
      pre[l].assign(static_cast<std::size_t>(ly.out), 0.0);
      acts[l + 1].assign(static_cast<std::size_t>(ly.out), 0.0);
      for (int o = 0; o < ly.out; ++o) {
        double z = ly.bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < ly.in; ++i) {
          z += ly.weights[static_cast<std::size_t>(o * ly.in + i)] * acts[l][static_cast<std::size_t>(i)];
        }
        pre[l][static_cast<std::size_t>(o)] = z;
        acts[l + 1][static_cast<std::size_t>(o)] = activate(ly.activation, z);
      }
    }

    const double y = acts[L][0];
    const double t = batch.targets[s];
    std::vector<double> delta(1);
    const auto& last = layers.back();
    if (loss == Loss::BinaryCrossEntropy && last.activation == Activation::Sigmoid) {
      delta[0] = (y - t) * scale;  // sigmoid and cross-entropy derivatives cancel
    } else {
      double dLdy;
      if (loss == Loss::MeanSquaredError) {
        dLdy = 2.0 * (y - t);
      } else {
        const double p = std::clamp(y, kProbFloor, 1.0 - kProbFloor);
        dLdy = (p - t) / (p * (1.0 - p));
      }
      delta[0] = dLdy * derivative(last.activation, pre[L - 1][0], y) * scale;
    }

    for (std::size_t l = L; l-- > 0;) {
      const auto& ly = layers[l];
      const auto& input = acts[l];
      double* gw = &grad[offset[l]];
      double* gb = gw + ly.weights.size();
      for (int o = 0; o < ly.out; ++o) {
        const double d = delta[static_cast<std::size_t>(o)];
        gb[o] += d;
        for (int i = 0; i < ly.in; ++i) gw[o * ly.in + i] += d * input[static_cast<std::size_t>(i)];
      }
      if (l == 0) break;
      const auto& below = layers[l - 1];
      std::vector<double> prev(static_cast<std::size_t>(ly.in), 0.0);
      for (int i = 0; i < ly.in; ++i) {
        double sum = 0.0;
        for (int o = 0; o < ly.out; ++o) {
          sum += ly.weights[static_cast<std::size_t>(o * ly.in + i)] * delta[static_cast<std::size_t>(o)];
        }
        const auto ui = static_cast<std::size_t>(i);
        prev[ui] = sum * derivative(below.activation, pre[l - 1][ui], acts[l][ui]);
      }
      delta.swap(prev);
    }
  }
  return grad;
}

double train_step(MlpModel& model, const TrainBatch& batch, Loss loss, Optimizer optimizer,
                  const OptimizerConfig& config) {
  auto& meta = model.meta();
  if (meta.loss != loss || meta.optimizer != optimizer) {
    throw std::invalid_argument("loss/optimizer do not match the model's training metadata");
  }
  const double before = batch_loss(model, batch, loss);
  if (!std::isfinite(before)) {
    throw TrainingError("non-finite loss " + std::to_string(before) + " at update " +
                        std::to_string(meta.updates) + " over " +
                        std::to_string(batch.inputs.size()) + " samples");
  }
  const auto grad = gradients(model, batch, loss);
  auto params = model.parameters();
  const std::size_t n = params.size();
  if (model.moment1.size() != n) model.moment1.assign(n, 0.0);
  if (model.moment2.size() != n) model.moment2.assign(n, 0.0);
  const double lr = meta.learningRate;

  if (optimizer == Optimizer::Adam) {
    const double t = static_cast<double>(meta.updates + 1);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t k = 0; k < n; ++k) {
      model.moment1[k] = config.beta1 * model.moment1[k] + (1.0 - config.beta1) * grad[k];
      model.moment2[k] = config.beta2 * model.moment2[k] + (1.0 - config.beta2) * grad[k] * grad[k];
      const double mhat = model.moment1[k] / c1;
      const double vhat = model.moment2[k] / c2;
      params[k] -= lr * mhat / (std::sqrt(vhat) + config.epsilon);
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      model.moment2[k] = config.rho * model.moment2[k] + (1.0 - config.rho) * grad[k] * grad[k];
      params[k] -= lr * grad[k] / (std::sqrt(model.moment2[k]) + config.epsilon);
    }
  }
  for (double p : params) {
    if (!std::isfinite(p)) {
      throw TrainingError("non-finite weight after update " + std::to_string(meta.updates + 1) +
                          " (loss before update " + std::to_string(before) + ")");
    }
  }
  model.set_parameters(params);
  ++meta.updates;
  return before;
}

namespace {
constexpr std::string_view kMagic = "MSNN";
constexpr std::uint32_t kFormatVersion = 1;
}  // namespace

std::string serialize_model(const MlpModel& model) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.input_width()));
  w.u32(static_cast<std::uint32_t>(model.layers().size()));
  for (const auto& l : model.layers()) {
    w.u32(static_cast<std::uint32_t>(l.out));
    w.u32(static_cast<std::uint32_t>(l.activation));
  }
  const auto& meta = model.meta();
  w.u32(static_cast<std::uint32_t>(meta.loss));
  w.u32(static_cast<std::uint32_t>(meta.optimizer));
  w.f64(meta.learningRate);
  w.u64(meta.updates);
  for (double p : model.parameters()) w.f64(p);
  return w.data();
}

MlpModel deserialize_model(std::string bytes) {
  ByteReader r(std::move(bytes));
  if (r.bytes(kMagic.size()) != kMagic) throw FormatError("bad model magic", 0);
  std::size_t at = r.offset();
  if (const auto v = r.u32(); v != kFormatVersion) {
    throw UnsupportedVersionError("unsupported model format version " + std::to_string(v), at);
  }
  at = r.offset();
  const auto inputWidth = r.u32();
  if (inputWidth == 0 || inputWidth > (1u << 20)) throw FormatError("implausible input width", at);
  at = r.offset();
  const auto layerCount = r.u32();
  if (layerCount == 0 || layerCount > 64) throw FormatError("implausible layer count", at);
  std::vector<LayerSpec> specs;
  for (std::uint32_t k = 0; k < layerCount; ++k) {
    at = r.offset();
    const auto neurons = r.u32();
    const auto act = r.u32();
    if (neurons == 0 || neurons > (1u << 20)) throw FormatError("implausible layer width", at);
    if (!valid_activation(act)) throw FormatError("unknown activation id", at + 4);
    specs.push_back({static_cast<int>(neurons), static_cast<Activation>(act)});
  }
  if (specs.back().neurons != 1) throw FormatError("output layer must have one neuron", at);
  TrainingMeta meta;
  at = r.offset();
  const auto lossId = r.u32();
  if (lossId > 1) throw FormatError("unknown loss id", at);
  at = r.offset();
  const auto optId = r.u32();
  if (optId > 1) throw FormatError("unknown optimizer id", at);
  meta.loss = static_cast<Loss>(lossId);
  meta.optimizer = static_cast<Optimizer>(optId);
  meta.learningRate = r.f64();
  meta.updates = r.u64();

  MlpModel model(static_cast<int>(inputWidth), specs, meta, 0);
  std::vector<double> params(model.parameter_count());
  for (auto& p : params) {
    at = r.offset();
    p = r.f64();
    if (!std::isfinite(p)) throw FormatError("non-finite weight", at);
  }
  if (!r.at_end()) throw FormatError("trailing bytes", r.offset());
  model.set_parameters(params);
  return model;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  write_file(path, serialize_model(model));
}

MlpModel load_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

}  // namespace msolver::nn
