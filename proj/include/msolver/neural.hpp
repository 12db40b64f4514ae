#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace msolver::nn {

enum class Activation : std::uint32_t { Relu = 0, Tanh = 1, Sigmoid = 2, Linear = 3 };
enum class Loss : std::uint32_t { BinaryCrossEntropy = 0, MeanSquaredError = 1 };
enum class Optimizer : std::uint32_t { Adam = 0, RmsProp = 1 };

double activate(Activation a, double z);
std::string to_string(Activation a);

struct LayerSpec {
  int neurons = 1;
  Activation activation = Activation::Linear;
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  Activation activation = Activation::Linear;
  std::vector<double> weights;  // out x in, row-major
  std::vector<double> bias;     // out
};

struct TrainingMeta {
  Loss loss = Loss::MeanSquaredError;
  Optimizer optimizer = Optimizer::Adam;
  double learningRate = 1e-3;
  std::uint64_t updates = 0;
};

struct TrainBatch {
  std::vector<std::vector<double>> inputs;
  std::vector<double> targets;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fully connected network with a single scalar output. Each LayerSpec is
/// one dense layer; the first consumes the raw input.
class MlpModel {
 public:
  MlpModel() = default;
  MlpModel(int inputWidth, const std::vector<LayerSpec>& layers, TrainingMeta meta,
           std::uint64_t seed);

  int input_width() const { return inputWidth_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const TrainingMeta& meta() const { return meta_; }
  TrainingMeta& meta() { return meta_; }

  std::size_t parameter_count() const;
  /// All weights then biases, layer by layer.
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  /// Throws std::invalid_argument on an input of the wrong width.
  double forward(std::span<const double> x) const;

  // Optimizer moments, sized lazily by train_step; not serialized.
  std::vector<double> moment1;
  std::vector<double> moment2;

 private:
  int inputWidth_ = 0;
  std::vector<DenseLayer> layers_;
  TrainingMeta meta_;
};

/// Layers: [w relu, w relu, 5 relu, 5 relu, 1 sigmoid]; BCE + Adam.
MlpModel build_classifier(int inputWidth, std::uint64_t seed = 1);

/// Layers: [s relu, s tanh, s linear, s linear, 1 tanh] with s = sub*sub;
/// MSE + RMSprop.
MlpModel build_qnet(int sub, std::uint64_t seed = 1);

/// Mean loss over the batch.
double batch_loss(const MlpModel& model, const TrainBatch& batch, Loss loss);

/// Gradient of the mean batch loss, in parameters() order.
std::vector<double> gradients(const MlpModel& model, const TrainBatch& batch, Loss loss);

struct OptimizerConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double rho = 0.9;
  double epsilon = 1e-8;
};

/// One optimizer update over the whole batch. Returns the mean loss
/// measured before the update. Loss and optimizer must match the model's
/// training metadata.
double train_step(MlpModel& model, const TrainBatch& batch, Loss loss, Optimizer optimizer,
                  const OptimizerConfig& config = {});

/// Binary model file; layout in docs/formats.md.
void save_model(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_model(const std::filesystem::path& path);
std::string serialize_model(const MlpModel& model);
MlpModel deserialize_model(std::string bytes);

}  // namespace msolver::nn
