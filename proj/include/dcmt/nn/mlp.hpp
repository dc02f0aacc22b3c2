#ifndef DCMT_NN_MLP_HPP
#define DCMT_NN_MLP_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcmt/rng.hpp"

namespace dcmt::nn {

enum class Activation : std::uint8_t { identity = 0, relu = 1, sigmoid = 2 };

struct Layer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

/// Parameter gradients (same shapes as the layers) plus d(loss)/d(input).
struct Gradients {
  std::vector<Layer> layers;
  Eigen::MatrixXd input;  // in x batch
};

/// Intermediates of a forward pass, needed by backward().
struct Tape {
  std::vector<Eigen::MatrixXd> inputs;  // input to each layer (in x batch)
  std::vector<Eigen::MatrixXd> pre;     // pre-activation of each layer
  Eigen::MatrixXd output;
};

/// Fully connected network: rectifier on hidden layers, configurable output squashing.
/// Batches are column-major: one sample per column.
class Mlp {
 public:
  Mlp() = default;
  /// `sizes` = {in, hidden..., out}. Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases the same.
  Mlp(std::vector<std::size_t> sizes, Activation output, Rng& rng);
  /// All-zero parameters.
  Mlp(std::vector<std::size_t> sizes, Activation output);

  [[nodiscard]] std::size_t input_size() const { return sizes_.front(); }
  [[nodiscard]] std::size_t output_size() const { return sizes_.back(); }
  [[nodiscard]] const std::vector<std::size_t>& sizes() const { return sizes_; }
  [[nodiscard]] Activation output_activation() const { return output_; }
  [[nodiscard]] std::size_t parameter_count() const;

  [[nodiscard]] std::vector<Layer>& layers() { return layers_; }
  [[nodiscard]] const std::vector<Layer>& layers() const { return layers_; }

  [[nodiscard]] Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
  [[nodiscard]] Eigen::VectorXd forward(std::span<const double> x) const;
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const;

  /// Gradients of sum_k upstream(k, b) * output(k, b) over the batch.
  [[nodiscard]] Gradients backward(const Tape& tape, const Eigen::MatrixXd& upstream) const;

  bool operator==(const Mlp& other) const;

 private:
  void check_input(Eigen::Index rows) const;

  std::vector<std::size_t> sizes_;
  Activation output_ = Activation::identity;
  std::vector<Layer> layers_;
};

/// Adam hyper-parameters; defaults follow the usual choices with lr = 1e-3.
struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  std::vector<Layer> first;
  std::vector<Layer> second;

  AdamState() = default;
  AdamState(const Mlp& shape, AdamConfig cfg);
  void reset();
};

/// One bias-corrected Adam update. Throws NumericError naming the offending
/// parameter block when a gradient is not finite.
void adam_step(Mlp& params, const Gradients& grads, AdamState& state);

enum class TargetMode : std::uint8_t { hard, soft };

/// hard: target <- online. soft: target <- tau * online + (1 - tau) * target.
void update_target(Mlp& target, const Mlp& online, TargetMode mode, double tau = 0.01);

struct LossResult {
  double value = 0.0;
  Eigen::MatrixXd gradient;  // d(loss)/d(prediction)
};

/// mean((pred - target)^2) over all entries.
LossResult mse_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);
/// sqrt(mean((pred - target)^2)); gradient is zero when the loss is zero.
LossResult rmse_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target);

}  // namespace dcmt::nn

#endif  // DCMT_NN_MLP_HPP
