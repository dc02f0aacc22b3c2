#include "dcmt/nn/mlp.hpp"

#include <cmath>

#include <fmt/format.h>

#include "dcmt/errors.hpp"

namespace dcmt::nn {

namespace {

Eigen::MatrixXd activate(const Eigen::MatrixXd& z, Activation a) {
  switch (a) {
    case Activation::identity:
      return z;
    case Activation::relu:
      return z.cwiseMax(0.0);
    case Activation::sigmoid:
      return z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  }
  return z;
}

// d(activation)/dz evaluated elementwise, given pre-activation z and output y.
Eigen::MatrixXd activation_slope(const Eigen::MatrixXd& z, const Eigen::MatrixXd& y, Activation a) {
  switch (a) {
    case Activation::identity:
      return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    case Activation::relu:
      return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case Activation::sigmoid:
      return y.array() * (1.0 - y.array());
  }
  return Eigen::MatrixXd::Ones(z.rows(), z.cols());
}

std::vector<Layer> zeros_like(const std::vector<Layer>& layers) {
  std::vector<Layer> out;
  out.reserve(layers.size());
  for (const Layer& l : layers)
    out.push_back(Layer{Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()), Eigen::VectorXd::Zero(l.bias.size())});
  return out;
}

void check_same_shape(const Mlp& a, const Mlp& b, const char* what) {
  if (a.sizes() != b.sizes()) throw ContractError(fmt::format("{}: network shapes differ", what));
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> sizes, Activation output) : sizes_(std::move(sizes)), output_(output) {
  if (sizes_.size() < 2) throw ContractError("Mlp: need at least input and output sizes");
  for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
    const auto in = static_cast<Eigen::Index>(sizes_[k]);
    const auto out = static_cast<Eigen::Index>(sizes_[k + 1]);
    layers_.push_back(Layer{Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)});
  }
}

Mlp::Mlp(std::vector<std::size_t> sizes, Activation output, Rng& rng) : Mlp(std::move(sizes), output) {
  for (Layer& l : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, l.weight.cols())));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = bound * (2.0 * uniform01(rng) - 1.0);
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = bound * (2.0 * uniform01(rng) - 1.0);
  }
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

void Mlp::check_input(Eigen::Index rows) const {
  if (static_cast<std::size_t>(rows) != input_size())
    throw ContractError(fmt::format("Mlp: input has {} rows, network expects {}", rows, input_size()));
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  check_input(x.rows());
  Eigen::MatrixXd h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Eigen::MatrixXd z = layers_[k].weight * h;
    z.colwise() += layers_[k].bias;
    h = activate(z, k + 1 == layers_.size() ? output_ : Activation::relu);
  }
  return h;
}

Eigen::VectorXd Mlp::forward(std::span<const double> x) const {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return forward(Eigen::MatrixXd(v)).col(0);
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x, Tape& tape) const {
  check_input(x.rows());
  tape.inputs.clear();
  tape.pre.clear();
  Eigen::MatrixXd h = x;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    tape.inputs.push_back(h);
    Eigen::MatrixXd z = layers_[k].weight * h;
    z.colwise() += layers_[k].bias;
    h = activate(z, k + 1 == layers_.size() ? output_ : Activation::relu);
    tape.pre.push_back(std::move(z));
  }
  tape.output = h;
  return h;
}

Gradients Mlp::backward(const Tape& tape, const Eigen::MatrixXd& upstream) const {
  if (tape.pre.size() != layers_.size()) throw ContractError("Mlp::backward: tape does not match network");
  if (upstream.rows() != tape.output.rows() || upstream.cols() != tape.output.cols())
    throw ContractError(fmt::format("Mlp::backward: upstream is {}x{}, output is {}x{}", upstream.rows(),
                                    upstream.cols(), tape.output.rows(), tape.output.cols()));
  Gradients g;
  g.layers.resize(layers_.size());
  Eigen::MatrixXd delta = upstream;
  for (std::size_t k = layers_.size(); k-- > 0;) {
    const bool last = k + 1 == layers_.size();
    const Eigen::MatrixXd& y = last ? tape.output : tape.inputs[k + 1];
    delta = delta.cwiseProduct(activation_slope(tape.pre[k], y, last ? output_ : Activation::relu));
    g.layers[k].weight = delta * tape.inputs[k].transpose();
    g.layers[k].bias = delta.rowwise().sum();
    delta = layers_[k].weight.transpose() * delta;
  }
  g.input = std::move(delta);
  return g;
}

bool Mlp::operator==(const Mlp& other) const {
  if (sizes_ != other.sizes_ || output_ != other.output_) return false;
  for (std::size_t k = 0; k < layers_.size(); ++k)
    if (layers_[k].weight != other.layers_[k].weight || layers_[k].bias != other.layers_[k].bias) return false;
  return true;
}

AdamState::AdamState(const Mlp& shape, AdamConfig cfg)
    : config(cfg), first(zeros_like(shape.layers())), second(zeros_like(shape.layers())) {}

void AdamState::reset() {
  step = 0;
  first = zeros_like(first);
  second = zeros_like(second);
}

void adam_step(Mlp& params, const Gradients& grads, AdamState& state) {
  auto& layers = params.layers();
  if (grads.layers.size() != layers.size() || state.first.size() != layers.size())
    throw ContractError("adam_step: gradient/state shapes do not match the network");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    if (!grads.layers[k].weight.allFinite())
      throw NumericError(fmt::format("adam_step: non-finite gradient in layer {} weight", k));
    if (!grads.layers[k].bias.allFinite())
      throw NumericError(fmt::format("adam_step: non-finite gradient in layer {} bias", k));
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double corr1 = 1.0 - std::pow(c.beta1, t);
  const double corr2 = 1.0 - std::pow(c.beta2, t);
  auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
    m = c.beta1 * m + (1.0 - c.beta1) * grad;
    v = c.beta2 * v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
    param.array() -= c.learning_rate * (m.array() / corr1) / ((v.array() / corr2).sqrt() + c.epsilon);
  };
  for (std::size_t k = 0; k < layers.size(); ++k) {
    update(layers[k].weight, grads.layers[k].weight, state.first[k].weight, state.second[k].weight);
    update(layers[k].bias, grads.layers[k].bias, state.first[k].bias, state.second[k].bias);
  }
}

void update_target(Mlp& target, const Mlp& online, TargetMode mode, double tau) {
  check_same_shape(target, online, "update_target");
  if (mode == TargetMode::hard) {
    target = online;
    return;
  }
  if (!(tau >= 0.0 && tau <= 1.0)) throw ContractError("update_target: tau must lie in [0, 1]");
  for (std::size_t k = 0; k < target.layers().size(); ++k) {
    auto& t = target.layers()[k];
    const auto& o = online.layers()[k];
    t.weight = tau * o.weight + (1.0 - tau) * t.weight;
    t.bias = tau * o.bias + (1.0 - tau) * t.bias;
  }
}

LossResult mse_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target) {
  if (prediction.rows() != target.rows() || prediction.cols() != target.cols())
    throw ContractError("mse_loss: shape mismatch");
  const double n = static_cast<double>(prediction.size());
  const Eigen::MatrixXd diff = prediction - target;
  return LossResult{diff.squaredNorm() / n, (2.0 / n) * diff};
}

LossResult rmse_loss(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& target) {
  LossResult mse = mse_loss(prediction, target);
  const double root = std::sqrt(mse.value);
  if (root == 0.0) return LossResult{0.0, Eigen::MatrixXd::Zero(prediction.rows(), prediction.cols())};
  // d sqrt(m) = dm / (2 sqrt(m))
  return LossResult{root, mse.gradient / (2.0 * root)};
}

}  // namespace dcmt::nn
