#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spectralab/linalg.hpp"
#include "spectralab/rng.hpp"

namespace spectralab {

enum class Activation : std::uint8_t { tanh = 0, relu = 1, leaky_relu = 2, sigmoid = 3, linear = 4 };

constexpr double kLeakySlope = 0.2;

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

/// One fully connected layer: y = act(W·x + b), W stored out × in.
struct Layer {
  Matrix weight;
  Vector bias;
  Activation activation = Activation::linear;

  bool operator==(const Layer&) const = default;
};

struct ParamView {
  std::string name;
  std::span<double> values;
};

struct ConstParamView {
  std::string name;
  std::span<const double> values;
};

class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialized network; `activations.size() + 1 == dims.size()`.
  Mlp(std::vector<std::size_t> dims, std::vector<Activation> activations);

  /// Weights ~ N(0, stddev²), biases 0.
  static Mlp random_normal(std::vector<std::size_t> dims, std::vector<Activation> activations, double stddev,
                           Rng& rng);
  /// Single linear layer with the given weight and zero bias.
  static Mlp linear_map(const Matrix& weight);

  std::size_t input_dim() const { return layers_.front().weight.cols(); }
  std::size_t output_dim() const { return layers_.back().weight.rows(); }
  std::size_t num_layers() const { return layers_.size(); }
  std::vector<std::size_t> layer_dims() const;
  std::vector<Activation> activations() const;

  const Layer& layer(std::size_t i) const { return layers_[i]; }
  Layer& layer(std::size_t i) { return layers_[i]; }
  const std::vector<Layer>& layers() const { return layers_; }

  /// Weights before biases, layer by layer; names are "layer<k>.weight" / "layer<k>.bias".
  std::vector<ParamView> parameters();
  std::vector<ConstParamView> parameters() const;
  std::size_t parameter_count() const;

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<Layer> layers_;
};

struct Gradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;

  static Gradients zeros_like(const Mlp& net);
  std::vector<ConstParamView> views() const;
  Gradients& operator+=(const Gradients& other);
  Gradients& operator*=(double s);
};

/// Activations retained for reverse mode. `pre[k]` and `post[k]` are B × dims[k+1].
struct ForwardCache {
  Matrix input;
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
  const Matrix& output() const { return post.back(); }
};

Matrix forward(const Mlp& net, const Matrix& batch);
Vector forward(const Mlp& net, std::span<const double> input);
ForwardCache forward_cached(const Mlp& net, const Matrix& batch);
/// Output of the first `num_layers` layers (post-activation).
Matrix forward_prefix(const Mlp& net, const Matrix& batch, std::size_t num_layers);

struct BackwardResult {
  Gradients params;
  Matrix input_grad;
};

/// Reverse mode: `upstream` is dLoss/dOutput with the shape of the output batch.
BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& upstream);
Gradients param_gradients(const Mlp& net, const Matrix& batch, const Matrix& upstream);

/// Forward-mode product J_z·v.
Vector jvp(const Mlp& net, std::span<const double> z, std::span<const double> v);
/// n_out × n_in Jacobian assembled from one forward pass carrying n_in tangents.
Matrix jacobian(const Mlp& net, std::span<const double> z);

struct AdamConfig {
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Vector> first_moment;
  std::vector<Vector> second_moment;
  std::uint64_t step_count = 0;

  static AdamState for_sizes(std::span<const std::size_t> sizes, AdamConfig config = {});
  static AdamState for_network(const Mlp& net, AdamConfig config = {});
};

/// Bias-corrected Adam. Validates every gradient before updating anything.
void adam_step(std::span<const ParamView> params, std::span<const ConstParamView> grads, AdamState& state);
void adam_step(Mlp& net, const Gradients& grads, AdamState& state);

}  // namespace spectralab
