#include "spectralab/nn.hpp"

#include <cmath>
#include <string>

#include "spectralab/error.hpp"

namespace spectralab {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::leaky_relu: return "leaky_relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::linear: return "linear";
  }
  return "unknown";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  if (name == "leaky_relu") return Activation::leaky_relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "linear") return Activation::linear;
  throw DomainError("unknown activation '" + std::string(name) + "'");
}

namespace {

inline double activate(Activation act, double a) {
  switch (act) {
    case Activation::tanh: return std::tanh(a);
    case Activation::relu: return a > 0.0 ? a : 0.0;
    case Activation::leaky_relu: return a > 0.0 ? a : kLeakySlope * a;
    case Activation::sigmoid: return a >= 0.0 ? 1.0 / (1.0 + std::exp(-a)) : std::exp(a) / (1.0 + std::exp(a));
    case Activation::linear: return a;
  }
  return a;
}

// Derivative in terms of pre-activation `a` and output `h`. Kinks take the
// left-hand slope (relu'(0) = 0).
inline double activate_derivative(Activation act, double a, double h) {
  switch (act) {
    case Activation::tanh: return 1.0 - h * h;
    case Activation::relu: return a > 0.0 ? 1.0 : 0.0;
    case Activation::leaky_relu: return a > 0.0 ? 1.0 : kLeakySlope;
    case Activation::sigmoid: return h * (1.0 - h);
    case Activation::linear: return 1.0;
  }
  return 1.0;
}

// out(b, o) = Σ_i in(b, i)·W(o, i) + bias(o), via row axpys on Wᵀ.
Matrix affine(const Layer& layer, const Matrix& in) {
  const std::size_t n_out = layer.weight.rows();
  const std::size_t n_in = layer.weight.cols();
  const Matrix wt = layer.weight.transpose();
  Matrix out(in.rows(), n_out);
  for (std::size_t b = 0; b < in.rows(); ++b) {
    auto out_row = out.row(b);
    std::copy(layer.bias.begin(), layer.bias.end(), out_row.begin());
    auto in_row = in.row(b);
    for (std::size_t i = 0; i < n_in; ++i) {
      const double x = in_row[i];
      if (x == 0.0) continue;
      auto w_row = wt.row(i);
      for (std::size_t o = 0; o < n_out; ++o) out_row[o] += x * w_row[o];
    }
  }
  return out;
}

// Tangent propagation without bias.
Matrix linear_part(const Matrix& weight, const Matrix& in) {
  Layer tmp{weight, Vector(weight.rows(), 0.0), Activation::linear};
  return affine(tmp, in);
}

void check_input(const Mlp& net, std::size_t width) {
  if (net.num_layers() == 0) throw DimensionError("network has no layers");
  if (width != net.input_dim())
    throw DimensionError("input width " + std::to_string(width) + " does not match network input " +
                         std::to_string(net.input_dim()));
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> dims, std::vector<Activation> activations) {
  if (dims.size() < 2 || activations.size() + 1 != dims.size())
    throw DimensionError("Mlp needs L+1 layer widths and L activations");
  for (std::size_t d : dims)
    if (d == 0) throw DimensionError("Mlp layer width must be positive");
  layers_.reserve(activations.size());
  for (std::size_t k = 0; k < activations.size(); ++k)
    layers_.push_back(Layer{Matrix(dims[k + 1], dims[k]), Vector(dims[k + 1], 0.0), activations[k]});
}

Mlp Mlp::random_normal(std::vector<std::size_t> dims, std::vector<Activation> activations, double stddev,
                       Rng& rng) {
  Mlp net(std::move(dims), std::move(activations));
  for (Layer& layer : net.layers_)
    for (double& w : layer.weight.values()) w = stddev * rng.normal();
  return net;
}

Mlp Mlp::linear_map(const Matrix& weight) {
  Mlp net({weight.cols(), weight.rows()}, {Activation::linear});
  net.layers_[0].weight = weight;
  return net;
}

std::vector<std::size_t> Mlp::layer_dims() const {
  std::vector<std::size_t> dims;
  if (layers_.empty()) return dims;
  dims.push_back(layers_.front().weight.cols());
  for (const Layer& l : layers_) dims.push_back(l.weight.rows());
  return dims;
}

std::vector<Activation> Mlp::activations() const {
  std::vector<Activation> acts;
  for (const Layer& l : layers_) acts.push_back(l.activation);
  return acts;
}

std::vector<ParamView> Mlp::parameters() {
  std::vector<ParamView> views;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    views.push_back({"layer" + std::to_string(k) + ".weight", layers_[k].weight.values()});
    views.push_back({"layer" + std::to_string(k) + ".bias", layers_[k].bias});
  }
  return views;
}

std::vector<ConstParamView> Mlp::parameters() const {
  std::vector<ConstParamView> views;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    views.push_back({"layer" + std::to_string(k) + ".weight", layers_[k].weight.values()});
    views.push_back({"layer" + std::to_string(k) + ".bias", layers_[k].bias});
  }
  return views;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.weight.size() + l.bias.size();
  return n;
}

Gradients Gradients::zeros_like(const Mlp& net) {
  Gradients g;
  for (const Layer& l : net.layers()) {
    g.weight.emplace_back(l.weight.rows(), l.weight.cols());
    g.bias.emplace_back(l.bias.size(), 0.0);
  }
  return g;
}

std::vector<ConstParamView> Gradients::views() const {
  std::vector<ConstParamView> views;
  for (std::size_t k = 0; k < weight.size(); ++k) {
    views.push_back({"layer" + std::to_string(k) + ".weight", weight[k].values()});
    views.push_back({"layer" + std::to_string(k) + ".bias", bias[k]});
  }
  return views;
}

Gradients& Gradients::operator+=(const Gradients& other) {
  if (weight.size() != other.weight.size()) throw DimensionError("gradient layer count mismatch");
  for (std::size_t k = 0; k < weight.size(); ++k) {
    weight[k] += other.weight[k];
    if (bias[k].size() != other.bias[k].size()) throw DimensionError("gradient bias shape mismatch");
    for (std::size_t i = 0; i < bias[k].size(); ++i) bias[k][i] += other.bias[k][i];
  }
  return *this;
}

Gradients& Gradients::operator*=(double s) {
  for (auto& w : weight) w *= s;
  for (auto& b : bias)
    for (double& x : b) x *= s;
  return *this;
}

ForwardCache forward_cached(const Mlp& net, const Matrix& batch) {
  check_input(net, batch.cols());
  ForwardCache cache;
  cache.input = batch;
  cache.pre.reserve(net.num_layers());
  cache.post.reserve(net.num_layers());
  const Matrix* current = &cache.input;
  for (const Layer& layer : net.layers()) {
    Matrix a = affine(layer, *current);
    Matrix h(a.rows(), a.cols());
    auto av = a.values();
    auto hv = h.values();
    for (std::size_t i = 0; i < av.size(); ++i) hv[i] = activate(layer.activation, av[i]);
    cache.pre.push_back(std::move(a));
    cache.post.push_back(std::move(h));
    current = &cache.post.back();
  }
  return cache;
}

Matrix forward_prefix(const Mlp& net, const Matrix& batch, std::size_t num_layers) {
  check_input(net, batch.cols());
  if (num_layers > net.num_layers()) throw DimensionError("forward_prefix beyond network depth");
  Matrix current = batch;
  for (std::size_t k = 0; k < num_layers; ++k) {
    const Layer& layer = net.layer(k);
    Matrix a = affine(layer, current);
    for (double& x : a.values()) x = activate(layer.activation, x);
    current = std::move(a);
  }
  return current;
}

Matrix forward(const Mlp& net, const Matrix& batch) { return forward_prefix(net, batch, net.num_layers()); }

Vector forward(const Mlp& net, std::span<const double> input) {
  Matrix batch(1, input.size());
  std::copy(input.begin(), input.end(), batch.values().begin());
  Matrix out = forward(net, batch);
  return Vector(out.values().begin(), out.values().end());
}

BackwardResult backward(const Mlp& net, const ForwardCache& cache, const Matrix& upstream) {
  if (cache.post.size() != net.num_layers()) throw DimensionError("forward cache does not match network depth");
  const Matrix& out = cache.output();
  if (upstream.rows() != out.rows() || upstream.cols() != out.cols())
    throw DimensionError("upstream gradient shape " + std::to_string(upstream.rows()) + "x" +
                         std::to_string(upstream.cols()) + " does not match output " + std::to_string(out.rows()) +
                         "x" + std::to_string(out.cols()));
  BackwardResult result{Gradients::zeros_like(net), Matrix()};
  Matrix grad = upstream;
  for (std::size_t k = net.num_layers(); k-- > 0;) {
    const Layer& layer = net.layer(k);
    const Matrix& a = cache.pre[k];
    const Matrix& h = cache.post[k];
    // grad becomes dLoss/d(pre-activation).
    auto gv = grad.values();
    auto av = a.values();
    auto hv = h.values();
    for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= activate_derivative(layer.activation, av[i], hv[i]);

    const Matrix& in = k == 0 ? cache.input : cache.post[k - 1];
    Matrix& dw = result.params.weight[k];
    Vector& db = result.params.bias[k];
    const std::size_t n_out = layer.weight.rows();
    const std::size_t n_in = layer.weight.cols();
    Matrix grad_in(grad.rows(), n_in);
    for (std::size_t b = 0; b < grad.rows(); ++b) {
      auto g_row = grad.row(b);
      auto in_row = in.row(b);
      auto gi_row = grad_in.row(b);
      for (std::size_t o = 0; o < n_out; ++o) {
        const double g = g_row[o];
        if (g == 0.0) continue;
        db[o] += g;
        auto dw_row = dw.row(o);
        auto w_row = layer.weight.row(o);
        for (std::size_t i = 0; i < n_in; ++i) {
          dw_row[i] += g * in_row[i];
          gi_row[i] += g * w_row[i];
        }
      }
    }
    grad = std::move(grad_in);
  }
  result.input_grad = std::move(grad);
  return result;
}

Gradients param_gradients(const Mlp& net, const Matrix& batch, const Matrix& upstream) {
  return backward(net, forward_cached(net, batch), upstream).params;
}

namespace {

// Pushes the rows of `tangents` (k × n_in) through the network at point z and
// returns the k × n_out output tangents.
Matrix push_tangents(const Mlp& net, std::span<const double> z, Matrix tangents) {
  check_input(net, z.size());
  if (tangents.cols() != z.size()) throw DimensionError("tangent width does not match input");
  Matrix point(1, z.size());
  std::copy(z.begin(), z.end(), point.values().begin());
  for (const Layer& layer : net.layers()) {
    Matrix a = affine(layer, point);
    Matrix da = linear_part(layer.weight, tangents);
    for (std::size_t o = 0; o < a.cols(); ++o) {
      const double pre = a(0, o);
      const double post = activate(layer.activation, pre);
      const double slope = activate_derivative(layer.activation, pre, post);
      a(0, o) = post;
      for (std::size_t t = 0; t < da.rows(); ++t) da(t, o) *= slope;
    }
    point = std::move(a);
    tangents = std::move(da);
  }
  return tangents;
}

}  // namespace

Vector jvp(const Mlp& net, std::span<const double> z, std::span<const double> v) {
  if (v.size() != z.size()) throw DimensionError("jvp: tangent length does not match z");
  Matrix tangent(1, v.size());
  std::copy(v.begin(), v.end(), tangent.values().begin());
  Matrix out = push_tangents(net, z, std::move(tangent));
  return Vector(out.values().begin(), out.values().end());
}

Matrix jacobian(const Mlp& net, std::span<const double> z) {
  // Row j of the pushed identity is J·e_j, i.e. column j of J.
  return push_tangents(net, z, Matrix::identity(z.size())).transpose();
}

AdamState AdamState::for_sizes(std::span<const std::size_t> sizes, AdamConfig config) {
  AdamState state;
  state.config = config;
  for (std::size_t n : sizes) {
    state.first_moment.emplace_back(n, 0.0);
    state.second_moment.emplace_back(n, 0.0);
  }
  return state;
}

AdamState AdamState::for_network(const Mlp& net, AdamConfig config) {
  std::vector<std::size_t> sizes;
  for (const auto& p : net.parameters()) sizes.push_back(p.values.size());
  return for_sizes(sizes, config);
}

void adam_step(std::span<const ParamView> params, std::span<const ConstParamView> grads, AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size())
    throw DimensionError("adam_step: parameter, gradient and state counts differ");
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p].values.size() != grads[p].values.size() || params[p].values.size() != state.first_moment[p].size())
      throw DimensionError("adam_step: shape mismatch for parameter '" + params[p].name + "'");
    if (!all_finite(grads[p].values)) throw NonfiniteGradientError(params[p].name);
  }
  const AdamConfig& c = state.config;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto values = params[p].values;
    auto g = grads[p].values;
    Vector& m = state.first_moment[p];
    Vector& v = state.second_moment[p];
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      values[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

void adam_step(Mlp& net, const Gradients& grads, AdamState& state) {
  auto params = net.parameters();
  auto views = grads.views();
  adam_step(params, views, state);
}

}  // namespace spectralab
