#include "gencs/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gencs/data.hpp"

namespace gencs {

namespace {

double sigmoid(double z) noexcept { return 1.0 / (1.0 + std::exp(-z)); }

template <typename Derived>
void activate_inplace(Eigen::MatrixBase<Derived>& z, Activation a) {
  switch (a) {
    case Activation::sigmoid: z = z.unaryExpr([](double v) { return sigmoid(v); }); break;
    case Activation::relu: z = z.cwiseMax(0.0); break;
    case Activation::identity: break;
  }
}

// Derivative expressed through the activation output (and pre-activation
// for relu), multiplied into `grad` in place.
template <typename G, typename A, typename Z>
void scale_by_derivative(Eigen::MatrixBase<G>& grad, const Eigen::MatrixBase<A>& act,
                         const Eigen::MatrixBase<Z>& pre, Activation a) {
  switch (a) {
    case Activation::sigmoid:
      grad = grad.cwiseProduct(act.cwiseProduct((1.0 - act.array()).matrix()));
      break;
    case Activation::relu:
      grad = grad.cwiseProduct(pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; }));
      break;
    case Activation::identity: break;
  }
}

void check_layer(const Layer& layer, std::size_t index) {
  const auto& s = layer.spec;
  const std::string where = "layer " + std::to_string(index);
  if (s.in_dim == 0 || s.out_dim == 0) throw ParameterError(where + ": dims must be >= 1");
  if (static_cast<std::size_t>(layer.weight.rows()) != s.out_dim ||
      static_cast<std::size_t>(layer.weight.cols()) != s.in_dim) {
    throw ShapeError(where + ": weight shape does not match spec");
  }
  if (static_cast<std::size_t>(layer.bias.size()) != s.out_dim) {
    throw ShapeError(where + ": bias length does not match spec");
  }
  if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
    throw ParameterError(where + ": non-finite parameter");
  }
}

// Activations for a batch pass through a list of layers; acts[0] is the input.
struct Tape {
  std::vector<Eigen::MatrixXd> pre;
  std::vector<Eigen::MatrixXd> acts;
};

void forward_tape(const std::vector<const Layer*>& layers, const Eigen::MatrixXd& x, Tape& tape) {
  tape.pre.resize(layers.size());
  tape.acts.resize(layers.size() + 1);
  tape.acts[0] = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = *layers[l];
    tape.pre[l].noalias() = layer.weight * tape.acts[l];
    tape.pre[l].colwise() += layer.bias;
    tape.acts[l + 1] = tape.pre[l];
    activate_inplace(tape.acts[l + 1], layer.spec.activation);
  }
}

// Backpropagates `grad` (d loss / d output) and fills per-layer gradients.
// Layers with `skip[l]` set still propagate but their gradients are left empty.
Eigen::MatrixXd backward_tape(const std::vector<const Layer*>& layers, const Tape& tape, Eigen::MatrixXd grad,
                              std::vector<LayerGradient>& out, const std::vector<bool>& skip) {
  out.resize(layers.size());
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Layer& layer = *layers[l];
    scale_by_derivative(grad, tape.acts[l + 1], tape.pre[l], layer.spec.activation);
    if (!skip[l]) {
      out[l].weight.noalias() = grad * tape.acts[l].transpose();
      out[l].bias = grad.rowwise().sum();
    }
    Eigen::MatrixXd next = layer.weight.transpose() * grad;
    grad = std::move(next);
  }
  return grad;
}

std::vector<const Layer*> layer_refs(const Mlp& mlp) {
  std::vector<const Layer*> refs;
  for (const auto& l : mlp.layers()) refs.push_back(&l);
  return refs;
}

std::vector<LayerSpec> chain_specs(const std::vector<std::size_t>& dims, Activation hidden, Activation last) {
  std::vector<LayerSpec> specs;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    specs.push_back({dims[i], dims[i + 1], i + 2 == dims.size() ? last : hidden});
  }
  return specs;
}

Eigen::MatrixXd stack_columns(const SignalSet& data, const std::vector<std::size_t>& index, std::size_t begin,
                              std::size_t end) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.n), static_cast<Eigen::Index>(end - begin));
  for (std::size_t j = begin; j < end; ++j) x.col(static_cast<Eigen::Index>(j - begin)) = data.signals[index[j]];
  return x;
}

struct AdamSlot {
  Matrix m_w, v_w;
  Vector m_b, v_b;
};

}  // namespace

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "relu") return Activation::relu;
  if (name == "identity") return Activation::identity;
  throw ParameterError("unknown activation '" + std::string(name) + "'");
}

double activation_lipschitz(Activation a) noexcept {
  return a == Activation::sigmoid ? 0.25 : 1.0;
}

Mlp::Mlp(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ParameterError("Mlp: at least one layer required");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    check_layer(layers_[i], i);
    if (i > 0 && layers_[i].spec.in_dim != layers_[i - 1].spec.out_dim) {
      throw ShapeError("Mlp: layer " + std::to_string(i) + " input does not chain with previous output");
    }
  }
}

Mlp Mlp::glorot(const std::vector<LayerSpec>& specs, Rng& rng) {
  std::vector<Layer> layers;
  for (const auto& s : specs) {
    const double limit = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
    Layer layer{s, Matrix(static_cast<Eigen::Index>(s.out_dim), static_cast<Eigen::Index>(s.in_dim)),
                Vector::Zero(static_cast<Eigen::Index>(s.out_dim))};
    double* w = layer.weight.data();
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) w[i] = (2.0 * rng.uniform() - 1.0) * limit;
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

Mlp Mlp::zeros(const std::vector<LayerSpec>& specs) {
  std::vector<Layer> layers;
  for (const auto& s : specs) {
    layers.push_back({s, Matrix::Zero(static_cast<Eigen::Index>(s.out_dim), static_cast<Eigen::Index>(s.in_dim)),
                      Vector::Zero(static_cast<Eigen::Index>(s.out_dim))});
  }
  return Mlp(std::move(layers));
}

std::size_t Mlp::input_dim() const noexcept { return layers_.empty() ? 0 : layers_.front().spec.in_dim; }
std::size_t Mlp::output_dim() const noexcept { return layers_.empty() ? 0 : layers_.back().spec.out_dim; }

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t total = 0;
  for (const auto& l : layers_) total += l.spec.out_dim * (l.spec.in_dim + 1);
  return total;
}

std::vector<LayerSpec> Mlp::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back(l.spec);
  return out;
}

Vector Mlp::forward(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != input_dim()) {
    throw ShapeError("forward: input length " + std::to_string(x.size()) + " but network expects " +
                     std::to_string(input_dim()));
  }
  Vector a = x;
  for (const auto& layer : layers_) {
    Vector z = layer.weight * a + layer.bias;
    activate_inplace(z, layer.spec.activation);
    a = std::move(z);
  }
  return a;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != input_dim()) throw ShapeError("forward_batch: input dimension mismatch");
  Eigen::MatrixXd a = x;
  for (const auto& layer : layers_) {
    Eigen::MatrixXd z = layer.weight * a;
    z.colwise() += layer.bias;
    activate_inplace(z, layer.spec.activation);
    a = std::move(z);
  }
  return a;
}

Vector forward(const Mlp& mlp, const Vector& x) { return mlp.forward(x); }

BackwardResult backward(const Mlp& mlp, const Vector& x, const Vector& grad_out) {
  if (static_cast<std::size_t>(x.size()) != mlp.input_dim()) throw ShapeError("backward: input dimension mismatch");
  if (static_cast<std::size_t>(grad_out.size()) != mlp.output_dim()) {
    throw ShapeError("backward: grad_out dimension mismatch");
  }
  const auto refs = layer_refs(mlp);
  Tape tape;
  forward_tape(refs, x, tape);
  BackwardResult result;
  const Eigen::MatrixXd grad_in =
      backward_tape(refs, tape, Eigen::MatrixXd(grad_out), result.params, std::vector<bool>(refs.size(), false));
  result.grad_in = grad_in.col(0);
  return result;
}

Autoencoder::Autoencoder(Mlp encoder, Mlp decoder) : encoder_(std::move(encoder)), decoder_(std::move(decoder)) {
  if (encoder_.output_dim() != decoder_.input_dim()) {
    throw ShapeError("Autoencoder: encoder output dim " + std::to_string(encoder_.output_dim()) +
                     " != decoder input dim " + std::to_string(decoder_.input_dim()));
  }
  if (decoder_.output_dim() != encoder_.input_dim()) {
    throw ShapeError("Autoencoder: decoder output dim must equal encoder input dim");
  }
  if (encoder_.layers().back().spec.activation != Activation::sigmoid) {
    throw ParameterError("Autoencoder: encoder must end in a sigmoid so latents lie in [0,1]");
  }
}

Autoencoder Autoencoder::make(std::size_t n, const std::vector<std::size_t>& hidden, std::size_t k,
                              Activation hidden_activation, Rng& rng) {
  if (n == 0 || k == 0) throw ParameterError("Autoencoder::make: n and k must be >= 1");
  std::vector<std::size_t> enc_dims{n};
  enc_dims.insert(enc_dims.end(), hidden.begin(), hidden.end());
  enc_dims.push_back(k);
  std::vector<std::size_t> dec_dims(enc_dims.rbegin(), enc_dims.rend());
  Mlp encoder = Mlp::glorot(chain_specs(enc_dims, hidden_activation, Activation::sigmoid), rng);
  Mlp decoder = Mlp::glorot(chain_specs(dec_dims, hidden_activation, Activation::sigmoid), rng);
  return Autoencoder(std::move(encoder), std::move(decoder));
}

Vector Autoencoder::encode(const Vector& x) const { return encoder_.forward(x); }
Vector Autoencoder::decode(const Vector& u) const { return decoder_.forward(u); }
Vector Autoencoder::project(const Vector& x) const { return decoder_.forward(encoder_.forward(x)); }

Vector encode(const Autoencoder& ae, const Vector& x) { return ae.encode(x); }
Vector decode(const Autoencoder& ae, const Vector& u) { return ae.decode(u); }

void TrainConfig::validate() const {
  if (epochs == 0) throw ParameterError("TrainConfig: epochs must be >= 1");
  if (batch_size == 0) throw ParameterError("TrainConfig: batch_size must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ParameterError("TrainConfig: learning_rate must be positive and finite");
  }
  if (!(input_noise >= 0.0) || !std::isfinite(input_noise)) {
    throw ParameterError("TrainConfig: input_noise must be finite and >= 0");
  }
}

double reconstruction_loss(const Autoencoder& ae, const SignalSet& data) {
  if (data.empty()) throw ParameterError("reconstruction_loss: empty dataset");
  if (data.n != ae.n()) throw ShapeError("reconstruction_loss: data dimension does not match model");
  std::vector<std::size_t> index(data.size());
  std::iota(index.begin(), index.end(), 0);
  constexpr std::size_t kChunk = 512;
  double total = 0.0;
  for (std::size_t begin = 0; begin < data.size(); begin += kChunk) {
    const std::size_t end = std::min(data.size(), begin + kChunk);
    const Eigen::MatrixXd x = stack_columns(data, index, begin, end);
    const Eigen::MatrixXd r = ae.decoder().forward_batch(ae.encoder().forward_batch(x));
    total += (r - x).squaredNorm();
  }
  return total / static_cast<double>(data.size() * data.n);
}

TrainResult train(const Autoencoder& ae, const SignalSet& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw ParameterError("train: empty dataset");
  if (data.n != ae.n()) throw ShapeError("train: data dimension does not match model");

  TrainResult result;
  result.model = ae;
  result.initial_loss = reconstruction_loss(ae, data);

  Mlp& enc = result.model.mutable_encoder();
  Mlp& dec = result.model.mutable_decoder();
  std::vector<Layer*> params;
  std::vector<const Layer*> chain;
  std::vector<bool> frozen;
  for (auto& l : enc.mutable_layers()) {
    params.push_back(&l);
    chain.push_back(&l);
    frozen.push_back(false);
  }
  for (auto& l : dec.mutable_layers()) {
    params.push_back(&l);
    chain.push_back(&l);
    frozen.push_back(cfg.freeze_decoder);
  }

  std::vector<AdamSlot> adam(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam[i].m_w = Matrix::Zero(params[i]->weight.rows(), params[i]->weight.cols());
    adam[i].v_w = adam[i].m_w;
    adam[i].m_b = Vector::Zero(params[i]->bias.size());
    adam[i].v_b = adam[i].m_b;
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::uint64_t step = 0;

  Rng rng(cfg.seed, 0x7A41);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Tape tape;
  std::vector<LayerGradient> grads;
  const double n = static_cast<double>(data.n);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      const Eigen::MatrixXd target = stack_columns(data, order, begin, end);
      Eigen::MatrixXd input = target;
      if (cfg.input_noise > 0.0) {
        for (Eigen::Index j = 0; j < input.size(); ++j) input.data()[j] += cfg.input_noise * rng.normal();
      }
      forward_tape(chain, input, tape);
      const double batch = static_cast<double>(end - begin);
      Eigen::MatrixXd grad = (tape.acts.back() - target) * (2.0 / (n * batch));
      backward_tape(chain, tape, std::move(grad), grads, frozen);

      ++step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (frozen[i]) continue;
        Layer& layer = *params[i];
        if (cfg.optimizer == Optimizer::sgd) {
          layer.weight -= cfg.learning_rate * grads[i].weight;
          layer.bias -= cfg.learning_rate * grads[i].bias;
          continue;
        }
        AdamSlot& s = adam[i];
        s.m_w = beta1 * s.m_w + (1.0 - beta1) * grads[i].weight;
        s.v_w = beta2 * s.v_w + (1.0 - beta2) * grads[i].weight.cwiseAbs2();
        s.m_b = beta1 * s.m_b + (1.0 - beta1) * grads[i].bias;
        s.v_b = beta2 * s.v_b + (1.0 - beta2) * grads[i].bias.cwiseAbs2();
        layer.weight.array() -=
            cfg.learning_rate * (s.m_w.array() / bc1) / ((s.v_w.array() / bc2).sqrt() + eps);
        layer.bias.array() -= cfg.learning_rate * (s.m_b.array() / bc1) / ((s.v_b.array() / bc2).sqrt() + eps);
      }
    }
    result.loss_history.push_back(reconstruction_loss(result.model, data));
  }
  return result;
}

double lipschitz_upper_bound(const Mlp& mlp) {
  double bound = 1.0;
  Rng rng(0x4C495053ULL);
  for (const auto& layer : mlp.layers()) {
    bound *= operator_norm(layer.weight, 5000, rng, 1e-12) * activation_lipschitz(layer.spec.activation);
  }
  return bound;
}

namespace {

// Projected descent on ‖g(u) - x‖² over [0,1]^k with step halving; never
// returns a worse point than it started from.
Vector refine_latent(const Mlp& decoder, const Vector& x, Vector u, std::size_t steps) {
  Vector gx = decoder.forward(u);
  double best = (gx - x).squaredNorm();
  double lr = 1.0;
  for (std::size_t s = 0; s < steps; ++s) {
    const Vector grad = backward(decoder, u, 2.0 * (gx - x)).grad_in;
    bool improved = false;
    for (int halving = 0; halving < 40; ++halving) {
      Vector cand = clip_unit(u - lr * grad);
      Vector gc = decoder.forward(cand);
      const double val = (gc - x).squaredNorm();
      if (val < best) {
        u = std::move(cand);
        gx = std::move(gc);
        best = val;
        improved = true;
        lr *= 2.0;
        break;
      }
      lr *= 0.5;
    }
    if (!improved) break;
  }
  return u;
}

}  // namespace

double representation_error(const Autoencoder& ae, const SignalSet& data, const RepresentationErrorOptions& opts) {
  if (data.empty()) throw ParameterError("representation_error: empty dataset");
  if (data.n != ae.n()) throw ShapeError("representation_error: data dimension does not match model");
  const double root_n = std::sqrt(static_cast<double>(data.n));
  double worst = 0.0;
  for (const auto& x : data.signals) {
    Vector u = ae.encode(x);
    if (opts.refine_steps > 0) u = refine_latent(ae.decoder(), x, std::move(u), opts.refine_steps);
    worst = std::max(worst, (ae.decode(u) - x).norm() / root_n);
  }
  return worst;
}

}  // namespace gencs
