#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gencs/numerics.hpp"

namespace gencs {

struct SignalSet;

enum class Activation { sigmoid, relu, identity };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);
/// Euclidean Lipschitz constant of the pointwise activation.
double activation_lipschitz(Activation a) noexcept;

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::sigmoid;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct Layer {
  LayerSpec spec;
  Matrix weight;  // out_dim x in_dim
  Vector bias;    // out_dim
};

/// Gradient of a scalar loss with respect to one layer's parameters.
struct LayerGradient {
  Matrix weight;
  Vector bias;
};

struct BackwardResult {
  std::vector<LayerGradient> params;
  Vector grad_in;
};

/// Fully-connected network: a chain of affine maps each followed by a
/// pointwise activation.
class Mlp {
 public:
  Mlp() = default;
  /// Takes ownership of the layers and validates that their shapes chain.
  explicit Mlp(std::vector<Layer> layers);

  /// Glorot-uniform weights, zero biases.
  static Mlp glorot(const std::vector<LayerSpec>& specs, Rng& rng);
  /// All weights and biases zero.
  static Mlp zeros(const std::vector<LayerSpec>& specs);

  std::size_t input_dim() const noexcept;
  std::size_t output_dim() const noexcept;
  std::size_t depth() const noexcept { return layers_.size(); }
  std::size_t parameter_count() const noexcept;

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& mutable_layers() noexcept { return layers_; }
  std::vector<LayerSpec> specs() const;

  Vector forward(const Vector& x) const;
  /// Forward on a batch stored one sample per column.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;

 private:
  std::vector<Layer> layers_;
};

Vector forward(const Mlp& mlp, const Vector& x);
/// Reverse-mode gradients of ⟨grad_out, mlp(x)⟩.
BackwardResult backward(const Mlp& mlp, const Vector& x, const Vector& grad_out);

/// Encoder n -> k and decoder k -> n, both ending in a sigmoid so that
/// latents live in [0,1]^k and reconstructions in [0,1]^n.
class Autoencoder {
 public:
  Autoencoder() = default;
  Autoencoder(Mlp encoder, Mlp decoder);

  /// Symmetric architecture n -> hidden... -> k -> reversed hidden... -> n.
  static Autoencoder make(std::size_t n, const std::vector<std::size_t>& hidden, std::size_t k,
                          Activation hidden_activation, Rng& rng);

  std::size_t n() const noexcept { return encoder_.input_dim(); }
  std::size_t k() const noexcept { return encoder_.output_dim(); }

  const Mlp& encoder() const noexcept { return encoder_; }
  const Mlp& decoder() const noexcept { return decoder_; }
  Mlp& mutable_encoder() noexcept { return encoder_; }
  Mlp& mutable_decoder() noexcept { return decoder_; }

  Vector encode(const Vector& x) const;
  Vector decode(const Vector& u) const;
  /// decode(encode(x)).
  Vector project(const Vector& x) const;

 private:
  Mlp encoder_;
  Mlp decoder_;
};

Vector encode(const Autoencoder& ae, const Vector& x);
Vector decode(const Autoencoder& ae, const Vector& u);

enum class Optimizer { sgd, adam };

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  std::uint64_t seed = 0;
  /// Std of Gaussian noise added to encoder inputs (denoising objective);
  /// the target stays the clean signal. Zero disables it.
  double input_noise = 0.0;
  /// Train the encoder only, keeping a known decoder fixed.
  bool freeze_decoder = false;

  void validate() const;
};

struct TrainResult {
  Autoencoder model;
  /// Mean ‖g(f(x)) - x‖²/n over the whole set before any update.
  double initial_loss = 0.0;
  /// Same quantity after each epoch.
  std::vector<double> loss_history;
};

/// Minibatch training of the reconstruction loss mean ‖g(f(x)) - x‖²/n.
TrainResult train(const Autoencoder& ae, const SignalSet& data, const TrainConfig& cfg);

/// Mean reconstruction loss ‖g(f(x)) - x‖²/n over the set.
double reconstruction_loss(const Autoencoder& ae, const SignalSet& data);

/// Product over layers of ‖W‖₂ times the activation's Lipschitz constant.
double lipschitz_upper_bound(const Mlp& mlp);

struct RepresentationErrorOptions {
  /// Latent gradient steps that refine the encoder's guess for each sample.
  std::size_t refine_steps = 0;
};

/// max over the set of (1/√n)‖g(u_x) - x‖ with u_x = f(x), optionally
/// refined by projected latent descent. Never below the true covering
/// distortion restricted to the set.
double representation_error(const Autoencoder& ae, const SignalSet& data,
                            const RepresentationErrorOptions& opts = {});

// Weight files: "GENCS-AE\0", u32 version, u32 header length, JSON header,
// then little-endian f64 payload (per layer: row-major weight, then bias;
// encoder layers before decoder layers).
inline constexpr std::uint32_t kWeightFileVersion = 1;

void save_weights(const Autoencoder& ae, const std::filesystem::path& path);
Autoencoder load_weights(const std::filesystem::path& path);
/// FNV-1a 64 of the file bytes, as 16 hex digits.
std::string file_checksum(const std::filesystem::path& path);

}  // namespace gencs
