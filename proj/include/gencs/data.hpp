#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gencs/model.hpp"
#include "gencs/numerics.hpp"

namespace gencs {

/// Uniform-dimension collection of signals in [0,1]^n.
struct SignalSet {
  std::size_t n = 0;
  std::vector<Vector> signals;
  std::optional<std::vector<int>> labels;
  std::string source;

  std::size_t size() const noexcept { return signals.size(); }
  bool empty() const noexcept { return signals.empty(); }

  /// Throws ParameterError on mismatched dimensions or values outside [0,1].
  void validate() const;
  /// First `count` signals (all if count exceeds size).
  SignalSet head(std::size_t count) const;
  /// Signals [begin, begin + count).
  SignalSet slice(std::size_t begin, std::size_t count) const;
};

/// Reads IDX image (magic 0x00000803) and optional label (0x00000801) files;
/// bytes are scaled by 1/255 and images flattened row-major.
SignalSet load_mnist_idx(const std::filesystem::path& images,
                         const std::optional<std::filesystem::path>& labels = std::nullopt);

/// Writes the IDX image layout; pixel values are rounded to bytes.
void save_mnist_idx(const SignalSet& set, std::size_t rows, std::size_t cols,
                    const std::filesystem::path& images,
                    const std::optional<std::filesystem::path>& labels = std::nullopt);

// Generic signal file: "GENCS-SIG", u32 count, u32 n, little-endian f64.
void save_signal_file(const SignalSet& set, const std::filesystem::path& path);
SignalSet load_signal_file(const std::filesystem::path& path);

/// Range of a random sigmoid decoder, i.e. a signal family with δ = 0.
class SyntheticManifold {
 public:
  SyntheticManifold(Mlp decoder, std::uint64_t seed);

  const Mlp& decoder() const noexcept { return decoder_; }
  std::size_t k() const noexcept { return decoder_.input_dim(); }
  std::size_t n() const noexcept { return decoder_.output_dim(); }
  std::uint64_t seed() const noexcept { return seed_; }

  Vector sample(const Vector& u) const;
  /// Draws u uniform on [0,1]^k and returns (u, g(u)).
  std::pair<Vector, Vector> sample_uniform(Rng& rng) const;
  SignalSet sample_set(std::size_t count, Rng& rng) const;

 private:
  Mlp decoder_;
  std::uint64_t seed_;
};

/// Random k -> hidden -> n decoder, sigmoid on both layers, Glorot init.
/// `gain` scales every weight; at 1 the samples stay close to a constant
/// image, larger values spread them over (0,1)^n.
SyntheticManifold make_synthetic(std::size_t k, std::size_t n, std::size_t hidden, std::uint64_t seed,
                                 double gain = 1.0);

/// Seeded permutation split into (train, test) with round(frac * size) train items.
std::pair<SignalSet, SignalSet> split(const SignalSet& set, double train_frac, std::uint64_t seed);

}  // namespace gencs
