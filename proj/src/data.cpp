#include "gencs/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>
#include <string>

#include "binary_io.hpp"

namespace gencs {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr char kSignalMagic[] = {'G', 'E', 'N', 'C', 'S', '-', 'S', 'I', 'G'};
// Guards against headers whose product of dims is absurd.
constexpr std::uint64_t kMaxIdxElements = std::uint64_t{1} << 34;

}  // namespace

void SignalSet::validate() const {
  for (std::size_t i = 0; i < signals.size(); ++i) {
    const auto& s = signals[i];
    if (static_cast<std::size_t>(s.size()) != n) {
      throw ParameterError("signal " + std::to_string(i) + " has length " + std::to_string(s.size()) +
                           ", expected " + std::to_string(n));
    }
    if (!s.allFinite() || s.minCoeff() < 0.0 || s.maxCoeff() > 1.0) {
      throw ParameterError("signal " + std::to_string(i) + " has values outside [0,1]");
    }
  }
  if (labels && labels->size() != signals.size()) throw ParameterError("label count does not match signal count");
}

SignalSet SignalSet::slice(std::size_t begin, std::size_t count) const {
  SignalSet out{n, {}, std::nullopt, source};
  const std::size_t end = std::min(signals.size(), begin + count);
  if (begin < end) out.signals.assign(signals.begin() + static_cast<std::ptrdiff_t>(begin),
                                      signals.begin() + static_cast<std::ptrdiff_t>(end));
  if (labels && begin < end) {
    out.labels = std::vector<int>(labels->begin() + static_cast<std::ptrdiff_t>(begin),
                                  labels->begin() + static_cast<std::ptrdiff_t>(end));
  }
  return out;
}

SignalSet SignalSet::head(std::size_t count) const { return slice(0, count); }

SignalSet load_mnist_idx(const std::filesystem::path& images, const std::optional<std::filesystem::path>& labels) {
  const auto bytes = detail::read_file(images);
  if (bytes.size() < 4) throw FormatError(FormatErrorKind::truncated, "IDX header cut short");
  const std::uint32_t magic = detail::get_u32_be(bytes.data());
  if (magic != kIdxImagesMagic) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%08x", magic);
    throw FormatError(FormatErrorKind::bad_magic, images.string() + ": expected 0x00000803, found " + buf);
  }
  if (bytes.size() < 16) throw FormatError(FormatErrorKind::truncated, "IDX header cut short");
  const std::uint64_t count = detail::get_u32_be(bytes.data() + 4);
  const std::uint64_t rows = detail::get_u32_be(bytes.data() + 8);
  const std::uint64_t cols = detail::get_u32_be(bytes.data() + 12);
  if (rows == 0 || cols == 0) throw FormatError(FormatErrorKind::malformed_header, "zero image dimension");
  const std::uint64_t pixels = rows * cols;
  if (pixels > kMaxIdxElements || (count > 0 && pixels * count / count != pixels) || pixels * count > kMaxIdxElements) {
    throw FormatError(FormatErrorKind::dim_overflow, "declared dims exceed supported size");
  }
  if (bytes.size() - 16 < pixels * count) {
    throw FormatError(FormatErrorKind::truncated, "payload holds " + std::to_string(bytes.size() - 16) + " of " +
                                                      std::to_string(pixels * count) + " bytes");
  }

  SignalSet set;
  set.n = static_cast<std::size_t>(pixels);
  set.source = "idx:" + images.filename().string();
  set.signals.reserve(count);
  const unsigned char* p = bytes.data() + 16;
  for (std::uint64_t i = 0; i < count; ++i) {
    Vector v(static_cast<Eigen::Index>(pixels));
    for (std::uint64_t j = 0; j < pixels; ++j) v[static_cast<Eigen::Index>(j)] = p[i * pixels + j] / 255.0;
    set.signals.push_back(std::move(v));
  }

  if (labels) {
    const auto lb = detail::read_file(*labels);
    if (lb.size() < 8) throw FormatError(FormatErrorKind::truncated, "IDX label header cut short");
    if (detail::get_u32_be(lb.data()) != kIdxLabelsMagic) {
      throw FormatError(FormatErrorKind::bad_magic, labels->string() + ": expected 0x00000801");
    }
    const std::uint64_t lcount = detail::get_u32_be(lb.data() + 4);
    if (lcount != count) throw FormatError(FormatErrorKind::dimension_mismatch, "label count differs from image count");
    if (lb.size() - 8 < lcount) throw FormatError(FormatErrorKind::truncated, "label payload cut short");
    set.labels = std::vector<int>(lb.begin() + 8, lb.begin() + 8 + static_cast<std::ptrdiff_t>(lcount));
  }
  return set;
}

void save_mnist_idx(const SignalSet& set, std::size_t rows, std::size_t cols, const std::filesystem::path& images,
                    const std::optional<std::filesystem::path>& labels) {
  if (rows * cols != set.n) throw ShapeError("save_mnist_idx: rows*cols must equal n");
  std::vector<unsigned char> bytes;
  detail::put_u32_be(bytes, kIdxImagesMagic);
  detail::put_u32_be(bytes, static_cast<std::uint32_t>(set.size()));
  detail::put_u32_be(bytes, static_cast<std::uint32_t>(rows));
  detail::put_u32_be(bytes, static_cast<std::uint32_t>(cols));
  for (const auto& s : set.signals) {
    for (Eigen::Index j = 0; j < s.size(); ++j) {
      bytes.push_back(static_cast<unsigned char>(std::lround(std::clamp(s[j], 0.0, 1.0) * 255.0)));
    }
  }
  detail::write_file(images, bytes);
  if (labels) {
    if (!set.labels) throw ParameterError("save_mnist_idx: set has no labels");
    std::vector<unsigned char> lb;
    detail::put_u32_be(lb, kIdxLabelsMagic);
    detail::put_u32_be(lb, static_cast<std::uint32_t>(set.size()));
    for (int l : *set.labels) lb.push_back(static_cast<unsigned char>(l));
    detail::write_file(*labels, lb);
  }
}

void save_signal_file(const SignalSet& set, const std::filesystem::path& path) {
  std::vector<unsigned char> bytes(std::begin(kSignalMagic), std::end(kSignalMagic));
  detail::put_u32_le(bytes, static_cast<std::uint32_t>(set.size()));
  detail::put_u32_le(bytes, static_cast<std::uint32_t>(set.n));
  for (const auto& s : set.signals) {
    if (static_cast<std::size_t>(s.size()) != set.n) throw ShapeError("save_signal_file: ragged signal set");
    for (Eigen::Index j = 0; j < s.size(); ++j) detail::put_f64_le(bytes, s[j]);
  }
  detail::write_file(path, bytes);
}

SignalSet load_signal_file(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  constexpr std::size_t header = sizeof(kSignalMagic) + 8;
  if (bytes.size() < sizeof(kSignalMagic) || std::memcmp(bytes.data(), kSignalMagic, sizeof(kSignalMagic)) != 0) {
    throw FormatError(FormatErrorKind::bad_magic, path.string() + " is not a GENCS-SIG file");
  }
  if (bytes.size() < header) throw FormatError(FormatErrorKind::truncated, "signal header cut short");
  const std::uint64_t count = detail::get_u32_le(bytes.data() + sizeof(kSignalMagic));
  const std::uint64_t n = detail::get_u32_le(bytes.data() + sizeof(kSignalMagic) + 4);
  if (n == 0) throw FormatError(FormatErrorKind::malformed_header, "zero signal dimension");
  if (count * n > kMaxIdxElements) throw FormatError(FormatErrorKind::dim_overflow, "declared dims too large");
  if (bytes.size() - header < count * n * 8) throw FormatError(FormatErrorKind::truncated, "signal payload cut short");

  SignalSet set;
  set.n = static_cast<std::size_t>(n);
  set.source = "signal:" + path.filename().string();
  const unsigned char* p = bytes.data() + header;
  for (std::uint64_t i = 0; i < count; ++i) {
    Vector v(static_cast<Eigen::Index>(n));
    for (std::uint64_t j = 0; j < n; ++j) v[static_cast<Eigen::Index>(j)] = detail::get_f64_le(p + 8 * (i * n + j));
    set.signals.push_back(std::move(v));
  }
  try {
    set.validate();
  } catch (const ParameterError& err) {
    throw FormatError(FormatErrorKind::bad_value, err.what());
  }
  return set;
}

SyntheticManifold::SyntheticManifold(Mlp decoder, std::uint64_t seed) : decoder_(std::move(decoder)), seed_(seed) {}

Vector SyntheticManifold::sample(const Vector& u) const { return decoder_.forward(u); }

std::pair<Vector, Vector> SyntheticManifold::sample_uniform(Rng& rng) const {
  Vector u(static_cast<Eigen::Index>(k()));
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = rng.uniform();
  Vector x = sample(u);
  return {std::move(u), std::move(x)};
}

SignalSet SyntheticManifold::sample_set(std::size_t count, Rng& rng) const {
  SignalSet set;
  set.n = n();
  set.source = "synthetic:seed=" + std::to_string(seed_);
  set.signals.reserve(count);
  for (std::size_t i = 0; i < count; ++i) set.signals.push_back(sample_uniform(rng).second);
  return set;
}

SyntheticManifold make_synthetic(std::size_t k, std::size_t n, std::size_t hidden, std::uint64_t seed, double gain) {
  if (k == 0 || n == 0 || hidden == 0) throw ParameterError("make_synthetic: dims must be >= 1");
  if (!(gain > 0.0) || !std::isfinite(gain)) throw ParameterError("make_synthetic: gain must be finite and > 0");
  Rng rng(seed, 0x5347);
  Mlp decoder = Mlp::glorot({{k, hidden, Activation::sigmoid}, {hidden, n, Activation::sigmoid}}, rng);
  if (gain != 1.0) {
    for (auto& layer : decoder.mutable_layers()) layer.weight *= gain;
  }
  return SyntheticManifold(std::move(decoder), seed);
}

std::pair<SignalSet, SignalSet> split(const SignalSet& set, double train_frac, std::uint64_t seed) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ParameterError("split: train_frac must lie in (0,1)");
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, 0x5350);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
  const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(set.size())));

  auto take = [&](std::size_t begin, std::size_t end) {
    SignalSet out{set.n, {}, std::nullopt, set.source};
    if (set.labels) out.labels.emplace();
    for (std::size_t i = begin; i < end; ++i) {
      out.signals.push_back(set.signals[order[i]]);
      if (set.labels) out.labels->push_back((*set.labels)[order[i]]);
    }
    return out;
  };
  return {take(0, n_train), take(n_train, order.size())};
}

}  // namespace gencs
