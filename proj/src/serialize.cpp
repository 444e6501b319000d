#include <cstdio>
#include <string>

#include <json.hpp>

#include "binary_io.hpp"
#include "gencs/model.hpp"

namespace gencs {

namespace {

constexpr char kMagic[] = "GENCS-AE";  // written with its trailing NUL
constexpr std::size_t kMagicLen = sizeof(kMagic);

using nlohmann::json;

json layer_entry(const Layer& layer, std::size_t& offset) {
  json j = {{"in", layer.spec.in_dim},
            {"out", layer.spec.out_dim},
            {"activation", std::string(to_string(layer.spec.activation))},
            {"weight_offset", offset}};
  offset += layer.spec.in_dim * layer.spec.out_dim * sizeof(double);
  j["bias_offset"] = offset;
  offset += layer.spec.out_dim * sizeof(double);
  return j;
}

std::size_t get_count(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_unsigned()) {
    throw FormatError(FormatErrorKind::malformed_header, std::string("missing or invalid '") + key + "'");
  }
  return j[key].get<std::size_t>();
}

Mlp read_mlp(const json& entries, const unsigned char* payload, std::size_t payload_size, const char* which) {
  if (!entries.is_array() || entries.empty()) {
    throw FormatError(FormatErrorKind::malformed_header, std::string(which) + " layer list missing");
  }
  std::vector<Layer> layers;
  for (const auto& e : entries) {
    LayerSpec spec;
    spec.in_dim = get_count(e, "in");
    spec.out_dim = get_count(e, "out");
    if (!e.contains("activation") || !e["activation"].is_string()) {
      throw FormatError(FormatErrorKind::malformed_header, "layer activation missing");
    }
    try {
      spec.activation = parse_activation(e["activation"].get<std::string>());
    } catch (const ParameterError& err) {
      throw FormatError(FormatErrorKind::malformed_header, err.what());
    }
    const std::size_t w_off = get_count(e, "weight_offset");
    const std::size_t b_off = get_count(e, "bias_offset");
    const std::size_t w_bytes = spec.in_dim * spec.out_dim * sizeof(double);
    const std::size_t b_bytes = spec.out_dim * sizeof(double);
    if (w_off + w_bytes > payload_size || b_off + b_bytes > payload_size) {
      throw FormatError(FormatErrorKind::dimension_mismatch,
                        std::string(which) + " layer extends past the declared payload");
    }
    Layer layer{spec, Matrix(static_cast<Eigen::Index>(spec.out_dim), static_cast<Eigen::Index>(spec.in_dim)),
                Vector(static_cast<Eigen::Index>(spec.out_dim))};
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = detail::get_f64_le(payload + w_off + 8 * static_cast<std::size_t>(i));
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      layer.bias[i] = detail::get_f64_le(payload + b_off + 8 * static_cast<std::size_t>(i));
    }
    layers.push_back(std::move(layer));
  }
  try {
    return Mlp(std::move(layers));
  } catch (const Error& err) {
    throw FormatError(FormatErrorKind::dimension_mismatch, std::string(which) + ": " + err.what());
  }
}

}  // namespace

void save_weights(const Autoencoder& ae, const std::filesystem::path& path) {
  std::size_t offset = 0;
  json enc = json::array();
  json dec = json::array();
  for (const auto& l : ae.encoder().layers()) enc.push_back(layer_entry(l, offset));
  for (const auto& l : ae.decoder().layers()) dec.push_back(layer_entry(l, offset));
  const json header = {{"format", "gencs-ae"}, {"n", ae.n()},           {"k", ae.k()},
                       {"encoder", enc},      {"decoder", dec},        {"payload_bytes", offset},
                       {"byte_order", "little"}, {"scalar", "f64"}};
  const std::string text = header.dump();

  std::vector<unsigned char> bytes(kMagic, kMagic + kMagicLen);
  detail::put_u32_le(bytes, kWeightFileVersion);
  detail::put_u32_le(bytes, static_cast<std::uint32_t>(text.size()));
  bytes.insert(bytes.end(), text.begin(), text.end());
  bytes.reserve(bytes.size() + offset);
  for (const Mlp* mlp : {&ae.encoder(), &ae.decoder()}) {
    for (const auto& l : mlp->layers()) {
      for (Eigen::Index i = 0; i < l.weight.size(); ++i) detail::put_f64_le(bytes, l.weight.data()[i]);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) detail::put_f64_le(bytes, l.bias[i]);
    }
  }
  detail::write_file(path, bytes);
}

Autoencoder load_weights(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() < kMagicLen || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0) {
    throw FormatError(FormatErrorKind::bad_magic, path.string() + " is not a GENCS-AE weight file");
  }
  if (bytes.size() < kMagicLen + 8) throw FormatError(FormatErrorKind::truncated, "header cut short");
  const std::uint32_t version = detail::get_u32_le(bytes.data() + kMagicLen);
  if (version != kWeightFileVersion) {
    throw FormatError(FormatErrorKind::bad_version, "version " + std::to_string(version));
  }
  const std::size_t header_len = detail::get_u32_le(bytes.data() + kMagicLen + 4);
  const std::size_t header_start = kMagicLen + 8;
  if (bytes.size() < header_start + header_len) throw FormatError(FormatErrorKind::truncated, "header cut short");

  json header;
  try {
    header = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(header_start),
                         bytes.begin() + static_cast<std::ptrdiff_t>(header_start + header_len));
  } catch (const json::parse_error& err) {
    throw FormatError(FormatErrorKind::malformed_header, err.what());
  }
  if (!header.is_object()) throw FormatError(FormatErrorKind::malformed_header, "header is not an object");
  const std::size_t n = get_count(header, "n");
  const std::size_t k = get_count(header, "k");
  const std::size_t payload_bytes = get_count(header, "payload_bytes");
  const std::size_t available = bytes.size() - header_start - header_len;
  if (available < payload_bytes) {
    throw FormatError(FormatErrorKind::truncated, "payload has " + std::to_string(available) + " of " +
                                                      std::to_string(payload_bytes) + " bytes");
  }
  if (available > payload_bytes) throw FormatError(FormatErrorKind::malformed_header, "trailing bytes after payload");

  std::size_t declared = 0;
  for (const char* part : {"encoder", "decoder"}) {
    if (!header.contains(part) || !header[part].is_array()) {
      throw FormatError(FormatErrorKind::malformed_header, std::string(part) + " layer list missing");
    }
    for (const auto& e : header[part]) declared += (get_count(e, "in") + 1) * get_count(e, "out") * sizeof(double);
  }
  if (declared != payload_bytes) {
    throw FormatError(FormatErrorKind::dimension_mismatch, "layer dims need " + std::to_string(declared) +
                                                               " payload bytes, header declares " +
                                                               std::to_string(payload_bytes));
  }

  const unsigned char* payload = bytes.data() + header_start + header_len;
  Mlp encoder = read_mlp(header["encoder"], payload, payload_bytes, "encoder");
  Mlp decoder = read_mlp(header["decoder"], payload, payload_bytes, "decoder");
  if (encoder.input_dim() != n || decoder.output_dim() != n || encoder.output_dim() != k || decoder.input_dim() != k) {
    throw FormatError(FormatErrorKind::dimension_mismatch, "layer dims disagree with declared n=" +
                                                               std::to_string(n) + ", k=" + std::to_string(k));
  }
  try {
    return Autoencoder(std::move(encoder), std::move(decoder));
  } catch (const Error& err) {
    throw FormatError(FormatErrorKind::dimension_mismatch, err.what());
  }
}

std::string file_checksum(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace gencs
