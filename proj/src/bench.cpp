#include "gencs/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "binary_io.hpp"
#include "gencs/errors.hpp"
#include "json.hpp"

namespace gencs {

namespace {

using nlohmann::json;

std::string type_name(const json& j) { return j.type_name(); }

// Walks one JSON object, checking types and rejecting unknown keys.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail("", "expected an object, found " + type_name(obj_));
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    throw ConfigError(where(key) + ": " + msg);
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void get(const std::string& key, std::string& out) {
    if (auto* v = find(key)) {
      if (!v->is_string()) fail(key, "expected a string, found " + type_name(*v));
      out = v->get<std::string>();
    }
  }

  void get(const std::string& key, double& out) {
    if (auto* v = find(key)) out = number(*v, key);
  }

  void get(const std::string& key, bool& out) {
    if (auto* v = find(key)) {
      if (!v->is_boolean()) fail(key, "expected true/false, found " + type_name(*v));
      out = v->get<bool>();
    }
  }

  template <typename T>
    requires std::is_unsigned_v<T>
  void get(const std::string& key, T& out) {
    if (auto* v = find(key)) out = static_cast<T>(count(*v, key));
  }

  void get(const std::string& key, std::vector<double>& out) {
    if (auto* v = find(key)) {
      if (!v->is_array()) fail(key, "expected an array, found " + type_name(*v));
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) out.push_back(number((*v)[i], key + "[" + std::to_string(i) + "]"));
    }
  }

  template <typename T>
    requires std::is_unsigned_v<T>
  void get(const std::string& key, std::vector<T>& out) {
    if (auto* v = find(key)) {
      if (!v->is_array()) fail(key, "expected an array, found " + type_name(*v));
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        out.push_back(static_cast<T>(count((*v)[i], key + "[" + std::to_string(i) + "]")));
      }
    }
  }

  void get(const std::string& key, std::vector<std::string>& out) {
    if (auto* v = find(key)) {
      if (!v->is_array()) fail(key, "expected an array, found " + type_name(*v));
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_string()) fail(key + "[" + std::to_string(i) + "]", "expected a string");
        out.push_back((*v)[i].get<std::string>());
      }
    }
  }

  void get(const std::string& key, Activation& out) {
    std::string name;
    get(key, name);
    if (name.empty()) return;
    try {
      out = parse_activation(name);
    } catch (const Error& e) {
      fail(key, e.what());
    }
  }

  void get_pair(const std::string& key, std::pair<std::size_t, std::size_t>& out) {
    if (auto* v = find(key)) {
      if (!v->is_array() || v->size() != 2) fail(key, "expected [rows, cols]");
      out = {count((*v)[0], key + "[0]"), count((*v)[1], key + "[1]")};
    }
  }

  /// Throws on keys that were never looked up.
  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.contains(it.key())) fail(it.key(), "unknown key");
    }
  }

  double number(const json& v, const std::string& key) const {
    if (!v.is_number()) fail(key, "expected a number, found " + type_name(v));
    return v.get<double>();
  }

  std::size_t count(const json& v, const std::string& key) const {
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
      fail(key, "expected a non-negative integer, found " + (v.is_number() ? v.dump() : type_name(v)));
    }
    return v.get<std::size_t>();
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

void read_train(Section s, TrainConfig& t) {
  s.get("epochs", t.epochs);
  s.get("batch_size", t.batch_size);
  s.get("learning_rate", t.learning_rate);
  std::string opt;
  s.get("optimizer", opt);
  if (opt == "adam") t.optimizer = Optimizer::adam;
  else if (opt == "sgd") t.optimizer = Optimizer::sgd;
  else if (!opt.empty()) s.fail("optimizer", "expected \"adam\" or \"sgd\", found \"" + opt + "\"");
  s.get("seed", t.seed);
  s.get("input_noise", t.input_noise);
  s.get("freeze_decoder", t.freeze_decoder);
  s.finish();
}

void read_contraction(Section s, ContractionSpec& c) {
  s.get("k", c.k);
  s.get("n", c.n);
  s.get("decoder_hidden", c.decoder_hidden);
  s.get("decoder_gain", c.decoder_gain);
  s.get("encoder_hidden", c.encoder_hidden);
  s.get("encoder_activation", c.encoder_activation);
  s.get("manifold_seed", c.manifold_seed);
  s.get("train_samples", c.train_samples);
  s.get("delta_samples", c.delta_samples);
  if (auto* t = s.find("train")) read_train(Section(*t, s.where("train")), c.train);
  s.get("trials", c.trials);
  s.get("trial_seed", c.trial_seed);
  s.get("m", c.m);
  s.get("step_size", c.step_size);
  s.get("max_iters", c.max_iters);
  s.get("alpha", c.alpha);
  s.get("upsilon", c.upsilon);
  s.finish();
}

void read_theory(Section s, TheorySpec& th) {
  if (auto* l = s.find("lemmas")) {
    Section ls(*l, s.where("lemmas"));
    auto& p = th.lemmas;
    ls.get("trials", p.trials);
    ls.get("seed", p.seed);
    if (auto* cases = ls.find("lemma1")) {
      if (!cases->is_array()) ls.fail("lemma1", "expected an array");
      p.lemma1.clear();
      for (std::size_t i = 0; i < cases->size(); ++i) {
        Section cs((*cases)[i], ls.where("lemma1[" + std::to_string(i) + "]"));
        LemmaPlan::Lemma1Case c{100, 1.0, false};
        cs.get("m", c.m);
        cs.get("tau", c.tau);
        std::string tail = "upper";
        cs.get("tail", tail);
        if (tail != "upper" && tail != "lower") cs.fail("tail", "expected \"upper\" or \"lower\"");
        c.lower = tail == "lower";
        cs.finish();
        p.lemma1.push_back(c);
      }
    }
    ls.get("lemma2_m", p.lemma2_m);
    ls.get("lemma2_n", p.lemma2_n);
    ls.get("lemma3_n", p.lemma3_n);
    ls.finish();
  }
  if (auto* t1 = s.find("theorem1")) {
    if (!t1->is_array()) s.fail("theorem1", "expected an array");
    th.theorem1.clear();
    for (std::size_t i = 0; i < t1->size(); ++i) {
      Section cs((*t1)[i], s.where("theorem1[" + std::to_string(i) + "]"));
      Theorem1Params p;
      cs.get("k", p.k);
      cs.get("n", p.n);
      cs.get("m", p.m);
      cs.get("L", p.L);
      cs.get("delta", p.delta);
      cs.get("sigma", p.sigma);
      cs.get("eta", p.eta);
      cs.get("upsilon", p.upsilon);
      cs.get("latent_range", p.latent_range);
      cs.finish();
      th.theorem1.push_back(p);
    }
  }
  if (auto* t2 = s.find("theorem2")) {
    if (!t2->is_array()) s.fail("theorem2", "expected an array");
    th.theorem2.clear();
    for (std::size_t i = 0; i < t2->size(); ++i) {
      Section cs((*t2)[i], s.where("theorem2[" + std::to_string(i) + "]"));
      TheorySpec::Theorem2Case c{0, 0, 0, 1.0, 0.1, 0.0, 0.1};
      cs.get("k", c.k);
      cs.get("n", c.n);
      cs.get("m", c.m);
      cs.get("L", c.L);
      cs.get("delta", c.delta);
      cs.get("alpha", c.alpha);
      cs.get("upsilon", c.upsilon);
      cs.finish();
      th.theorem2.push_back(c);
    }
  }
  if (auto* ct = s.find("contraction")) {
    if (!ct->is_array()) s.fail("contraction", "expected an array");
    th.contraction.clear();
    for (std::size_t i = 0; i < ct->size(); ++i) {
      ContractionSpec c;
      read_contraction(Section((*ct)[i], s.where("contraction[" + std::to_string(i) + "]")), c);
      th.contraction.push_back(c);
    }
  }
  s.finish();
}

std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

std::filesystem::path ExperimentConfig::block_weights(std::size_t block) const {
  std::filesystem::path base = weights.empty() ? output_dir / "ae.weights" : weights;
  auto name = base.stem().string() + "_block" + std::to_string(block) + base.extension().string();
  return base.parent_path() / name;
}

std::vector<double> ExperimentConfig::snr_cells() const {
  if (snr_db_list.empty()) return {std::numeric_limits<double>::quiet_NaN()};
  return snr_db_list;
}

void ExperimentConfig::validate() const {
  if (sampling_rates.empty()) throw ConfigError("sampling_rates: at least one rate is required");
  for (std::size_t i = 0; i < sampling_rates.size(); ++i) {
    const double r = sampling_rates[i];
    if (!(r > 0.0 && r <= 1.0)) {
      throw ConfigError("sampling_rates[" + std::to_string(i) + "]: " + format_double(r) + " is outside (0,1]");
    }
  }
  for (std::size_t i = 0; i < snr_db_list.size(); ++i) {
    if (std::isinf(snr_db_list[i])) throw ConfigError("snr_db_list[" + std::to_string(i) + "]: must be finite");
  }
  if (algorithms.empty()) throw ConfigError("algorithms: at least one algorithm is required");
  static const std::set<std::string> known{"ae-pgd", "latent-gd", "lasso-dct", "exhaustive"};
  std::set<std::string> seen;
  for (const auto& a : algorithms) {
    if (!known.contains(a)) {
      throw ConfigError("algorithms: unknown algorithm \"" + a + "\" (expected ae-pgd, latent-gd, lasso-dct, exhaustive)");
    }
    if (!seen.insert(a).second) throw ConfigError("algorithms: \"" + a + "\" listed twice");
  }
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (architecture.k == 0) throw ConfigError("architecture.k: must be >= 1");
  for (auto h : architecture.hidden) {
    if (h == 0) throw ConfigError("architecture.hidden: widths must be >= 1");
  }
  if (dataset.kind != "mnist" && dataset.kind != "signals" && dataset.kind != "synthetic") {
    throw ConfigError("dataset.kind: expected mnist, signals or synthetic, found \"" + dataset.kind + "\"");
  }
  if (dataset.kind != "synthetic" && dataset.images.empty()) throw ConfigError("dataset.images: path is required");
  if (dataset.test_count == 0) throw ConfigError("dataset.test_count: must be >= 1");
  if (seen.contains("lasso-dct")) {
    if (lasso.lambda_grid.empty()) throw ConfigError("lasso.lambda_grid: at least one λ is required");
    for (double l : lasso.lambda_grid) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("lasso.lambda_grid: λ must be finite and >= 0");
    }
    if (lasso.lambda_grid.size() > 1 && dataset.heldout_count == 0) {
      throw ConfigError("dataset.heldout_count: tuning λ over a grid needs held-out images");
    }
  }
  if (train.freeze_decoder && dataset.kind != "synthetic") {
    throw ConfigError("train.freeze_decoder: only a synthetic dataset supplies a known decoder");
  }
  if (blocks) {
    if (dataset.kind == "synthetic") throw ConfigError("blocks: not supported for synthetic data");
    if (seen.contains("latent-gd") || seen.contains("exhaustive")) {
      throw ConfigError("blocks: only ae-pgd and lasso-dct run with block-wise models");
    }
    try {
      (void)block_layout(*blocks);
    } catch (const SpecError& e) {
      throw ConfigError(std::string("blocks: ") + e.what());
    }
  }
  try {
    pgd.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("pgd: ") + e.what());
  }
  try {
    train.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("train: ") + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                              const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }

  ExperimentConfig cfg;
  try {
    Section s(root, "");
    s.get("name", cfg.name);
    if (auto* d = s.find("dataset")) {
      Section ds(*d, "dataset");
      auto& spec = cfg.dataset;
      ds.get("kind", spec.kind);
      std::string images, labels;
      ds.get("images", images);
      ds.get("labels", labels);
      spec.images = resolve(base_dir, images);
      if (!labels.empty()) spec.labels = resolve(base_dir, labels);
      ds.get("rows", spec.rows);
      ds.get("cols", spec.cols);
      ds.get("train_count", spec.train_count);
      ds.get("test_count", spec.test_count);
      ds.get("heldout_count", spec.heldout_count);
      ds.get("offset", spec.offset);
      if (auto* syn = ds.find("synthetic")) {
        Section ss(*syn, "dataset.synthetic");
        ss.get("k", spec.synthetic_k);
        ss.get("n", spec.synthetic_n);
        ss.get("hidden", spec.synthetic_hidden);
        ss.get("seed", spec.synthetic_seed);
        ss.get("gain", spec.synthetic_gain);
        ss.finish();
      }
      ds.finish();
    }
    if (auto* a = s.find("architecture")) {
      Section as(*a, "architecture");
      as.get("k", cfg.architecture.k);
      as.get("hidden", cfg.architecture.hidden);
      as.get("activation", cfg.architecture.activation);
      as.finish();
    }
    if (auto* t = s.find("train")) read_train(Section(*t, "train"), cfg.train);
    s.get("sampling_rates", cfg.sampling_rates);
    if (auto* snr = s.find("snr_db_list")) {
      if (!snr->is_array()) s.fail("snr_db_list", "expected an array");
      cfg.snr_db_list.clear();
      for (std::size_t i = 0; i < snr->size(); ++i) {
        const auto& v = (*snr)[i];
        if (v.is_null() || (v.is_string() && v.get<std::string>() == "none")) {
          cfg.snr_db_list.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
          cfg.snr_db_list.push_back(s.number(v, "snr_db_list[" + std::to_string(i) + "]"));
        }
      }
    }
    s.get("algorithms", cfg.algorithms);
    if (auto* p = s.find("pgd")) {
      Section ps(*p, "pgd");
      ps.get("step_size", cfg.pgd.step_size);
      std::string scale;
      ps.get("step_scale", scale);
      if (scale == "unit_columns") cfg.pgd.step_scale = StepScale::unit_columns;
      else if (scale == "absolute") cfg.pgd.step_scale = StepScale::absolute;
      else if (!scale.empty()) ps.fail("step_scale", "expected \"unit_columns\" or \"absolute\"");
      ps.get("max_iters", cfg.pgd.max_iters);
      ps.get("rel_tol", cfg.pgd.rel_tol);
      ps.get("clip_to_unit_box", cfg.pgd.clip_to_unit_box);
      ps.finish();
    }
    if (auto* l = s.find("lasso")) {
      Section ls(*l, "lasso");
      ls.get("lambda_grid", cfg.lasso.lambda_grid);
      ls.get("iters", cfg.lasso.iters);
      ls.finish();
    }
    if (auto* l = s.find("latent_gd")) {
      Section ls(*l, "latent_gd");
      ls.get("learning_rate", cfg.latent_gd.learning_rate);
      ls.get("iters", cfg.latent_gd.iters);
      ls.finish();
    }
    if (auto* e = s.find("exhaustive")) {
      Section es(*e, "exhaustive");
      es.get("bits", cfg.exhaustive.bits);
      es.get("budget", cfg.exhaustive.budget);
      es.finish();
    }
    if (auto* b = s.find("blocks")) {
      Section bs(*b, "blocks");
      BlockSpec spec;
      bs.get_pair("block_size", spec.block_size);
      spec.stride = spec.block_size;
      bs.get_pair("stride", spec.stride);
      spec.image_dims = {cfg.dataset.rows, cfg.dataset.cols};
      bs.finish();
      cfg.blocks = spec;
    }
    s.get("seeds", cfg.seeds);
    std::string out, weights;
    s.get("output_dir", out);
    s.get("weights", weights);
    if (!out.empty()) cfg.output_dir = resolve(base_dir, out);
    else cfg.output_dir = resolve(base_dir, "results");
    cfg.weights = weights.empty() ? cfg.output_dir / "ae.weights" : resolve(base_dir, weights);
    if (auto* th = s.find("theory")) read_theory(Section(*th, "theory"), cfg.theory);
    s.finish();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  auto base = path.parent_path();
  if (base.empty()) base = ".";
  return parse_config(ss.str(), base, path.string());
}

DatasetSplit load_dataset(const DatasetSpec& spec) {
  DatasetSplit out;
  if (spec.kind == "synthetic") {
    const auto manifold = make_synthetic(spec.synthetic_k, spec.synthetic_n, spec.synthetic_hidden, spec.synthetic_seed,
                                         spec.synthetic_gain);
    Rng rng(spec.synthetic_seed, 0x44415441);
    out.train = manifold.sample_set(spec.train_count, rng);
    out.test = manifold.sample_set(spec.test_count, rng);
    out.heldout = manifold.sample_set(spec.heldout_count, rng);
    return out;
  }
  if (!std::filesystem::exists(spec.images)) {
    throw FormatError(FormatErrorKind::io, "dataset file " + spec.images.string() +
                                               " not found (for MNIST run tools/fetch_mnist.py)");
  }
  const SignalSet all = spec.kind == "mnist" ? load_mnist_idx(spec.images, spec.labels) : load_signal_file(spec.images);
  const std::size_t need = spec.offset + spec.train_count + spec.test_count + spec.heldout_count;
  if (all.size() < need) {
    throw FormatError(FormatErrorKind::truncated, spec.images.string() + " holds " + std::to_string(all.size()) +
                                                      " signals; the split needs " + std::to_string(need));
  }
  out.train = all.slice(spec.offset, spec.train_count);
  out.test = all.slice(spec.offset + spec.train_count, spec.test_count);
  out.heldout = all.slice(spec.offset + spec.train_count + spec.test_count, spec.heldout_count);
  return out;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

const std::vector<std::string> kCsvColumns{"algorithm", "m", "n", "snr_db", "seed", "image_index", "psnr", "iters"};

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string snr_text(double snr) { return std::isnan(snr) ? "none" : format_double(snr); }

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw FormatError(FormatErrorKind::malformed_header, "results.csv: unterminated quoted field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

double parse_number(const std::string& s, std::size_t line, const std::string& column) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || std::isnan(v)) {
    throw FormatError(FormatErrorKind::bad_value,
                      "results.csv line " + std::to_string(line) + ": column " + column + " has value \"" + s + "\"");
  }
  return v;
}

std::uint64_t parse_count(const std::string& s, std::size_t line, const std::string& column) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw FormatError(FormatErrorKind::bad_value,
                      "results.csv line " + std::to_string(line) + ": column " + column + " has value \"" + s + "\"");
  }
  return v;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  detail::write_file(path, std::vector<unsigned char>(text.begin(), text.end()));
}

}  // namespace

std::string results_csv_header() {
  std::string h;
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) h += (i ? "," : "") + kCsvColumns[i];
  return h + "\n";
}

std::string format_result_row(const ResultRow& r) {
  return csv_field(r.algorithm) + "," + std::to_string(r.m) + "," + std::to_string(r.n) + "," + snr_text(r.snr_db) +
         "," + std::to_string(r.seed) + "," + std::to_string(r.image_index) + "," + format_double(r.psnr) + "," +
         std::to_string(r.iters) + "\n";
}

std::vector<ResultRow> parse_results_csv(const std::string& text) {
  const auto table = parse_csv(text);
  if (table.empty()) throw FormatError(FormatErrorKind::malformed_header, "results.csv: missing header row");
  const auto& header = table.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const auto& name : kCsvColumns) {
    if (!col.contains(name)) {
      throw FormatError(FormatErrorKind::malformed_header, "results.csv: missing column \"" + name + "\"");
    }
  }
  std::vector<ResultRow> rows;
  for (std::size_t li = 1; li < table.size(); ++li) {
    const auto& f = table[li];
    const std::size_t line = li + 1;
    if (f.size() != header.size()) {
      throw FormatError(FormatErrorKind::bad_value, "results.csv line " + std::to_string(line) + ": expected " +
                                                        std::to_string(header.size()) + " fields, found " +
                                                        std::to_string(f.size()));
    }
    auto at = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
    ResultRow r;
    r.algorithm = at("algorithm");
    if (r.algorithm.empty()) {
      throw FormatError(FormatErrorKind::bad_value, "results.csv line " + std::to_string(line) + ": empty algorithm");
    }
    r.m = parse_count(at("m"), line, "m");
    r.n = parse_count(at("n"), line, "n");
    if (r.n == 0) throw FormatError(FormatErrorKind::bad_value, "results.csv line " + std::to_string(line) + ": n = 0");
    r.snr_db = at("snr_db") == "none" ? std::numeric_limits<double>::quiet_NaN()
                                      : parse_number(at("snr_db"), line, "snr_db");
    r.seed = parse_count(at("seed"), line, "seed");
    r.image_index = parse_count(at("image_index"), line, "image_index");
    r.psnr = parse_number(at("psnr"), line, "psnr");
    r.iters = parse_count(at("iters"), line, "iters");
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<std::filesystem::path> cmd_report(const std::filesystem::path& dir) {
  const auto csv_path = dir / "results.csv";
  if (!std::filesystem::exists(csv_path)) {
    throw FormatError(FormatErrorKind::io, csv_path.string() + " not found (run `gencs sweep` first)");
  }
  const auto bytes = detail::read_file(csv_path);
  const auto rows = parse_results_csv(std::string(bytes.begin(), bytes.end()));

  struct Key {
    std::size_t m, n;
    std::string algorithm;
    bool operator<(const Key& o) const {
      // Compare m/n exactly via cross multiplication.
      const auto a = static_cast<std::uint64_t>(m) * o.n, b = static_cast<std::uint64_t>(o.m) * n;
      if (a != b) return a < b;
      if (n != o.n) return n < o.n;
      return algorithm < o.algorithm;
    }
  };
  struct Acc {
    std::vector<double> psnr;
    std::vector<std::size_t> iters;
  };
  // snr text -> (rate, algorithm) -> values; "none" sorts before numbers.
  auto snr_less = [](const std::string& a, const std::string& b) {
    if (a == b) return false;
    if (a == "none") return true;
    if (b == "none") return false;
    return std::stod(a) < std::stod(b);
  };
  std::map<std::string, std::map<Key, Acc>, decltype(snr_less)> groups(snr_less);
  for (const auto& r : rows) {
    auto& acc = groups[snr_text(r.snr_db)][Key{r.m, r.n, r.algorithm}];
    acc.psnr.push_back(r.psnr);
    acc.iters.push_back(r.iters);
  }

  auto mean_std = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    if (v.size() > 1) {
      for (double x : v) var += (x - mean) * (x - mean);
      var /= static_cast<double>(v.size() - 1);
    }
    return std::pair{mean, std::sqrt(var)};
  };

  std::vector<std::filesystem::path> written;
  std::string iters_tsv = "rate\talgorithm\tsnr_db\tmean_iters\tmax_iters\tfrac_within_20\n";
  for (const auto& [snr, cells] : groups) {
    std::string tsv = "rate\talgorithm\tmean_psnr\tstd_psnr\n";
    for (const auto& [key, acc] : cells) {
      const auto [mean, sd] = mean_std(acc.psnr);
      const std::string rate = format_double(static_cast<double>(key.m) / static_cast<double>(key.n));
      tsv += rate + "\t" + key.algorithm + "\t" + format_double(mean) + "\t" + format_double(sd) + "\n";

      std::vector<double> it(acc.iters.begin(), acc.iters.end());
      const auto [imean, isd] = mean_std(it);
      (void)isd;
      const std::size_t imax = *std::max_element(acc.iters.begin(), acc.iters.end());
      const auto within = std::count_if(acc.iters.begin(), acc.iters.end(), [](std::size_t v) { return v <= 20; });
      iters_tsv += rate + "\t" + key.algorithm + "\t" + snr + "\t" + format_double(imean) + "\t" +
                   std::to_string(imax) + "\t" +
                   format_double(static_cast<double>(within) / static_cast<double>(acc.iters.size())) + "\n";
    }
    const auto path = dir / ("psnr_snr-" + snr + ".tsv");
    write_text(path, tsv);
    written.push_back(path);
  }
  const auto ipath = dir / "iterations.tsv";
  write_text(ipath, iters_tsv);
  written.push_back(ipath);
  return written;
}

std::size_t worker_count() {
  if (const char* env = std::getenv("GENCS_THREADS")) {
    std::size_t v = 0;
    const std::string s(env);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc() && res.ptr == s.data() + s.size() && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min(worker_count(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::size_t failed_index = count;
  std::exception_ptr failure;
  auto run = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < failed_index) {
          failed_index = i;
          failure = std::current_exception();
        }
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace gencs
