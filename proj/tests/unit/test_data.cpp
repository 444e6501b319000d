#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "gencs/data.hpp"

using namespace gencs;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gencs_data_tests";
  fs::create_directories(dir);
  return dir / name;
}

void put_be32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) b.push_back(static_cast<unsigned char>((v >> s) & 0xFF));
}

std::vector<unsigned char> idx_images(std::uint32_t magic, std::uint32_t count, std::uint32_t rows,
                                      std::uint32_t cols, const std::vector<unsigned char>& payload) {
  std::vector<unsigned char> b;
  put_be32(b, magic);
  put_be32(b, count);
  put_be32(b, rows);
  put_be32(b, cols);
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

fs::path write(const std::string& name, const std::vector<unsigned char>& bytes) {
  const auto p = temp_file(name);
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  return p;
}

FormatErrorKind idx_error(const fs::path& p) {
  try {
    (void)load_mnist_idx(p);
  } catch (const FormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "accepted malformed IDX file";
  return FormatErrorKind::io;
}

SignalSet numbered(std::size_t count) {
  SignalSet s;
  s.n = 1;
  for (std::size_t i = 0; i < count; ++i) s.signals.push_back(Vector::Constant(1, static_cast<double>(i) / 100.0));
  return s;
}

}  // namespace

TEST(Idx, SingleImage) {
  std::vector<unsigned char> px(784, 0);
  px[0] = 255;
  px[29] = 51;
  const auto p = write("one.idx", idx_images(0x803, 1, 28, 28, px));
  const auto set = load_mnist_idx(p);
  ASSERT_EQ(set.size(), 1u);
  EXPECT_EQ(set.n, 784u);
  EXPECT_EQ(set.signals[0][0], 1.0);
  EXPECT_EQ(set.signals[0][29], 0.2);
  EXPECT_EQ(set.signals[0][1], 0.0);
  EXPECT_NO_THROW(set.validate());
}

TEST(Idx, WithLabels) {
  std::vector<unsigned char> px(2 * 4, 128);
  const auto img = write("two.idx", idx_images(0x803, 2, 2, 2, px));
  std::vector<unsigned char> lb;
  put_be32(lb, 0x801);
  put_be32(lb, 2);
  lb.push_back(3);
  lb.push_back(9);
  const auto lab = write("two-labels.idx", lb);
  const auto set = load_mnist_idx(img, lab);
  ASSERT_TRUE(set.labels.has_value());
  EXPECT_EQ(*set.labels, (std::vector<int>{3, 9}));
}

TEST(Idx, Errors) {
  EXPECT_EQ(idx_error(write("labels-as-images.idx", idx_images(0x801, 1, 2, 2, std::vector<unsigned char>(4)))),
            FormatErrorKind::bad_magic);
  EXPECT_EQ(idx_error(write("short.idx", idx_images(0x803, 2, 2, 2, std::vector<unsigned char>(5)))),
            FormatErrorKind::truncated);
  EXPECT_EQ(idx_error(write("huge.idx", idx_images(0x803, 0xFFFFFFFF, 0xFFFF, 0xFFFF, {}))),
            FormatErrorKind::dim_overflow);
  EXPECT_EQ(idx_error(write("tiny.idx", {0, 0})), FormatErrorKind::truncated);
  EXPECT_THROW(load_mnist_idx(temp_file("absent.idx")), FormatError);
}

TEST(Idx, SaveLoadRoundTrip) {
  SignalSet s;
  s.n = 6;
  s.signals = {Vector::LinSpaced(6, 0.0, 1.0), Vector::Constant(6, 0.2)};
  s.labels = std::vector<int>{1, 7};
  const auto img = temp_file("rt.idx"), lab = temp_file("rt-labels.idx");
  save_mnist_idx(s, 2, 3, img, lab);
  const auto back = load_mnist_idx(img, lab);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_LT((back.signals[i] - s.signals[i]).cwiseAbs().maxCoeff(), 0.5 / 255.0 + 1e-12);
  EXPECT_EQ(*back.labels, *s.labels);
}

TEST(SignalFile, RoundTripAndErrors) {
  SignalSet s;
  s.n = 3;
  s.signals = {(Vector(3) << 0.1, 0.2, 0.3).finished(), (Vector(3) << 1.0, 0.0, 0.5).finished()};
  const auto p = temp_file("sig.bin");
  save_signal_file(s, p);
  const auto back = load_signal_file(p);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.signals[0], s.signals[0]);
  EXPECT_EQ(back.signals[1], s.signals[1]);

  std::ifstream in(p, std::ios::binary);
  std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  bytes.pop_back();
  try {
    (void)load_signal_file(write("sig-short.bin", bytes));
    ADD_FAILURE();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatErrorKind::truncated);
  }
  bytes[0] = 'X';
  try {
    (void)load_signal_file(write("sig-magic.bin", bytes));
    ADD_FAILURE();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatErrorKind::bad_magic);
  }
}

TEST(SignalSet, ValidateRejectsRaggedAndOutOfRange) {
  SignalSet s;
  s.n = 2;
  s.signals = {Vector::Zero(2), Vector::Zero(3)};
  EXPECT_THROW(s.validate(), ParameterError);
  s.signals = {Vector::Constant(2, 1.5)};
  EXPECT_THROW(s.validate(), ParameterError);
}

TEST(SignalSet, HeadAndSlice) {
  const auto s = numbered(10);
  EXPECT_EQ(s.head(3).size(), 3u);
  EXPECT_EQ(s.head(30).size(), 10u);
  const auto sl = s.slice(4, 3);
  ASSERT_EQ(sl.size(), 3u);
  EXPECT_EQ(sl.signals[0][0], 0.04);
}

TEST(Synthetic, DeterministicAndInRange) {
  const auto a = make_synthetic(3, 20, 10, 5);
  const auto b = make_synthetic(3, 20, 10, 5);
  const Vector u = (Vector(3) << 0.1, 0.5, 0.9).finished();
  EXPECT_EQ(a.sample(u), a.sample(u));
  EXPECT_EQ(a.sample(u), b.sample(u));
  const double L = lipschitz_upper_bound(a.decoder());
  EXPECT_TRUE(std::isfinite(L));
  EXPECT_GT(L, 0.0);
  Rng r(1);
  const auto set = a.sample_set(1000, r);
  ASSERT_EQ(set.size(), 1000u);
  for (const auto& x : set.signals) {
    EXPECT_GT(x.minCoeff(), 0.0);
    EXPECT_LT(x.maxCoeff(), 1.0);
  }
}

TEST(Synthetic, OracleLatentReproducesSample) {
  const auto m = make_synthetic(4, 30, 12, 9, 4.0);
  Rng r(2);
  for (int t = 0; t < 20; ++t) {
    const auto [u, x] = m.sample_uniform(r);
    EXPECT_EQ((m.decoder().forward(u) - x).norm(), 0.0);
  }
}

TEST(Synthetic, GainSpreadsSamples) {
  Rng r1(3), r2(3);
  const auto flat = make_synthetic(4, 30, 12, 9, 1.0).sample_set(200, r1);
  const auto wide = make_synthetic(4, 30, 12, 9, 4.0).sample_set(200, r2);
  const auto spread = [](const SignalSet& s) {
    Vector mean = Vector::Zero(static_cast<Eigen::Index>(s.n));
    for (const auto& x : s.signals) mean += x;
    mean /= static_cast<double>(s.size());
    double total = 0.0;
    for (const auto& x : s.signals) total += (x - mean).squaredNorm();
    return total;
  };
  EXPECT_GT(spread(wide), spread(flat));
  EXPECT_THROW(make_synthetic(0, 3, 3, 1), ParameterError);
  EXPECT_THROW(make_synthetic(2, 3, 3, 1, 0.0), ParameterError);
}

TEST(Split, HalfOfTen) {
  const auto [train, test] = split(numbered(10), 0.5, 1);
  EXPECT_EQ(train.size(), 5u);
  EXPECT_EQ(test.size(), 5u);
}

TEST(Split, DeterministicDisjointCovering) {
  const auto s = numbered(37);
  const auto [a1, b1] = split(s, 0.3, 7);
  const auto [a2, b2] = split(s, 0.3, 7);
  std::vector<double> first, second;
  for (const auto& x : a1.signals) first.push_back(x[0]);
  for (const auto& x : a2.signals) second.push_back(x[0]);
  EXPECT_EQ(first, second);
  std::multiset<double> all;
  for (const auto* part : {&a1, &b1}) {
    for (const auto& x : part->signals) all.insert(x[0]);
  }
  EXPECT_EQ(all.size(), 37u);
  EXPECT_EQ(std::set<double>(all.begin(), all.end()).size(), 37u);
  EXPECT_EQ(a1.size(), 11u);
  EXPECT_THROW(split(s, 0.0, 1), ParameterError);
  EXPECT_THROW(split(s, 1.0, 1), ParameterError);
}
