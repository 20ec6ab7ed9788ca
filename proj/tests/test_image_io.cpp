#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "saec/image_io.hpp"
#include "test_util.hpp"

using namespace saec;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "saec_image_io_test";
  fs::create_directories(dir);
  return dir / name;
}

Tensor quantized(const Shape& shape, std::uint64_t seed) {
  Tensor t = saec::testing::uniform(shape, seed, 0.0, 1.0);
  std::vector<double> v = saec::testing::values(t);
  for (auto& x : v) x = std::round(x * 255.0) / 255.0;
  return Tensor::from(shape, v);
}

}  // namespace

TEST(Pnm, GraymapRoundTrip) {
  Tensor img = quantized({1, 5, 7}, 1);
  write_pnm(scratch("g.pgm"), img);
  Tensor back = read_pnm(scratch("g.pgm"));
  ASSERT_EQ(back.shape(), img.shape());
  for (std::size_t i = 0; i < img.numel(); ++i) EXPECT_NEAR(back[i], img[i], 1e-12);
}

TEST(Pnm, PixmapRoundTrip) {
  Tensor img = quantized({3, 4, 6}, 2);
  write_pnm(scratch("c.ppm"), img);
  Tensor back = read_pnm(scratch("c.ppm"));
  ASSERT_EQ(back.shape(), img.shape());
  for (std::size_t i = 0; i < img.numel(); ++i) EXPECT_NEAR(back[i], img[i], 1e-12);
}

TEST(Pnm, AsciiWithComments) {
  std::ofstream(scratch("a.pgm")) << "P2\n# comment\n2 2\n# another\n10\n0 5\n10 2\n";
  Tensor t = read_pnm(scratch("a.pgm"));
  EXPECT_EQ(t.shape(), (Shape{1, 2, 2}));
  EXPECT_DOUBLE_EQ(t[1], 0.5);
  EXPECT_DOUBLE_EQ(t[2], 1.0);
}

TEST(Pnm, RejectsGarbageAndTruncation) {
  std::ofstream(scratch("bad.pgm")) << "P9\n1 1\n255\n";
  EXPECT_THROW(read_pnm(scratch("bad.pgm")), ImageIoError);
  std::ofstream(scratch("short.pgm"), std::ios::binary) << "P5\n4 4\n255\nab";
  EXPECT_THROW(read_pnm(scratch("short.pgm")), ImageIoError);
  EXPECT_THROW(read_pnm(scratch("missing.pgm")), ImageIoError);
}

TEST(Resize, NearestDoublingReplicatesPixels) {
  Tensor t = Tensor::from({1, 2, 2}, {0.1, 0.2, 0.3, 0.4});
  Tensor r = resize_image(t, 4, 4, ResizeMode::nearest);
  EXPECT_EQ(r.shape(), (Shape{1, 4, 4}));
  EXPECT_DOUBLE_EQ(r[0], 0.1);
  EXPECT_DOUBLE_EQ(r[1], 0.1);
  EXPECT_DOUBLE_EQ(r[15], 0.4);
}

TEST(Resize, BilinearPreservesConstants) {
  Tensor t = Tensor::full({3, 5, 9}, 0.37);
  Tensor r = resize_image(t, 8, 8, ResizeMode::bilinear);
  for (double v : r.data()) EXPECT_NEAR(v, 0.37, 1e-15);
}

TEST(Channels, GrayAndColorConversion) {
  Tensor rgb = Tensor::from({3, 1, 1}, {0.3, 0.6, 0.9});
  EXPECT_NEAR(convert_channels(rgb, 1)[0], 0.6, 1e-15);
  Tensor gray = Tensor::from({1, 1, 2}, {0.2, 0.4});
  Tensor c = convert_channels(gray, 3);
  EXPECT_EQ(c.shape(), (Shape{3, 1, 2}));
  EXPECT_DOUBLE_EQ(c[5], 0.4);
}

TEST(Tile, GridGeometry) {
  std::vector<Tensor> panels(5, Tensor::full({1, 3, 4}, 0.0));
  Tensor g = tile_images(panels, 3);
  EXPECT_EQ(g.shape(), (Shape{1, 2 * 4 + 1, 3 * 5 + 1}));
  EXPECT_DOUBLE_EQ(g[0], 1.0);
  EXPECT_DOUBLE_EQ(g[1 * 16 + 1], 0.0);
}
