#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include "ctrkit/config.hpp"
#include "ctrkit/phantom.hpp"

using namespace ctrkit;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ctrkit_phantom_test";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST(Phantom, IndexingRoundTrip) {
  const ClotPhantom ph({4, 5, 6}, Vec3(0.5, 1.0, 2.0), Vec3(1, 2, 3));
  for (std::size_t n = 0; n < ph.size(); ++n) {
    const auto v = ph.unlinear(n);
    EXPECT_EQ(ph.linear(v.i, v.j, v.k), n);
  }
  EXPECT_TRUE(ph.center(2, 3, 4).isApprox(Vec3(2.0, 5.0, 11.0)));
  EXPECT_DOUBLE_EQ(ph.voxel_volume_mm3(), 1.0);
}

TEST(Phantom, CountTracksSets) {
  ClotPhantom ph({3, 3, 3});
  ph.set(1, 1, 1, true);
  ph.set(1, 1, 1, true);
  ph.set(0, 2, 1, true);
  EXPECT_EQ(ph.count(), 2u);
  ph.set(1, 1, 1, false);
  EXPECT_EQ(ph.count(), 1u);
  EXPECT_FALSE(ph.at(-1, 0, 0));
  EXPECT_THROW(ph.set(3, 0, 0, true), Error);
  EXPECT_THROW(ClotPhantom({2, 2, 2}, Vec3(1, 0, 1)), Error);
}

TEST(Phantom, EllipsoidVolumeConverges) {
  const ClotPhantom ph = make_ellipsoid(Vec3(0, 0, 0), Vec3(10, 12, 15), Vec3(0.5, 0.5, 0.5));
  const double exact = 4.0 / 3.0 * std::numbers::pi * 10 * 12 * 15 / 1000.0;
  EXPECT_NEAR(ph.volume_ml(), exact, 0.005 * exact);
}

TEST(Phantom, DefaultVolume) {
  const ClotPhantom ph = default_phantom();
  EXPECT_NEAR(ph.volume_ml(), 38.36, 0.02);
  EXPECT_NEAR(default_phantom(10.0).volume_ml(), 10.0, 0.02);
}

TEST(Phantom, SaveLoadRoundTripBothEncodings) {
  ClotPhantom ph = make_ellipsoid(Vec3(1, -2, 30), Vec3(4, 5, 3), Vec3(0.7, 0.8, 1.1));
  ph.set(0, 0, 0, true);
  for (auto enc : {RawEncoding::Byte, RawEncoding::Bit}) {
    const fs::path h = scratch(enc == RawEncoding::Byte ? "byte.json" : "bit.json");
    save_phantom(ph, h, enc);
    EXPECT_TRUE(load_phantom(h) == ph);
  }
}

TEST(Phantom, LoadRejectsTruncatedData) {
  const ClotPhantom ph = make_ellipsoid(Vec3(0, 0, 0), Vec3(3, 3, 3));
  const fs::path h = scratch("trunc.json");
  save_phantom(ph, h);
  fs::resize_file(scratch("trunc.raw"), 10);
  try {
    load_phantom(h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Parse);
  }
  EXPECT_THROW(load_phantom(scratch("missing.json")), Error);
}

TEST(Phantom, PgmStackImport) {
  const fs::path a = scratch("s0.pgm"), b = scratch("s1.pgm");
  {
    std::ofstream f(a);
    f << "P2\n# slice\n3 2\n255\n0 200 10\n255 0 128\n";
  }
  {
    std::ofstream f(b, std::ios::binary);
    f << "P5\n3 2\n255\n";
    const unsigned char px[6] = {128, 0, 0, 0, 0, 127};
    f.write(reinterpret_cast<const char*>(px), 6);
  }
  const ClotPhantom ph = load_pgm_stack({a, b}, 128, Vec3(1, 1, 2));
  EXPECT_EQ(ph.dims()[0], 3);
  EXPECT_EQ(ph.dims()[1], 2);
  EXPECT_EQ(ph.dims()[2], 2);
  EXPECT_EQ(ph.count(), 4u);
  EXPECT_TRUE(ph.at(1, 0, 0));
  EXPECT_TRUE(ph.at(0, 1, 0));
  EXPECT_TRUE(ph.at(2, 1, 0));
  EXPECT_TRUE(ph.at(0, 0, 1));
  EXPECT_FALSE(ph.at(2, 1, 1));
}

TEST(Phantom, PgmSixteenBit) {
  const fs::path p = scratch("wide.pgm");
  {
    std::ofstream f(p, std::ios::binary);
    f << "P5 2 1 65535\n";
    const unsigned char px[4] = {0x01, 0x00, 0xff, 0xff};
    f.write(reinterpret_cast<const char*>(px), 4);
  }
  const GrayImage img = read_pgm(p);
  ASSERT_EQ(img.pixels.size(), 2u);
  EXPECT_EQ(img.pixels[0], 256);
  EXPECT_EQ(img.pixels[1], 65535);
}

TEST(Phantom, PgmErrors) {
  const fs::path p = scratch("bad.pgm");
  {
    std::ofstream f(p);
    f << "P6\n1 1\n255\n";
  }
  EXPECT_THROW(read_pgm(p), Error);
  const fs::path q = scratch("short.pgm");
  {
    std::ofstream f(q, std::ios::binary);
    f << "P5\n4 4\n255\nab";
  }
  EXPECT_THROW(read_pgm(q), Error);
  EXPECT_THROW(load_pgm_stack({}, 1), Error);
}
