#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace hazekit;
using namespace hazekit::testing;

namespace {

TransmissionMap constant_t(int w, int h, float v) { return TransmissionMap(ImagePlane::filled(w, h, v)); }

}  // namespace

TEST(Parameters, Validation) {
  EXPECT_THROW(AtmosphericLight(1.2f), DomainError);
  EXPECT_THROW(AtmosphericLight(0.5f, -0.1f, 0.5f), DomainError);
  EXPECT_THROW(ScatteringCoefficient(0.0), DomainError);
  EXPECT_THROW(ScatteringCoefficient(-1.0), DomainError);
  EXPECT_THROW(ScatteringCoefficient(std::nan("")), DomainError);
  EXPECT_TRUE(AtmosphericLight(0.8f).homogeneous());
}

TEST(TransmissionFromDepth, AnalyticValues) {
  auto t0 = transmission_from_depth(DepthMap(ImagePlane::filled(3, 3, 0.0f)), ScatteringCoefficient(1.0));
  for (std::size_t i = 0; i < t0.size(); ++i) EXPECT_EQ(t0[i], 1.0f);

  auto half = transmission_from_depth(DepthMap(ImagePlane::filled(1, 1, static_cast<float>(std::log(2.0)))),
                                      ScatteringCoefficient(1.0));
  EXPECT_NEAR(half[0], 0.5f, 1e-7);

  auto far = transmission_from_depth(DepthMap(ImagePlane::filled(1, 1, 10.0f)), ScatteringCoefficient(0.5));
  EXPECT_NEAR(far[0], 6.7379e-3, 1e-7);
}

TEST(TransmissionFromDepth, StaysPositiveOnUnderflow) {
  auto t = transmission_from_depth(DepthMap(ImagePlane::filled(1, 1, 1e4f)), ScatteringCoefficient(1.0));
  EXPECT_GT(t[0], 0.0f);
}

TEST(DepthFromTransmission, AnalyticValuesAndFloor) {
  EXPECT_EQ(depth_from_transmission(constant_t(1, 1, 1.0f), ScatteringCoefficient(1.0))[0], 0.0f);
  EXPECT_NEAR(depth_from_transmission(constant_t(1, 1, 0.5f), ScatteringCoefficient(1.0))[0], std::log(2.0), 1e-6);
  // t below the floor maps to the floor's depth
  EXPECT_NEAR(depth_from_transmission(constant_t(1, 1, 0.0f), ScatteringCoefficient(1.0), 0.05f)[0],
              -std::log(0.05), 1e-5);
  EXPECT_THROW(depth_from_transmission(constant_t(1, 1, 0.5f), ScatteringCoefficient(1.0), 0.0f), ConfigError);
  EXPECT_THROW(depth_from_transmission(constant_t(1, 1, 0.5f), ScatteringCoefficient(1.0), -0.1f), ConfigError);
}

TEST(Hazify, Limits) {
  RgbImage j = random_rgb(8, 8, 3);
  EXPECT_EQ(hazify(j, constant_t(8, 8, 1.0f), AtmosphericLight(0.8f)), j);
  RgbImage opaque = hazify(j, constant_t(8, 8, 0.0f), AtmosphericLight(0.7f, 0.8f, 0.9f));
  for (std::size_t i = 0; i < opaque.pixel_count(); ++i) {
    EXPECT_EQ(opaque.r()[i], 0.7f);
    EXPECT_EQ(opaque.g()[i], 0.8f);
    EXPECT_EQ(opaque.b()[i], 0.9f);
  }
}

TEST(Hazify, Arithmetic) {
  RgbImage out = hazify(RgbImage::filled(1, 1, 0.2f, 0.2f, 0.2f), constant_t(1, 1, 0.5f), AtmosphericLight(1.0f));
  EXPECT_NEAR(out.r()[0], 0.6f, 1e-7);
}

TEST(Hazify, DimensionMismatch) {
  EXPECT_THROW(hazify(random_rgb(4, 4, 1), constant_t(4, 5, 0.5f), AtmosphericLight(0.9f)), DimensionError);
  EXPECT_THROW(dehaze_with(random_rgb(4, 4, 1), constant_t(5, 4, 0.5f), AtmosphericLight(0.9f)), DimensionError);
}

TEST(DehazeWith, IdentityAtFullTransmission) {
  RgbImage j = random_rgb(8, 8, 4);
  EXPECT_EQ(dehaze_with(j, constant_t(8, 8, 1.0f), AtmosphericLight(0.9f)), j);
}

TEST(DehazeWith, InvertsHazifyAboveFloor) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RgbImage j = random_rgb(32, 32, seed);
    // up to 2.9 m at beta 1 keeps t above the floor everywhere
    DepthMap d = random_depth(32, 32, seed + 100, 0.5f, 2.9f);
    TransmissionMap t = transmission_from_depth(d, ScatteringCoefficient(1.0));
    AtmosphericLight a(0.8f);
    RgbImage back = dehaze_with(hazify(j, t, a), t, a, 0.05f);
    double worst = 0.0;
    for (int c = 0; c < 3; ++c) {
      for (std::size_t i = 0; i < j.pixel_count(); ++i) {
        if (t[i] >= 0.05f) worst = std::max(worst, std::abs(static_cast<double>(back.channel(c)[i]) - j.channel(c)[i]));
      }
    }
    EXPECT_LE(worst, 1e-5) << "seed " << seed;
    EXPECT_LE(mean_abs_diff(back, j), 1e-6) << "seed " << seed;
  }
}

TEST(DehazeWith, OutputAlwaysInUnitRange) {
  RgbImage hazy = random_rgb(16, 16, 9);
  RgbImage out = dehaze_with(hazy, constant_t(16, 16, 0.01f), AtmosphericLight(0.5f), 0.05f);
  for (int c = 0; c < 3; ++c) {
    for (float v : out.channel(c).values()) {
      EXPECT_GE(v, 0.0f);
      EXPECT_LE(v, 1.0f);
    }
  }
  EXPECT_THROW(dehaze_with(hazy, constant_t(16, 16, 0.5f), AtmosphericLight(0.5f), 0.0f), ConfigError);
}

TEST(ReconstructionResidual, ZeroAtConsistency) {
  RgbImage j = random_rgb(16, 16, 5);
  TransmissionMap t(random_plane(16, 16, 6, 0.1f, 1.0f));
  AtmosphericLight a(0.85f);
  EXPECT_LE(reconstruction_residual(j, t, a, hazify(j, t, a)), 1e-7);
}

TEST(ReconstructionResidual, ConstantShift) {
  RgbImage j = RgbImage::filled(8, 8, 0.3f, 0.4f, 0.5f);
  TransmissionMap t = constant_t(8, 8, 0.6f);
  AtmosphericLight a(0.8f);
  RgbImage hazy = hazify(j, t, a);
  std::vector<ImagePlane> shifted;
  for (int c = 0; c < 3; ++c) shifted.push_back(map_plane(hazy.channel(c), [](float v, std::size_t) { return v + 0.1f; }));
  RgbImage hazy_shift(shifted[0], shifted[1], shifted[2]);
  EXPECT_NEAR(reconstruction_residual(j, t, a, hazy_shift), 0.1, 1e-6);
  EXPECT_THROW(reconstruction_residual(j, constant_t(8, 9, 0.6f), a, hazy), DimensionError);
}

TEST(TransmissionLowerBound, KeepsInversionInRange) {
  RgbImage hazy = random_rgb(24, 24, 11);
  AtmosphericLight a(0.7f, 0.8f, 0.9f);
  TransmissionMap lb(transmission_lower_bound(hazy, a));
  auto raw = detail::invert_scattering(hazy, lb, a, 1e-6f);
  for (const auto& ch : raw) {
    for (float v : ch) {
      EXPECT_GE(v, -1e-5f);
      EXPECT_LE(v, 1.0f + 1e-5f);
    }
  }
}
