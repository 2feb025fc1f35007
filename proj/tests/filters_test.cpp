#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace hazekit;
using namespace hazekit::testing;

TEST(FilterRadius, RejectsNonPositive) {
  EXPECT_THROW(FilterRadius(0), ConfigError);
  EXPECT_THROW(FilterRadius(-3), ConfigError);
  EXPECT_EQ(FilterRadius(7).window(), 15);
}

TEST(MinFilter, ConstantPlane) {
  ImagePlane p = ImagePlane::filled(20, 13, 0.37f);
  EXPECT_EQ(min_filter_naive(p, FilterRadius(3)), p);
  EXPECT_EQ(min_filter_fast(p, FilterRadius(3)), p);
}

TEST(MinFilter, SingleZeroSpreadsToBlock) {
  std::vector<float> v(49, 1.0f);
  v[3 * 7 + 3] = 0.0f;
  ImagePlane p(7, 7, v);
  for (const ImagePlane& out : {min_filter_naive(p, FilterRadius(1)), min_filter_fast(p, FilterRadius(1))}) {
    for (int y = 0; y < 7; ++y) {
      for (int x = 0; x < 7; ++x) {
        const bool inside = std::abs(x - 3) <= 1 && std::abs(y - 3) <= 1;
        EXPECT_EQ(out(x, y), inside ? 0.0f : 1.0f) << x << "," << y;
      }
    }
  }
}

TEST(MinFilter, IncreasingRampShiftsLeft) {
  const int w = 12, h = 5;
  std::vector<float> v;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) v.push_back(0.05f * x);
  ImagePlane p(w, h, v);
  ImagePlane out = min_filter_fast(p, FilterRadius(2));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) EXPECT_EQ(out(x, y), p(std::max(0, x - 2), y));
}

TEST(MinFilter, OversizedRadius) {
  ImagePlane p = random_plane(10, 6, 1);
  EXPECT_THROW(min_filter_naive(p, FilterRadius(3)), ConfigError);
  EXPECT_THROW(min_filter_fast(p, FilterRadius(3)), ConfigError);
  EXPECT_NO_THROW(min_filter_fast(p, FilterRadius(2)));
}

TEST(MinFilter, FastMatchesNaiveExactly) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int w = 9 + static_cast<int>(seed % 23), h = 7 + static_cast<int>((seed * 7) % 19);
    ImagePlane p = random_plane(w, h, seed);
    for (int r = 1; 2 * r + 1 <= std::min(w, h); r += 2) {
      EXPECT_EQ(min_filter_fast(p, FilterRadius(r)), min_filter_naive(p, FilterRadius(r)))
          << "seed " << seed << " r " << r;
    }
  }
}

TEST(BoxFilter, ConstantAndImpulse) {
  ImagePlane c = ImagePlane::filled(9, 9, 0.42f);
  ImagePlane out = box_filter(c, FilterRadius(2));
  for (float v : out.values()) EXPECT_NEAR(v, 0.42f, 1e-7);

  std::vector<float> v(81, 0.0f);
  v[4 * 9 + 4] = 1.0f;
  ImagePlane imp = box_filter(ImagePlane(9, 9, v), FilterRadius(1));
  for (int y = 0; y < 9; ++y)
    for (int x = 0; x < 9; ++x) {
      const bool inside = std::abs(x - 4) <= 1 && std::abs(y - 4) <= 1;
      EXPECT_NEAR(imp(x, y), inside ? 1.0f / 9.0f : 0.0f, 1e-7);
    }
}

TEST(BoxFilter, MatchesDirectWindowMean) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ImagePlane p = random_plane(32, 32, seed);
    for (int r : {1, 2, 5, 15}) {
      auto ref = naive_box_mean(detail::to_double(p), 32, 32, r);
      ImagePlane out = box_filter(p, FilterRadius(r));
      for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(out[i], ref[i], 1e-5) << "r " << r;
    }
  }
}

TEST(BoxFilter, InteriorMeanPreserved) {
  // windows that never touch the border: the output mean equals the
  // coverage-weighted input mean, no replicated pixels involved
  const int n = 40, r = 3;
  ImagePlane p = random_plane(n, n, 77);
  ImagePlane out = box_filter(p, FilterRadius(r));
  const double norm = 1.0 / ((2 * r + 1) * (2 * r + 1));
  double out_sum = 0.0, in_sum = 0.0;
  for (int y = r; y < n - r; ++y)
    for (int x = r; x < n - r; ++x) {
      out_sum += out(x, y);
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) in_sum += norm * p(x + dx, y + dy);
    }
  const double count = (n - 2.0 * r) * (n - 2.0 * r);
  EXPECT_NEAR(out_sum / count, in_sum / count, 1e-5);
}

TEST(GuidedFilter, ConstantSourceSurvives) {
  ImagePlane guide = random_plane(24, 24, 3);
  ImagePlane out = guided_filter(guide, ImagePlane::filled(24, 24, 0.3f), FilterRadius(4), 1e-3);
  for (float v : out.values()) EXPECT_NEAR(v, 0.3f, 1e-6);
}

TEST(GuidedFilter, SelfGuidedTinyEpsIsIdentity) {
  ImagePlane p = random_plane(32, 32, 8);
  ImagePlane out = guided_filter(p, p, FilterRadius(2), 1e-8);
  EXPECT_LE(mean_abs_diff(out, p), 1e-3);
}

TEST(GuidedFilter, MatchesPerPixelReference) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ImagePlane g = random_plane(16, 16, seed);
    ImagePlane s = random_plane(16, 16, seed + 1000);
    for (int r : {1, 3, 7}) {
      for (double eps : {1e-4, 1e-2}) {
        auto ref = naive_guided_filter(g, s, r, eps);
        ImagePlane out = guided_filter(g, s, FilterRadius(r), eps);
        for (std::size_t i = 0; i < ref.size(); ++i) ASSERT_NEAR(out[i], ref[i], 1e-4);
      }
    }
  }
}

TEST(GuidedFilter, Errors) {
  ImagePlane p = random_plane(16, 16, 1);
  EXPECT_THROW(guided_filter(p, p, FilterRadius(2), 0.0), ConfigError);
  EXPECT_THROW(guided_filter(p, p, FilterRadius(2), -1.0), ConfigError);
  EXPECT_THROW(guided_filter(p, random_plane(16, 15, 2), FilterRadius(2), 1e-3), DimensionError);
  EXPECT_THROW(guided_filter(p, p, FilterRadius(8), 1e-3), ConfigError);
}
