#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "textalpha/common.hpp"
#include "textalpha/io.hpp"
#include "textalpha/rng.hpp"

using namespace textalpha;

TEST(Dates, ParseAndFormatRoundTrip) {
  const auto d = parse_date("2016-02-29");
  EXPECT_EQ(format_date(d), "2016-02-29");
  EXPECT_EQ(year_of(d), 2016);
  EXPECT_EQ(make_date(2016, 2, 29), d);
}

TEST(Dates, RejectsMalformed) {
  for (const char* bad : {"2017-02-29", "2017-2-01", "20170201", "2017-13-01", "", "2017-01-01x"}) {
    EXPECT_THROW(parse_date(bad), DataError) << bad;
  }
}

TEST(Classes, NamesAndIndices) {
  EXPECT_EQ(class_name(PerformanceClass::Under), "under");
  EXPECT_EQ(class_name(PerformanceClass::Average), "average");
  EXPECT_EQ(class_name(PerformanceClass::Over), "over");
  for (int k = 0; k < kNumClasses; ++k) EXPECT_EQ(class_index(class_from_index(k)), k);
  EXPECT_THROW(class_from_index(3), std::exception);
}

TEST(Classes, ArgmaxTiesGoToLowerClass) {
  EXPECT_EQ(argmax_class({0.4, 0.4, 0.2}), PerformanceClass::Under);
  EXPECT_EQ(argmax_class({0.2, 0.4, 0.4}), PerformanceClass::Average);
  EXPECT_EQ(argmax_class({0.1, 0.2, 0.7}), PerformanceClass::Over);
}

TEST(Softmax, SumsToOneAndIsShiftInvariant) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    std::array<double, 3> s{rng.normal() * 50, rng.normal() * 50, rng.normal() * 50};
    const auto p = softmax3(s);
    EXPECT_NEAR(p[0] + p[1] + p[2], 1.0, 1e-9);
    const auto q = softmax3({s[0] + 1000, s[1] + 1000, s[2] + 1000});
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(p[k], q[k], 1e-12);
  }
}

TEST(Rng, SameSeedSameStream) {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
  std::vector<int> x(50), y(50);
  std::iota(x.begin(), x.end(), 0);
  y = x;
  a.shuffle(x);
  b.shuffle(y);
  EXPECT_EQ(x, y);
}

TEST(Rng, NormalMoments) {
  Rng rng(1);
  double s = 0, s2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.03);
  EXPECT_NEAR(s2 / n, 1.0, 0.05);
}

TEST(Hash, Fnv1aKnownValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Io, ExactFormattingRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 12345.678}) EXPECT_EQ(std::stod(io::fmt_exact(v)), v);
  EXPECT_EQ(io::fmt_double(0.125, 2), "0.12");
}
