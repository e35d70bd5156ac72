#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fsmre/side_channel.hpp"

using namespace fsmre;

TEST_CASE("default calibration bands map currents to distances") {
  const CalibrationTable& t = default_calibration();
  const std::pair<double, unsigned> cases[] = {{0, 0},   {39.99, 0}, {40, 1},   {94.9, 1},  {95, 2},
                                               {139, 2}, {140, 3},   {169, 3},  {170, 4},  {204.9, 4},
                                               {205, 5}, {229.9, 5}, {230, 6},  {1000, 6}, {-5, 0}};
  for (auto [ua, hd] : cases) {
    CAPTURE(ua);
    CHECK(infer_hd({ua}).center == hd);
  }
  CHECK(t.zero_band_limit() == 40.0);
}

TEST_CASE("inferred windows are one wide except at zero") {
  InferredHd zero = InferredHd::from_center(0);
  CHECK(zero.exact);
  CHECK(zero.lo == 0);
  CHECK(zero.hi == 0);
  InferredHd one = InferredHd::from_center(1);
  CHECK_FALSE(one.exact);
  CHECK(one.lo == 1);
  CHECK(one.hi == 2);
  InferredHd four = InferredHd::from_center(4);
  CHECK(four.lo == 3);
  CHECK(four.hi == 5);
}

TEST_CASE("anchors sit inside their band") {
  const CalibrationTable& t = default_calibration();
  CHECK(t.anchor(1) == doctest::Approx(67.5));
  CHECK(t.anchor(2) == doctest::Approx(117.5));
  CHECK(t.anchor(6) == doctest::Approx(230.0));
  CHECK(t.anchor(8) == doctest::Approx(280.0));
  for (unsigned hd = 0; hd < 12; ++hd) CHECK(infer_hd({t.anchor(hd)}).center == std::min(hd, 6U));
}

TEST_CASE("custom calibration files are validated") {
  std::istringstream good("# lo hi center\n0 10 0\n10 20 1\n20 inf 2\n");
  CalibrationTable t = CalibrationTable::load(good);
  CHECK(t.bands().size() == 3);
  CHECK(infer_hd({15}, t).center == 1);
  std::istringstream gap("0 10 0\n12 inf 1\n");
  CHECK_THROWS_AS(CalibrationTable::load(gap), std::invalid_argument);
  std::istringstream order("0 10 1\n10 inf 0\n");
  CHECK_THROWS_AS(CalibrationTable::load(order), std::invalid_argument);
  std::istringstream closed("0 10 0\n10 20 1\n");
  CHECK_THROWS_AS(CalibrationTable::load(closed), std::invalid_argument);
}

TEST_CASE("zero distance is inferred exactly under every model") {
  Rng rng(1);
  for (NoiseModel m : {NoiseModel::exact(), NoiseModel::table3(), NoiseModel::gaussian(10), NoiseModel::gaussian(80)}) {
    for (int k = 0; k < 2000; ++k) {
      CHECK(sample_error(0, m, rng) == 0);
      CHECK(infer_hd(synthesize_current(0, m, rng)).center == 0);
    }
  }
}

TEST_CASE("non-zero distance never reads as zero") {
  Rng rng(2);
  for (NoiseModel m : {NoiseModel::table3(), NoiseModel::gaussian(60)}) {
    for (unsigned hd = 1; hd <= 8; ++hd) {
      for (int k = 0; k < 500; ++k) CHECK(infer_hd(synthesize_current(hd, m, rng)).center >= 1);
    }
  }
}

TEST_CASE("exact model reproduces the distance") {
  Rng rng(3);
  for (unsigned hd = 0; hd <= 6; ++hd) CHECK(infer_hd(synthesize_current(hd, NoiseModel::exact(), rng)).center == hd);
}

TEST_CASE("table3 error frequencies at distance 3") {
  Rng rng(11);
  const int n = 10000;
  int counts[3] = {0, 0, 0};  // exact, +1, -1
  for (int k = 0; k < n; ++k) {
    const int err = static_cast<int>(infer_hd(synthesize_current(3, NoiseModel::table3(), rng)).center) - 3;
    REQUIRE(std::abs(err) <= 1);
    ++counts[err == 0 ? 0 : (err > 0 ? 1 : 2)];
  }
  // Pearson chi-square with 2 degrees of freedom; 13.8 is the 0.999 quantile.
  const double expected[3] = {0.852 * n, 0.120 * n, 0.028 * n};
  double chi2 = 0;
  for (int i = 0; i < 3; ++i) chi2 += (counts[i] - expected[i]) * (counts[i] - expected[i]) / expected[i];
  CHECK(chi2 < 13.8);
  CHECK(std::abs(counts[0] / double(n) - 0.852) < 0.02);
  CHECK(std::abs(counts[1] / double(n) - 0.120) < 0.02);
  CHECK(std::abs(counts[2] / double(n) - 0.028) < 0.02);
}

TEST_CASE("table3 floors distance-one readings at one") {
  Rng rng(5);
  for (int k = 0; k < 3000; ++k) {
    const unsigned c = sample_error(1, NoiseModel::table3(), rng);
    CHECK((c == 1 || c == 2));
  }
}

TEST_CASE("pearson correlation of known sequences") {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> up{2, 4, 6, 8, 10};
  std::vector<double> down{5, 4, 3, 2, 1};
  std::vector<double> flat{1, 1, 1, 1, 1};
  CHECK(pearson(x, up) == doctest::Approx(1.0));
  CHECK(pearson(x, down) == doctest::Approx(-1.0));
  std::vector<double> y{2, 1, 4, 3, 5};
  CHECK(pearson(x, y) == doctest::Approx(0.8));
  CHECK_THROWS_AS(pearson(x, flat), std::invalid_argument);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("noise model validation") {
  NoiseModel m = NoiseModel::table3();
  CHECK_NOTHROW(validate(m));
  m.p_plus = 0.9;
  m.p_minus = 0.2;
  CHECK_THROWS_AS(validate(m), std::invalid_argument);
  CHECK_THROWS_AS(validate(NoiseModel::gaussian(-1)), std::invalid_argument);
  CHECK(parse_noise_kind("table3") == NoiseKind::table3);
  CHECK(to_string(NoiseKind::gaussian) == "gaussian");
  CHECK_THROWS_AS(parse_noise_kind("pink"), std::invalid_argument);
}
