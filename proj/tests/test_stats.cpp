#include <doctest.h>

#include <cmath>
#include <random>

#include "nsreg/error.hpp"
#include "nsreg/stats.hpp"

using namespace nsreg;

namespace {

// Brute-force Student-t tail: Simpson integration of the density.
double t_tail_oracle(double t, double df) {
  const double a = std::abs(t);
  const double logc = std::lgamma((df + 1) / 2) - std::lgamma(df / 2) - 0.5 * std::log(df * M_PI);
  auto pdf = [&](double x) { return std::exp(logc - (df + 1) / 2 * std::log1p(x * x / df)); };
  // Integrate the centre [0, a] and double the complement.
  const int n = 20000;
  const double h = a / n;
  double s = pdf(0) + pdf(a);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * pdf(i * h);
  return 1.0 - 2.0 * (s * h / 3.0);
}

}  // namespace

TEST_CASE("incomplete beta") {
  CHECK(stats::incomplete_beta(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(stats::incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(stats::incomplete_beta(2, 3, 1.0) == 1.0);
  // I_x(a, 1) = x^a, I_x(1, b) = 1 - (1 - x)^b.
  CHECK(stats::incomplete_beta(3.5, 1, 0.4) == doctest::Approx(std::pow(0.4, 3.5)).epsilon(1e-13));
  CHECK(stats::incomplete_beta(1, 4.5, 0.7) == doctest::Approx(1 - std::pow(0.3, 4.5)).epsilon(1e-13));
  // Symmetry I_x(a,b) = 1 - I_{1-x}(b,a).
  CHECK(stats::incomplete_beta(2.5, 7, 0.2) + stats::incomplete_beta(7, 2.5, 0.8) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK_THROWS_AS(stats::incomplete_beta(0, 1, 0.5), Error);
  CHECK_THROWS_AS(stats::incomplete_beta(1, 1, 1.5), Error);
}

TEST_CASE("Student t reference values") {
  // Two-tailed critical values from standard t tables.
  CHECK(stats::student_t_two_tailed(2.262157, 9) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(stats::student_t_two_tailed(2.093024, 19) == doctest::Approx(0.05).epsilon(1e-5));
  CHECK(stats::student_t_two_tailed(3.249836, 9) == doctest::Approx(0.01).epsilon(1e-5));
  CHECK(stats::student_t_two_tailed(2.860935, 19) == doctest::Approx(0.01).epsilon(1e-5));
  CHECK(stats::student_t_two_tailed(0.0, 9) == 1.0);
  CHECK(stats::student_t_cdf(1.833113, 9) == doctest::Approx(0.95).epsilon(1e-6));
  for (double df : {1.0, 4.0, 9.0, 19.0, 60.0}) {
    for (double t : {0.1, 0.7, 1.5, 2.5, 4.0}) {
      CHECK(std::abs(stats::student_t_two_tailed(t, df) - t_tail_oracle(t, df)) < 1e-8);
    }
  }
}

TEST_CASE("paired t") {
  const std::vector<double> s(10, 0.0);
  const std::vector<double> ns{1.0, 1.2, 0.8, 1.1, 0.9, 1.0, 1.3, 0.7, 1.05, 0.95};
  const auto r = stats::paired_t(s, ns);
  // Hand oracle.
  double mean = 0;
  for (double d : ns) mean += d;
  mean /= 10;
  double ss = 0;
  for (double d : ns) ss += (d - mean) * (d - mean);
  const double t = mean / (std::sqrt(ss / 9) / std::sqrt(10.0));
  CHECK(r.t == doctest::Approx(t).epsilon(1e-12));
  CHECK(r.t == doctest::Approx(17.77).epsilon(1e-3));
  CHECK(r.df == 9);
  CHECK(r.p < 1e-7);

  const auto zero = stats::paired_t(s, s);
  CHECK(zero.p == 1.0);
  const auto constant = stats::paired_t(s, std::vector<double>(10, -1.0));
  CHECK(std::isinf(constant.t));
  CHECK(constant.t < 0);
  CHECK(constant.p == 0.0);
  CHECK_THROWS_AS(stats::paired_t(std::vector<double>{1.0}, std::vector<double>{2.0}), Error);
}

TEST_CASE("ranks and correlation") {
  const std::vector<double> v{3, 1, 4, 1, 5};
  CHECK(stats::average_ranks(v) == std::vector<double>{3, 1.5, 4, 1.5, 5});
  const std::vector<double> x{1, 2, 3, 4, 5};
  const std::vector<double> y{10, 20, 30, 40, 50};
  const std::vector<double> z{5, 4, 3, 2, 1};
  CHECK(stats::spearman(x, y) == doctest::Approx(1.0));
  CHECK(stats::spearman(x, z) == doctest::Approx(-1.0));
  CHECK(std::isnan(stats::spearman(x, std::vector<double>(5, 2.0))));
  // Textbook: d^2 formula without ties.
  const std::vector<double> a{86, 97, 99, 100, 101, 103, 106, 110, 112, 113};
  const std::vector<double> b{0, 20, 28, 27, 50, 29, 7, 17, 6, 12};
  CHECK(stats::spearman(a, b) == doctest::Approx(-29.0 / 165.0).epsilon(1e-12));
}

TEST_CASE("Mann-Whitney one-sided") {
  const std::vector<double> low{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<double> high{11, 12, 13, 14, 15, 16, 17, 18};
  const auto r = stats::mann_whitney_less(low, high);
  CHECK(r.u == 0.0);
  CHECK(r.p < 0.001);
  CHECK(stats::mann_whitney_less(high, low).p > 0.999);
  // Normal approximation oracle for a tied sample.
  const std::vector<double> x{1, 2, 2, 3};
  const std::vector<double> y{2, 3, 4, 5, 5};
  const auto t = stats::mann_whitney_less(x, y);
  CHECK(t.u == 2.5);  // ranks of x: 1, 3, 3, 5.5 -> 12.5 - 10
  const double var = 4.0 * 5.0 / 12.0 * (10.0 - (24.0 + 6.0 + 6.0) / 72.0);
  CHECK(t.z == doctest::Approx((2.5 - 10.0 + 0.5) / std::sqrt(var)).epsilon(1e-12));
}
