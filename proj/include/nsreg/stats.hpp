#pragma once

#include <span>
#include <vector>

namespace nsreg::stats {

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

double student_t_cdf(double t, double df);
// P(|T| >= |t|) for T ~ Student-t(df).
double student_t_two_tailed(double t, double df);

double normal_cdf(double z);

struct PairedT {
  double mean_diff = 0.0;
  double sd_diff = 0.0;
  double t = 0.0;  // +-inf when the differences have zero spread
  double df = 0.0;
  double p = 1.0;
};

// Paired t statistic on d_i = b_i - a_i.
PairedT paired_t(std::span<const double> a, std::span<const double> b);

// Average ranks (1-based), ties share their mean rank.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman correlation; NaN when either side has no spread.
double spearman(std::span<const double> x, std::span<const double> y);

struct RankTest {
  double u = 0.0;  // Mann-Whitney U of x
  double z = 0.0;
  double p = 1.0;  // one-sided: H1 says x tends to be smaller than y
};

// Normal approximation with tie and continuity corrections.
RankTest mann_whitney_less(std::span<const double> x, std::span<const double> y);

}  // namespace nsreg::stats
