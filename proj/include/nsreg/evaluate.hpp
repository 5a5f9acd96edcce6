#pragma once

#include <map>
#include <string>
#include <vector>

#include "nsreg/experiment.hpp"

namespace nsreg {

struct PairedSample {
  std::vector<double> rmse_s;
  std::vector<double> rmse_ns;
};

enum class TestOutcome { kNsWins, kNsLoses, kNoDifference };
const char* to_string(TestOutcome o);

struct TTestResult {
  TestOutcome outcome = TestOutcome::kNoDifference;
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
  double mean_diff = 0.0;  // mean of rmse_ns - rmse_s
};

TTestResult paired_t_test(const PairedSample& sample, double alpha = 0.05);

struct WinLossRecord {
  int w = 0;
  int l = 0;
  int n = 0;
  int total() const noexcept { return w + l + n; }
  double win_fraction() const;
  double loss_fraction() const;
  void add(TestOutcome o);
};

// +inf for the all-win corner (W = 1, L = 0).
double goodness(double win_fraction, double loss_fraction);
double goodness(const WinLossRecord& record);

inline constexpr const char* kTotalColumn = "total";

struct GoodnessCell {
  std::string level;
  std::string group;  // "small", "medium", "large" or "total"
  WinLossRecord record;
  double gamma = 1.0;  // NaN when the record is empty
};

struct CellTest {
  std::string level;
  int cell_id = 0;
  std::string group;
  PairedSample sample;
  TTestResult test;
};

struct GoodnessReport {
  std::string kind;  // "accuracy" or "consistency"
  double alpha = 0.05;
  std::vector<std::string> levels;  // row order
  std::vector<std::string> groups;  // column order
  std::vector<GoodnessCell> table;  // row-major levels x groups
  std::vector<CellTest> cell_tests;
  int excluded = 0;               // records dropped for failed registrations
  std::vector<std::string> gaps;  // expected records that were not found
  // Pooled RMSE values per level id: arm "s" and arm "ns".
  std::map<std::string, PairedSample> distributions;

  const GoodnessCell& at(const std::string& level, const std::string& group) const;
};

// Rows psibar1..psibar7, columns small/medium/large/total. Samples pool
// subjects and protocols per (level, cell).
GoodnessReport accuracy_report(const std::vector<ExperimentCell>& cells, double alpha = 0.05);

// T2 vs PD disagreement per subject, without reference to the truth.
GoodnessReport consistency_report(const std::vector<ExperimentCell>& cells, double alpha = 0.05,
                                  const std::string& protocol_a = "T2",
                                  const std::string& protocol_b = "PD");

std::string report_csv(const GoodnessReport& report);

}  // namespace nsreg
