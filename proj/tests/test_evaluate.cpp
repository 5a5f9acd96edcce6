#include <doctest.h>

#include <cmath>
#include <random>

#include "nsreg/error.hpp"
#include "nsreg/evaluate.hpp"
#include "nsreg/standardize.hpp"

using namespace nsreg;

namespace {

ExperimentCell fake_cell(int subject, const std::string& protocol, const std::string& level, int id,
                         double rmse_s, double rmse_ns) {
  ExperimentCell c;
  c.subject = subject;
  c.protocol = protocol;
  c.level = level;
  c.cell_id = id;
  c.group = make_cell(id).group;
  c.status = CellStatus::kOk;
  c.rmse_s = rmse_s;
  c.rmse_ns = rmse_ns;
  c.box = {{0, 0, 0}, {9, 9, 9}};
  c.voxel_size = {1, 1, 1};
  c.result_s = RegistrationResult{};
  c.result_ns = RegistrationResult{};
  return c;
}

double gamma_oracle(double w, double l) {
  return std::sqrt(((1 - l) * (1 - l) + w * w) / ((1 - w) * (1 - w) + l * l));
}

}  // namespace

TEST_CASE("paired t-test outcomes") {
  PairedSample same{{1, 2, 3}, {1, 2, 3}};
  CHECK(paired_t_test(same).outcome == TestOutcome::kNoDifference);

  PairedSample better{{2, 2, 2, 2, 2}, {1, 1, 1, 1, 1}};
  CHECK(paired_t_test(better).outcome == TestOutcome::kNsWins);

  PairedSample worse;
  worse.rmse_s.assign(10, 0.5);
  for (double d : {1.0, 1.2, 0.8, 1.1, 0.9, 1.0, 1.3, 0.7, 1.05, 0.95}) worse.rmse_ns.push_back(0.5 + d);
  const TTestResult r = paired_t_test(worse);
  CHECK(r.outcome == TestOutcome::kNsLoses);
  CHECK(r.t == doctest::Approx(17.77).epsilon(1e-3));

  CHECK_THROWS_AS(paired_t_test(PairedSample{{1}, {2}}), Error);
  CHECK_THROWS_AS(paired_t_test(same, 1.0), Error);

  // Swapping arms swaps wins and losses.
  std::mt19937 gen(12);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    PairedSample p;
    const double shift = (trial % 5 - 2) * 0.6;
    for (int i = 0; i < 10; ++i) {
      p.rmse_s.push_back(5 + noise(gen));
      p.rmse_ns.push_back(5 + shift + noise(gen));
    }
    const TestOutcome a = paired_t_test(p).outcome;
    const TestOutcome b = paired_t_test(PairedSample{p.rmse_ns, p.rmse_s}).outcome;
    if (a == TestOutcome::kNoDifference) CHECK(b == TestOutcome::kNoDifference);
    if (a == TestOutcome::kNsWins) CHECK(b == TestOutcome::kNsLoses);
    if (a == TestOutcome::kNsLoses) CHECK(b == TestOutcome::kNsWins);
  }
}

TEST_CASE("goodness metric") {
  CHECK(goodness(WinLossRecord{5, 3, 2}) == doctest::Approx(std::sqrt(0.74 / 0.34)).epsilon(1e-12));
  CHECK(goodness(WinLossRecord{5, 3, 2}) == doctest::Approx(1.4752).epsilon(1e-4));
  CHECK(goodness(WinLossRecord{0, 0, 4}) == 1.0);
  CHECK(goodness(WinLossRecord{2, 2, 1}) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::isinf(goodness(WinLossRecord{3, 0, 0})));
  CHECK(goodness(WinLossRecord{0, 3, 0}) == 0.0);
  CHECK_THROWS_AS(goodness(WinLossRecord{}), Error);

  // Reciprocity and monotonicity on a grid.
  for (double w = 0.0; w <= 0.95; w += 0.05) {
    for (double l = 0.0; l + w <= 0.95; l += 0.05) {
      CHECK(goodness(w, l) * goodness(l, w) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(goodness(w + 0.01, l) > goodness(w, l));
      CHECK(goodness(w, l + 0.01) < goodness(w, l));
    }
  }
}

TEST_CASE("accuracy report") {
  std::vector<ExperimentCell> cells;
  // Every level: ns loses in the large cells, ties elsewhere.
  for (const auto& level : default_levels()) {
    for (int id : {0, 13, 80}) {
      for (int s = 0; s < 3; ++s) {
        for (const char* p : {"T2", "PD"}) {
          const double base = 0.1 * s + (p[0] == 'T' ? 0.0 : 0.05);
          const double ns = id == 80 && !level.is_clean() ? base + 2.0 + 0.01 * s : base;
          cells.push_back(fake_cell(s, p, level.id, id, base, ns));
        }
      }
    }
  }
  ExperimentCell failed = cells.back();
  failed.status = CellStatus::kRegistrationFailed;
  cells.back() = failed;

  const GoodnessReport r = accuracy_report(cells);
  CHECK(r.levels.size() == 7);
  CHECK(r.groups.size() == 4);
  CHECK(r.table.size() == 28);
  CHECK(r.excluded == 1);
  CHECK(r.gaps.empty());
  CHECK(r.at("psibar1", "small").gamma == 1.0);
  CHECK(r.at("psibar1", "large").gamma == 0.0);
  CHECK(r.at("psibar1", "total").record.l == 1);
  CHECK(r.at("psibar1", "total").record.n == 2);
  CHECK(r.at("psibar1", "total").gamma == doctest::Approx(gamma_oracle(0, 1.0 / 3)).epsilon(1e-12));

  const std::string csv = report_csv(r);
  CHECK(csv.rfind("level,small,medium,large,total\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 8);

  // Missing record shows up as a gap.
  cells.erase(cells.begin());
  CHECK(accuracy_report(cells).gaps.size() == 1);
}

TEST_CASE("consistency report pairs protocols per subject") {
  std::vector<ExperimentCell> cells;
  for (int s = 0; s < 4; ++s) {
    for (const char* p : {"T2", "PD"}) {
      ExperimentCell c = fake_cell(s, p, "psibar3", 13, 0, 0);
      // ns arm disagrees between protocols by a 0.5 + 0.1 s voxel shift.
      if (p[0] == 'P') c.result_ns->matrix(0, 3) = 0.5 + 0.1 * s;
      cells.push_back(c);
    }
  }
  const GoodnessReport r = consistency_report(cells);
  REQUIRE(r.cell_tests.size() == 1);
  CHECK(r.cell_tests[0].sample.rmse_s.size() == 4);
  CHECK(r.cell_tests[0].sample.rmse_s[0] == 0.0);
  CHECK(r.cell_tests[0].sample.rmse_ns[1] == doctest::Approx(0.6));
  CHECK(r.at("psibar3", "medium").record.l == 1);

  // Identical registrations everywhere give gamma 1.
  for (auto& c : cells) c.result_ns = c.result_s;
  CHECK(consistency_report(cells).at("psibar3", "total").gamma == 1.0);

  cells.pop_back();
  CHECK(consistency_report(cells).gaps.size() == 1);
}
