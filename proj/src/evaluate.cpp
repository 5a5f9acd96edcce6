#include "nsreg/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include "nsreg/error.hpp"
#include "nsreg/standardize.hpp"
#include "nsreg/stats.hpp"

namespace nsreg {

const char* to_string(CellStatus s) {
  switch (s) {
    case CellStatus::kOk: return "ok";
    case CellStatus::kRegistrationFailed: return "registration_failed";
    case CellStatus::kSkipped: return "skipped";
  }
  return "?";
}

CellStatus cell_status_from_string(const std::string& s) {
  if (s == "ok") return CellStatus::kOk;
  if (s == "registration_failed") return CellStatus::kRegistrationFailed;
  if (s == "skipped") return CellStatus::kSkipped;
  throw Error(ErrorCode::kFormat, "unknown cell status '" + s + "'");
}

const char* to_string(TestOutcome o) {
  switch (o) {
    case TestOutcome::kNsWins: return "ns_wins";
    case TestOutcome::kNsLoses: return "ns_loses";
    case TestOutcome::kNoDifference: return "no_difference";
  }
  return "?";
}

TTestResult paired_t_test(const PairedSample& sample, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must lie in (0, 1)");
  if (sample.rmse_s.size() != sample.rmse_ns.size()) {
    throw Error(ErrorCode::kInvalidArgument, "paired sample arms differ in length");
  }
  if (sample.rmse_s.size() < 2) throw Error(ErrorCode::kInvalidArgument, "paired t-test needs >= 2 pairs");
  const stats::PairedT pt = stats::paired_t(sample.rmse_s, sample.rmse_ns);
  TTestResult r;
  r.t = pt.t;
  r.p = pt.p;
  r.df = pt.df;
  r.mean_diff = pt.mean_diff;
  if (pt.p <= alpha && pt.mean_diff < 0.0) {
    r.outcome = TestOutcome::kNsWins;
  } else if (pt.p <= alpha && pt.mean_diff > 0.0) {
    r.outcome = TestOutcome::kNsLoses;
  } else {
    r.outcome = TestOutcome::kNoDifference;
  }
  return r;
}

double WinLossRecord::win_fraction() const {
  if (total() == 0) throw Error(ErrorCode::kInvalidArgument, "empty win/loss record");
  return static_cast<double>(w) / total();
}

double WinLossRecord::loss_fraction() const {
  if (total() == 0) throw Error(ErrorCode::kInvalidArgument, "empty win/loss record");
  return static_cast<double>(l) / total();
}

void WinLossRecord::add(TestOutcome o) {
  switch (o) {
    case TestOutcome::kNsWins: ++w; break;
    case TestOutcome::kNsLoses: ++l; break;
    case TestOutcome::kNoDifference: ++n; break;
  }
}

double goodness(double wx, double lx) {
  if (!(wx >= 0.0 && lx >= 0.0 && wx + lx <= 1.0 + 1e-12)) {
    throw Error(ErrorCode::kInvalidArgument, "win/loss fractions out of range");
  }
  const double num = (1.0 - lx) * (1.0 - lx) + wx * wx;
  const double den = (1.0 - wx) * (1.0 - wx) + lx * lx;
  if (den == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

double goodness(const WinLossRecord& record) {
  // Exact integer test for the corner so W = 1 never depends on rounding.
  if (record.total() > 0 && record.w == record.total()) return std::numeric_limits<double>::infinity();
  return goodness(record.win_fraction(), record.loss_fraction());
}

const GoodnessCell& GoodnessReport::at(const std::string& level, const std::string& group) const {
  for (const auto& c : table) {
    if (c.level == level && c.group == group) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "no report cell " + level + "/" + group);
}

namespace {

using CellKey = std::tuple<std::string, int>;  // level, cell id

std::vector<std::string> report_levels() {
  std::vector<std::string> out;
  for (const auto& l : default_levels()) {
    if (!l.is_clean()) out.push_back(l.id);
  }
  return out;
}

std::string address(int subject, const std::string& protocol, const std::string& level, int cell) {
  return "subject " + std::to_string(subject) + " " + protocol + " " + level + " cell " +
         std::to_string(cell);
}

// Expected addresses are the full product of the ids seen in the result set.
std::vector<std::string> find_gaps(const std::vector<ExperimentCell>& cells) {
  std::set<int> subjects;
  std::set<std::string> protocols;
  std::set<std::string> levels;
  std::set<int> ids;
  std::set<std::tuple<int, std::string, std::string, int>> present;
  for (const auto& c : cells) {
    subjects.insert(c.subject);
    protocols.insert(c.protocol);
    levels.insert(c.level);
    ids.insert(c.cell_id);
    present.emplace(c.subject, c.protocol, c.level, c.cell_id);
  }
  std::vector<std::string> gaps;
  for (int s : subjects)
    for (const auto& p : protocols)
      for (const auto& l : levels)
        for (int id : ids)
          if (!present.count({s, p, l, id})) gaps.push_back(address(s, p, l, id));
  return gaps;
}

GoodnessReport assemble(std::string kind, double alpha,
                        const std::map<CellKey, std::pair<std::string, PairedSample>>& samples) {
  GoodnessReport report;
  report.kind = std::move(kind);
  report.alpha = alpha;
  report.levels = report_levels();
  report.groups = {to_string(DeformationGroup::kSmall), to_string(DeformationGroup::kMedium),
                   to_string(DeformationGroup::kLarge), kTotalColumn};

  std::map<std::pair<std::string, std::string>, WinLossRecord> records;
  for (const auto& [key, entry] : samples) {
    const auto& [level, id] = key;
    const auto& [group, sample] = entry;
    auto& dist = report.distributions[level];
    dist.rmse_s.insert(dist.rmse_s.end(), sample.rmse_s.begin(), sample.rmse_s.end());
    dist.rmse_ns.insert(dist.rmse_ns.end(), sample.rmse_ns.begin(), sample.rmse_ns.end());
    if (sample.rmse_s.size() < 2) continue;  // too few surviving pairs to test
    CellTest ct{level, id, group, sample, paired_t_test(sample, alpha)};
    records[{level, group}].add(ct.test.outcome);
    records[{level, kTotalColumn}].add(ct.test.outcome);
    report.cell_tests.push_back(std::move(ct));
  }

  for (const auto& level : report.levels) {
    for (const auto& group : report.groups) {
      GoodnessCell cell{level, group, {}, std::numeric_limits<double>::quiet_NaN()};
      if (auto it = records.find({level, group}); it != records.end()) {
        cell.record = it->second;
        cell.gamma = goodness(cell.record);
      }
      report.table.push_back(cell);
    }
  }
  return report;
}

}  // namespace

GoodnessReport accuracy_report(const std::vector<ExperimentCell>& cells, double alpha) {
  std::vector<const ExperimentCell*> ordered;
  for (const auto& c : cells) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(), [](const ExperimentCell* a, const ExperimentCell* b) {
    return std::tie(a->level, a->cell_id, a->subject, a->protocol) <
           std::tie(b->level, b->cell_id, b->subject, b->protocol);
  });

  std::map<CellKey, std::pair<std::string, PairedSample>> samples;
  int excluded = 0;
  for (const ExperimentCell* c : ordered) {
    if (c->status != CellStatus::kOk) {
      ++excluded;
      continue;
    }
    auto& entry = samples[{c->level, c->cell_id}];
    entry.first = to_string(c->group);
    entry.second.rmse_s.push_back(c->rmse_s);
    entry.second.rmse_ns.push_back(c->rmse_ns);
  }
  GoodnessReport report = assemble("accuracy", alpha, samples);
  report.excluded = excluded;
  report.gaps = find_gaps(cells);
  return report;
}

GoodnessReport consistency_report(const std::vector<ExperimentCell>& cells, double alpha,
                                  const std::string& protocol_a, const std::string& protocol_b) {
  using PairKey = std::tuple<std::string, int, int>;  // level, cell, subject
  std::map<PairKey, std::pair<const ExperimentCell*, const ExperimentCell*>> pairs;
  for (const auto& c : cells) {
    auto& slot = pairs[{c.level, c.cell_id, c.subject}];
    if (c.protocol == protocol_a) slot.first = &c;
    else if (c.protocol == protocol_b) slot.second = &c;
  }

  std::map<CellKey, std::pair<std::string, PairedSample>> samples;
  std::vector<std::string> gaps;
  int excluded = 0;
  for (const auto& [key, slot] : pairs) {
    const auto& [level, id, subject] = key;
    if (!slot.first || !slot.second) {
      gaps.push_back(address(subject, slot.first ? protocol_b : protocol_a, level, id));
      continue;
    }
    const ExperimentCell& a = *slot.first;
    const ExperimentCell& b = *slot.second;
    if (a.status != CellStatus::kOk || b.status != CellStatus::kOk) {
      ++excluded;
      continue;
    }
    auto& entry = samples[{level, id}];
    entry.first = to_string(a.group);
    entry.second.rmse_s.push_back(
        rmse_corners(a.result_s->matrix, b.result_s->matrix, a.box, a.voxel_size));
    entry.second.rmse_ns.push_back(
        rmse_corners(a.result_ns->matrix, b.result_ns->matrix, a.box, a.voxel_size));
  }
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArgument, "no paired results to compare");
  GoodnessReport report = assemble("consistency", alpha, samples);
  report.excluded = excluded;
  report.gaps = std::move(gaps);
  return report;
}

std::string report_csv(const GoodnessReport& report) {
  std::ostringstream out;
  out << "level";
  for (const auto& g : report.groups) out << ',' << g;
  out << '\n';
  for (const auto& level : report.levels) {
    out << level;
    for (const auto& g : report.groups) {
      const double gamma = report.at(level, g).gamma;
      out << ',';
      if (std::isnan(gamma)) {
        out << "na";
      } else if (std::isinf(gamma)) {
        out << "inf";
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", gamma);
        out << buf;
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace nsreg
