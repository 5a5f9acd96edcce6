#include "nsreg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "nsreg/correct.hpp"
#include "nsreg/error.hpp"
#include "nsreg/evaluate.hpp"
#include "nsreg/rng.hpp"
#include "nsreg/serialize.hpp"

namespace fs = std::filesystem;

namespace nsreg {

void validate(const ExperimentPlan& plan) {
  if (plan.subjects < 2) throw Error(ErrorCode::kInvalidArgument, "plan needs >= 2 subjects to train a model");
  if (plan.protocols.empty()) throw Error(ErrorCode::kInvalidArgument, "plan has no protocols");
  if (plan.levels.empty()) throw Error(ErrorCode::kInvalidArgument, "plan has no levels");
  if (plan.grid.empty()) throw Error(ErrorCode::kInvalidArgument, "plan has no deformation cells");
  if (plan.workers < 1) throw Error(ErrorCode::kInvalidArgument, "workers must be >= 1");
  if (!(plan.gain_spread >= 0.0) || !(plan.geometry_spread >= 0.0 && plan.geometry_spread < 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "subject variation spreads out of range");
  }
  if (plan.input_dir.empty()) {
    for (const auto& p : plan.protocols) {
      if (p != "T2" && p != "PD") {
        throw Error(ErrorCode::kInvalidArgument, "generated cohorts provide T2 and PD only, not " + p);
      }
    }
    validate(plan.phantom);
  }
  validate(plan.registration);
}

PhantomSpec subject_phantom(const ExperimentPlan& plan, int subject) {
  PhantomSpec spec = plan.phantom;
  const auto s = static_cast<std::uint64_t>(subject);
  spec.seed = rng::derive(plan.master_seed, {rng::hash_string("phantom"), s});
  rng::Stream draws(rng::derive(plan.master_seed, {rng::hash_string("subject-variation"), s}));
  const double g = std::log1p(plan.gain_spread);
  spec.intensity_gain *= std::exp(draws.uniform(-g, g));
  spec.geometry_scale *= 1.0 + draws.uniform(-plan.geometry_spread, plan.geometry_spread);
  return spec;
}

Cohort load_or_generate_cohort(const ExperimentPlan& plan) {
  Cohort cohort;
  for (int k = 0; k < plan.subjects; ++k) {
    if (!plan.input_dir.empty()) {
      for (const auto& p : plan.protocols) {
        cohort[p].push_back(load_scene(plan.input_dir / ("subject" + std::to_string(k) + "_" + p + ".scnh")));
      }
      continue;
    }
    auto [t2, pd] = generate_phantom_pair(subject_phantom(plan, k));
    for (const auto& p : plan.protocols) cohort[p].push_back(p == "T2" ? t2 : pd);
  }
  return cohort;
}

CleanSet build_clean_set(const Cohort& raw, const CorrectionOptions& correction,
                         const TrainingOptions& training) {
  CleanSet out;
  for (const auto& [protocol, scenes] : raw) {
    if (scenes.size() < 2) {
      throw Error(ErrorCode::kInvalidArgument, "protocol " + protocol + " needs >= 2 scenes for training");
    }
    std::vector<Scene> corrected;
    corrected.reserve(scenes.size());
    for (const Scene& s : scenes) {
      corrected.push_back(correction.enabled
                              ? correct_scene(s, default_criterion(s, correction.theta_fraction),
                                              correction.max_iters, correction.growth_tol)
                              : s);
    }
    StandardizationModel model = train_model(corrected, training);
    auto& clean = out.scenes[protocol];
    for (const Scene& s : corrected) clean.push_back(standardize_scene(s, model));
    out.models.emplace(protocol, std::move(model));
  }
  return out;
}

std::uint64_t cell_seed(std::uint64_t master, int subject, const std::string& protocol,
                        const std::string& level, int cell_id) {
  return rng::derive(master, {rng::hash_string("inject"), static_cast<std::uint64_t>(subject),
                              rng::hash_string(protocol), rng::hash_string(level),
                              static_cast<std::uint64_t>(cell_id)});
}

Scene clean_target(const Scene& clean, const Matrix4& truth) { return resample(clean, truth); }

Scene nonstandard_target(const Scene& clean, double m1, double m2, const Matrix4& truth) {
  return resample(apply_inverse_mapping(clean, m1, m2), truth);
}

fs::path cell_record_path(const fs::path& output_dir, int subject, const std::string& protocol,
                          const std::string& level, const DeformationCell& cell) {
  char subject_dir[32];
  std::snprintf(subject_dir, sizeof subject_dir, "s%03d", subject);
  return output_dir / "cells" / subject_dir / protocol / level / (cell.name() + ".json");
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

namespace {

struct Unit {
  int subject;
  std::string protocol;
  DeformationCell cell;
};

struct UnitOutcome {
  std::vector<ExperimentCell> cells;  // one per plan level
  int registrations = 0;
  int reused = 0;
};

std::optional<ExperimentCell> try_load(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  try {
    return read_json_file(path).get<ExperimentCell>();
  } catch (const std::exception&) {
    return std::nullopt;  // torn or stale record; recompute it
  }
}

UnitOutcome run_unit(const ExperimentPlan& plan, const Unit& unit, const Scene& clean) {
  UnitOutcome out;
  std::vector<fs::path> paths;
  std::vector<std::optional<ExperimentCell>> existing;
  bool complete = true;
  for (const auto& level : plan.levels) {
    paths.push_back(cell_record_path(plan.output_dir, unit.subject, unit.protocol, level.id, unit.cell));
    existing.push_back(try_load(paths.back()));
    complete = complete && existing.back().has_value();
  }
  if (complete) {
    for (auto& e : existing) out.cells.push_back(std::move(*e));
    out.reused = static_cast<int>(out.cells.size());
    return out;
  }

  const Vector3 center = scene_center(clean.dims());
  ExperimentCell base;
  base.subject = unit.subject;
  base.protocol = unit.protocol;
  base.cell_id = unit.cell.id;
  base.group = unit.cell.group;
  base.truth = unit.cell.params;
  base.truth_matrix = matrix(unit.cell.params, center);
  base.box = foreground_bounding_box(clean);
  base.voxel_size = clean.voxel_size();

  // Arm s: shared by every level of this unit.
  std::optional<RegistrationResult> result_s;
  std::string error_s;
  auto register_s = [&] {
    if (result_s || !error_s.empty()) return;
    try {
      result_s = register_affine(clean, clean_target(clean, base.truth_matrix), plan.registration);
      ++out.registrations;
    } catch (const Error& e) {
      error_s = e.what();
      ++out.registrations;
    }
  };

  for (std::size_t i = 0; i < plan.levels.size(); ++i) {
    if (existing[i]) {
      out.cells.push_back(std::move(*existing[i]));
      ++out.reused;
      continue;
    }
    const NonStandardnessLevel& level = plan.levels[i];
    ExperimentCell cell = base;
    cell.level = level.id;
    register_s();
    if (!result_s) {
      cell.status = CellStatus::kRegistrationFailed;
      cell.error = "arm s: " + error_s;
    } else {
      cell.result_s = result_s;
      try {
        if (level.is_clean()) {
          cell.result_ns = result_s;
        } else {
          std::tie(cell.m1, cell.m2) =
              sample_slopes(level, cell_seed(plan.master_seed, unit.subject, unit.protocol, level.id, unit.cell.id));
          const Scene target = nonstandard_target(clean, cell.m1, cell.m2, base.truth_matrix);
          ++out.registrations;
          cell.result_ns = register_affine(clean, target, plan.registration);
        }
        cell.rmse_s = rmse_corners(cell.truth_matrix, cell.result_s->matrix, cell.box, cell.voxel_size);
        cell.rmse_ns = rmse_corners(cell.truth_matrix, cell.result_ns->matrix, cell.box, cell.voxel_size);
        cell.status = CellStatus::kOk;
      } catch (const Error& e) {
        cell.status = CellStatus::kRegistrationFailed;
        cell.error = std::string("arm ns: ") + e.what();
      }
    }
    write_file_atomic(paths[i], dump(Json(cell)));
    out.cells.push_back(std::move(cell));
  }
  return out;
}

}  // namespace

PlanSize plan_size(const ExperimentPlan& plan) {
  const std::size_t units = static_cast<std::size_t>(plan.subjects) * plan.protocols.size() * plan.grid.size();
  const auto injected = static_cast<std::size_t>(
      std::count_if(plan.levels.begin(), plan.levels.end(), [](const auto& l) { return !l.is_clean(); }));
  PlanSize size;
  size.records = units * plan.levels.size();
  size.arm_evaluations = 2 * size.records;
  size.registrations = units * (1 + injected);
  return size;
}

RunSummary run_plan(const ExperimentPlan& plan) {
  validate(plan);
  fs::create_directories(plan.output_dir);
  write_file_atomic(plan.output_dir / "plan.json", dump(Json(plan)));

  const Cohort raw = load_or_generate_cohort(plan);
  const CleanSet clean = build_clean_set(raw, plan.correction, plan.standardization);
  for (const auto& [protocol, model] : clean.models) {
    write_file_atomic(plan.output_dir / "models" / (protocol + ".json"), dump(Json(model)));
  }

  std::vector<Unit> units;
  for (int s = 0; s < plan.subjects; ++s)
    for (const auto& p : plan.protocols)
      for (const auto& c : plan.grid) units.push_back({s, p, c});

  std::vector<UnitOutcome> outcomes(units.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < units.size(); i = next++) {
      try {
        const Unit& u = units[i];
        outcomes[i] = run_unit(plan, u, clean.scenes.at(u.protocol)[static_cast<std::size_t>(u.subject)]);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = units.size();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < plan.workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  RunSummary summary;
  for (auto& o : outcomes) {
    summary.registrations_performed += o.registrations;
    summary.records_reused += o.reused;
    for (auto& c : o.cells) {
      if (c.status != CellStatus::kOk) ++summary.failures;
      summary.cells.push_back(std::move(c));
    }
  }
  write_reports(summary.cells, plan.output_dir);
  return summary;
}

std::vector<ExperimentCell> load_cells(const fs::path& dir) {
  fs::path root = dir;
  if (fs::is_directory(dir / "cells")) root = dir / "cells";
  if (!fs::is_directory(root)) throw Error(ErrorCode::kIo, "no results directory at " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<ExperimentCell> cells;
  cells.reserve(files.size());
  for (const auto& f : files) {
    try {
      cells.push_back(read_json_file(f).get<ExperimentCell>());
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kFormat, f.string() + ": " + e.what());
    }
  }
  if (cells.empty()) throw Error(ErrorCode::kFormat, "no cell records under " + root.string());
  return cells;
}

void write_reports(const std::vector<ExperimentCell>& cells, const fs::path& output_dir) {
  const fs::path dir = output_dir / "reports";
  const GoodnessReport acc = accuracy_report(cells);
  write_file_atomic(dir / "accuracy.csv", report_csv(acc));
  write_file_atomic(dir / "accuracy.json", dump(Json(acc)));
  bool has_t2 = false;
  bool has_pd = false;
  for (const auto& c : cells) {
    has_t2 = has_t2 || c.protocol == "T2";
    has_pd = has_pd || c.protocol == "PD";
  }
  if (has_t2 && has_pd) {
    const GoodnessReport con = consistency_report(cells);
    write_file_atomic(dir / "consistency.csv", report_csv(con));
    write_file_atomic(dir / "consistency.json", dump(Json(con)));
  }
}

}  // namespace nsreg
